"""Norms of spectral fields and radial band constants.

All norms are series-coefficient norms:

    ||f||_L2        = sqrt( sum_k |c_k|^2 )            (zero mode included)
    ||f||_Hdot(s)   = sqrt( sum_{k != 0} |k|^(2s) |c_k|^2 )
    ||f||_X(sigma)  = sum_{k != 0} |k|^sigma |c_k|

Vector fields sum over components.  Sums accumulate in descending |k|
order with compensated summation (math.fsum), so results do not depend on
component memory layout.  Orders below -1 are outside the library's
conventions and are rejected: with a nonzero mean those sums diverge, and
the verification suite never needs them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    EmptyBandError,
    Lattice,
    NonzeroMeanError,
    ScalarSpectralField,
    VelocityField,
)

__all__ = [
    "DEFAULT_SOBOLEV_ORDERS",
    "DEFAULT_LEILIN_ORDERS",
    "NormReport",
    "l2_norm",
    "sobolev_norm",
    "leilin_norm",
    "full_report",
    "BandConstant",
    "band_constant",
]

DEFAULT_SOBOLEV_ORDERS = (0.5, 1.0, 1.5, 2.5, 3.5)
DEFAULT_LEILIN_ORDERS = (-1.0, 0.0, 1.0)

FOUR_PI = 4.0 * math.pi


def _components(f) -> list[np.ndarray]:
    if isinstance(f, VelocityField):
        return [c.coefficients for c in f.components]
    if isinstance(f, ScalarSpectralField):
        return [f.coefficients]
    raise TypeError(f"expected a spectral field, got {type(f).__name__}")


def _lattice_of(f) -> Lattice:
    return f.lattice


def _require_zero_mean(arrays: list[np.ndarray], order: float) -> None:
    scale = max(float(np.abs(a).max()) for a in arrays)
    mean = max(abs(complex(a[0, 0, 0])) for a in arrays)
    if mean > 1e-13 * max(scale, 1e-300):
        raise NonzeroMeanError(
            f"norm of order {order} requires a zero-mean field (|c_0| = {mean:.3e})"
        )


def _descending_sum(terms_by_component: list[np.ndarray]) -> float:
    """fsum of per-component term streams, each already in descending-|k| order."""
    total: list[float] = []
    for t in terms_by_component:
        total.extend(t.tolist())
    return math.fsum(total)


def l2_norm(f) -> float:
    """Coefficient l2 norm including the zero mode."""
    lat = _lattice_of(f)
    order = lat.descending_order
    terms = []
    for arr in _components(f):
        mags2 = np.abs(arr.ravel()[order]) ** 2
        terms.append(mags2)
    return math.sqrt(_descending_sum(terms))


def sobolev_norm(f, s: float) -> float:
    """Homogeneous Sobolev norm of order s >= -1."""
    s = float(s)
    if not math.isfinite(s) or s < -1.0:
        raise ValueError(f"Sobolev order must be finite and >= -1, got {s}")
    lat = _lattice_of(f)
    arrays = _components(f)
    if s < 0:
        _require_zero_mean(arrays, s)
    nonzero = lat.descending_order[:-1]  # zero mode sorts last
    weights = lat.kmag.ravel()[nonzero] ** (2.0 * s)
    terms = [weights * np.abs(arr.ravel()[nonzero]) ** 2 for arr in arrays]
    return math.sqrt(_descending_sum(terms))


def leilin_norm(f, sigma: float) -> float:
    """Summed-coefficient norm sum |k|^sigma |c_k|, sigma >= -1."""
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma < -1.0:
        raise ValueError(f"order must be finite and >= -1, got {sigma}")
    lat = _lattice_of(f)
    arrays = _components(f)
    if sigma < 0:
        _require_zero_mean(arrays, sigma)
    nonzero = lat.descending_order[:-1]
    weights = lat.kmag.ravel()[nonzero] ** sigma
    terms = [weights * np.abs(arr.ravel()[nonzero]) for arr in arrays]
    return _descending_sum(terms)


def _order_key(prefix: str, order: float) -> str:
    return f"{prefix}{format(order, 'g')}"


@dataclass(frozen=True)
class NormReport:
    """All tracked norms of one field: l2 plus Sobolev and X families."""

    l2: float
    hdot: dict[float, float] = field(default_factory=dict)
    leilin: dict[float, float] = field(default_factory=dict)

    def to_record(self) -> dict[str, float]:
        """Flat record with stable keys: l2, h<s>..., x<sigma>..."""
        record = {"l2": self.l2}
        for s in sorted(self.hdot):
            record[_order_key("h", s)] = self.hdot[s]
        for sigma in sorted(self.leilin):
            record[_order_key("x", sigma)] = self.leilin[sigma]
        return record

    @staticmethod
    def from_record(record) -> "NormReport":
        l2 = None
        hdot: dict[float, float] = {}
        leilin: dict[float, float] = {}
        for key, value in record.items():
            value = float(value)
            if key == "l2":
                l2 = value
            elif key.startswith("h"):
                hdot[float(key[1:])] = value
            elif key.startswith("x"):
                leilin[float(key[1:])] = value
            else:
                raise ValueError(f"unrecognized norm key {key!r}")
        if l2 is None:
            raise ValueError("record is missing the 'l2' entry")
        return NormReport(l2=l2, hdot=hdot, leilin=leilin)


def full_report(
    f,
    sobolev_orders=DEFAULT_SOBOLEV_ORDERS,
    leilin_orders=DEFAULT_LEILIN_ORDERS,
) -> NormReport:
    """Evaluate every tracked norm of one field."""
    return NormReport(
        l2=l2_norm(f),
        hdot={float(s): sobolev_norm(f, s) for s in sobolev_orders},
        leilin={float(sig): leilin_norm(f, sig) for sig in leilin_orders},
    )


@dataclass(frozen=True)
class BandConstant:
    """sqrt of a radial coefficient-weight sum over one wavenumber band.

    lattice_value sums |k|^(2a) over the actual lattice modes in the band;
    continuum_value is the closed-form integral sqrt(int 4*pi r^(2a+2) dr)
    over the same radii.  Band membership follows the shell convention:
    the boundary shell |k| = alpha belongs to the band below alpha.
    """

    exponent: float
    alpha: float | None
    beta: float | None
    band: str
    lattice_value: float
    continuum_value: float

    @property
    def ratio(self) -> float:
        """lattice_value / continuum_value; 0 signals an empty lattice band."""
        return self.lattice_value / self.continuum_value

    @property
    def empty(self) -> bool:
        return self.lattice_value == 0.0


def _band_lattice_sum(lattice: Lattice, exponent: float, mask: np.ndarray) -> float:
    mask = mask & (lattice.kmag > 0)
    if not mask.any():
        return 0.0
    km = lattice.kmag[mask]
    idx = np.argsort(-km, kind="stable")
    terms = km[idx] ** (2.0 * exponent)
    return math.sqrt(math.fsum(terms.tolist()))


def band_constant(
    lattice: Lattice,
    exponent: float,
    alpha: float | None = None,
    beta: float | None = None,
) -> BandConstant:
    """Band constant for {0<|k|<=alpha}, {alpha<|k|<=beta} or {|k|>beta}.

    Which bounds are given selects the band: alpha only -> low, both ->
    mid, beta only -> high.  Raises ValueError when the continuum integral
    for the requested band diverges.  The high-band lattice sum runs over
    the finite lattice support above beta.
    """
    a = float(exponent)
    p = 2.0 * a + 3.0  # continuum integrand 4*pi r^(p-1)
    kmag = lattice.kmag
    if alpha is not None and beta is None:
        alpha = float(alpha)
        if not (alpha > 0):
            raise ValueError(f"low band needs alpha > 0, got {alpha}")
        if p <= 0:
            raise ValueError(
                f"low-band continuum integral diverges at the origin for exponent {a}"
            )
        mask = kmag <= alpha
        continuum = math.sqrt(FOUR_PI * alpha**p / p)
        band = "low"
    elif alpha is not None and beta is not None:
        alpha, beta = float(alpha), float(beta)
        if not (0 < alpha < beta):
            raise ValueError(f"mid band needs 0 < alpha < beta, got ({alpha}, {beta})")
        mask = (kmag > alpha) & (kmag <= beta)
        if p == 0.0:
            continuum = math.sqrt(FOUR_PI * math.log(beta / alpha))
        else:
            continuum = math.sqrt(FOUR_PI * (beta**p - alpha**p) / p)
        band = "mid"
    elif beta is not None:
        beta = float(beta)
        if not (beta > 0):
            raise ValueError(f"high band needs beta > 0, got {beta}")
        if p >= 0:
            raise ValueError(
                f"high-band continuum integral diverges at infinity for exponent {a}"
            )
        mask = kmag > beta
        continuum = math.sqrt(FOUR_PI * beta**p / (-p))
        band = "high"
    else:
        raise ValueError("band_constant needs alpha, beta, or both")
    return BandConstant(
        exponent=a,
        alpha=alpha,
        beta=beta,
        band=band,
        lattice_value=_band_lattice_sum(lattice, a, mask),
        continuum_value=continuum,
    )
