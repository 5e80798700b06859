"""Alias-free pointwise products of band-limited spectral fields.

Products are formed on a zero-padded lattice of at least 3n/2 points per
axis and are kept there.  When both factors are band-limited to
|k| <= k_unit * n/3, every product mode (content up to 2n/3 per axis) is
representable below the padded Nyquist (3n/4), so the result is the exact
complete convolution of the inputs: no aliasing, no truncation.  Inputs
with broader support raise :class:`AliasingError` rather than silently
returning a contaminated product.
"""

from __future__ import annotations

import numpy as np

from .fields import (
    Lattice,
    ScalarSpectralField,
    VelocityField,
    gradient,
    support_radius,
)

__all__ = [
    "AliasingError",
    "padded_size",
    "pad_lattice",
    "exactness_limit",
    "require_band_limited",
    "embed_coefficients",
    "restrict_coefficients",
    "multiply",
    "advect",
]


class AliasingError(ValueError):
    """A product was requested for fields too broad for exact convolution."""


def padded_size(n: int) -> int:
    """Smallest even padded size >= 3n/2."""
    m = (3 * n + 1) // 2
    return m + (m % 2)


def pad_lattice(lattice: Lattice) -> Lattice:
    return Lattice(padded_size(lattice.n), lattice.period)


def exactness_limit(lattice: Lattice) -> float:
    """Largest support radius for which padded products are exact."""
    return lattice.k_unit * (lattice.n / 3.0)


def require_band_limited(f, limit: float | None = None) -> None:
    lat = f.lattice if isinstance(f, (ScalarSpectralField, VelocityField)) else None
    if lat is None:
        raise TypeError(f"expected a spectral field, got {type(f).__name__}")
    if limit is None:
        limit = exactness_limit(lat)
    radius = support_radius(f)
    if radius > limit * (1.0 + 1e-12):
        raise AliasingError(
            f"field support |k| <= {radius:.6g} exceeds the exact-product "
            f"limit {limit:.6g}; band-limit the input first"
        )


def embed_coefficients(c: np.ndarray, n_pad: int) -> np.ndarray:
    """Embed fft-layout coefficients into a larger lattice (zero padding)."""
    n = c.shape[0]
    if n_pad < n:
        raise ValueError(f"cannot embed n={n} into smaller n_pad={n_pad}")
    lo = (n_pad - n) // 2
    out = np.zeros((n_pad,) * 3, dtype=np.complex128)
    out[lo : lo + n, lo : lo + n, lo : lo + n] = np.fft.fftshift(c)
    return np.fft.ifftshift(out)


def restrict_coefficients(c: np.ndarray, n_small: int) -> np.ndarray:
    """Crop fft-layout coefficients to a smaller lattice (mode truncation)."""
    n = c.shape[0]
    if n_small > n:
        raise ValueError(f"cannot restrict n={n} to larger n_small={n_small}")
    lo = (n - n_small) // 2
    cs = np.fft.fftshift(c)
    return np.fft.ifftshift(cs[lo : lo + n_small, lo : lo + n_small, lo : lo + n_small])


def _padded_physical(c: np.ndarray, n_pad: int) -> np.ndarray:
    return np.real(np.fft.ifftn(embed_coefficients(c, n_pad))) * float(n_pad**3)


def _to_padded_spectral(values: np.ndarray, lat_pad: Lattice) -> np.ndarray:
    return np.fft.fftn(values) / float(lat_pad.n**3)


def multiply(f: ScalarSpectralField, g: ScalarSpectralField) -> ScalarSpectralField:
    """Exact product f*g, returned on the padded lattice."""
    if f.lattice != g.lattice:
        raise ValueError("factors live on different lattices")
    require_band_limited(f)
    require_band_limited(g)
    lat_pad = pad_lattice(f.lattice)
    n_pad = lat_pad.n
    values = _padded_physical(f.coefficients, n_pad) * _padded_physical(g.coefficients, n_pad)
    return ScalarSpectralField(lat_pad, _to_padded_spectral(values, lat_pad))


def advect(u: VelocityField, g):
    """Transport term u . grad(g), exact, on the padded lattice.

    For a scalar g returns a ScalarSpectralField; for a VelocityField
    returns a tuple of three scalar fields (the transported components are
    not divergence-free, so they are not wrapped as a velocity).
    """
    lat = u.lattice
    require_band_limited(u)
    lat_pad = pad_lattice(lat)
    n_pad = lat_pad.n
    u_phys = [_padded_physical(c.coefficients, n_pad) for c in u.components]

    def one(scalar: ScalarSpectralField) -> ScalarSpectralField:
        if scalar.lattice != lat:
            raise ValueError("fields live on different lattices")
        require_band_limited(scalar)
        total = np.zeros((n_pad,) * 3)
        for j, dg in enumerate(gradient(scalar)):
            total += u_phys[j] * _padded_physical(dg.coefficients, n_pad)
        return ScalarSpectralField(lat_pad, _to_padded_spectral(total, lat_pad))

    if isinstance(g, ScalarSpectralField):
        return one(g)
    if isinstance(g, VelocityField):
        return tuple(one(c) for c in g.components)
    raise TypeError(f"expected a spectral field, got {type(g).__name__}")
