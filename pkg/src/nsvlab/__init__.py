"""Spectral norms, inequality verification, and blow-up monitoring for
incompressible flow on the periodic box.

Layers, bottom up: fields (lattice + spectral containers), norms
(Sobolev / summability families and band constants), products (exact
dealiased convolutions), inequalities (verdicts over random corpora),
sim (pseudo-spectral solver), trajectory/snapshot (file formats),
monitor (blow-up lower-bound functionals), cli (subcommands).
"""

from ._version import __version__
from .fields import (
    EmptyBandError,
    Lattice,
    NonzeroMeanError,
    ScalarSpectralField,
    VelocityField,
    divergence,
    gradient,
    hermitian_defect,
    hermitianize,
    leray_project,
    random_band_limited,
    support_radius,
    taylor_green,
    to_physical,
    to_spectral,
    truncate,
)
from .inequalities import (
    CONSTANT_MODES,
    CorpusConfig,
    CorpusField,
    InequalityVerdict,
    SplitReport,
    advection_cancellation,
    check_h32_trilinear,
    check_x0_interpolation,
    check_x0_via_h12_x1,
    check_x0_via_xm1_h52,
    commutator_l2,
    commutator_report,
    corpus_fields,
    equality_probe,
    split_x1,
    trilinear_hs,
)
from .monitor import (
    FunctionalTrace,
    GrowthReport,
    IntervalReport,
    MonitorConfig,
    evaluate_traces,
    h12_log_growth_check,
    h52_energy_residual,
    invert_rate,
    rate_catalog,
    rate_forward,
    theorem1_functional,
    theorem2_functional,
    theorem3_functional,
    xm1_gronwall_check,
)
from .norms import (
    BandConstant,
    NormReport,
    band_constant,
    full_report,
    l2_norm,
    leilin_norm,
    sobolev_norm,
)
from .products import AliasingError, advect, multiply, padded_size
from .sim import (
    SchemeBlowupError,
    SolverConfig,
    SolverState,
    energy_balance_residual,
    integrate,
    nonlinear_term,
    resolve_dt,
    step,
)
from .snapshot import SnapshotFormatError, read_snapshot, write_snapshot
from .trajectory import (
    Trajectory,
    TrajectoryFormatError,
    TrajectorySample,
    read_trajectory,
    write_trajectory_csv,
    write_trajectory_json,
)

__all__ = [
    "__version__",
    # fields
    "Lattice",
    "ScalarSpectralField",
    "VelocityField",
    "NonzeroMeanError",
    "EmptyBandError",
    "to_physical",
    "to_spectral",
    "hermitianize",
    "hermitian_defect",
    "gradient",
    "divergence",
    "leray_project",
    "taylor_green",
    "random_band_limited",
    "truncate",
    "support_radius",
    # norms
    "l2_norm",
    "sobolev_norm",
    "leilin_norm",
    "NormReport",
    "full_report",
    "BandConstant",
    "band_constant",
    # products
    "AliasingError",
    "padded_size",
    "multiply",
    "advect",
    # inequalities
    "CONSTANT_MODES",
    "InequalityVerdict",
    "SplitReport",
    "check_x0_interpolation",
    "check_x0_via_xm1_h52",
    "check_x0_via_h12_x1",
    "check_h32_trilinear",
    "split_x1",
    "commutator_l2",
    "trilinear_hs",
    "advection_cancellation",
    "commutator_report",
    "CorpusConfig",
    "CorpusField",
    "corpus_fields",
    "equality_probe",
    # sim
    "SolverConfig",
    "SolverState",
    "SchemeBlowupError",
    "resolve_dt",
    "nonlinear_term",
    "step",
    "integrate",
    "energy_balance_residual",
    # trajectory + snapshot
    "Trajectory",
    "TrajectorySample",
    "TrajectoryFormatError",
    "write_trajectory_csv",
    "write_trajectory_json",
    "read_trajectory",
    "SnapshotFormatError",
    "write_snapshot",
    "read_snapshot",
    # monitor
    "MonitorConfig",
    "FunctionalTrace",
    "IntervalReport",
    "GrowthReport",
    "theorem1_functional",
    "theorem2_functional",
    "theorem3_functional",
    "rate_catalog",
    "evaluate_traces",
    "h52_energy_residual",
    "h12_log_growth_check",
    "xm1_gronwall_check",
    "rate_forward",
    "invert_rate",
]
