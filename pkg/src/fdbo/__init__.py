"""Pseudospectral laboratory for a fractional growth-dissipative
dispersive family: linear semigroup diagnostics, nonlinear evolution,
flow-map derivative experiments, dyadic-block norm estimates, and the
dissipative-limit study, with JSON reports designed to be reproducible
byte for byte.
"""

from .backend import USE_NUMBA, backend_name, thread_cap
from .blocks import (
    BlockSpec,
    NormEstimate,
    REGIMES,
    block_bound,
    classify_block,
    enumerate_blocks,
    estimate_block_norm,
    is_admissible,
    resonance,
    sweep_blocks,
)
from .continuity import (
    FamilyRun,
    calibrate_growth_constant,
    convergence_study,
    g_blowup_time,
    run_family,
    torus_dissipativity,
    uniform_bound_g,
)
from .evolution import (
    InstabilityError,
    NonContractionError,
    PicardResult,
    SolverConfig,
    Trajectory,
    energy_balance,
    picard_iterate,
    read_snapshot,
    solve,
    stability_dt_bound,
    step,
    write_snapshot,
    y_norm,
)
from .illposedness import (
    InflationDatum,
    build_datum,
    inflation_sweep,
    picard_u2,
    picard_u3,
    u2_closed_form,
    u2_on_grid,
    u3_closed_form,
    u3_on_grid,
)
from .reporting import TOOL_VERSION, canonical_json, finalize_report, trajectory_csv
from .semigroup import (
    SmoothingReport,
    apply_semigroup,
    kernel_l2_norm,
    psi_envelope,
    psi_rate,
    semigroup_multiplier,
    smoothing_check,
    weighted_kernel_l2_norm,
)
from .spectral import (
    Grid,
    SpectralField,
    SymbolParams,
    dx,
    full_symbol,
    growth_dissipation_symbol,
    hilbert_symbol,
    l2_norm,
    nonlinearity,
    sobolev_norm,
)

__version__ = TOOL_VERSION

__all__ = [
    "__version__",
    "USE_NUMBA",
    "backend_name",
    "thread_cap",
    "BlockSpec",
    "NormEstimate",
    "REGIMES",
    "block_bound",
    "classify_block",
    "enumerate_blocks",
    "estimate_block_norm",
    "is_admissible",
    "resonance",
    "sweep_blocks",
    "FamilyRun",
    "calibrate_growth_constant",
    "convergence_study",
    "g_blowup_time",
    "run_family",
    "torus_dissipativity",
    "uniform_bound_g",
    "InstabilityError",
    "NonContractionError",
    "PicardResult",
    "SolverConfig",
    "Trajectory",
    "energy_balance",
    "picard_iterate",
    "read_snapshot",
    "solve",
    "stability_dt_bound",
    "step",
    "write_snapshot",
    "y_norm",
    "InflationDatum",
    "build_datum",
    "inflation_sweep",
    "picard_u2",
    "picard_u3",
    "u2_closed_form",
    "u2_on_grid",
    "u3_closed_form",
    "u3_on_grid",
    "TOOL_VERSION",
    "canonical_json",
    "finalize_report",
    "trajectory_csv",
    "SmoothingReport",
    "apply_semigroup",
    "kernel_l2_norm",
    "psi_envelope",
    "psi_rate",
    "semigroup_multiplier",
    "smoothing_check",
    "weighted_kernel_l2_norm",
    "Grid",
    "SpectralField",
    "SymbolParams",
    "dx",
    "full_symbol",
    "growth_dissipation_symbol",
    "hilbert_symbol",
    "l2_norm",
    "nonlinearity",
    "sobolev_norm",
]
