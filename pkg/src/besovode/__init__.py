"""Numerical machinery for first-order Cauchy problems u' = H(u) whose
right-hand sides lose up to (but less than) one derivative, together
with a verification lab for the dyadic-analysis inequalities the
construction rests on.
"""

from .errors import (
    BesovodeError,
    ConfigError,
    DomainError,
    ExpressionError,
    GridAlignmentError,
    ShapeError,
    UnsupportedIndexError,
    WindowUnderflowError,
)
from .expressions import compile_expression, expression_eval
from .fractional_ops import (
    FractionalOrder,
    abel_integral,
    caputo,
    holder_seminorm,
    lanczos_gamma,
    riemann_liouville,
)
from .grid_signal import (
    ExtendedSignal,
    Grid,
    Signal,
    q_extend,
    read_signal_csv,
    restrict,
    write_signal_csv,
    zero_extend,
)
from .inequality_lab import (
    EXPERIMENT_NAMES,
    ExperimentReport,
    ExperimentSpec,
    default_specs,
    run_experiment,
)
from .littlewood_paley import (
    BesovIndex,
    DyadicAnalysis,
    besov_norm_interval,
    besov_norm_line,
    decompose,
    multiply,
    pairing,
    paraproduct,
    remainder,
)
from .picard_solver import (
    SolveReport,
    SolverConfig,
    WindowRecord,
    integral_step,
    picard_map,
    residual,
    select_window,
    solve,
)
from .rhs_operators import (
    RhsOperator,
    VolterraKernel,
    composition_operator,
    fractional_product_operator,
    perturb_after,
    probe_lipschitz,
    series_operator,
    volterra_operator,
)

__version__ = "0.1.0"

__all__ = [
    "BesovodeError",
    "ConfigError",
    "DomainError",
    "ExpressionError",
    "GridAlignmentError",
    "ShapeError",
    "UnsupportedIndexError",
    "WindowUnderflowError",
    "compile_expression",
    "expression_eval",
    "FractionalOrder",
    "abel_integral",
    "caputo",
    "holder_seminorm",
    "lanczos_gamma",
    "riemann_liouville",
    "ExtendedSignal",
    "Grid",
    "Signal",
    "q_extend",
    "read_signal_csv",
    "restrict",
    "write_signal_csv",
    "zero_extend",
    "EXPERIMENT_NAMES",
    "ExperimentReport",
    "ExperimentSpec",
    "default_specs",
    "run_experiment",
    "BesovIndex",
    "DyadicAnalysis",
    "besov_norm_interval",
    "besov_norm_line",
    "decompose",
    "multiply",
    "pairing",
    "paraproduct",
    "remainder",
    "SolveReport",
    "SolverConfig",
    "WindowRecord",
    "integral_step",
    "picard_map",
    "residual",
    "select_window",
    "solve",
    "RhsOperator",
    "VolterraKernel",
    "composition_operator",
    "fractional_product_operator",
    "perturb_after",
    "probe_lipschitz",
    "series_operator",
    "volterra_operator",
]
