"""Energy-efficient power control in interference networks.

Global solvers (fractional programming over a monotonic branch-reduce-and-
bound core), low-complexity sequential approximation solvers, scenario
generators for cellular deployments, and experiment drivers with a command
line front end.
"""

from .errors import (
    ConfigError,
    InfeasibleError,
    InnerSolverError,
    IterationCapError,
)
from .model import (
    ConstraintKind,
    ConstraintSpec,
    DcFlags,
    DcFunction,
    EeMetric,
    InterferenceTemperature,
    LinkParams,
    MinRate,
    NetworkInstance,
    Scalar,
    SelfInterference,
    SinrModel,
    TotalPower,
    VectorLmmse,
    grad_q_minus,
    grad_q_plus,
    make_constraint,
    metric_value,
    q_minus,
    q_plus,
    rate,
    sinr,
)
from .fractional import DinkelbachConfig, DinkelbachTrace, RatioSpec, dinkelbach
from .monotonic import BrbConfig, BrbResult, brb_solve, solve_global
from .sequential import (
    InnerSolverConfig,
    ScaConfig,
    sca_gee,
    sca_wmee,
    sum_rate_max,
)
from .report import SolveReport, verify_report
from .scenarios import (
    Deployment,
    LteScenarioConfig,
    MassiveMimoScenarioConfig,
    dbw_to_watt,
    generate_lte,
    generate_massive_mimo,
    noise_power,
    pathloss,
)
from .experiments import (
    ExperimentConfig,
    build_instance,
    grid_search,
    run_benchmark,
    run_pareto,
    run_solve,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "InnerSolverError",
    "IterationCapError",
    "ConstraintKind",
    "ConstraintSpec",
    "DcFlags",
    "DcFunction",
    "EeMetric",
    "InterferenceTemperature",
    "LinkParams",
    "MinRate",
    "NetworkInstance",
    "Scalar",
    "SelfInterference",
    "SinrModel",
    "TotalPower",
    "VectorLmmse",
    "grad_q_minus",
    "grad_q_plus",
    "make_constraint",
    "metric_value",
    "q_minus",
    "q_plus",
    "rate",
    "sinr",
    "DinkelbachConfig",
    "DinkelbachTrace",
    "RatioSpec",
    "dinkelbach",
    "BrbConfig",
    "BrbResult",
    "brb_solve",
    "solve_global",
    "InnerSolverConfig",
    "ScaConfig",
    "sca_gee",
    "sca_wmee",
    "sum_rate_max",
    "SolveReport",
    "verify_report",
    "Deployment",
    "LteScenarioConfig",
    "MassiveMimoScenarioConfig",
    "dbw_to_watt",
    "generate_lte",
    "generate_massive_mimo",
    "noise_power",
    "pathloss",
    "ExperimentConfig",
    "build_instance",
    "grid_search",
    "run_benchmark",
    "run_pareto",
    "run_solve",
    "run_sweep",
    "__version__",
]
