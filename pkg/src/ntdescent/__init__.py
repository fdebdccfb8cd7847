"""Parameter-free minimal-norm subgradient descent for nonsmooth problems.

Public surface: the inner loops and outer driver, the Polyak-stepsize
baseline, the benchmark problems, the verification lab, and the experiment
harness behind the ``ntd`` command line tool.
"""
from .core import (CountingOracle, OracleSample, RngStream, Vector,
                   uniform_ball, uniform_segment)
from .descent import LoopResult, Status, ndescent, segment_min_norm, tdescent
from .driver import (GridPoint, LinesearchOutcome, RunState, Schedules,
                     linesearch, ntd_step, optimality_gap, run_ntd)
from .harness import ExperimentConfig, UsageError, compare, run_experiment, sphere_point
from .lab import (MinNormError, RegionLabel, RegularityConstants,
                  check_gradient_inequality, check_region_lower_bounds,
                  classify_region, goldstein_min_norm_sampled, min_norm_point,
                  uv_constants, uv_goldstein_min_norm, uv_min_norm_subgradient)
from .polyak import PolyakState, StagnationError, polyak_step, run_polyak
from .problems import (EigProductProblem, LowerBoundProblem,
                       MaxOfSmoothProblem, QuadraticSensingProblem,
                       ScaledProblem, UVProblem, load_matrix)
from .trace import StoppingRule, TraceRow, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "CountingOracle", "OracleSample", "RngStream", "Vector",
    "uniform_ball", "uniform_segment",
    "LoopResult", "Status", "ndescent", "segment_min_norm", "tdescent",
    "GridPoint", "LinesearchOutcome", "RunState", "Schedules",
    "linesearch", "ntd_step", "optimality_gap", "run_ntd",
    "ExperimentConfig", "UsageError", "compare", "run_experiment",
    "sphere_point",
    "MinNormError", "RegionLabel", "RegularityConstants",
    "check_gradient_inequality", "check_region_lower_bounds",
    "classify_region", "goldstein_min_norm_sampled", "min_norm_point",
    "uv_constants", "uv_goldstein_min_norm", "uv_min_norm_subgradient",
    "PolyakState", "StagnationError", "polyak_step", "run_polyak",
    "EigProductProblem", "LowerBoundProblem", "MaxOfSmoothProblem",
    "QuadraticSensingProblem", "ScaledProblem", "UVProblem", "load_matrix",
    "StoppingRule", "TraceRow", "read_trace", "write_trace",
    "__version__",
]
