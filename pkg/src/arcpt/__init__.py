"""Mean-shift changepoint detection for autoregressive time series."""

__version__ = "0.1.0"

from .amoc import (
    AmocResult,
    Method,
    cusum_test_x,
    cusum_test_z,
    lrt_cropped,
    lrt_gumbel,
    run_test,
    scusum_x,
    scusum_z,
)
from .distance import assignment_min_cost, config_distance
from .harness import ScenarioSpec, builtin_scenario, run_experiment, summarize
from .penalized import Criterion, GaParams, exhaustive_search, ga_search, objective, penalty
from .segmentation import SegmentationParams, binary_segment, wbs
from .series import (
    ArModel,
    ChangepointConfig,
    StepMeanFunction,
    TimeSeries,
    fit_ar_differenced,
    fit_ar_yule_walker,
    one_step_residuals,
    simulate_ar,
)

__all__ = [
    "AmocResult", "ArModel", "ChangepointConfig", "Criterion", "GaParams", "Method",
    "ScenarioSpec", "SegmentationParams", "StepMeanFunction", "TimeSeries",
    "assignment_min_cost", "binary_segment", "builtin_scenario", "config_distance",
    "cusum_test_x", "cusum_test_z", "lrt_cropped", "lrt_gumbel", "scusum_x", "scusum_z",
    "exhaustive_search", "fit_ar_differenced", "fit_ar_yule_walker", "ga_search", "objective",
    "one_step_residuals", "penalty", "run_experiment", "run_test", "simulate_ar", "summarize", "wbs",
]
