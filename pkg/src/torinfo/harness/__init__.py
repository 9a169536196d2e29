"""Experiment orchestration: accuracy, performance, complexity, stability
and periodicity runs emitting CSV."""

from .complexity import ComplexityModel, avg_knn_distance, hybrid_cost_model
from .io import (SCHEMAS, load_trajectory, read_csv, save_trajectory, write_csv,
                 write_records_csv)
from .plans import ExperimentPlan, PlanError, bundled_plans, load_plan, parse_plan
from .runners import (RUNNERS, derive_seed, measured_tier_fractions, run_accuracy,
                      run_complexity, run_perf, run_periodicity, run_plan,
                      run_stability, unwrapped_cloud)

__all__ = [
    "ComplexityModel", "avg_knn_distance", "hybrid_cost_model", "SCHEMAS",
    "load_trajectory", "save_trajectory", "read_csv", "write_csv",
    "write_records_csv", "ExperimentPlan", "PlanError", "bundled_plans",
    "load_plan", "parse_plan", "RUNNERS", "derive_seed",
    "measured_tier_fractions", "run_accuracy", "run_complexity", "run_perf",
    "run_periodicity", "run_plan", "run_stability", "unwrapped_cloud",
]
