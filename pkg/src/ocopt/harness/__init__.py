from .experiments import ExperimentSpec, RunResult, SweepRow, r_sweep, run_experiment, spec_from_manifest
from .figures import FIGURES, repro
from .metrics import oscillation_metric, relative_error_series, steps_to_reach
from .schedule import Phase, PhaseSchedule, Stop, run_schedule

__all__ = [
    "ExperimentSpec",
    "RunResult",
    "SweepRow",
    "r_sweep",
    "run_experiment",
    "spec_from_manifest",
    "FIGURES",
    "repro",
    "oscillation_metric",
    "relative_error_series",
    "steps_to_reach",
    "Phase",
    "PhaseSchedule",
    "Stop",
    "run_schedule",
]
