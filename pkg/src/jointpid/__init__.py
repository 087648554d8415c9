"""Simulation, stability certification and robust gain tuning for saturated
discrete-time PID control of robotic joints."""

from .controller import ControllerConfig, ControllerState, GainTriple, pid_step, reset_state, saturate
from .metrics import StepMetrics, Trajectory, compute_step_metrics
from .plants import FirstOrderParams, SecondOrderParams, ZohCoeffs
from .robustness import ModelInstance, RobustScore, TaskSpec, UncertaintySpec, evaluate_candidate, run_closed_loop, sample_ensemble, sample_model
from .sensing import DelayLine, SensorModel, SensorStream
from .stability import JuryVerdict, StabilityRegionGrid, jury_euler_pi, jury_monic_quadratic, jury_zoh_pi, ki_upper_bound, region_grid
from .tuner import GainBounds, ScreenConfig, TuningResult, behavioral_certify, hcsbo_run, random_search_baseline

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig", "ControllerState", "GainTriple", "pid_step",
    "reset_state", "saturate", "StepMetrics", "Trajectory",
    "compute_step_metrics", "FirstOrderParams", "SecondOrderParams",
    "ZohCoeffs", "ModelInstance", "RobustScore", "TaskSpec",
    "UncertaintySpec", "evaluate_candidate", "run_closed_loop",
    "sample_ensemble", "sample_model", "DelayLine", "SensorModel",
    "SensorStream", "JuryVerdict", "StabilityRegionGrid", "jury_euler_pi",
    "jury_monic_quadratic", "jury_zoh_pi", "ki_upper_bound", "region_grid",
    "GainBounds", "ScreenConfig", "TuningResult", "behavioral_certify",
    "hcsbo_run", "random_search_baseline",
]
