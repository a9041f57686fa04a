"""
Lensed pyroelectric infrared sensing: zone layouts, sensor dynamics,
heat-flux recovery, azimuth-change estimation and particle-filter tracking.
"""

from .azimuth import AzimuthObservation, ProminencePolicy, windowed_azimuth
from .dhf_recovery import InverseFilterSpec, recover_dhf
from .evaluation import EvalReport, PipelineConfig, evaluate, run_pipeline, sweep
from .lens_optics import LensElement, SensingGeometry, ZoneLayout, classify_angle, sweep_zones
from .sensor_dynamics import SensorParams, SignalTrace, identify_params, simulate_output
from .tracker import MotionState, SensorPose, TrackerConfig, track

__version__ = "0.1.0"

__all__ = [
    "AzimuthObservation", "EvalReport", "InverseFilterSpec", "LensElement", "MotionState",
    "PipelineConfig", "ProminencePolicy", "SensingGeometry", "SensorParams", "SensorPose",
    "SignalTrace", "TrackerConfig", "ZoneLayout", "classify_angle", "evaluate",
    "identify_params", "recover_dhf", "run_pipeline", "simulate_output", "sweep",
    "sweep_zones", "track", "windowed_azimuth",
]
