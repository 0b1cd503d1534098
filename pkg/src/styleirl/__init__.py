"""Reaction-aware driving style identification.

Pipeline: a stochastic MPC generates a two-vehicle lane-change demonstration,
the sampled states become a C2 piecewise-quintic spline, and a bilevel
max-entropy IRL loop recovers the feature weights that reproduce the
demonstrated style, including its reaction to the other vehicle.
"""

from .config import ScenarioConfig, load_scenario
from .dynamics import ControlInput, VehicleGeometry, VehicleState
from .features import (FEATURE_NAMES, FeatureScaling, LaneContext, TriggerInfo,
                       compute_features, detect_trigger, elliptical_index, scale)
from .learner import learn, learn_from_trajectories, optimize_trajectory
from .smpc import (DemonstrationRecord, SafetyEllipse, ellipse_margin, predict_tv,
                   run_closed_loop, solve_ocp, tightened_ellipse)
from .spline import (ControlPoint, SplineTrajectory, evaluate, fit_segment,
                     from_control_points, sample, states_to_control_points)

__all__ = [
    "ScenarioConfig", "load_scenario",
    "ControlInput", "VehicleGeometry", "VehicleState",
    "FEATURE_NAMES", "FeatureScaling", "LaneContext", "TriggerInfo",
    "compute_features", "detect_trigger", "elliptical_index", "scale",
    "learn", "learn_from_trajectories", "optimize_trajectory",
    "DemonstrationRecord", "SafetyEllipse", "ellipse_margin", "predict_tv",
    "run_closed_loop", "solve_ocp", "tightened_ellipse",
    "ControlPoint", "SplineTrajectory", "evaluate", "fit_segment",
    "from_control_points", "sample", "states_to_control_points",
]

__version__ = "0.1.0"
