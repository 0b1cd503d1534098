"""Bilevel driving-style identification.

Inner level: minimize the weighted feature cost theta . f(r) over the spline
control points (the first control point stays fixed). Outer level: update the
weights toward feature matching with the demonstration, stopping when the
learning error stalls.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .config import ScenarioConfig
from .features import (FeatureEvaluator, FeatureScaling, N_FEATURES, TriggerInfo,
                       detect_trigger, LaneContext)
from .spline import SplineTrajectory, from_control_points, states_to_control_points
from .smpc import DemonstrationRecord

_FD_STEP = 1e-6


def active_mask(feature_set: int) -> np.ndarray:
    """Feature activity mask: the 6-feature ablation drops the reaction-aware group."""
    if feature_set == 10:
        return np.ones(N_FEATURES, dtype=bool)
    if feature_set == 6:
        m = np.zeros(N_FEATURES, dtype=bool)
        m[:6] = True
        return m
    raise ValueError("feature_set must be 6 or 10")


@dataclass
class InnerResult:
    trajectory: SplineTrajectory
    objective: float
    n_iterations: int
    features: np.ndarray  # scaled features of the optimum
    trigger: TriggerInfo
    success: bool


@dataclass
class IterationRecord:
    iteration: int
    theta: np.ndarray
    features: np.ndarray  # scaled features of the reproduced trajectory
    epsilon: float
    inner_iterations: int
    wall_time: float


@dataclass
class LearningResult:
    theta: np.ndarray
    history: list[IterationRecord] = field(default_factory=list)
    terminated_by_rule: bool = False
    best_epsilon: float = np.inf
    reproduced: SplineTrajectory | None = None


class InnerProblem:
    """Weighted-feature trajectory optimization over free control points c_1..c_S."""

    def __init__(self, theta: np.ndarray, init: SplineTrajectory, tv: SplineTrajectory,
                 ctx: LaneContext, config: ScenarioConfig,
                 frozen_trigger: TriggerInfo | None = None):
        self.theta = np.asarray(theta, dtype=float)
        self.init = init
        self.config = config
        self.scaling = config.scaling()
        self.mask = active_mask(config.feature_set)
        self.evaluator = FeatureEvaluator(init.knots, tv, ctx, config.T_rct,
                                          l_a=config.l_a, l_b=config.l_b,
                                          lam=config.lam, gap_clamp=config.gap_clamp)
        self.trigger = frozen_trigger
        self.c0 = init.control_points[0].copy()
        self.n_free = init.n_segments  # free control points c_1..c_S
        self.nv = 6 * self.n_free
        self._w_active = self.scaling.omega * self.mask
        # position entries influence acceleration integrands ~1/Ts^2 more
        # strongly than acceleration entries; equalize for the quasi-Newton solver
        Ts = self.evaluator.Ts
        self._var_scale = np.tile([Ts * Ts, Ts, 1.0, Ts * Ts, Ts, 1.0], self.n_free)
        self._z0 = init.control_points[1:].ravel().copy()

    def control_points(self, z: np.ndarray) -> np.ndarray:
        """(..., S+1, 6) control-point array with the fixed first point prepended."""
        z = np.asarray(z, dtype=float)
        free = z.reshape(z.shape[:-1] + (self.n_free, 6))
        head = np.broadcast_to(self.c0, z.shape[:-1] + (1, 6))
        return np.concatenate([head, free], axis=-2)

    def raw_features(self, z: np.ndarray):
        return self.evaluator.features(self.control_points(z), trigger=self.trigger)

    def objective_batch(self, Z: np.ndarray) -> np.ndarray:
        # smoothed |.| keeps the line search well-behaved; reported features
        # elsewhere stay exact
        vals, _, _, _ = self.evaluator.features(self.control_points(Z),
                                                trigger=self.trigger,
                                                abs_smooth=self.config.abs_smooth)
        out = vals @ (self.theta * self._w_active)
        if self.config.prox_weight > 0.0:
            # tiny proximal anchor: keeps the minimizer unique (hence continuous
            # in theta) along directions no active feature penalizes
            out = out + self.config.prox_weight * np.sum((Z - self._z0) ** 2, axis=-1)
        return np.where(np.isfinite(out), out, 1e30)

    def objective(self, z: np.ndarray) -> float:
        return float(self.objective_batch(z[None])[0])

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """Central finite-difference gradient, evaluated as one batch."""
        Z = np.repeat(z[None, :], 2 * self.nv, axis=0)
        idx = np.arange(self.nv)
        Z[2 * idx, idx] += _FD_STEP
        Z[2 * idx + 1, idx] -= _FD_STEP
        f = self.objective_batch(Z)
        return (f[0::2] - f[1::2]) / (2.0 * _FD_STEP)

    def solve(self) -> InnerResult:
        z0 = self.init.control_points[1:].ravel().copy()
        f0 = self.objective(z0)
        if np.allclose(self.theta * self._w_active, 0.0):
            res_z, res_f, nit, success = z0, f0, 0, True
        else:
            s = self._var_scale
            res = minimize(lambda u: self.objective(s * u), z0 / s,
                           jac=lambda u: self.gradient(s * u) * s,
                           method="L-BFGS-B",
                           options={"maxiter": self.config.max_inner,
                                    "ftol": self.config.inner_tol * 1e-3,
                                    "gtol": 1e-6})
            res_z, res_f, nit, success = s * res.x, float(res.fun), res.nit, bool(res.success)
        if res_f > f0:  # never return anything worse than the initialization
            res_z, res_f = z0, f0
        cps = self.control_points(res_z)
        traj = from_control_points(self.init.knots, cps)
        vals, trigs, _, _ = self.evaluator.features(cps[None], trigger=self.trigger)
        scaled = vals[0] * self.scaling.omega
        return InnerResult(trajectory=traj, objective=res_f, n_iterations=nit,
                           features=scaled, trigger=trigs[0], success=success)


def optimize_trajectory(theta: np.ndarray, init: SplineTrajectory,
                        tv: SplineTrajectory, ctx: LaneContext,
                        config: ScenarioConfig,
                        frozen_trigger: TriggerInfo | None = None) -> InnerResult:
    """Minimize theta . f(r) over control points; c_0 stays at the init's first point."""
    if not np.all(np.isfinite(theta)):
        raise ValueError("non-finite weight vector")
    return InnerProblem(theta, init, tv, ctx, config, frozen_trigger).solve()


def outer_gradient(theta: np.ndarray, demo_features: np.ndarray,
                   init: SplineTrajectory, tv: SplineTrajectory, ctx: LaneContext,
                   config: ScenarioConfig,
                   frozen_trigger: TriggerInfo | None = None):
    """Feature-matching gradient: scaled features of the inner optimum minus the
    demonstration's, masked to the active feature set."""
    result = optimize_trajectory(theta, init, tv, ctx, config, frozen_trigger)
    mask = active_mask(config.feature_set)
    grad = (result.features - np.asarray(demo_features, float)) * mask
    return grad, result


def demo_to_trajectories(demo: DemonstrationRecord, Ts: float):
    ev = states_to_control_points(demo.ev_states, Ts)
    tv = states_to_control_points(demo.tv_states, Ts)
    return ev, tv


def learn(demo: DemonstrationRecord, config: ScenarioConfig) -> LearningResult:
    """Iterate the weight-update law until the learning-error increment stalls.

    Returns the weights with minimal learning error over the run, plus the full
    per-iteration history.
    """
    if demo.ev_states.shape[0] < 3:
        raise ValueError("demonstration needs at least 3 states")
    ev, tv = demo_to_trajectories(demo, config.Ts)
    return learn_from_trajectories(ev, tv, config)


def learn_from_trajectories(demo_traj: SplineTrajectory, tv: SplineTrajectory,
                            config: ScenarioConfig) -> LearningResult:
    ctx = config.lane_context()
    scaling = config.scaling()
    mask = active_mask(config.feature_set)

    demo_trig = detect_trigger(demo_traj, tv, config.l_a, config.l_b,
                               config.lam, config.T_rct)
    frozen = demo_trig if config.freeze_trigger else None
    base_eval = FeatureEvaluator(demo_traj.knots, tv, ctx, config.T_rct,
                                 l_a=config.l_a, l_b=config.l_b, lam=config.lam,
                                 gap_clamp=config.gap_clamp)
    vals, _, _, _ = base_eval.features(demo_traj.control_points[None],
                                       trigger=demo_trig)
    f_demo = vals[0] * scaling.omega

    theta = np.ones(N_FEATURES) * mask
    alpha = config.alpha
    result = LearningResult(theta=theta.copy())
    prev_eps = None
    best_theta = theta.copy()
    best_grad = None

    for i in range(1, config.max_outer + 1):
        t0 = time.perf_counter()
        grad, inner = outer_gradient(theta, f_demo, demo_traj, tv, ctx, config,
                                     frozen_trigger=frozen)
        eps = float(np.linalg.norm(grad[mask]))
        result.history.append(IterationRecord(
            iteration=i, theta=theta.copy(), features=inner.features.copy(),
            epsilon=eps, inner_iterations=inner.n_iterations,
            wall_time=time.perf_counter() - t0))
        if eps < result.best_epsilon:
            result.best_epsilon = eps
            result.theta = theta.copy()
            result.reproduced = inner.trajectory
            best_theta = theta.copy()
            best_grad = grad
        if prev_eps is not None and abs(eps - prev_eps) < config.eps_bar:
            result.terminated_by_rule = True
            break
        if prev_eps is not None and eps > prev_eps:
            # step made things worse: halve the rate and retry from the best
            # iterate instead of compounding the overshoot
            alpha *= 0.5
            theta = np.maximum(0.0, best_theta + alpha * best_grad) * mask
        else:
            theta = np.maximum(0.0, theta + alpha * grad) * mask
        prev_eps = eps

    return result
