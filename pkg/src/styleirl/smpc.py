"""Stochastic MPC demonstration generator.

At every sampling instant the EV solves a finite-horizon tracking problem with
box input bounds, soft state bounds, and a chance-constrained collision
ellipse around the predicted TV position. The Gaussian position uncertainty is
folded into the constraint by inflating both semi-axes with the standard-normal
quantile of the risk parameter times the per-step standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.optimize import minimize

from . import dynamics
from .config import ScenarioConfig
from .dynamics import ControlInput, VehicleState

_STATUS_CONVERGED = "converged"
_STATUS_MAX_ITER = "max-iterations"
_STATUS_RELAXED = "infeasible-relaxed"


@dataclass(frozen=True)
class OcpWeights:
    Q: np.ndarray  # (4,) state-tracking diagonal
    R: np.ndarray  # (2,) input diagonal
    Q_N: np.ndarray  # (4,) terminal diagonal

    @staticmethod
    def from_config(config: ScenarioConfig) -> "OcpWeights":
        return OcpWeights(np.asarray(config.Q, float), np.asarray(config.R, float),
                          np.asarray(config.Q_N, float))


@dataclass(frozen=True)
class SafetyEllipse:
    l_a: float
    l_b: float
    p: float

    def __post_init__(self):
        if self.l_a <= 0 or self.l_b <= 0:
            raise ValueError("ellipse semi-axes must be > 0")
        if not 0.0 < self.p < 1.0:
            raise ValueError("risk parameter p must lie in (0, 1)")


@dataclass(frozen=True)
class TvPrediction:
    mean: np.ndarray  # (N, 2) predicted TV positions at k = 1..N
    sigma: np.ndarray  # (N,) position standard deviation per step


@dataclass
class OcpSolution:
    inputs: np.ndarray  # (N, 2)
    states: np.ndarray  # (N+1, 4)
    objective: float
    status: str
    max_violation: float
    merit_history: list = field(default_factory=list)


@dataclass
class DemonstrationRecord:
    t: np.ndarray  # (n,)
    ev_states: np.ndarray  # (n, 4)
    tv_states: np.ndarray  # (n, 4)
    inputs: np.ndarray  # (n-1, 2)
    statuses: list[str]
    objectives: np.ndarray  # (n-1,)


def predict_tv(tv_state: VehicleState, N: int, Ts: float, sigma0: float,
               sigma_growth: float) -> TvPrediction:
    """Constant-velocity straight-line TV prediction with linearly growing uncertainty."""
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(1, N + 1)
    mean = np.column_stack([
        tv_state.x + tv_state.v * math.cos(tv_state.phi) * k * Ts,
        tv_state.y + tv_state.v * math.sin(tv_state.phi) * k * Ts,
    ])
    return TvPrediction(mean, sigma0 + k * sigma_growth)


def ellipse_margin(dx: float, dy: float, ellipse: SafetyEllipse):
    """Signed margin of the collision ellipse: >= 0 iff outside."""
    dx = np.asarray(dx, float)
    dy = np.asarray(dy, float)
    out = dx * dx / ellipse.l_a ** 2 + dy * dy / ellipse.l_b ** 2 - 1.0
    return float(out) if out.ndim == 0 else out


def tightened_ellipse(ellipse: SafetyEllipse, sigma_k: float) -> SafetyEllipse:
    """Deterministic surrogate of the chance constraint: both semi-axes grow by
    the p-quantile of the standard normal times sigma_k."""
    z = NormalDist().inv_cdf(ellipse.p)
    grow = z * sigma_k
    return SafetyEllipse(ellipse.l_a + grow, ellipse.l_b + grow, ellipse.p)


def _rollout(state0: np.ndarray, inputs: np.ndarray, Ts: float,
             l_f: float, l_r: float) -> np.ndarray:
    """Euler rollout of the bicycle model; identical arithmetic to dynamics.step."""
    N = inputs.shape[0]
    states = np.empty((N + 1, 4))
    states[0] = state0
    x, y, phi, v = state0
    ratio = l_r / (l_f + l_r)
    for k in range(N):
        a, delta = inputs[k]
        beta = math.atan(ratio * math.tan(delta))
        x = x + Ts * v * math.cos(phi + beta)
        y = y + Ts * v * math.sin(phi + beta)
        phi = phi + Ts * (v / l_r) * math.sin(beta)
        v = v + Ts * a
        states[k + 1] = (x, y, phi, v)
    return states


class _OcpProblem:
    """One finite-horizon OCP instance; augmented-Lagrangian treatment of the
    ellipse and state-bound inequalities over the flattened input sequence."""

    def __init__(self, ev_state: VehicleState, tv_pred: TvPrediction,
                 config: ScenarioConfig):
        self.config = config
        self.N = config.N
        self.Ts = config.Ts
        self.x0 = np.array(ev_state.as_tuple())
        self.weights = OcpWeights.from_config(config)
        base = SafetyEllipse(config.l_a, config.l_b, config.p)
        tight = [tightened_ellipse(base, s) for s in tv_pred.sigma]
        self.la_t = np.array([e.l_a for e in tight])
        self.lb_t = np.array([e.l_b for e in tight])
        self.tv_mean = tv_pred.mean
        k = np.arange(self.N + 1)
        self.ref = np.column_stack([
            self.x0[0] + config.v_ref * k * config.Ts,
            np.full(self.N + 1, config.y_ref),
            np.full(self.N + 1, config.phi_ref),
            np.full(self.N + 1, config.v_ref),
        ])

    def rollout(self, z: np.ndarray) -> np.ndarray:
        return _rollout(self.x0, z.reshape(self.N, 2), self.Ts,
                        self.config.l_f, self.config.l_r)

    def tracking_cost(self, states: np.ndarray, inputs: np.ndarray) -> float:
        w = self.weights
        err = states - self.ref
        run = np.sum(err[:-1] ** 2 * w.Q) + np.sum(inputs ** 2 * w.R)
        term = np.sum(err[-1] ** 2 * w.Q_N)
        return float(run + term)

    def constraints(self, states: np.ndarray) -> np.ndarray:
        """Inequality vector g(z) >= 0 at prediction steps 1..N."""
        c = self.config
        s = states[1:]
        dx = s[:, 0] - self.tv_mean[:, 0]
        dy = s[:, 1] - self.tv_mean[:, 1]
        margins = dx ** 2 / self.la_t ** 2 + dy ** 2 / self.lb_t ** 2 - 1.0
        return np.concatenate([
            margins,
            s[:, 1] - c.y_min, c.y_max - s[:, 1],
            s[:, 2] - c.phi_min, c.phi_max - s[:, 2],
            s[:, 3] - c.v_min, c.v_max - s[:, 3],
        ])

    def tightened_margins(self, states: np.ndarray) -> np.ndarray:
        return self.constraints(states)[: self.N]

    def augmented(self, z: np.ndarray, lam: np.ndarray, mu: float) -> float:
        states = self.rollout(z)
        J = self.tracking_cost(states, z.reshape(self.N, 2))
        g = self.constraints(states)
        shifted = np.maximum(0.0, lam - mu * g)
        J += float(np.sum(shifted ** 2 - lam ** 2) / (2.0 * mu))
        if not np.isfinite(J):
            return 1e30
        return J


def solve_ocp(ev_state: VehicleState, tv_pred: TvPrediction, config: ScenarioConfig,
              warm_start: np.ndarray | None = None) -> OcpSolution:
    """Solve the chance-constrained tracking OCP for one sampling instant."""
    prob = _OcpProblem(ev_state, tv_pred, config)
    N = config.N
    z = np.zeros(2 * N) if warm_start is None else np.asarray(warm_start, float).ravel().copy()
    box = [(config.a_min, config.a_max), (config.delta_min, config.delta_max)] * N
    n_con = 7 * N
    lam = np.zeros(n_con)
    mu = 100.0
    merit_history: list[list[float]] = []
    feas_tol = 1e-7
    total_iters = 0
    prev_viol = np.inf
    status = _STATUS_MAX_ITER

    for _round in range(12):
        budget = max(config.smpc_max_iter // 4, 10)
        history: list[float] = []

        def fun(zz, lam=lam, mu=mu):
            return prob.augmented(zz, lam, mu)

        def jac(zz, lam=lam, mu=mu):
            g = np.empty_like(zz)
            h = 1e-6
            for i in range(len(zz)):
                zp = zz.copy(); zp[i] += h
                zm = zz.copy(); zm[i] -= h
                g[i] = (prob.augmented(zp, lam, mu) - prob.augmented(zm, lam, mu)) / (2 * h)
            return g

        def cb(zz):
            history.append(fun(zz))

        res = minimize(fun, z, jac=jac, method="L-BFGS-B", bounds=box, callback=cb,
                       options={"maxiter": budget, "ftol": 1e-12,
                                "gtol": config.smpc_tol})
        z = res.x
        total_iters += res.nit
        merit_history.append(history)
        g = prob.constraints(prob.rollout(z))
        viol = float(max(0.0, -np.min(g)))
        if viol <= feas_tol:
            status = _STATUS_CONVERGED
            break
        lam = np.maximum(0.0, lam - mu * g)
        if viol > 0.25 * prev_viol:
            mu = min(mu * 10.0, config.soft_penalty * 100.0)
        prev_viol = viol

    states = prob.rollout(z)
    g = prob.constraints(states)
    viol = float(max(0.0, -np.min(g)))
    if viol > 1e-6:
        status = _STATUS_RELAXED
    inputs = z.reshape(N, 2)
    objective = prob.tracking_cost(states, inputs)
    return OcpSolution(inputs=inputs, states=states, objective=objective,
                       status=status, max_violation=viol,
                       merit_history=merit_history)


def scripted_tv_states(config: ScenarioConfig) -> np.ndarray:
    """Constant-velocity TV states on the demonstration's sampling grid."""
    n = config.n_states
    t = np.arange(n) * config.Ts
    tv = config.tv_initial()
    return np.column_stack([
        tv.x + tv.v * math.cos(tv.phi) * t,
        tv.y + tv.v * math.sin(tv.phi) * t,
        np.full(n, tv.phi),
        np.full(n, tv.v),
    ])


def run_closed_loop(config: ScenarioConfig) -> DemonstrationRecord:
    """Generate the demonstration: solve the OCP, apply the first input, advance
    the scripted constant-velocity TV, repeat."""
    config.validate()
    n = config.n_states
    geom = config.geometry()
    ev = config.ev_initial()
    tv = config.tv_initial()
    ev_states = np.empty((n, 4))
    tv_states = np.empty((n, 4))
    inputs = np.empty((n - 1, 2))
    objectives = np.empty(n - 1)
    statuses: list[str] = []
    ev_states[0] = ev.as_tuple()
    tv_states[0] = tv.as_tuple()
    warm = None

    for t in range(n - 1):
        pred = predict_tv(tv, config.N, config.Ts, config.sigma0, config.sigma_growth)
        sol = solve_ocp(ev, pred, config, warm_start=warm)
        u = ControlInput(float(sol.inputs[0, 0]), float(sol.inputs[0, 1]))
        ev = dynamics.step(ev, u, config.Ts, geom)
        if not all(math.isfinite(v) for v in ev.as_tuple()):
            raise FloatingPointError(f"non-finite EV state at step {t + 1}")
        tv = VehicleState(tv.x + tv.v * math.cos(tv.phi) * config.Ts,
                          tv.y + tv.v * math.sin(tv.phi) * config.Ts,
                          tv.phi, tv.v)
        ev_states[t + 1] = ev.as_tuple()
        tv_states[t + 1] = tv.as_tuple()
        inputs[t] = sol.inputs[0]
        objectives[t] = sol.objective
        statuses.append(sol.status)
        warm = np.vstack([sol.inputs[1:], sol.inputs[-1:]])

    return DemonstrationRecord(t=np.arange(n) * config.Ts, ev_states=ev_states,
                               tv_states=tv_states, inputs=inputs,
                               statuses=statuses, objectives=objectives)
