"""Piecewise quintic C2 splines parameterized by position/velocity/acceleration control points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import VehicleState

# control point column layout
CP_COLUMNS = ("rx", "vx", "ax", "ry", "vy", "ay")


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ControlPoint:
    rx: float
    vx: float
    ax: float
    ry: float
    vy: float
    ay: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.vx, self.ax, self.ry, self.vy, self.ay])


def hermite_quintic(p0, v0, a0, p1, v1, a1, T):
    """Coefficients (ascending powers of local time) of the unique quintic
    matching position/velocity/acceleration at both segment ends.

    Broadcasts over array arguments; returns stacked along the last axis.
    """
    p0, v0, a0, p1, v1, a1 = np.broadcast_arrays(p0, v0, a0, p1, v1, a1)
    h = p1 - p0
    T2 = T * T
    q0 = p0
    q1 = v0
    q2 = a0 / 2.0
    q3 = (20.0 * h - (8.0 * v1 + 12.0 * v0) * T - (3.0 * a0 - a1) * T2) / (2.0 * T2 * T)
    q4 = (-30.0 * h + (14.0 * v1 + 16.0 * v0) * T + (3.0 * a0 - 2.0 * a1) * T2) / (2.0 * T2 * T2)
    q5 = (12.0 * h - 6.0 * (v1 + v0) * T + (a1 - a0) * T2) / (2.0 * T2 * T2 * T)
    return np.stack([q0, q1, q2, q3, q4, q5], axis=-1)


def fit_segment(cj: ControlPoint, cj1: ControlPoint, tj: float, tj1: float) -> np.ndarray:
    """Quintic coefficients for one segment: shape (2, 6), rows = (x, y), ascending powers of (t - tj)."""
    if tj1 <= tj:
        raise ValueError("segment end time must exceed start time")
    T = tj1 - tj
    qx = hermite_quintic(cj.rx, cj.vx, cj.ax, cj1.rx, cj1.vx, cj1.ax, T)
    qy = hermite_quintic(cj.ry, cj.vy, cj.ay, cj1.ry, cj1.vy, cj1.ay, T)
    return np.stack([qx, qy])


def segment_coefficients(control_points: np.ndarray, durations: np.ndarray):
    """Vectorized per-segment coefficients.

    control_points: (..., S+1, 6); durations: (S,).
    Returns (coeffs_x, coeffs_y), each (..., S, 6).
    """
    c0 = control_points[..., :-1, :]
    c1 = control_points[..., 1:, :]
    cx = hermite_quintic(c0[..., 0], c0[..., 1], c0[..., 2],
                         c1[..., 0], c1[..., 1], c1[..., 2], durations)
    cy = hermite_quintic(c0[..., 3], c0[..., 4], c0[..., 5],
                         c1[..., 3], c1[..., 4], c1[..., 5], durations)
    return cx, cy


def polyval_local(coeffs: np.ndarray, tau, order: int = 0):
    """Evaluate ascending-power polynomials (or derivative of given order) at local time tau."""
    powers = np.arange(6)
    if order == 0:
        factors = np.ones(6)
    elif order == 1:
        factors = powers.astype(float)
        powers = np.maximum(powers - 1, 0)
    elif order == 2:
        factors = (np.arange(6) * (np.arange(6) - 1)).astype(float)
        powers = np.maximum(powers - 2, 0)
    else:
        raise ValueError("order must be 0, 1, or 2")
    tau = np.asarray(tau, dtype=float)
    basis = factors * np.power(tau[..., None], powers)
    # zero out terms killed by differentiation (0 * tau**0 handled by factors already)
    return np.sum(coeffs * basis, axis=-1)


@dataclass
class SplineTrajectory:
    knots: np.ndarray  # (S+1,), strictly increasing
    control_points: np.ndarray  # (S+1, 6), columns CP_COLUMNS
    coeffs_x: np.ndarray  # (S, 6) ascending powers of local time
    coeffs_y: np.ndarray  # (S, 6)

    @property
    def n_segments(self) -> int:
        return len(self.knots) - 1

    @property
    def t_start(self) -> float:
        return float(self.knots[0])

    @property
    def t_end(self) -> float:
        return float(self.knots[-1])

    def segment_index(self, t) -> np.ndarray:
        idx = np.searchsorted(self.knots, t, side="right") - 1
        return np.clip(idx, 0, self.n_segments - 1)


def from_control_points(knots, control_points) -> SplineTrajectory:
    knots = np.asarray(knots, dtype=float)
    control_points = np.asarray(control_points, dtype=float)
    if knots.ndim != 1 or len(knots) < 2:
        raise ValueError("need at least two knots")
    if np.any(np.diff(knots) <= 0):
        raise ValueError("knots must be strictly increasing")
    if control_points.shape != (len(knots), 6):
        raise ValueError("control_points must have shape (len(knots), 6)")
    if not np.all(np.isfinite(control_points)):
        raise ValueError("non-finite control point")
    cx, cy = segment_coefficients(control_points, np.diff(knots))
    return SplineTrajectory(knots, control_points, cx, cy)


def evaluate(traj: SplineTrajectory, t: float, order: int = 0) -> tuple[float, float]:
    """Value (order 0) or time derivative (order 1 or 2) of the trajectory at t."""
    if t < traj.t_start - 1e-12 or t > traj.t_end + 1e-12:
        raise OutOfDomainError(f"t={t} outside [{traj.t_start}, {traj.t_end}]")
    t = min(max(t, traj.t_start), traj.t_end)
    j = int(traj.segment_index(t))
    tau = t - traj.knots[j]
    return (float(polyval_local(traj.coeffs_x[j], tau, order)),
            float(polyval_local(traj.coeffs_y[j], tau, order)))


def sample(traj: SplineTrajectory, ts, order: int = 0) -> np.ndarray:
    """Vectorized evaluate: returns array (..., 2) of (x, y) values/derivatives."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < traj.t_start - 1e-12) or np.any(ts > traj.t_end + 1e-12):
        raise OutOfDomainError("sample time outside trajectory domain")
    tc = np.clip(ts, traj.t_start, traj.t_end)
    j = traj.segment_index(tc)
    tau = tc - traj.knots[j]
    xv = polyval_local(traj.coeffs_x[j], tau, order)
    yv = polyval_local(traj.coeffs_y[j], tau, order)
    return np.stack([xv, yv], axis=-1)


def states_to_control_points(states, Ts: float) -> SplineTrajectory:
    """Convert uniformly sampled vehicle states into a spline on the same time grid.

    Velocities are the heading-projected speeds; accelerations use central
    differences of the speed (one-sided at the endpoints), projected the same way.
    """
    if isinstance(states, np.ndarray):
        arr = np.asarray(states, dtype=float)
    else:
        arr = np.array([s.as_tuple() if isinstance(s, VehicleState) else s for s in states],
                       dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError("states must be (n, 4): x, y, phi, v")
    n = arr.shape[0]
    if n < 3:
        raise ValueError("need at least 3 states")
    if Ts <= 0:
        raise ValueError("Ts must be > 0")
    x, y, phi, v = arr.T
    dv = np.empty(n)
    dv[1:-1] = (v[2:] - v[:-2]) / (2.0 * Ts)
    dv[0] = (v[1] - v[0]) / Ts
    dv[-1] = (v[-1] - v[-2]) / Ts
    c, s = np.cos(phi), np.sin(phi)
    cps = np.column_stack([x, v * c, dv * c, y, v * s, dv * s])
    knots = np.arange(n) * Ts
    return from_control_points(knots, cps)
