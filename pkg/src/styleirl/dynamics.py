"""Kinematic single-track (bicycle) vehicle model with explicit-Euler stepping."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class VehicleState:
    x: float  # longitudinal position (m)
    y: float  # lateral position (m)
    phi: float  # heading (rad)
    v: float  # speed (m/s)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.phi, self.v)


@dataclass(frozen=True)
class ControlInput:
    a: float  # acceleration (m/s^2)
    delta: float  # front steering angle (rad)


@dataclass(frozen=True)
class VehicleGeometry:
    l_f: float = 2.0  # center to front axle (m)
    l_r: float = 2.0  # center to rear axle (m)
    length: float = 5.0
    width: float = 2.0

    def __post_init__(self):
        for name in ("l_f", "l_r", "length", "width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"VehicleGeometry.{name} must be > 0")


@dataclass(frozen=True)
class StateInputBounds:
    y_min: float
    y_max: float
    phi_min: float
    phi_max: float
    v_min: float
    v_max: float
    a_min: float
    a_max: float
    delta_min: float
    delta_max: float

    def __post_init__(self):
        pairs = [
            ("y", self.y_min, self.y_max),
            ("phi", self.phi_min, self.phi_max),
            ("v", self.v_min, self.v_max),
            ("a", self.a_min, self.a_max),
            ("delta", self.delta_min, self.delta_max),
        ]
        for name, lo, hi in pairs:
            if lo > hi:
                raise ValueError(f"bounds for {name} have min > max")


def slip_angle(delta: float, geom: VehicleGeometry) -> float:
    """Kinematic slip angle beta at the vehicle center."""
    return math.atan(geom.l_r / (geom.l_f + geom.l_r) * math.tan(delta))


def step(state: VehicleState, u: ControlInput, dt: float,
         geom: VehicleGeometry) -> VehicleState:
    """One explicit-Euler step of the kinematic bicycle model."""
    vals = (state.x, state.y, state.phi, state.v, u.a, u.delta, dt)
    if not all(math.isfinite(z) for z in vals):
        raise ValueError("non-finite state, input, or dt")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    beta = slip_angle(u.delta, geom)
    return VehicleState(
        x=state.x + dt * state.v * math.cos(state.phi + beta),
        y=state.y + dt * state.v * math.sin(state.phi + beta),
        phi=state.phi + dt * (state.v / geom.l_r) * math.sin(beta),
        v=state.v + dt * u.a,
    )


def check_admissible(state: VehicleState, u: ControlInput,
                     bounds: StateInputBounds) -> list[str]:
    """Return identifiers of every violated state/input bound (empty if admissible)."""
    violations = []
    if not (bounds.y_min <= state.y <= bounds.y_max):
        violations.append("lateral-bound")
    if not (bounds.phi_min <= state.phi <= bounds.phi_max):
        violations.append("heading-bound")
    if not (bounds.v_min <= state.v <= bounds.v_max):
        violations.append("speed-bound")
    if not (bounds.a_min <= u.a <= bounds.a_max):
        violations.append("accel-bound")
    if not (bounds.delta_min <= u.delta <= bounds.delta_max):
        violations.append("steering-bound")
    return violations
