"""Scenario configuration: every constant of the two-vehicle lane-change setup.

Defaults encode the benchmark highway scenario: a three-lane road, the EV
starting in the right lane at 25 m/s, a constant-velocity TV in the center lane
at 28 m/s, and the EV changing into the center lane while accelerating to
30 m/s under a chance-constrained collision-avoidance ellipse.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .dynamics import StateInputBounds, VehicleGeometry, VehicleState
from .features import FeatureScaling, LaneContext, N_FEATURES


class ConfigError(ValueError):
    pass


def lane_center(i: int, lane_width: float = 5.25) -> float:
    return lane_width / 2.0 + i * lane_width


@dataclass
class ScenarioConfig:
    seed: int = 0
    # road / vehicles
    lane_width: float = 5.25
    n_lanes: int = 3
    l_f: float = 2.0
    l_r: float = 2.0
    veh_length: float = 5.0
    veh_width: float = 2.0
    # initial states
    ev_x0: float = 80.0
    ev_y0: float = 2.625
    ev_phi0: float = 0.0
    ev_v0: float = 25.0
    tv_x0: float = 60.0
    tv_y0: float = 7.875
    tv_phi0: float = 0.0
    tv_v0: float = 28.0
    # SMPC horizon and sampling
    N: int = 10
    Ts: float = 0.2
    T: float = 6.2
    p: float = 0.7
    # state/input bounds
    y_min: float = 1.0  # half vehicle width off the road edge
    y_max: float = 14.75
    phi_min: float = -0.05
    phi_max: float = 0.05
    v_min: float = 0.0
    v_max: float = 70.0
    a_min: float = -9.0
    a_max: float = 6.0
    delta_min: float = -0.05
    delta_max: float = 0.05
    # safety ellipse
    l_a: float = 15.0
    l_b: float = 3.0
    # TV prediction uncertainty
    sigma0: float = 1.0
    sigma_growth: float = 1.0
    # tracking cost diagonals and reference
    Q: tuple = (1e-6, 0.2, 50.0, 0.2)
    R: tuple = (1.0, 10.0)
    Q_N: tuple = (1e-6, 0.2, 50.0, 0.2)
    y_ref: float = 7.875
    phi_ref: float = 0.0
    v_ref: float = 30.0
    # SMPC solver
    smpc_max_iter: int = 200
    smpc_tol: float = 1e-6
    soft_penalty: float = 1e4
    # lane context / features
    v_des: float = 30.0
    v_lane: float = 30.0
    l_des: float = 7.875
    l_initial: float = 2.625
    l_target: float = 7.875
    lam: float = 1.82
    T_rct: float = 2.0
    gap_clamp: float = 0.1
    omega: tuple = (1.0, 1.0, 1.0, 1.0, 10.0, 10.0, 1.0, 10.0, 10.0, 10.0)
    # learner
    alpha: float = 0.02
    eps_bar: float = 0.01
    max_outer: int = 100
    max_inner: int = 300
    inner_tol: float = 1e-6
    abs_smooth: float = 1e-3  # |.| smoothing used only inside the inner solver
    prox_weight: float = 1e-3  # proximal anchor to the inner init (regularization)
    freeze_trigger: bool = False
    feature_set: int = 10  # 6 or 10

    def validate(self):
        checks = [
            ("Ts", self.Ts > 0),
            ("N", self.N >= 1),
            ("T", self.T > 0 and self.Ts > 0
             and abs(self.T / self.Ts - round(self.T / self.Ts)) < 1e-9),
            ("p", 0.0 < self.p < 1.0),
            ("lam", self.lam > 0),
            ("l_a", self.l_a > 0),
            ("l_b", self.l_b > 0),
            ("sigma0", self.sigma0 >= 0),
            ("sigma_growth", self.sigma_growth >= 0),
            ("lane_width", self.lane_width > 0),
            ("T_rct", self.T_rct > 0),
            ("alpha", self.alpha > 0),
            ("eps_bar", self.eps_bar > 0),
            ("abs_smooth", self.abs_smooth >= 0),
            ("prox_weight", self.prox_weight >= 0),
            ("feature_set", self.feature_set in (6, 10)),
            ("omega", len(self.omega) == N_FEATURES and all(w > 0 for w in self.omega)),
            ("Q", len(self.Q) == 4 and all(q >= 0 for q in self.Q)),
            ("R", len(self.R) == 2 and all(r >= 0 for r in self.R)),
            ("Q_N", len(self.Q_N) == 4 and all(q >= 0 for q in self.Q_N)),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for '{key}'")
        # bounds consistency goes through StateInputBounds' own checks
        self.bounds()

    # derived objects -----------------------------------------------------

    @property
    def n_states(self) -> int:
        """Number of sampled states in a demonstration (t = 0 .. (n-1)*Ts)."""
        return int(round(self.T / self.Ts))

    def geometry(self) -> VehicleGeometry:
        return VehicleGeometry(self.l_f, self.l_r, self.veh_length, self.veh_width)

    def bounds(self) -> StateInputBounds:
        try:
            return StateInputBounds(self.y_min, self.y_max, self.phi_min, self.phi_max,
                                    self.v_min, self.v_max, self.a_min, self.a_max,
                                    self.delta_min, self.delta_max)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def ev_initial(self) -> VehicleState:
        return VehicleState(self.ev_x0, self.ev_y0, self.ev_phi0, self.ev_v0)

    def tv_initial(self) -> VehicleState:
        return VehicleState(self.tv_x0, self.tv_y0, self.tv_phi0, self.tv_v0)

    def lane_context(self) -> LaneContext:
        t_end = (self.n_states - 1) * self.Ts
        return LaneContext(v_des=self.v_des, v_lane=self.v_lane, l_des=self.l_des,
                           l_initial=self.l_initial, l_target=self.l_target,
                           t_end=t_end, lane_width=self.lane_width)

    def scaling(self) -> FeatureScaling:
        return FeatureScaling(np.asarray(self.omega, dtype=float))


_TUPLE_FIELDS = {"Q", "R", "Q_N", "omega"}
_INT_FIELDS = {"seed", "n_lanes", "N", "smpc_max_iter", "max_outer", "max_inner",
               "feature_set"}
_BOOL_FIELDS = {"freeze_trigger"}

# dotted config-file key -> dataclass field
KEY_MAP = {
    "scenario.seed": "seed",
    "road.lane_width": "lane_width",
    "road.n_lanes": "n_lanes",
    "vehicle.l_f": "l_f",
    "vehicle.l_r": "l_r",
    "vehicle.length": "veh_length",
    "vehicle.width": "veh_width",
    "ev.x0": "ev_x0",
    "ev.y0": "ev_y0",
    "ev.phi0": "ev_phi0",
    "ev.v0": "ev_v0",
    "tv.x0": "tv_x0",
    "tv.y0": "tv_y0",
    "tv.phi0": "tv_phi0",
    "tv.v0": "tv_v0",
    "smpc.N": "N",
    "smpc.Ts": "Ts",
    "smpc.T": "T",
    "smpc.p": "p",
    "smpc.Q": "Q",
    "smpc.R": "R",
    "smpc.Q_N": "Q_N",
    "smpc.y_ref": "y_ref",
    "smpc.phi_ref": "phi_ref",
    "smpc.v_ref": "v_ref",
    "smpc.sigma0": "sigma0",
    "smpc.sigma_growth": "sigma_growth",
    "smpc.max_iter": "smpc_max_iter",
    "smpc.tol": "smpc_tol",
    "smpc.soft_penalty": "soft_penalty",
    "bounds.y_min": "y_min",
    "bounds.y_max": "y_max",
    "bounds.phi_min": "phi_min",
    "bounds.phi_max": "phi_max",
    "bounds.v_min": "v_min",
    "bounds.v_max": "v_max",
    "bounds.a_min": "a_min",
    "bounds.a_max": "a_max",
    "bounds.delta_min": "delta_min",
    "bounds.delta_max": "delta_max",
    "ellipse.l_a": "l_a",
    "ellipse.l_b": "l_b",
    "lane.v_des": "v_des",
    "lane.v_lane": "v_lane",
    "lane.l_des": "l_des",
    "lane.l_initial": "l_initial",
    "lane.l_target": "l_target",
    "features.lambda": "lam",
    "features.T_rct": "T_rct",
    "features.gap_clamp": "gap_clamp",
    "features.omega": "omega",
    "learner.alpha": "alpha",
    "learner.eps_bar": "eps_bar",
    "learner.max_outer": "max_outer",
    "learner.max_inner": "max_inner",
    "learner.inner_tol": "inner_tol",
    "learner.abs_smooth": "abs_smooth",
    "learner.prox_weight": "prox_weight",
    "learner.freeze_trigger": "freeze_trigger",
    "learner.feature_set": "feature_set",
}

_FIELD_NAMES = {f.name for f in fields(ScenarioConfig)}
assert set(KEY_MAP.values()) <= _FIELD_NAMES


def _parse_value(key: str, attr: str, raw: str):
    raw = raw.strip()
    try:
        if attr in _TUPLE_FIELDS:
            return tuple(float(v) for v in raw.split(","))
        if attr in _BOOL_FIELDS:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if attr in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"cannot parse value for '{key}': {raw!r}") from e


def apply_assignments(config: ScenarioConfig, items) -> ScenarioConfig:
    """Apply (dotted key, raw string value) pairs to a config in place."""
    for key, raw in items:
        attr = KEY_MAP.get(key)
        if attr is None:
            raise ConfigError(f"unknown config key '{key}'")
        setattr(config, attr, _parse_value(key, attr, raw))
    return config


def load_scenario(path) -> ScenarioConfig:
    """Load a flat key-value scenario file; unspecified keys keep their defaults."""
    items = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = text.split("=", 1)
            items.append((key.strip(), raw))
    config = ScenarioConfig()
    apply_assignments(config, items)
    config.validate()
    return config
