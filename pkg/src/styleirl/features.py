"""Trajectory features for driving-style costs, with reaction-aware triggered components.

Feature order (fixed everywhere, including CSV export):
    f_ax   squared longitudinal acceleration, integrated
    f_ay   squared lateral acceleration, integrated
    f_v    squared deviation from desired longitudinal speed, integrated
    f_l    absolute offset from desired lane center, integrated
    f_il   absolute offset from initial lane center, integrated until leaving it
    f_el   absolute offset from target lane center over the final second
    f_tiv  reciprocal inter-vehicular time scaled by lane limit speed, integrated
    f_sd   exp(-|lateral gap|) at the trigger time
    f_ed   exp(-|lateral gap|) at the end of the reaction window
    f_id   absolute lateral displacement from the trigger-time position, integrated
           over the reaction window

The last three are gated by an elliptical proximity trigger; all are zero when
the trigger never fires.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .spline import SplineTrajectory, sample, segment_coefficients

FEATURE_NAMES = ("f_ax", "f_ay", "f_v", "f_l", "f_il", "f_el",
                 "f_tiv", "f_sd", "f_ed", "f_id")
N_FEATURES = len(FEATURE_NAMES)
# indices of the reaction-aware additions (g-j)
REACTIVE_INDICES = (6, 7, 8, 9)
# indices gated by the trigger (h-j)
TRIGGERED_INDICES = (7, 8, 9)

_GL_X, _GL_W = leggauss(5)
_N_ABS = 50  # fixed trapezoid sub-steps per segment for |.| integrands


@dataclass(frozen=True)
class TriggerInfo:
    triggered: bool
    t_trg: float | None = None
    t_window_end: float | None = None


@dataclass(frozen=True)
class LaneContext:
    v_des: float  # desired longitudinal speed (m/s)
    v_lane: float  # target-lane limit speed (m/s)
    l_des: float  # desired lane center (m)
    l_initial: float  # initial lane center (m)
    l_target: float  # target lane center (m)
    t_end: float  # trajectory end time (s)
    lane_width: float = 5.25
    t_turn: float | None = None  # None: derived from the evaluated trajectory


def _default_omega() -> np.ndarray:
    w = np.ones(N_FEATURES)
    for name in ("f_il", "f_el", "f_sd", "f_ed", "f_id"):
        w[FEATURE_NAMES.index(name)] = 10.0
    return w


@dataclass
class FeatureScaling:
    omega: np.ndarray = field(default_factory=_default_omega)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.omega.shape != (N_FEATURES,) or np.any(self.omega <= 0):
            raise ValueError("scaling needs 10 positive coefficients")


@dataclass
class FeatureResult:
    values: np.ndarray  # (10,) unscaled
    trigger: TriggerInfo
    t_turn: float
    tiv_clamped: bool


def elliptical_index(dx, dy, l_a: float, l_b: float):
    """Squared elliptical distance between vehicle centers."""
    if l_a <= 0 or l_b <= 0:
        raise ValueError("ellipse semi-axes must be > 0")
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    out = dx * dx / (l_a * l_a) + dy * dy / (l_b * l_b)
    return float(out) if out.ndim == 0 else out


def scale(values: np.ndarray, scaling: FeatureScaling) -> np.ndarray:
    """Componentwise scaled feature vector."""
    return np.asarray(values, dtype=float) * scaling.omega


def detect_trigger(ev: SplineTrajectory, tv: SplineTrajectory, l_a: float, l_b: float,
                   lam: float, T_rct: float) -> TriggerInfo:
    """Earliest sample (on the ev knot grid) where the elliptical index drops below lam."""
    ts = ev.knots
    pe = sample(ev, ts, 0)
    pt = sample(tv, ts, 0)
    se = elliptical_index(pe[:, 0] - pt[:, 0], pe[:, 1] - pt[:, 1], l_a, l_b)
    hit = np.flatnonzero(se < lam)
    if len(hit) == 0:
        return TriggerInfo(False)
    t_trg = float(ts[hit[0]])
    return TriggerInfo(True, t_trg, min(t_trg + T_rct, ev.t_end))


class FeatureEvaluator:
    """Vectorized feature computation for batches of control-point sets on a fixed
    uniform knot grid, against a fixed TV trajectory.

    This is the hot path of the inner trajectory optimizer: quadrature nodes,
    polynomial bases, and TV samples are precomputed once.
    """

    def __init__(self, knots: np.ndarray, tv: SplineTrajectory, ctx: LaneContext,
                 T_rct: float, l_a: float | None = None, l_b: float | None = None,
                 lam: float | None = None, gap_clamp: float = 0.1):
        knots = np.asarray(knots, dtype=float)
        dt = np.diff(knots)
        if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * dt[0]:
            raise ValueError("knot grid must be uniform and increasing")
        self.knots = knots
        self.Ts = float(dt[0])
        self.S = len(knots) - 1
        self.ctx = ctx
        self.T_rct = float(T_rct)
        self.l_a, self.l_b, self.lam = l_a, l_b, lam
        self.gap_clamp = gap_clamp
        self.tv = tv

        Ts = self.Ts
        # Gauss-Legendre nodes/weights mapped to [0, Ts]; exact for the
        # polynomial integrands (squared derivatives, degree <= 8)
        self._tau_gl = (_GL_X + 1.0) * 0.5 * Ts
        self._w_gl = _GL_W * 0.5 * Ts
        powers = np.arange(6)
        self._B1 = powers * np.power(self._tau_gl[:, None],
                                     np.maximum(powers - 1, 0))  # (5, 6)
        self._B2 = (powers * (powers - 1)) * np.power(self._tau_gl[:, None],
                                                      np.maximum(powers - 2, 0))
        # dense trapezoid grid for |.| integrands
        self._tau_d = np.linspace(0.0, Ts, _N_ABS + 1)
        self._B0 = np.power(self._tau_d[:, None], powers)  # (51, 6)
        w = np.full(_N_ABS + 1, Ts / _N_ABS)
        w[0] = w[-1] = 0.5 * Ts / _N_ABS
        self._w_d = w
        self._t_dense = knots[:-1, None] + self._tau_d[None, :]  # (S, 51)

        tvd = sample(tv, self._t_dense, 0)
        self._tvx_d = tvd[..., 0]
        self._tvy_d = tvd[..., 1]
        tvk = sample(tv, knots, 0)
        self._tvx_k = tvk[:, 0]
        self._tvy_k = tvk[:, 1]

        lo = max(ctx.t_end - 1.0, float(knots[0]))
        self._w_el = self._window_weights(lo, ctx.t_end)
        self._w_id_cache: dict[tuple[int, float], np.ndarray] = {}

    def _window_weights(self, a: float, b: float) -> np.ndarray:
        """Trapezoid weights on the dense grid for integration over [a, b]."""
        W = np.zeros((self.S, _N_ABS + 1))
        h = self.Ts / _N_ABS
        for s in range(self.S):
            t0 = self.knots[s]
            lo_seg = max(a, t0)
            hi_seg = min(b, t0 + self.Ts)
            if hi_seg <= lo_seg:
                continue
            if lo_seg <= t0 + 1e-12 and hi_seg >= t0 + self.Ts - 1e-12:
                W[s] = self._w_d
                continue
            for i in range(_N_ABS):
                c_lo = t0 + i * h
                lo = max(lo_seg, c_lo)
                hi = min(hi_seg, c_lo + h)
                if hi <= lo:
                    continue
                span = hi - lo
                frac = ((lo + hi) * 0.5 - c_lo) / h  # weight share of the right node
                W[s, i] += span * (1.0 - frac)
                W[s, i + 1] += span * frac
        return W

    def _id_weights(self, k: int, te: float) -> np.ndarray:
        key = (k, round(te, 12))
        w = self._w_id_cache.get(key)
        if w is None:
            w = self._window_weights(float(self.knots[k]), te)
            self._w_id_cache[key] = w
        return w

    def features(self, control_points: np.ndarray,
                 trigger: TriggerInfo | None = None, abs_smooth: float = 0.0):
        """Unscaled feature vectors for a batch of control-point sets.

        control_points: (..., S+1, 6). Returns (values, triggers, t_turns,
        clamped) where values has shape (..., 10). When `trigger` is given it is
        used for every candidate; otherwise the trigger is recomputed per
        candidate (requires l_a, l_b, lam). A nonzero `abs_smooth` replaces
        |u| with sqrt(u^2 + d^2) - d in the integrands, for use as a
        differentiable optimization surrogate only.
        """
        if abs_smooth > 0.0:
            d = abs_smooth
            _abs = lambda u: np.sqrt(u * u + d * d) - d
        else:
            _abs = np.abs
        C = np.asarray(control_points, dtype=float)
        lead = C.shape[:-2]
        C = C.reshape((-1,) + C.shape[-2:])
        B = C.shape[0]
        ctx = self.ctx

        cx, cy = segment_coefficients(C, self.Ts)  # (B, S, 6) each

        vals = np.zeros((B, N_FEATURES))
        d2x = cx @ self._B2.T
        d2y = cy @ self._B2.T
        d1x = cx @ self._B1.T
        vals[:, 0] = np.einsum("bsn,n->b", d2x * d2x, self._w_gl)
        vals[:, 1] = np.einsum("bsn,n->b", d2y * d2y, self._w_gl)
        dv = ctx.v_des - d1x
        vals[:, 2] = np.einsum("bsn,n->b", dv * dv, self._w_gl)

        xd = cx @ self._B0.T  # (B, S, 51)
        yd = cy @ self._B0.T
        vals[:, 3] = np.einsum("bsn,n->b", _abs(ctx.l_des - yd), self._w_d)

        # initial-lane feature: integrate until the first dense-grid sample that
        # has left the initial lane (beyond a quarter lane width)
        yk = C[:, :, 3]  # (B, S+1)
        ail = _abs(ctx.l_initial - yd)
        seg_il = np.einsum("bsn,n->bs", ail, self._w_d)
        cs = np.concatenate([np.zeros((B, 1)), np.cumsum(seg_il, axis=1)], axis=1)
        h = self.Ts / _N_ABS
        if ctx.t_turn is None:
            off = (np.abs(yd - ctx.l_initial) > ctx.lane_width / 4.0).reshape(B, -1)
            any_off = off.any(axis=1)
            first = np.where(any_off, off.argmax(axis=1), self.S * (_N_ABS + 1))
            s_turn = np.minimum(first // (_N_ABS + 1), self.S)
            i_turn = np.where(s_turn < self.S, first % (_N_ABS + 1), 0)
        else:
            t_rel = np.clip(ctx.t_turn - self.knots[0], 0.0, self.S * self.Ts)
            cells = int(round(t_rel / h))
            s_turn = np.full(B, min(cells // _N_ABS, self.S))
            i_turn = np.full(B, cells % _N_ABS if s_turn[0] < self.S else 0)
        # trapezoid weights for the partial cell range [t_s, t_s + i*h]
        j = np.arange(_N_ABS + 1)
        wpart = np.where(j[None, :] < i_turn[:, None], h, 0.0)
        nonzero = i_turn > 0
        wpart[:, 0] = np.where(nonzero, 0.5 * h, 0.0)
        wpart[np.arange(B), i_turn] = np.where(nonzero, 0.5 * h, wpart[np.arange(B), i_turn])
        ail_turn = np.take_along_axis(ail, np.minimum(s_turn, self.S - 1)[:, None, None],
                                      axis=1)[:, 0, :]
        vals[:, 4] = cs[np.arange(B), s_turn] + np.einsum("bn,bn->b", ail_turn, wpart)
        t_turns = self.knots[s_turn] + i_turn * h

        vals[:, 5] = np.einsum("bsn,sn->b", _abs(ctx.l_target - yd), self._w_el)

        gap = np.abs(self._tvx_d - xd)
        clamped = gap < self.gap_clamp
        np.maximum(gap, self.gap_clamp, out=gap)
        vals[:, 6] = np.einsum("bsn,n->b", ctx.v_lane / gap, self._w_d)
        clamped_any = clamped.any(axis=(1, 2))

        # triggered reaction features
        if trigger is not None:
            if trigger.triggered:
                k = int(round((trigger.t_trg - self.knots[0]) / self.Ts))
                trg_k = np.full(B, k)
                fired = np.ones(B, dtype=bool)
            else:
                trg_k = np.zeros(B, dtype=int)
                fired = np.zeros(B, dtype=bool)
        else:
            if self.l_a is None or self.lam is None:
                raise ValueError("trigger recompute requires l_a, l_b, lam")
            se = elliptical_index(C[:, :, 0] - self._tvx_k,
                                  yk - self._tvy_k, self.l_a, self.l_b)
            hit = se < self.lam
            fired = hit.any(axis=1)
            trg_k = np.where(fired, hit.argmax(axis=1), 0)

        triggers: list[TriggerInfo] = [TriggerInfo(False)] * B
        t_end = float(self.knots[-1])
        for k in np.unique(trg_k[fired]):
            idx = np.flatnonzero(fired & (trg_k == k))
            t_trg = float(self.knots[k])
            te = min(t_trg + self.T_rct, t_end)
            ti = TriggerInfo(True, t_trg, te)
            for b in idx:
                triggers[b] = ti
            y_ref = yk[idx, k]
            vals[idx, 7] = np.exp(-np.abs(y_ref - self._tvy_k[k]))
            # trajectory lateral position at the window end (may be mid-segment)
            j = min(int(np.searchsorted(self.knots, te, side="right")) - 1, self.S - 1)
            tau = te - self.knots[j]
            basis = np.power(tau, np.arange(6))
            y_te = cy[idx, j] @ basis
            tv_y_te = sample(self.tv, te, 0)[1]
            vals[idx, 8] = np.exp(-np.abs(y_te - tv_y_te))
            w_id = self._id_weights(int(k), te)
            vals[idx, 9] = np.einsum("bsn,sn->b",
                                     _abs(yd[idx] - y_ref[:, None, None]), w_id)

        out = vals.reshape(lead + (N_FEATURES,))
        return out, triggers, t_turns.reshape(lead), clamped_any.reshape(lead)


def compute_features(ev: SplineTrajectory, tv: SplineTrajectory, ctx: LaneContext,
                     trig: TriggerInfo) -> FeatureResult:
    """Unscaled feature vector of an (EV, TV) trajectory pair under a given trigger."""
    T_rct = 0.0
    if trig.triggered:
        T_rct = trig.t_window_end - trig.t_trg
    ev_eval = FeatureEvaluator(ev.knots, tv, ctx, T_rct)
    vals, _, t_turns, clamped = ev_eval.features(ev.control_points[None], trigger=trig)
    return FeatureResult(values=vals[0], trigger=trig,
                         t_turn=float(t_turns[0]), tiv_clamped=bool(clamped[0]))
