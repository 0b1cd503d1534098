"""File formats: trajectory/feature/weight/history CSV and trajectory comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .features import FEATURE_NAMES, N_FEATURES
from .smpc import DemonstrationRecord
from .spline import SplineTrajectory, from_control_points

TRAJECTORY_COLUMNS = ("t", "x", "y", "phi", "v", "vx", "vy", "ax", "ay")


class FileFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    # repr round-trips doubles exactly
    return repr(float(x))


def trajectory_rows(obj) -> list[list[float]]:
    if isinstance(obj, DemonstrationRecord):
        cps = _record_control_points(obj)
        t = obj.t
        phi = obj.ev_states[:, 2]
        v = obj.ev_states[:, 3]
    elif isinstance(obj, SplineTrajectory):
        cps = obj.control_points
        t = obj.knots
        phi = np.arctan2(cps[:, 4], cps[:, 1])
        v = np.hypot(cps[:, 1], cps[:, 4])
    else:
        raise TypeError("expected DemonstrationRecord or SplineTrajectory")
    rows = []
    for i in range(len(t)):
        rx, vx, ax, ry, vy, ay = cps[i]
        rows.append([t[i], rx, ry, phi[i], v[i], vx, vy, ax, ay])
    return rows


def _record_control_points(record: DemonstrationRecord) -> np.ndarray:
    from .spline import states_to_control_points
    Ts = float(record.t[1] - record.t[0])
    return states_to_control_points(record.ev_states, Ts).control_points


def export_trajectory(obj, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for row in trajectory_rows(obj):
            w.writerow([_fmt(v) for v in row])


def read_trajectory_table(path) -> np.ndarray:
    """Raw (n, 9) table of a trajectory file, validated."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != TRAJECTORY_COLUMNS:
            missing = set(TRAJECTORY_COLUMNS) - {h.strip() for h in header}
            if missing:
                raise FileFormatError(
                    f"{path}: missing column(s) {', '.join(sorted(missing))}")
            raise FileFormatError(f"{path}: unexpected header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRAJECTORY_COLUMNS):
                raise FileFormatError(f"{path}: row {lineno}: expected "
                                      f"{len(TRAJECTORY_COLUMNS)} values")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise FileFormatError(f"{path}: row {lineno}: non-numeric value") from None
    if len(rows) < 2:
        raise FileFormatError(f"{path}: need at least 2 samples")
    arr = np.array(rows)
    t = arr[:, 0]
    if np.any(np.diff(t) <= 0):
        bad = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 3  # header + 1-based + next row
        raise FileFormatError(f"{path}: row {bad}: time not strictly increasing")
    return arr


def import_trajectory(path) -> SplineTrajectory:
    """Rebuild the spline from its control-point samples (lossless round trip)."""
    arr = read_trajectory_table(path)
    t = arr[:, 0]
    cps = arr[:, [1, 5, 7, 2, 6, 8]]  # rx vx ax ry vy ay
    return from_control_points(t, cps)


def export_features(values: np.ndarray, path) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (N_FEATURES,):
        raise ValueError("feature vector must have 10 components")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURE_NAMES)
        w.writerow([_fmt(v) for v in values])


def import_features(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(h.strip() for h in next(reader))
        if header != FEATURE_NAMES:
            raise FileFormatError(f"{path}: expected header {','.join(FEATURE_NAMES)}")
        row = next(reader)
    return np.array([float(v) for v in row])


def export_weights(theta: np.ndarray, path) -> None:
    export_features(theta, path)  # same 10-column layout


def import_weights(path) -> np.ndarray:
    return import_features(path)


def export_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "epsilon", "inner_iterations", "wall_time"]
                   + [f"theta_{n}" for n in FEATURE_NAMES]
                   + [f"feat_{n}" for n in FEATURE_NAMES])
        for rec in history:
            w.writerow([rec.iteration, _fmt(rec.epsilon), rec.inner_iterations,
                        _fmt(rec.wall_time)]
                       + [_fmt(v) for v in rec.theta]
                       + [_fmt(v) for v in rec.features])


def read_history_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    return header, np.array(rows)


@dataclass
class CompareMetrics:
    max_gap: float
    rmse: float
    feature_l2: float | None = None
    n_points: int = 0


def compare_trajectories(a: SplineTrajectory, b: SplineTrajectory,
                         x_window: tuple[float, float] | None = None,
                         features_a: np.ndarray | None = None,
                         features_b: np.ndarray | None = None) -> CompareMetrics:
    """Lateral gap metrics between two trajectories, matched at equal
    longitudinal positions by interpolation."""
    xa = a.control_points[:, 0]
    ya = a.control_points[:, 3]
    xb = b.control_points[:, 0]
    yb = b.control_points[:, 3]
    if np.any(np.diff(xa) <= 0) or np.any(np.diff(xb) <= 0):
        raise ValueError("comparison requires monotonically advancing trajectories")
    lo = max(xa[0], xb[0])
    hi = min(xa[-1], xb[-1])
    if x_window is not None:
        lo = max(lo, x_window[0])
        hi = min(hi, x_window[1])
    if hi <= lo:
        raise ValueError("trajectories have no overlapping longitudinal range")
    xs = np.linspace(lo, hi, 400)
    ya_i = np.interp(xs, xa, ya)
    yb_i = np.interp(xs, xb, yb)
    gaps = np.abs(ya_i - yb_i)
    feat_l2 = None
    if features_a is not None and features_b is not None:
        feat_l2 = float(np.linalg.norm(np.asarray(features_a) - np.asarray(features_b)))
    return CompareMetrics(max_gap=float(np.max(gaps)),
                         rmse=float(np.sqrt(np.mean(gaps ** 2))),
                         feature_l2=feat_l2, n_points=len(xs))
