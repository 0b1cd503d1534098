import numpy as np
import pytest

from styleirl import io as sio
from styleirl.features import FEATURE_NAMES
from styleirl.learner import IterationRecord
from styleirl.smpc import DemonstrationRecord
from styleirl.spline import from_control_points, states_to_control_points


def forward_trajectory(n=8, seed=0):
    rng = np.random.default_rng(seed)
    cps = rng.normal(0, 1, size=(n, 6))
    cps[:, 0] = 80.0 + np.cumsum(rng.uniform(4, 6, n))
    cps[:, 1] = np.abs(cps[:, 1]) + 20.0
    return from_control_points(np.arange(n) * 0.2, cps)


def test_trajectory_round_trip_exact(tmp_path):
    traj = forward_trajectory()
    p = tmp_path / "traj.csv"
    sio.export_trajectory(traj, p)
    back = sio.import_trajectory(p)
    # repr() formatting makes the round trip bit-exact
    np.testing.assert_array_equal(back.control_points, traj.control_points)
    np.testing.assert_array_equal(back.knots, traj.knots)


def test_export_demonstration_record(tmp_path):
    n = 5
    t = np.arange(n) * 0.2
    states = np.column_stack([80 + 5 * t, np.full(n, 2.625), np.zeros(n),
                              np.full(n, 25.0)])
    rec = DemonstrationRecord(t=t, ev_states=states, tv_states=states.copy(),
                              inputs=np.zeros((n - 1, 2)),
                              statuses=["converged"] * (n - 1),
                              objectives=np.zeros(n - 1))
    p = tmp_path / "demo.csv"
    sio.export_trajectory(rec, p)
    back = sio.import_trajectory(p)
    expected = states_to_control_points(states, 0.2)
    np.testing.assert_array_equal(back.control_points, expected.control_points)


def test_read_trajectory_table_errors(tmp_path):
    p = tmp_path / "bad.csv"

    p.write_text("")
    with pytest.raises(sio.FileFormatError, match="empty"):
        sio.read_trajectory_table(p)

    p.write_text("t,x,y\n0,1,2\n")
    with pytest.raises(sio.FileFormatError, match="missing column"):
        sio.read_trajectory_table(p)

    head = ",".join(sio.TRAJECTORY_COLUMNS)
    p.write_text(head + "\n0,1,2\n")
    with pytest.raises(sio.FileFormatError, match="row 2"):
        sio.read_trajectory_table(p)

    p.write_text(head + "\n0,1,2,3,4,5,6,7,oops\n")
    with pytest.raises(sio.FileFormatError, match="row 2: non-numeric"):
        sio.read_trajectory_table(p)

    p.write_text(head + "\n0,1,2,3,4,5,6,7,8\n")
    with pytest.raises(sio.FileFormatError, match="at least 2"):
        sio.read_trajectory_table(p)

    row = "1,2,3,4,5,6,7,8"
    p.write_text(head + f"\n0.2,{row}\n0.1,{row}\n")
    with pytest.raises(sio.FileFormatError, match="row 3: time not strictly"):
        sio.read_trajectory_table(p)


def test_trajectory_table_skips_blank_rows(tmp_path):
    p = tmp_path / "t.csv"
    head = ",".join(sio.TRAJECTORY_COLUMNS)
    p.write_text(head + "\n0,1,2,3,4,5,6,7,8\n\n0.2,2,2,3,4,5,6,7,8\n")
    arr = sio.read_trajectory_table(p)
    assert arr.shape == (2, 9)


def test_features_round_trip(tmp_path):
    vals = np.linspace(0.1, 1.0, 10) * np.pi
    p = tmp_path / "f.csv"
    sio.export_features(vals, p)
    np.testing.assert_array_equal(sio.import_features(p), vals)
    header = p.read_text().splitlines()[0]
    assert header == ",".join(FEATURE_NAMES)


def test_features_shape_and_header_errors(tmp_path):
    with pytest.raises(ValueError):
        sio.export_features(np.zeros(9), tmp_path / "f.csv")
    p = tmp_path / "g.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(sio.FileFormatError):
        sio.import_features(p)


def test_weights_round_trip(tmp_path):
    theta = np.array([0.0, 1.5, 0.3, 2.0, 0.0, 0.1, 0.7, 0.0, 0.9, 1.1])
    p = tmp_path / "theta.csv"
    sio.export_weights(theta, p)
    np.testing.assert_array_equal(sio.import_weights(p), theta)


def test_history_round_trip(tmp_path):
    hist = [IterationRecord(iteration=i, theta=np.full(10, float(i)),
                            features=np.arange(10.0) + i, epsilon=1.0 / (i + 1),
                            inner_iterations=3 * i, wall_time=0.5 * i)
            for i in range(1, 4)]
    p = tmp_path / "h.csv"
    sio.export_history(hist, p)
    header, table = sio.read_history_table(p)
    assert header[:4] == ["iteration", "epsilon", "inner_iterations", "wall_time"]
    assert table.shape == (3, 24)
    np.testing.assert_array_equal(table[:, 0], [1, 2, 3])
    np.testing.assert_array_equal(table[:, 1], [1.0 / 2, 1.0 / 3, 1.0 / 4])
    np.testing.assert_array_equal(table[0, 4:14], np.full(10, 1.0))


def line_trajectory(x0, y, n=6):
    t = np.arange(n) * 0.2
    cps = np.zeros((n, 6))
    cps[:, 0] = x0 + 5.0 * t
    cps[:, 1] = 5.0
    cps[:, 3] = y if np.isscalar(y) else np.asarray(y)
    return from_control_points(t, cps)


def test_compare_identical_is_zero():
    a = line_trajectory(0.0, 2.0)
    m = sio.compare_trajectories(a, a)
    assert m.max_gap == 0.0 and m.rmse == 0.0
    assert m.n_points == 400


def test_compare_constant_offset():
    a = line_trajectory(0.0, 2.0)
    b = line_trajectory(0.0, 2.75)
    m = sio.compare_trajectories(a, b)
    assert m.max_gap == pytest.approx(0.75)
    assert m.rmse == pytest.approx(0.75)


def test_compare_window_restricts_range():
    ys = np.array([0, 0, 0, 1, 1, 1], dtype=float)
    a = line_trajectory(0.0, ys)
    b = line_trajectory(0.0, np.zeros(6))
    full = sio.compare_trajectories(a, b)
    early = sio.compare_trajectories(a, b, x_window=(0.0, 1.0))
    assert full.max_gap == pytest.approx(1.0)
    assert early.max_gap < 1.0  # knot interpolation only partially ramped by x=1


def test_compare_feature_l2():
    a = line_trajectory(0.0, 2.0)
    m = sio.compare_trajectories(a, a, features_a=np.zeros(10),
                                 features_b=np.ones(10))
    assert m.feature_l2 == pytest.approx(np.sqrt(10.0))


def test_compare_errors():
    a = line_trajectory(0.0, 2.0)
    b = line_trajectory(100.0, 2.0)
    with pytest.raises(ValueError, match="overlap"):
        sio.compare_trajectories(a, b)
    n = 4
    cps = np.zeros((n, 6))
    cps[:, 0] = [0.0, 1.0, 0.5, 2.0]  # x not monotone
    bad = from_control_points(np.arange(n) * 0.2, cps)
    with pytest.raises(ValueError, match="monotonically"):
        sio.compare_trajectories(bad, a)
