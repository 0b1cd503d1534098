import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from styleirl.spline import (ControlPoint, OutOfDomainError, evaluate, fit_segment,
                             from_control_points, hermite_quintic, sample,
                             segment_coefficients, states_to_control_points)

RNG = np.random.default_rng(12345)


def random_control_points(n_knots, scale=10.0, rng=RNG):
    return rng.normal(0.0, scale, size=(n_knots, 6))


def hermite_linear_system(p0, v0, a0, p1, v1, a1, T):
    """Oracle: solve the 6x6 Hermite interpolation system directly."""
    A = np.zeros((6, 6))
    powers = np.arange(6)
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    A[2, 2] = 2.0
    A[3] = T ** powers
    A[4] = powers * T ** np.maximum(powers - 1, 0)
    A[5] = powers * (powers - 1) * T ** np.maximum(powers - 2, 0)
    return np.linalg.solve(A, np.array([p0, v0, a0, p1, v1, a1]))


def test_uniform_motion_is_identity_quintic():
    q = fit_segment(ControlPoint(0, 1, 0, 0, 0, 0), ControlPoint(1, 1, 0, 0, 0, 0),
                    0.0, 1.0)
    np.testing.assert_allclose(q[0], [0, 1, 0, 0, 0, 0], atol=1e-12)
    # s(0.5) = 0.5
    assert np.polyval(q[0][::-1], 0.5) == pytest.approx(0.5)


def test_rest_to_rest_constant():
    q = fit_segment(ControlPoint(5, 0, 0, 5, 0, 0), ControlPoint(5, 0, 0, 5, 0, 0),
                    0.0, 0.2)
    np.testing.assert_allclose(q[0], [5, 0, 0, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(q[1], [5, 0, 0, 0, 0, 0], atol=1e-12)


def test_fit_segment_rejects_bad_interval():
    c = ControlPoint(0, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        fit_segment(c, c, 1.0, 1.0)


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1))
def test_hermite_matches_linear_system_oracle(seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(0, 5, size=6)
    T = 0.2
    q = hermite_quintic(*vals, T)
    ref = hermite_linear_system(*vals, T)
    np.testing.assert_allclose(q, ref, rtol=1e-8, atol=1e-10)


def test_interpolation_and_c2_on_random_sets():
    # 1000 random control-point sets: boundary interpolation and C2 continuity
    rng = np.random.default_rng(7)
    worst_interp = 0.0
    worst_jump = 0.0
    for _ in range(1000):
        n = rng.integers(2, 8)
        knots = np.arange(n) * 0.2
        cps = random_control_points(n, rng=rng)
        traj = from_control_points(knots, cps)
        for order, cols in ((0, (0, 3)), (1, (1, 4)), (2, (2, 5))):
            vals = sample(traj, knots, order)
            err = np.abs(vals - cps[:, cols]).max()
            worst_interp = max(worst_interp, err)
        for j in range(1, n - 1):
            t = knots[j]
            for order in (0, 1, 2):
                left = polyboth(traj, j - 1, t - knots[j - 1], order)
                right = polyboth(traj, j, 0.0, order)
                worst_jump = max(worst_jump, np.abs(left - right).max())
    assert worst_interp <= 1e-9
    assert worst_jump <= 1e-9


def polyboth(traj, seg, tau, order):
    from styleirl.spline import polyval_local
    return np.array([polyval_local(traj.coeffs_x[seg], tau, order),
                     polyval_local(traj.coeffs_y[seg], tau, order)])


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32 - 1))
def test_quintic_recovery(seed):
    # boundary data sampled from a true quintic recovers that quintic everywhere
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(0, 2, size=6)  # ascending powers
    T = 0.2
    d1 = np.polynomial.polynomial.polyder(coeffs)
    d2 = np.polynomial.polynomial.polyder(coeffs, 2)
    pv = np.polynomial.polynomial.polyval
    q = hermite_quintic(pv(0.0, coeffs), pv(0.0, d1), pv(0.0, d2),
                        pv(T, coeffs), pv(T, d1), pv(T, d2), T)
    taus = np.linspace(0, T, 23)
    ref = pv(taus, coeffs)
    got = pv(taus, q)
    np.testing.assert_allclose(got, ref, rtol=1e-8, atol=1e-8)


def test_evaluate_orders_and_domain():
    knots = np.array([0.0, 0.2, 0.4])
    cps = random_control_points(3, rng=np.random.default_rng(3))
    traj = from_control_points(knots, cps)
    assert evaluate(traj, 0.2, 0) == pytest.approx((cps[1, 0], cps[1, 3]))
    assert evaluate(traj, 0.2, 2) == pytest.approx((cps[1, 2], cps[1, 5]))
    with pytest.raises(OutOfDomainError):
        evaluate(traj, 0.5)
    with pytest.raises(OutOfDomainError):
        sample(traj, [-0.1, 0.1])
    with pytest.raises(ValueError):
        evaluate(traj, 0.1, order=3)


def test_sample_matches_evaluate():
    knots = np.arange(5) * 0.2
    traj = from_control_points(knots, random_control_points(5))
    ts = np.linspace(0, 0.8, 37)
    for order in (0, 1, 2):
        vec = sample(traj, ts, order)
        pts = np.array([evaluate(traj, t, order) for t in ts])
        np.testing.assert_allclose(vec, pts, atol=1e-12)


def test_segment_coefficients_batched():
    cps = np.stack([random_control_points(4), random_control_points(4)])
    cx, cy = segment_coefficients(cps, np.full(3, 0.2))
    assert cx.shape == (2, 3, 6) and cy.shape == (2, 3, 6)
    cx0, cy0 = segment_coefficients(cps[0], np.full(3, 0.2))
    np.testing.assert_allclose(cx[0], cx0, atol=1e-12)
    np.testing.assert_allclose(cy[0], cy0, atol=1e-12)


def test_from_control_points_validation():
    with pytest.raises(ValueError):
        from_control_points([0.0, 0.0], np.zeros((2, 6)))
    with pytest.raises(ValueError):
        from_control_points([0.0, 0.2], np.zeros((3, 6)))
    bad = np.zeros((2, 6))
    bad[1, 1] = np.nan
    with pytest.raises(ValueError):
        from_control_points([0.0, 0.2], bad)


def test_states_round_trip_positions():
    rng = np.random.default_rng(11)
    n = 12
    states = np.column_stack([
        np.cumsum(rng.uniform(4, 6, n)), rng.normal(5, 1, n),
        rng.uniform(-0.05, 0.05, n), rng.uniform(20, 30, n),
    ])
    traj = states_to_control_points(states, 0.2)
    pos = sample(traj, traj.knots, 0)
    np.testing.assert_allclose(pos[:, 0], states[:, 0], atol=1e-12)
    np.testing.assert_allclose(pos[:, 1], states[:, 1], atol=1e-12)


def test_states_uniform_motion_control_points():
    states = [(i * 2.0, 0.0, 0.0, 10.0) for i in range(5)]
    traj = states_to_control_points(states, 0.2)
    np.testing.assert_allclose(traj.control_points[:, 1], 10.0)
    np.testing.assert_allclose(traj.control_points[:, 2], 0.0, atol=1e-12)
    np.testing.assert_allclose(traj.control_points[:, 4], 0.0, atol=1e-12)
    np.testing.assert_allclose(traj.control_points[:, 5], 0.0, atol=1e-12)


def test_states_central_difference_acceleration():
    states = [(0, 0, 0, 10.0), (2, 0, 0, 10.2), (4, 0, 0, 10.4)]
    traj = states_to_control_points(states, 0.2)
    assert traj.control_points[1, 2] == pytest.approx(1.0)


def test_states_heading_projection():
    states = [(0, i * 2.0, np.pi / 2, 10.0) for i in range(3)]
    traj = states_to_control_points(np.array(states), 0.2)
    np.testing.assert_allclose(traj.control_points[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(traj.control_points[:, 4], 10.0)


def test_states_require_three():
    with pytest.raises(ValueError):
        states_to_control_points(np.zeros((2, 4)), 0.2)
    with pytest.raises(ValueError):
        states_to_control_points(np.zeros((3, 4)), 0.0)
