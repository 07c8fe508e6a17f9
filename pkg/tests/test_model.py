import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from trudinger.errors import InvalidArgument
from trudinger.model import (Exponent, chain_rule_identity_residual, check_vector_inequalities,
                             half_power_map, monotonicity_gap, power_map, sweep_vector_inequalities)

finite = st.floats(-10, 10, allow_nan=False)
exps = st.floats(2.05, 6.0)


def test_exponent():
    e = Exponent(3)
    assert abs(1 / e.p + 1 / e.q - 1) <= 1e-14
    for bad in (2, 1.5, float("nan"), float("inf")):
        with pytest.raises(InvalidArgument):
            Exponent(bad)


def test_power_map_examples():
    assert power_map(3, 2.0) == 4.0
    assert power_map(4, -2.0) == -8.0
    assert power_map(2.5, 0.0) == 0.0
    np.testing.assert_allclose(power_map(3, np.array([3.0, 4.0])), [15.0, 20.0])


def test_half_power_map_examples():
    assert half_power_map(4, 3.0) == 9.0
    assert half_power_map(4, -3.0) == -9.0
    assert half_power_map(3.7, 1.0) == 1.0


def test_monotonicity_gap_examples():
    assert monotonicity_gap(3, [1, 2], [1, 2]) == 0
    assert monotonicity_gap(2.0, [0, 0], [3, 4]) == pytest.approx(25.0, abs=1e-12)
    assert monotonicity_gap(4, 0.0, 1.0) == 1.0
    with pytest.raises(InvalidArgument):
        monotonicity_gap(3, [1, 2], [1, 2, 3])


@given(exps, finite, finite)
def test_maps_odd_and_monotone(p, x, y):
    for f in (power_map, half_power_map):
        assert f(p, -x) == -f(p, x)
        assert f(p, min(x, y)) <= f(p, max(x, y))
    # strict once the images are representable
    assume(y - x > 1e-6)
    for f in (power_map, half_power_map):
        assert f(p, x) < f(p, y)


def test_maps_monotone_random(rng):
    x = rng.uniform(-10, 10, 10_000)
    y = x + rng.uniform(1e-9, 5, x.size)
    for p in (2.5, 3.0, 4.0):
        # scalar maps written elementwise
        assert np.all(np.abs(y) ** (p - 2) * y > np.abs(x) ** (p - 2) * x)
        assert np.all([half_power_map(p, b) > half_power_map(p, a) for a, b in zip(x[:500], y[:500])])


@given(exps, finite)
def test_half_power_squares_to_power(p, a):
    lhs = half_power_map(p, a) ** 2
    assert abs(lhs - abs(a) ** p) <= 1e-12 * max(abs(a) ** p, 1e-300)


@given(exps, st.lists(finite, min_size=1, max_size=3), st.lists(finite, min_size=1, max_size=3))
def test_gap_symmetric_and_nonnegative(p, a, b):
    n = min(len(a), len(b))
    a, b = np.array(a[:n]), np.array(b[:n])
    assert monotonicity_gap(p, a, b) == monotonicity_gap(p, b, a)
    assert monotonicity_gap(p, a, b) >= 0


def test_inequality_examples():
    r = check_vector_inequalities(3, [1.0, 2.0], [1.0, 2.0])
    assert r.ok and r.gap == 0 and r.term1_bound == 0 and r.strong_bound == 0
    r = check_vector_inequalities(4, 0.0, 1.0)
    assert r.gap == 1.0 and r.term1_bound == 0.25 and r.strong_bound == 0.25 and r.ok
    with pytest.raises(InvalidArgument):
        check_vector_inequalities(3, [1.0], [1.0, 2.0])


def test_inequality_report_is_recomputable():
    a, b = np.array([0.3, -1.2]), np.array([2.0, 0.5])
    r = check_vector_inequalities(3.5, a, b)
    gap = np.dot(power_map(3.5, b) - power_map(3.5, a), b - a)
    term1 = 4 / 3.5**2 * np.sum((half_power_map(3.5, b) - half_power_map(3.5, a)) ** 2)
    conv = np.linalg.norm(b) ** 3.5 - np.linalg.norm(a) ** 3.5 - 3.5 * np.dot(power_map(3.5, b), b - a)
    assert r.gap == pytest.approx(gap, rel=1e-14)
    assert r.term1_bound == pytest.approx(term1, rel=1e-14)
    assert r.convexity_slack == pytest.approx(conv, rel=1e-13)
    assert r.strong_bound == pytest.approx(2 ** (2 - 3.5) * np.linalg.norm(b - a) ** 3.5, rel=1e-14)
    assert r.convexity_slack <= 0
    assert r == check_vector_inequalities(3.5, a, b)


@given(exps, st.integers(1, 3), st.data())
def test_inequalities_hold(p, d, data):
    vec = st.lists(st.floats(-1e3, 1e3), min_size=d, max_size=d)
    r = check_vector_inequalities(p, data.draw(vec), data.draw(vec))
    assert r.ok


def test_sweep_zero_violations():
    out = sweep_vector_inequalities((2.5, 3.0, 4.0), 3000, seed=7)
    for s in out:
        assert sum(s["violations"].values()) == 0
    assert out == sweep_vector_inequalities((2.5, 3.0, 4.0), 3000, seed=7)


def test_chain_rule_examples():
    assert chain_rule_identity_residual(3, np.full(10, 2.5), 0.1) == 0
    assert chain_rule_identity_residual(3, np.zeros(10), 0.1) == 0
    with pytest.raises(InvalidArgument):
        chain_rule_identity_residual(3, [1.0], 0.1)


def test_chain_rule_first_order():
    res = []
    for h in (0.1, 0.05, 0.025):
        t = np.arange(1.0, 2.0 + h / 2, h)
        res.append(chain_rule_identity_residual(3, t, h))
    assert 1.8 < res[0] / res[1] < 2.2 and 1.8 < res[1] / res[2] < 2.2
