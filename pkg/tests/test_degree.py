import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csaloha.degree import (
    Exponential,
    Polynomial,
    expected_slot_degree,
    poisson_polynomial,
    slot_degree_distribution,
    user_degree_distribution,
)
from csaloha.model import SystemConfig

GRID = np.linspace(0.0, 1.0, 101)


def test_exponential_zero_rate_is_one():
    assert all(Exponential(0.0)(x) == 1.0 for x in GRID)


def test_exponential_normalized_at_one():
    assert Exponential(3.1)(1.0) == pytest.approx(1.0, abs=1e-12)


def test_exponential_at_zero_matches_high_precision():
    expected = float(mpmath.exp(-mpmath.mpf("3.1")))
    assert expected == pytest.approx(0.04505, abs=1e-5)
    assert Exponential(3.1)(0.0) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize(
    "dist, expected",
    [(Exponential(3.1), 3.1), (Polynomial([0, 0, 1]), 2.0), (Polynomial([1]), 0.0)],
)
def test_derivative_at_one(dist, expected):
    assert dist.derivative_at_one() == expected


def test_node_to_edge_examples():
    assert Exponential(2.5).node_to_edge() == Exponential(2.5)
    assert Polynomial([0, 0, 1]).node_to_edge() == Polynomial([0, 1])
    edge = Polynomial([0, 0.5, 0.5]).node_to_edge()
    assert edge.coeffs == pytest.approx((1 / 3, 2 / 3), abs=1e-15)


def test_node_to_edge_without_edges_is_an_error():
    with pytest.raises(ValueError, match="no edges"):
        Polynomial([1.0]).node_to_edge()


def test_polynomial_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        Polynomial([0.5, 0.6])
    with pytest.raises(ValueError):
        Polynomial([1.2, -0.2])


poly_coeffs = st.lists(st.floats(0, 1), min_size=1, max_size=12).filter(lambda c: sum(c) > 1e-3).map(
    lambda c: [v / sum(c) for v in c]
)


@given(rate=st.floats(0, 20))
def test_exponential_bounded_and_monotone(rate):
    vals = np.array([Exponential(rate)(x) for x in GRID])
    assert np.all((vals >= 0) & (vals <= 1 + 1e-15))
    assert np.all(np.diff(vals) >= 0)


@given(rate=st.floats(0, 20))
def test_exponential_self_conjugate(rate):
    d = Exponential(rate)
    e = d.node_to_edge()
    assert max(abs(d(x) - e(x)) for x in GRID) <= 1e-12


@given(coeffs=poly_coeffs)
def test_polynomial_bounded_monotone(coeffs):
    p = Polynomial(coeffs)
    vals = np.array([p(x) for x in GRID])
    assert abs(p(1.0) - 1.0) <= 1e-12
    assert np.all((vals >= -1e-15) & (vals <= 1 + 1e-12))
    assert np.all(np.diff(vals) >= -1e-15)


@given(coeffs=poly_coeffs.filter(lambda c: sum(d * v for d, v in enumerate(c)) > 1e-3))
def test_edge_form_is_normalized_derivative(coeffs):
    p = Polynomial(coeffs)
    edge = p.node_to_edge()
    h = 1e-6
    for x in np.linspace(h, 1 - h, 21):
        fd = (p(x + h) - p(x - h)) / (2 * h)
        assert edge(x) * p.derivative_at_one() == pytest.approx(fd, abs=1e-9)


@pytest.mark.parametrize("rate", [0.0, 0.3, 1.0, 3.1, 5.27, 7.5, 10.0])
def test_truncated_poisson_matches_closed_form(rate):
    poly = poisson_polynomial(rate, 60)
    closed = Exponential(rate)
    assert max(abs(poly(x) - closed(x)) for x in GRID) <= 1e-9
    # masses checked against an independent mpmath evaluation
    for d in (0, 1, 5):
        ref = float(mpmath.mpf(rate) ** d / mpmath.factorial(d) * mpmath.exp(-rate)) if rate else float(d == 0)
        assert (poly.coeffs[d] if d < len(poly.coeffs) else 0.0) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_slot_degree_distribution():
    cfg = SystemConfig.build([0.5, 0.5], [0, 0], [[0.0], [3.1]], 0.0)
    assert slot_degree_distribution(cfg, 0, 0) == Exponential(0.0)
    assert slot_degree_distribution(cfg, 0, 1) == Exponential(3.1)
    one = SystemConfig.build([1.0], [0.0], [[1.0]], 0.0)
    assert slot_degree_distribution(one, 0, 0)(0.0) == pytest.approx(float(mpmath.exp(-1)), rel=1e-15)
    assert slot_degree_distribution(one, 0, 0)(0.0) == pytest.approx(0.3679, abs=1e-4)


@pytest.mark.parametrize(
    "eps, b, alpha, a, rate",
    [(0.0, 1.0, 3.1, 1.0, 3.1), (0.7, 1.0, 3.1, 1.0, 1.7 * 3.1), (0.3, 1.0, 0.0, 1.0, 0.0)],
)
def test_user_degree_distribution(eps, b, alpha, a, rate):
    cfg = SystemConfig.build([a], [0.0], [[alpha]], eps, slot_fractions=[b])
    d = user_degree_distribution(cfg, 0, 0)
    assert d.rate == pytest.approx(rate, rel=1e-15)


def test_user_degree_distribution_multiclass():
    cfg = SystemConfig.build([0.25, 0.75], [0, 0], [[1.0, 2.0], [0.5, 0.0]], 0.2, slot_fractions=[0.4, 0.6])
    assert user_degree_distribution(cfg, 0, 1).rate == pytest.approx(1.2 * 0.6 * 2.0 / 0.25)
    assert user_degree_distribution(cfg, 1, 0).rate == pytest.approx(1.2 * 0.4 * 0.5 / 0.75)


def test_expected_slot_degree():
    assert expected_slot_degree(SystemConfig.build([1.0], [0.0], [[3.1]], 0.0), 0) == 3.1
    assert expected_slot_degree(SystemConfig.build([0.5, 0.5], [0.25, 0.5], [[3.1], [0.0]], 0.0), 0) == 3.1
    assert expected_slot_degree(SystemConfig.build([0.5, 0.5], [0.25, 0.5], [[0.0], [0.0]], 0.0), 0) == 0.0
