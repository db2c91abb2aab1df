import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avgeom import jets
from avgeom.errors import EvaluationError
from avgeom.jets import Jet, evaluate_jet, jacobian, partial


def test_monomial_partials():
    f = lambda v: v[0] ** 2 * v[1]
    assert partial(f, [1.0, 1.0], [0, 0]) == pytest.approx(2.0, abs=1e-14)
    assert partial(f, [1.0, 1.0], [0, 0, 1]) == pytest.approx(2.0, abs=1e-14)


def test_constant_has_no_derivatives():
    jet = evaluate_jet(lambda v: Jet.constant(3.5, 2), [0.3, -1.0])
    assert jet.value == 3.5
    assert not np.any(jet.first) and not np.any(jet.second) and not np.any(jet.third)


def test_exp_against_finite_differences():
    jet = evaluate_jet(lambda v: jets.exp(v[0]), [0.5])
    h = 1e-3
    f = math.exp
    fd1 = (f(0.5 + h) - f(0.5 - h)) / (2 * h)
    fd2 = (f(0.5 + h) - 2 * f(0.5) + f(0.5 - h)) / h**2
    fd3 = (f(0.5 + 2 * h) - 2 * f(0.5 + h) + 2 * f(0.5 - h) - f(0.5 - 2 * h)) / (2 * h**3)
    for got, want in ((jet.first[0], fd1), (jet.second[0, 0], fd2), (jet.third[0, 0, 0], fd3)):
        assert got == pytest.approx(want, rel=1e-6)
        assert got == pytest.approx(math.exp(0.5), rel=1e-14)


def test_simple_partials():
    assert partial(lambda v: v[0] * v[1], [0.7, -2.0], [0, 1]) == 1.0
    assert partial(lambda v: jets.sin(v[0]), [0.0], [0, 0, 0]) == pytest.approx(-1.0, abs=1e-15)


def _poly(coeffs):
    """Degree-3 polynomial in 3 variables from {multi_index: coefficient}."""

    def f(v):
        total = 0.0
        for idx, c in coeffs.items():
            term = c
            for i in idx:
                term = term * v[i]
            total = total + term
        return total

    return f


def test_generated_polynomial_matches_coefficients(rng):
    coeffs = {(0,): 1.3, (1, 2): -0.7, (0, 0, 1): 2.1, (2, 2, 2): 0.45, (0, 1, 2): -1.6}
    f = _poly(coeffs)
    origin = [0.0, 0.0, 0.0]
    assert partial(f, origin, [0]) == pytest.approx(1.3, rel=1e-12)
    assert partial(f, origin, [1, 2]) == pytest.approx(-0.7, rel=1e-12)
    assert partial(f, origin, [0, 0, 1]) == pytest.approx(2 * 2.1, rel=1e-12)
    assert partial(f, origin, [2, 2, 2]) == pytest.approx(6 * 0.45, rel=1e-12)
    assert partial(f, origin, [2, 0, 1]) == pytest.approx(-1.6, rel=1e-12)


def test_order_truncation():
    jet = evaluate_jet(lambda v: v[0] ** 3, [1.0], order=1)
    assert jet.first[0] == pytest.approx(3.0)
    assert jet.order == 1
    with pytest.raises(ValueError):
        evaluate_jet(lambda v: v[0], [1.0], order=4)


def test_non_finite_evaluation_reports_point():
    with pytest.raises(EvaluationError) as info:
        evaluate_jet(lambda v: jets.log(v[0] - v[0]), [2.0])
    assert np.allclose(info.value.point, [2.0])


def _mixed(a, b):
    return lambda v: jets.sin(a * v[0] * v[1]) * jets.exp(b * v[1]) + jets.sqrt(1 + v[0] ** 2)


@pytest.mark.parametrize("method, tol", [("taylor", 1e-12), ("fd", 1e-6)])
def test_symmetry_of_mixed_partials(method, tol):
    f = _mixed(0.8, -0.3)
    p = [0.4, 0.9]
    jet = evaluate_jet(f, p, method=method)
    assert np.max(np.abs(jet.second - jet.second.T)) <= tol
    assert abs(partial(f, p, [0, 1], method) - partial(f, p, [1, 0], method)) <= tol


def test_fd_fallback_agrees_with_taylor():
    f = _mixed(1.1, 0.4)
    p = [0.2, -0.5]
    a = evaluate_jet(f, p)
    b = evaluate_jet(f, p, method="fd")
    assert np.allclose(a.first, b.first, atol=1e-8)
    assert np.allclose(a.second, b.second, atol=1e-5)
    assert np.allclose(a.third, b.third, atol=1e-2)


def test_jacobian_of_polar_map():
    r, th = 2.0, 0.6
    J = jacobian(lambda v: [v[0] * jets.cos(v[1]), v[0] * jets.sin(v[1])], [r, th])
    want = [[math.cos(th), -r * math.sin(th)], [math.sin(th), r * math.cos(th)]]
    assert np.allclose(J, want, atol=1e-15)


small = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(small, small, small, small)
def test_linearity_is_exact(alpha, beta, p0, p1):
    f = lambda v: jets.exp(v[0]) * v[1]
    g = lambda v: jets.cos(v[0] + 2 * v[1])
    combo = evaluate_jet(lambda v: alpha * f(v) + beta * g(v), [p0, p1])
    jf, jg = evaluate_jet(f, [p0, p1]), evaluate_jet(g, [p0, p1])
    for name in ("first", "second", "third"):
        want = alpha * getattr(jf, name) + beta * getattr(jg, name)
        assert np.allclose(getattr(combo, name), want, rtol=1e-13, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8), small, small)
def test_product_follows_leibniz(c, p0, p1):
    f = lambda v: c[0] + c[1] * v[0] + c[2] * v[1] ** 2 + c[3] * v[0] * v[1]
    g = lambda v: c[4] * v[0] ** 2 + c[5] * v[1] + c[6] * v[0] ** 2 * v[1] + c[7]
    p = [p0, p1]
    jf, jg, jfg = evaluate_jet(f, p), evaluate_jet(g, p), evaluate_jet(lambda v: f(v) * g(v), p)
    f0, g0 = jf.value, jg.value
    assert jfg.value == pytest.approx(f0 * g0, abs=1e-12)
    assert np.allclose(jfg.first, f0 * jg.first + g0 * jf.first, atol=1e-12)
    want2 = f0 * jg.second + g0 * jf.second + np.outer(jf.first, jg.first) + np.outer(jg.first, jf.first)
    assert np.allclose(jfg.second, want2, atol=1e-11)
    want3 = (
        f0 * jg.third
        + g0 * jf.third
        + sum(np.einsum(s, jf.first, jg.second) + np.einsum(s, jg.first, jf.second)
              for s in ("i,jk->ijk", "j,ik->ijk", "k,ij->ijk"))
    )
    assert np.allclose(jfg.third, want3, atol=1e-10)


def test_quotient_and_power_rules():
    p = [0.7, 1.3]
    q = evaluate_jet(lambda v: v[0] / v[1], p)
    assert q.first == pytest.approx([1 / 1.3, -0.7 / 1.3**2])
    assert q.second[1, 1] == pytest.approx(2 * 0.7 / 1.3**3)
    w = evaluate_jet(lambda v: v[0] ** 2.5, p)
    assert w.third[0, 0, 0] == pytest.approx(2.5 * 1.5 * 0.5 * 0.7**-0.5)


def test_casting_a_jet_is_refused():
    # math.sin would otherwise return a constant and lose the derivatives
    with pytest.raises(TypeError):
        evaluate_jet(lambda v: math.sin(v[0]), [0.3])
    assert evaluate_jet(lambda v: math.sin(v[0]), [0.3], method="fd").first[0] == pytest.approx(math.cos(0.3), rel=1e-9)
