from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cflat.jets import (Jet, elementary, inverse, jet_space, reciprocal, seed_variable, sqrt,
                        value_and_jacobian, variables)


def test_seed_variable_definition():
    x = seed_variable(0, 2.5, order=2, nvars=3)
    assert x.value == 2.5
    np.testing.assert_array_equal(x.gradient, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(x.hessian, np.zeros((3, 3)))
    z = seed_variable(2, 0.0, order=1, nvars=3)
    np.testing.assert_array_equal(z.gradient, [0.0, 0.0, 1.0])


def test_seed_variable_out_of_range():
    with pytest.raises(IndexError):
        seed_variable(3, 0.0, order=1, nvars=3)


def test_leibniz():
    a, b = 1.5, -0.7
    x = seed_variable(0, a, 2, 3)
    y = seed_variable(1, b, 2, 3)
    p = x * y
    assert p.value == a * b
    np.testing.assert_allclose(p.gradient, [b, a, 0.0])
    assert p.derivative(0, 1) == 1.0
    assert p.derivative(1, 0) == 1.0
    assert p.derivative(0, 0) == 0.0


def test_square_at_three():
    x = seed_variable(0, 3.0, 2, 1)
    s = x * x
    assert (s.value, s.derivative(0), s.derivative(0, 0)) == (9.0, 6.0, 2.0)


def test_rational_example():
    x = seed_variable(0, 1.0, 2, 1)
    f = reciprocal(1.0 + x * x)
    assert f.value == pytest.approx(0.5, abs=1e-15)
    assert f.derivative(0) == pytest.approx(-0.5, abs=1e-15)
    # f'' = (6x^2 - 2)/(1 + x^2)^3 = 0.5; the Taylor coefficient f''/2 is 0.25
    assert f.derivative(0, 0) == pytest.approx(0.5, abs=1e-15)
    assert f.coeff((0, 0)) == pytest.approx(0.25, abs=1e-15)


def test_sqrt_example():
    x = seed_variable(0, 4.0, 1, 1)
    r = sqrt(x)
    assert r.value == 2.0
    assert r.derivative(0) == pytest.approx(0.25)


def test_domain_errors():
    x = seed_variable(0, 0.0, 2, 1)
    with pytest.raises(ZeroDivisionError):
        reciprocal(x)
    with pytest.raises(ValueError):
        sqrt(x - 1.0)


def test_higher_blocks_symmetric():
    xs = variables([0.3, -0.2, 0.5], 3)
    f = xs[0] * xs[1] * xs[1] * xs[2] + reciprocal(2.0 + xs[0] * xs[2])
    t = f.derivatives(3)
    for perm in [(0, 2, 1), (1, 0, 2), (2, 1, 0)]:
        np.testing.assert_array_equal(t, t.transpose(perm))


def test_coeff_count():
    from math import comb
    for m in (1, 3, 5):
        for k in (0, 1, 2, 3):
            assert jet_space(m, k).size == comb(m + k, k)


def _expr(xs):
    a, b, c = xs
    return sqrt(2.0 + a * a + b * c) * reciprocal(1.5 + b * b) + elementary(a + c, "pow_int", 3) - a * b * c


def _expr_value(p):
    a, b, c = p
    return math.sqrt(2.0 + a * a + b * c) / (1.5 + b * b) + (a + c) ** 3 - a * b * c


def _fd_grad_hess(f, p, h=1e-4):
    m = len(p)
    E = np.eye(m) * h
    grad = np.array([(f(p + E[i]) - f(p - E[i])) / (2 * h) for i in range(m)])
    hess = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            hess[i, j] = (f(p + E[i] + E[j]) - f(p + E[i] - E[j]) - f(p - E[i] + E[j])
                          + f(p - E[i] - E[j])) / (4 * h * h)
    return grad, hess


def _fd_third(f, p, h=1e-3):
    # third derivatives from central differences of the (jet-free) Hessian of g = f
    m = len(p)
    E = np.eye(m) * h
    out = np.empty((m, m, m))
    for k in range(m):
        hp = _fd_grad_hess(f, p + E[k], h)[1]
        hm = _fd_grad_hess(f, p - E[k], h)[1]
        out[:, :, k] = (hp - hm) / (2 * h)
    return out


coords = st.floats(-0.6, 0.6, allow_nan=False)


@given(st.tuples(coords, coords, coords))
def test_jets_match_finite_differences(p):
    p = np.array(p)
    jet = _expr(variables(p, 3))
    grad, hess = _fd_grad_hess(_expr_value, p)
    scale = max(1.0, float(np.abs(jet.gradient).max()))
    assert np.abs(jet.gradient - grad).max() / scale <= 1e-6
    scale = max(1.0, float(np.abs(jet.hessian).max()))
    assert np.abs(jet.hessian - hess).max() / scale <= 1e-6


@given(st.tuples(coords, coords, coords))
def test_third_order_vs_finite_differences(p):
    p = np.array(p)
    jet = _expr(variables(p, 3))
    third = _fd_third(_expr_value, p)
    scale = max(1.0, float(np.abs(jet.derivatives(3)).max()))
    assert np.abs(jet.derivatives(3) - third).max() / scale <= 1e-4


@given(st.floats(-5, 5), st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3))
def test_order_zero_is_plain_arithmetic(a, b):
    sp = jet_space(1, 0)
    A, B = Jet.constant(a, sp), Jet.constant(b, sp)
    assert (A * B).value == a * b
    assert (A + B).value == a + b
    assert (A - B).value == a - b
    assert (A / B).value == a / b


@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9))
def test_mul_commutative_associative(vals):
    xs = variables(vals[:3], 2)
    a = xs[0] * vals[3] + xs[1]
    b = xs[1] * vals[4] + xs[2] * vals[5] + vals[6]
    c = xs[2] * xs[0] + vals[7] * xs[1] + vals[8]
    np.testing.assert_array_equal((a * b).coeffs, (b * a).coeffs)
    np.testing.assert_allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, rtol=1e-13, atol=1e-13)


def test_matrix_inverse_jet():
    xs = variables([0.2, -0.1], 2)
    M = Jet.stack([[2.0 + xs[0], xs[1]], [xs[1], 3.0 - xs[0] * xs[1]]])
    prod = M @ inverse(M)
    np.testing.assert_allclose(prod.coeffs[..., 0], np.eye(2), atol=1e-14)
    np.testing.assert_allclose(prod.coeffs[..., 1:], 0.0, atol=1e-12)


def test_value_and_jacobian_polynomial_map():
    xs = variables([0.5, 0.3], 2)

    def pmap(s):
        r, t = s
        return [r * r - t, r * t]

    val, jac = value_and_jacobian(pmap, xs)
    np.testing.assert_allclose(val.value, [0.25 - 0.3, 0.15])
    np.testing.assert_allclose(jac.value, [[1.0, -1.0], [0.3, 0.5]])
