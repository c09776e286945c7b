from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cflat import families as fam
from cflat.families import psi
from cflat.jets import Jet, variables
from cflat.killing import (conformal_solution_form, conformal_system_residual, flow_metric_drift,
                           killing_residual, killing_span_dim, killing_tensor, killing_vector, lobachevskian_killing_form,
                           rotate_form, sphere_killing_form)
from cflat.walker import coordinate_transform


def _skew(rng, n):
    M = rng.normal(size=(n, n))
    return M - M.T


def _zero_form(n):
    return lambda xs: Jet.stack([0.0 * xs[0] for _ in range(n)])


def test_zero_form():
    h = fam.psi_space(2, 1)
    assert killing_residual(h, _zero_form(2), [0.3, 0.1]) == 0.0


def test_b_f_zero_gives_zero_field():
    A = sphere_killing_form(np.zeros(3), np.zeros((3, 3)))
    assert np.abs(A(variables([0.1, 0.2, 0.3], 1)).coeffs).max() == 0.0


def test_f_must_be_skew():
    with pytest.raises(ValueError):
        killing_vector(np.zeros(2), np.eye(2), 1)


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_lemma_fields_are_killing(sign, n, rng):
    c = 1.7
    h = fam.psi_space(n, sign, c)
    make = sphere_killing_form if sign > 0 else lobachevskian_killing_form
    for _ in range(3):
        A = make(rng.normal(size=n), _skew(rng, n), c)
        for p in h.sample_points(rng, 10):
            assert killing_residual(h, A, p) <= 1e-9


def test_rotation_generator_n2():
    f = np.array([[0.0, 1.0], [-1.0, 0.0]])
    h = fam.psi_space(2, 1)
    A = sphere_killing_form(np.zeros(2), f)
    for p in ([0.3, 0.1], [-0.5, 0.7]):
        assert killing_residual(h, A, p) <= 1e-9


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_span_dimension(sign, n):
    pts = [np.array([0.1, -0.2, 0.3, 0.05][:n]), np.array([0.4, 0.1, -0.1, 0.2][:n]),
           np.array([-0.3, 0.2, 0.25, -0.1][:n])]
    assert killing_span_dim(n, sign, pts) == n * (n + 1) // 2


@pytest.mark.parametrize("sign", [1, -1])
def test_conformal_general_solution(sign, rng):
    n = 3
    h = fam.psi_space(n, sign)
    for _ in range(3):
        A = conformal_solution_form(rng.normal(size=n), _skew(rng, n), rng.normal(), rng.normal(size=n), sign)
        for p in h.sample_points(rng, 10):
            assert conformal_system_residual(h, A, p) <= 1e-9


def test_x_psi_is_conformal_not_killing():
    n = 2
    h = fam.psi_space(n, 1)
    A = conformal_solution_form(np.zeros(n), np.zeros((n, n)), 1.0, np.zeros(n), 1)
    p = [0.3, -0.2]
    assert conformal_system_residual(h, A, p) <= 1e-9
    assert killing_residual(h, A, p) > 1e-3


def test_conformal_violation():
    h = fam.psi_space(2, 1)

    def A(xs):
        return Jet.stack([psi(xs, 1) * xs[1], 0.0 * xs[0]])

    assert conformal_system_residual(h, A, [0.3, -0.2]) > 1e-3


def test_family2_A_against_flat_fiber():
    # A_i of the second family solves the flat-chart conformal system with trace part H1/2
    flat = fam.space_form(2, 0.0)
    B = np.array([0.7, -0.4])

    def A(xs):
        bx = xs[0] * B[0] + xs[1] * B[1]
        r2 = xs[0] * xs[0] + xs[1] * xs[1]
        return Jet.stack([0.25 * (2 * bx * xs[i] - B[i] * r2) for i in range(2)])

    p = np.array([0.3, 0.5])
    assert conformal_system_residual(flat, A, p) <= 1e-9
    S = killing_tensor(flat, A, p)
    assert S[0, 0] / 2 == pytest.approx(0.5 * (B @ p))


@given(st.integers(0, 10_000))
def test_residual_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    n = 3
    h = fam.psi_space(n, 1)
    A = sphere_killing_form(rng.normal(size=n), _skew(rng, n))
    B = conformal_solution_form(rng.normal(size=n), _skew(rng, n), 0.3, rng.normal(size=n), 1)

    def broken(xs):
        return A(xs) + B(xs) * 0.5

    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    hr = coordinate_transform(h, lambda c: [sum(c[j] * Q[i, j] for j in range(n)) for i in range(n)])
    xt = rng.uniform(-0.5, 0.5, size=n)
    for form in (A, broken):
        # the symmetric tensor transforms by Q, so its Frobenius norm is invariant
        before = np.linalg.norm(killing_tensor(h, form, Q @ xt))
        after = np.linalg.norm(killing_tensor(hr, rotate_form(form, Q), xt))
        assert abs(before - after) <= 1e-9 * max(1.0, before)
    assert abs(killing_residual(h, A, Q @ xt) - killing_residual(hr, rotate_form(A, Q), xt)) <= 1e-9


@pytest.mark.parametrize("sign", [1, -1])
def test_flow_preserves_metric(sign, rng):
    n = 3
    h = fam.psi_space(n, sign)
    X = killing_vector(0.5 * rng.normal(size=n), _skew(rng, n), sign)
    for p in h.sample_points(rng, 3):
        assert flow_metric_drift(h, X, 0.5 * p) <= 1e-5


def test_flow_detects_non_killing(rng):
    h = fam.psi_space(2, 1)

    def X(xs):
        return Jet.stack([xs[0] + 0.0 * xs[1], 0.0 * xs[0]])

    assert flow_metric_drift(h, X, [0.2, 0.1]) > 1e-3
