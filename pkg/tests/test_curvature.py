from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cflat import families as fam
from cflat.curvature import (christoffel, cotton, curvature_bundle, parallel_transport,
                             ricci_divergence_residual, ricci_scalar_schouten, weyl, wedge)
from cflat.fields import MetricField
from cflat.jets import exp


def _psi(x, sign=1):
    return 4.0 / (1.0 + sign * float(x @ x)) ** 2


def _gamma_closed_form(x, sign=1):
    """Gamma^k_ij = (delta_kj d_i Psi + delta_ki d_j Psi - delta_ij d_k Psi) / (2 Psi)."""
    n = len(x)
    P = _psi(x, sign)
    dP = -4.0 * sign * x * 4.0 / (1.0 + sign * float(x @ x)) ** 3
    d = np.eye(n)
    G = (np.einsum("kj,i->kij", d, dP) + np.einsum("ki,j->kij", d, dP)
         - np.einsum("ij,k->kij", d, dP)) / (2 * P)
    return G


def test_flat_is_flat():
    g = fam.flat_walker(2)
    b = curvature_bundle(g, [0.1, 0.2, -0.3, 0.4])
    assert np.abs(b.gamma).max() == 0.0
    assert np.abs(b.riemann_lo).max() == 0.0
    assert np.abs(b.ricci_op).max() == 0.0 and b.scalar == 0.0
    assert np.abs(b.schouten_op).max() == 0.0


def test_christoffel_sphere_origin():
    G = np.asarray(christoffel(fam.psi_space(2, 1), [0.0, 0.0], 1).value)
    assert np.abs(G).max() == 0.0


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("x", [[0.3, 0.0], [0.2, -0.4], [0.1, 0.5, -0.2]])
def test_christoffel_closed_form(sign, x):
    x = np.array(x)
    G = np.asarray(christoffel(fam.psi_space(len(x), sign), x, 1).value)
    np.testing.assert_allclose(G, _gamma_closed_form(x, sign), atol=1e-10)


@pytest.mark.parametrize("sign", [1, -1])
def test_sectional_curvature_unit(sign, rng):
    h = fam.psi_space(2, sign)
    for p in h.sample_points(rng, 5):
        k = curvature_bundle(h, p).sectional([1, 0], [0, 1])
        assert k == pytest.approx(sign, abs=1e-10)


def test_unit_three_sphere_ricci():
    h = fam.psi_space(3, 1)
    b = curvature_bundle(h, [0.2, -0.1, 0.3])
    np.testing.assert_allclose(b.ricci_op, 2 * np.eye(3), atol=1e-12)
    assert b.scalar == pytest.approx(6.0, abs=1e-12)
    np.testing.assert_allclose(b.schouten_op, 0.5 * np.eye(3), atol=1e-12)


def test_surfaces_have_no_schouten():
    ric, s, L = ricci_scalar_schouten(np.zeros((2, 2, 2, 2)), np.eye(2))
    assert L is None and s == 0.0
    b = curvature_bundle(fam.psi_space(2, 1), [0.1, 0.2])
    assert b.schouten_op is None and b.weyl_lo is None
    assert b.scalar == pytest.approx(2.0, abs=1e-12)


def test_weyl_needs_d4():
    with pytest.raises(ValueError):
        weyl(curvature_bundle(fam.psi_space(3, 1), [0.1, 0.2, 0.0]))


def test_sign_pin_sphere_is_minus_wedge():
    h = fam.psi_space(3, 1, c=2.0)
    p = np.array([0.1, 0.2, -0.3])
    b = curvature_bundle(h, p)
    e = np.eye(3)
    for c in range(3):
        for d in range(3):
            np.testing.assert_allclose(b.endomorphism(c, d), -2.0 * wedge(b.metric, e[c], e[d]), atol=1e-11)


@pytest.mark.parametrize("dim,k,neg", [(4, 1.0, 0), (5, -0.5, 0), (6, 2.0, 0), (4, 1.0, 1), (5, -1.0, 1)])
def test_constant_curvature_weyl_zero(dim, k, neg, rng):
    g = fam.space_form(dim, k, neg)
    for p in g.sample_points(rng, 3):
        assert np.abs(weyl(curvature_bundle(g, p))).max() <= 1e-9


def test_family1_ricci_rank_one():
    g = fam.build(fam.FamilySpec("ppwave_f1", 2, a=fam.UPoly((1.0,))))
    R = curvature_bundle(g, [0.1, 0.3, -0.2, 0.4]).ricci_op
    assert np.linalg.matrix_rank(R, tol=1e-10) == 1
    assert np.abs(R @ R).max() <= 1e-12


@pytest.mark.parametrize("family", fam.WALKER_FAMILIES + ("gt_original", "thc3_dec"))
def test_riemann_symmetries(family, rng):
    g = fam.build(fam.random_spec(family, 2, rng))
    for p in g.sample_points(rng, 100):
        b = curvature_bundle(g, p)
        R = b.riemann_lo
        scale = 1.0 + np.abs(R).max()
        assert np.abs(R + R.transpose(1, 0, 2, 3)).max() <= 1e-9 * scale
        assert np.abs(R + R.transpose(0, 1, 3, 2)).max() <= 1e-9 * scale
        bianchi = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
        assert np.abs(bianchi).max() <= 1e-9 * scale
        assert np.abs(b.gamma - b.gamma.transpose(0, 2, 1)).max() == 0.0
        assert abs(np.trace(b.ricci_op) - b.scalar) <= 1e-10 * scale
        W = b.weyl_lo
        assert np.abs(np.einsum("ab,acbd->cd", b.metric_inv, W)).max() <= 1e-9 * scale


@pytest.mark.parametrize("family", fam.WALKER_FAMILIES + ("gt_original",))
def test_contracted_bianchi(family, rng):
    g = fam.build(fam.random_spec(family, 2, rng))
    for p in g.sample_points(rng, 20):
        assert ricci_divergence_residual(g, p) <= 1e-7


def _conformal(g: MetricField, coef) -> MetricField:
    def components(c):
        phi = sum(a * x for a, x in zip(coef, c)) + 0.3 * c[0] * c[-1]
        return exp(2.0 * phi) * g.components(c)

    return MetricField(g.dim, components, g.signature, g.label + ":conformal", g.domain, g.sampler)


@given(st.lists(st.floats(-0.5, 0.5), min_size=5, max_size=5))
def test_weyl_conformal_invariance(coef):
    g = fam.build(fam.FamilySpec("gt_original", 2))
    gt = _conformal(g, coef[1:])
    p = np.array([coef[0], 0.7, 0.4, -0.2])
    b1, b2 = curvature_bundle(g, p), curvature_bundle(gt, p)
    w1 = np.einsum("ae,ebcd->abcd", b1.metric_inv, b1.weyl_lo)
    w2 = np.einsum("ae,ebcd->abcd", b2.metric_inv, b2.weyl_lo)
    assert np.abs(w1 - w2).max() <= 1e-7 * np.abs(w1).max()


@pytest.mark.parametrize("sign", [1, -1])
def test_cotton_surface_times_line(sign, rng):
    g = fam.product_metric(fam.psi_space(2, sign, 1.5), fam.line(-1.0))
    for p in g.sample_points(rng, 10):
        assert np.abs(cotton(g, p)).max() <= 1e-9


def test_cotton_nonzero_for_generic_metric():
    g = fam.product_metric(fam.psi_space(1, 1), fam.psi_space(2, 1))
    comp = g.components

    def warped(c):
        m = comp(c)
        return m + 0.3 * c[0] * c[1] * c[2] * fam.Jet.stack([[1.0, 0, 0], [0, 0, 0], [0, 0, 0]], c[0].space)

    w = MetricField(3, warped, (0, 3), "warped", sampler=g.sampler)
    assert np.abs(cotton(w, [0.3, 0.2, 0.1])).max() > 1e-3


def test_cotton_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        cotton(fam.psi_space(2, 1), [0.1, 0.1])


def test_transport_flat_identity():
    g = fam.flat_walker(2)
    X = parallel_transport(g, [[0, 0, 0, 0], [0.5, 0.2, 0, 0], [0.5, -0.3, 0.4, 0.1]])
    np.testing.assert_allclose(X, np.eye(4), atol=1e-15)


def test_transport_small_square_on_sphere():
    h = fam.psi_space(2, 1)
    x0 = np.array([0.3, 0.2])
    P = _psi(x0)
    errs = []
    for eps in (0.04, 0.02):
        c = x0 - eps / 2
        loop = [c, c + [eps, 0], c + [eps, eps], c + [0, eps], c]
        X = parallel_transport(h, loop, steps_per_unit=4000)
        angle = np.arctan2(X[1, 0], X[0, 0])
        errs.append(abs(abs(angle) / (eps * eps * P) - 1.0))
    assert errs[0] < 0.02
    assert errs[1] < errs[0] / 3  # O(eps^2) convergence


@pytest.mark.parametrize("family", fam.WALKER_FAMILIES)
def test_transport_preserves_inner_products(family, rng):
    g = fam.build(fam.random_spec(family, 2, rng))
    a = g.sample(rng)
    b = a + rng.uniform(-0.1, 0.1, size=g.dim)
    if not g.contains(b):
        b = a
    X = parallel_transport(g, [a, b, a + 0.5 * (b - a)])
    G0 = g.value(a)
    G1 = g.value(a + 0.5 * (b - a))
    assert np.abs(X.T @ G1 @ X - G0).max() <= 1e-8
