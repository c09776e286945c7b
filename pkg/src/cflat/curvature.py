"""Metric to curvature: Christoffel symbols, Riemann, Ricci, Schouten, Weyl, Cotton.

Index conventions (coordinate frame throughout):

* ``gamma[a, b, c]`` is Gamma^a_{bc}.
* ``riemann_up[a, b, c, d]`` is R^a_{bcd}, the matrix (a, b) of the
  endomorphism R(d_c, d_d) = [nabla_c, nabla_d].
* ``riemann_lo[a, b, c, d] = g(R(d_c, d_d) d_b, d_a)``.

With this orientation the round sphere of curvature k has
R(X, Y) = -k X^Y, where (X^Y)Z = g(X, Z) Y - g(Y, Z) X, so the Weyl tensor
W = R + R_L vanishes on every constant-curvature metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ChartDomainError, MetricField, eval_metric
from .jets import Jet, einsum, inverse


def _ein(spec: str, jet: Jet) -> Jet:
    """Permute/trace the shape axes of a single jet (jet axis carried as Z)."""
    ins, out = spec.split("->")
    return Jet(np.einsum(f"{ins}Z->{out}Z", jet.coeffs), jet.space)


def christoffel_jet(gj: Jet) -> Jet:
    """Gamma^a_{bc} from a metric jet of order K, returned at order K-1."""
    if gj.order < 1:
        raise ValueError("Christoffel symbols need a metric jet of order >= 1")
    dg = gj.grad()  # dg[x, y, z] = d_z g_xy
    lowered = 0.5 * (_ein("cdb->dbc", dg) + _ein("bdc->dbc", dg) - _ein("bcd->dbc", dg))
    ginv = inverse(gj.truncate(gj.order - 1))
    return einsum("ad,dbc->abc", ginv, lowered)


def christoffel(g: MetricField, point, order: int = 2) -> Jet:
    return christoffel_jet(eval_metric(g, point, order))


def riemann_jet(gamma: Jet) -> Jet:
    """R^a_{bcd} from a Christoffel jet of order K-1, returned at order K-2."""
    if gamma.order < 1:
        raise ValueError("Riemann tensor needs Christoffel jets of order >= 1")
    dgam = gamma.grad()  # dgam[a, b, c, e] = d_e Gamma^a_{bc}
    gt = gamma.truncate(gamma.order - 1)
    quad = einsum("ace,edb->abcd", gt, gt)
    return (
        _ein("adbc->abcd", dgam)
        - _ein("acbd->abcd", dgam)
        + quad
        - _ein("abdc->abcd", quad)
    )


def r_l_lowered(gj: Jet | np.ndarray, schouten_lo):
    """(R_L)_{abcd} for R_L(X, Y) = LX^Y + X^LY, with L lowered and symmetric."""
    if isinstance(gj, Jet):
        t = einsum("ad,bc->abcd", gj, schouten_lo)
        return t - _ein("bacd->abcd", t) - _ein("abdc->abcd", t) + _ein("badc->abcd", t)
    t = np.einsum("ad,bc->abcd", gj, schouten_lo)
    return t - t.transpose(1, 0, 2, 3) - t.transpose(0, 1, 3, 2) + t.transpose(1, 0, 3, 2)


@dataclass
class CurvatureBundle:
    """Curvature data at one point, as plain arrays in the coordinate frame."""

    point: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    gamma: np.ndarray
    riemann_up: np.ndarray
    riemann_lo: np.ndarray
    ricci_lo: np.ndarray
    ricci_op: np.ndarray
    scalar: float
    schouten_op: np.ndarray | None = None
    schouten_lo: np.ndarray | None = None
    r_l_lo: np.ndarray | None = None
    weyl_lo: np.ndarray | None = None
    cotton: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.metric.shape[0]

    def endomorphism(self, c: int, d: int) -> np.ndarray:
        """Matrix of R(d_c, d_d) acting on coordinate vectors."""
        return self.riemann_up[:, :, c, d]

    def sectional(self, x, y) -> float:
        return sectional_curvature(self, x, y)


def ricci_scalar_schouten(riemann_up: np.ndarray, g: np.ndarray):
    """(Ric^a_b, s, L^a_b); L is None when d <= 2."""
    d = g.shape[0]
    ginv = np.linalg.inv(g)
    ric_lo = np.einsum("abad->bd", riemann_up)
    ric_op = ginv @ ric_lo
    s = float(np.trace(ric_op))
    if d <= 2:
        return ric_op, s, None
    L = (ric_op - s / (2 * (d - 1)) * np.eye(d)) / (d - 2)
    return ric_op, s, L


def _schouten_jet(riemann_up: Jet, gj: Jet) -> Jet:
    """Lowered Schouten tensor as a jet (same order as the Riemann jet)."""
    d = gj.shape[0]
    ric_lo = _ein("abad->bd", riemann_up)
    ginv = inverse(gj)
    s = einsum("ab,ab->", ginv, ric_lo)
    return (ric_lo - gj * (s / (2 * (d - 1)))) / (d - 2)


def curvature_bundle(g: MetricField, point, order: int = 2) -> CurvatureBundle:
    """Run the full pipeline at one point; ``order`` >= 2 is the metric jet order."""
    if order < 2:
        raise ValueError("curvature needs metric jets of order >= 2")
    gj = eval_metric(g, point, order)
    gamma = christoffel_jet(gj)
    r_up = riemann_jet(gamma)
    g0 = np.asarray(gj.value)
    ginv0 = np.linalg.inv(g0)
    r_up0 = np.asarray(r_up.value)
    r_lo0 = np.einsum("ae,ebcd->abcd", g0, r_up0)
    ric_op, s, L = ricci_scalar_schouten(r_up0, g0)
    bundle = CurvatureBundle(
        point=np.asarray(point, dtype=float),
        metric=g0,
        metric_inv=ginv0,
        gamma=np.asarray(gamma.value),
        riemann_up=r_up0,
        riemann_lo=r_lo0,
        ricci_lo=g0 @ ric_op,
        ricci_op=ric_op,
        scalar=s,
    )
    d = g.dim
    if L is not None:
        L_lo = g0 @ L
        bundle.schouten_op = L
        bundle.schouten_lo = 0.5 * (L_lo + L_lo.T)
        bundle.r_l_lo = r_l_lowered(g0, bundle.schouten_lo)
        bundle.weyl_lo = r_lo0 + bundle.r_l_lo
    if d == 3 and order >= 3:
        bundle.cotton = _cotton_from_jets(gj, gamma, r_up)
    return bundle


def weyl(bundle: CurvatureBundle) -> np.ndarray:
    if bundle.dim < 4:
        raise ValueError(f"Weyl tensor is only meaningful for d >= 4, got d = {bundle.dim}")
    return bundle.weyl_lo


def _cotton_from_jets(gj: Jet, gamma: Jet, r_up: Jet) -> np.ndarray:
    L = _schouten_jet(r_up, gj.truncate(r_up.order))
    dL = np.asarray(L.grad().value)  # dL[a, b, c] = d_c L_ab
    L0 = np.asarray(L.value)
    G = np.asarray(gamma.value)
    # nabla_c L_ab, stored as nl[a, b, c]
    nl = dL - np.einsum("eca,eb->abc", G, L0) - np.einsum("ecb,ae->abc", G, L0)
    # C(d_a, d_b, d_c) = nabla_c L_ba - nabla_b L_ca
    return np.einsum("bac->abc", nl) - np.einsum("cab->abc", nl)


def cotton(g: MetricField, point) -> np.ndarray:
    """Cotton tensor C_{abc}; defined here only for d = 3."""
    if g.dim != 3:
        raise ValueError(f"Cotton tensor is computed for d = 3 only, got d = {g.dim}")
    gj = eval_metric(g, point, 3)
    gamma = christoffel_jet(gj)
    return _cotton_from_jets(gj, gamma, riemann_jet(gamma))


def ricci_divergence_residual(g: MetricField, point) -> float:
    """max_b |nabla_a Ric^a_b - (1/2) d_b s| from order-3 jets."""
    gj = eval_metric(g, point, 3)
    gamma = christoffel_jet(gj)
    r_up = riemann_jet(gamma)
    ric_lo = _ein("abad->bd", r_up)
    ginv = inverse(gj.truncate(1))
    ric_op = einsum("ac,cb->ab", ginv, ric_lo)
    s = _ein("aa->", ric_op)
    d_ric = np.asarray(ric_op.grad().value)  # [a, b, c] = d_c Ric^a_b
    R0 = np.asarray(ric_op.value)
    G = np.asarray(gamma.value)
    div = (
        np.einsum("aba->b", d_ric)
        + np.einsum("aae,eb->b", G, R0)
        - np.einsum("eab,ae->b", G, R0)
    )
    ds = np.asarray(s.grad().value)
    return float(np.max(np.abs(div - 0.5 * ds)))


def sectional_curvature(bundle: CurvatureBundle, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = bundle.metric
    num = np.einsum("abcd,a,b,c,d->", bundle.riemann_lo, x, y, x, y)
    den = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    if abs(den) < 1e-14:
        raise ValueError("sectional curvature of a degenerate plane")
    return float(num / den)


def wedge(g: np.ndarray, x, y) -> np.ndarray:
    """Matrix of X^Y: Z -> g(X, Z) Y - g(Y, Z) X."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.outer(y, g @ x) - np.outer(x, g @ y)


# -- parallel transport -----------------------------------------------------

STEPS_PER_UNIT = 64


def _gamma_value(g: MetricField, point) -> np.ndarray:
    try:
        return np.asarray(christoffel(g, point, order=1).value)
    except ChartDomainError as exc:
        raise ChartDomainError(f"transport curve leaves the chart: {exc}") from None


def transport_segment(g: MetricField, a, b, frame: np.ndarray, steps: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    vel = b - a
    h = 1.0 / steps

    # Gamma along the segment does not depend on X: evaluate once per node and half-node.
    def coeff(t: float) -> np.ndarray:
        return -np.einsum("abc,b->ac", _gamma_value(g, a + t * vel), vel)

    X = np.array(frame, dtype=float)
    M0 = coeff(0.0)
    for k in range(steps):
        t = k * h
        Mh = coeff(t + h / 2)
        M1 = coeff(t + h)
        k1 = M0 @ X
        k2 = Mh @ (X + h / 2 * k1)
        k3 = Mh @ (X + h / 2 * k2)
        k4 = M1 @ (X + h * k3)
        X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        M0 = M1
    return X


def parallel_transport(
    g: MetricField, curve, frame=None, steps_per_unit: int = STEPS_PER_UNIT
) -> np.ndarray:
    """Transport vectors (columns of ``frame``) along a piecewise-linear coordinate path.

    Fixed-step classical RK4 with ``ceil(steps_per_unit * length)`` steps per
    segment.
    """
    curve = [np.asarray(c, dtype=float) for c in curve]
    X = np.eye(g.dim) if frame is None else np.array(frame, dtype=float)
    for a, b in zip(curve[:-1], curve[1:]):
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            continue
        steps = max(1, math.ceil(steps_per_unit * length))
        X = transport_segment(g, a, b, X, steps)
    return X
