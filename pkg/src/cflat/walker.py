"""Walker-frame curvature data, conformal-flatness conditions and transformations.

Coordinates are (v, x^1, ..., x^n, u) and g = 2 dv du + h + 2 A du + H du^2.
The frame is p = d_v, X_i = d_i - A_i d_v, q = d_u - (H/2) d_v.

The structure equations R(p, q) = -lambda p^q - p^v, R(X, q) = ..., the Ricci
operator and the R_L components hold in the orientation fixed in
:mod:`cflat.curvature` (wedge (X^Y)Z = g(X, Z)Y - g(Y, Z)X). ``ORIENTATION``
is the single sign relating the two and is the only place it enters; the
cross-checks against the coordinate pipeline on all four families fix it to +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .curvature import CurvatureBundle, christoffel, curvature_bundle, wedge
from .fields import MetricField, WalkerParts, eval_metric, fiber_metric, walker_metric
from .jets import Jet, value_and_jacobian

# R_walker = ORIENTATION * R_coordinate, fixed by the structure-equation cross-check.
ORIENTATION = 1.0

# The classical closed form for T (Hessian of H plus A-terms) evaluates to -T for
# T_ij = -g(R(X_i, q) q, X_j) in this orientation; this factor restores T.
CLOSED_FORM_T_SIGN = -1.0


class NotWalkerError(TypeError):
    pass


class ClosedFormUnavailable(ValueError):
    """The closed forms for P and T need a fiber metric independent of u."""


@dataclass
class WalkerFrame:
    p: np.ndarray
    X: np.ndarray  # rows are X_1..X_n
    q: np.ndarray

    def matrix(self) -> np.ndarray:
        """Columns (p, X_1, ..., X_n, q) in coordinate components."""
        return np.column_stack([self.p, *self.X, self.q])


@dataclass
class WalkerData:
    point: np.ndarray
    frame: WalkerFrame
    h: np.ndarray
    lam: float
    vvec: np.ndarray  # components in the X-frame
    F: np.ndarray
    P: np.ndarray  # P[l, j, k] = P^l_{jk}, with P(X_k) X_j = P^l_{jk} X_l
    T: np.ndarray  # T_ij = h(T X_i, X_j)
    s0: float
    ric_h: np.ndarray  # fiber Ricci operator
    r0_lo: np.ndarray  # fiber curvature h(R_0(X_k, X_l) X_j, X_i)
    bundle: CurvatureBundle
    f_split: tuple[float, float] | None = None

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @property
    def ric_tilde_p(self) -> np.ndarray:
        """h^{kj} P(X_k) X_j as X-frame components."""
        hinv = np.linalg.inv(self.h)
        return np.einsum("kj,ljk->l", hinv, self.P)

    @property
    def trace_T(self) -> float:
        return float(np.einsum("ij,ij->", np.linalg.inv(self.h), self.T))


def _require_walker(g: MetricField) -> WalkerParts:
    if g.walker is None:
        raise NotWalkerError(f"{g.label} is not tagged as a Walker metric")
    return g.walker


def walker_frame(g: MetricField, point) -> WalkerFrame:
    n = _require_walker(g).n
    G = g.value(point)
    d = n + 2
    e = np.eye(d)
    A = G[1 : n + 1, n + 1]
    H = G[n + 1, n + 1]
    X = np.array([e[1 + i] - A[i] * e[0] for i in range(n)])
    return WalkerFrame(p=e[0].copy(), X=X, q=e[n + 1] - 0.5 * H * e[0])


def _apply(bundle: CurvatureBundle, y, z, w) -> np.ndarray:
    """R(Y, Z) W in coordinates, coordinate orientation."""
    return np.einsum("abcd,b,c,d->a", bundle.riemann_up, w, y, z)


def walker_extract(g: MetricField, point, order: int = 2, split: bool = True) -> WalkerData:
    """lambda, v, F, P, T and fiber data at a point of a Walker metric."""
    parts = _require_walker(g)
    n = parts.n
    point = np.asarray(point, dtype=float)
    gj = eval_metric(g, point, max(order, 2))
    bundle = curvature_bundle(g, point, max(order, 2))
    G = bundle.metric
    fr = walker_frame(g, point)
    h = G[1 : n + 1, 1 : n + 1]
    hinv = np.linalg.inv(h)
    u_idx = n + 1

    Hj = gj[u_idx, u_idx]
    lam = 0.5 * Hj.derivative(0, 0)
    A0 = G[1 : n + 1, u_idx]
    dvdiH = np.array([Hj.derivative(0, 1 + i) for i in range(n)])
    vvec = 0.5 * (dvdiH - A0 * Hj.derivative(0, 0)) @ hinv

    F = np.array(
        [
            [gj[1 + j, u_idx].derivative(1 + i) - gj[1 + i, u_idx].derivative(1 + j) for j in range(n)]
            for i in range(n)
        ]
    )

    s = ORIENTATION
    P_lo = np.empty((n, n, n))  # P_lo[i, j, k] = h_il P^l_jk
    T = np.empty((n, n))
    for k in range(n):
        rq = np.einsum("abcd,c,d->ab", bundle.riemann_up, fr.X[k], fr.q)
        for j in range(n):
            w = rq @ fr.X[j]
            for i in range(n):
                P_lo[i, j, k] = s * (fr.X[i] @ G @ w)
        rqq = rq @ fr.q
        for j in range(n):
            T[k, j] = -s * (rqq @ G @ fr.X[j])
    P = np.einsum("li,ijk->ljk", hinv, P_lo)

    fib = fiber_metric(g, point[0], point[u_idx])
    fb = curvature_bundle(fib, point[1 : n + 1], 2)

    data = WalkerData(
        point=point,
        frame=fr,
        h=h,
        lam=float(lam),
        vvec=vvec,
        F=F,
        P=P,
        T=T,
        s0=fb.scalar,
        ric_h=fb.ricci_op,
        r0_lo=fb.riemann_lo,
        bundle=bundle,
    )
    if split:
        data.f_split = _f_split(g, point, data)
    return data


def _f_split(g: MetricField, point: np.ndarray, data: WalkerData, tol: float = 1e-8):
    """(f1, f0) with T = (v f1 + f0) id, from T at v = 0 and v = 1; None if T is not pure trace."""
    if _trace_free_norm(data.T, data.h) > tol * (1.0 + np.abs(data.T).max()):
        return None
    fs = []
    for v in (0.0, 1.0):
        p = point.copy()
        p[0] = v
        if not g.contains(p):
            return None
        d = walker_extract(g, p, split=False)
        fs.append(d.trace_T / d.n)
    return fs[1] - fs[0], fs[0]


def _trace_free_norm(T: np.ndarray, h: np.ndarray) -> float:
    n = h.shape[0]
    f = np.einsum("ij,ij->", np.linalg.inv(h), T) / n
    return float(np.abs(T - f * h).max())


# -- closed forms ------------------------------------------------------------

def walker_closed_forms(g: MetricField, point, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """P (as P^l_jk) from -(1/2) nabla F and T from the closed formula; h must not depend on u."""
    parts = _require_walker(g)
    n = parts.n
    point = np.asarray(point, dtype=float)
    u_idx = n + 1
    gj = eval_metric(g, point, 2)
    dh_du = np.array([[gj[1 + i, 1 + j].derivative(u_idx) for j in range(n)] for i in range(n)])
    if np.abs(dh_du).max() > tol:
        raise ClosedFormUnavailable(
            f"{g.label}: fiber metric depends on u (max |d_u h| = {np.abs(dh_du).max():.3g})"
        )
    G0 = np.asarray(gj.value)
    h = G0[1 : n + 1, 1 : n + 1]
    hinv = np.linalg.inv(h)
    fib = fiber_metric(g, point[0], point[u_idx])
    Gam = np.asarray(christoffel(fib, point[1 : n + 1], order=1).value)  # Gam[k, i, j]

    Aj = [gj[1 + i, u_idx] for i in range(n)]
    Hj = gj[u_idx, u_idx]
    xi = list(range(1, n + 1))
    A = np.array([a.value for a in Aj])
    dA = np.array([[Aj[j].derivative(xi[i]) for j in range(n)] for i in range(n)])  # d_i A_j
    d2A = np.array(
        [[[Aj[j].derivative(xi[i], xi[k]) for k in range(n)] for j in range(n)] for i in range(n)]
    )  # d_k d_i A_j at [i, j, k]
    duA = np.array([[Aj[j].derivative(xi[i], u_idx) for j in range(n)] for i in range(n)])
    uA = np.array([Aj[j].derivative(u_idx) for j in range(n)])
    dH = np.array([Hj.derivative(x) for x in xi])
    d2H = np.array([[Hj.derivative(xi[i], xi[j]) for j in range(n)] for i in range(n)])
    dvH = Hj.derivative(0)
    dvvH = Hj.derivative(0, 0)
    dvdH = np.array([Hj.derivative(0, x) for x in xi])

    F = dA - dA.T  # F[i, j] = d_i A_j - d_j A_i
    dF = d2A - np.transpose(d2A, (1, 0, 2))  # dF[i, j, k] = d_k F_ij
    nablaF = (
        dF
        - np.einsum("mki,mj->ijk", Gam, F)
        - np.einsum("mkj,im->ijk", Gam, F)
    )  # nablaF[i, j, k] = nabla_k F_ij
    P_lo = -0.5 * nablaF
    P = np.einsum("li,ijk->ljk", hinv, P_lo)

    nablaA = dA - np.einsum("kij,k->ij", Gam, A)
    sym_nablaA = nablaA + nablaA.T
    du_nablaA = duA - np.einsum("kij,k->ij", Gam, uA)
    hessH = d2H - np.einsum("kij,k->ij", Gam, dH)
    T = CLOSED_FORM_T_SIGN * (
        -0.5 * hessH
        + 0.25 * np.einsum("ik,jl,kl->ij", F, F, hinv)
        + 0.25 * dvH * sym_nablaA
        + 0.5 * (np.outer(A, dvdH) + np.outer(dvdH, A))
        + 0.5 * (du_nablaA + du_nablaA.T)
        - 0.5 * np.outer(A, A) * dvvH
    )
    return P, T


# -- conformal-flatness conditions ----------------------------------------------

def lemma1_residuals(g: MetricField, point, data: WalkerData | None = None) -> np.ndarray:
    """Residuals of the four conditions equivalent to W = 0.

    (i) s0 + n(n-1) lambda; (ii) R_0 + (lambda/2) R_id, where R_id(X, Y) = -2 X^Y is
    the curvature of a constant-curvature metric with Schouten tensor id;
    (iii) P(X) - v^X over the X-frame; (iv) trace-free part of T.
    """
    d = data if data is not None else walker_extract(g, point, split=False)
    n = d.n
    h = d.h
    r_i = abs(d.s0 + n * (n - 1) * d.lam)
    # wedge_lo[i, j, k, l] = h((X_k ^ X_l) X_j, X_i)
    wedge_lo = np.einsum("il,jk->ijkl", h, h) - np.einsum("ik,jl->ijkl", h, h)
    r_id_lo = -2.0 * wedge_lo
    r_ii = float(np.abs(ORIENTATION * d.r0_lo + 0.5 * d.lam * r_id_lo).max())
    v_lo = h @ d.vvec
    expected_P = np.einsum("j,lk->ljk", v_lo, np.eye(n)) - np.einsum("kj,l->ljk", h, d.vvec)
    r_iii = float(np.abs(d.P - expected_P).max())
    r_iv = _trace_free_norm(d.T, h)
    return np.array([r_i, r_ii, r_iii, r_iv])


# -- Ricci operator and R_L from Walker data ----------------------------------------

def _frame_endo(M_frame: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Coordinate matrix of an endomorphism given in the Walker frame."""
    return frame @ M_frame @ np.linalg.inv(frame)


def ricci_from_walker(d: WalkerData) -> np.ndarray:
    """Ricci operator assembled from lambda, v, P, T, Ric(h), in the Walker frame basis.

    Column order (p, X_1..X_n, q): Ric(p) = lambda p,
    Ric(X) = -g(X, RicP - v) p + Ric(h) X,
    Ric(q) = -(tr T) p - RicP + v + lambda q.
    """
    n = d.n
    M = np.zeros((n + 2, n + 2))
    w = d.ric_tilde_p - d.vvec
    M[0, 0] = d.lam
    M[0, 1 : n + 1] = -(d.h @ w)
    M[1 : n + 1, 1 : n + 1] = d.ric_h
    M[0, n + 1] = -d.trace_T
    M[1 : n + 1, n + 1] = -d.ric_tilde_p + d.vvec
    M[n + 1, n + 1] = d.lam
    return M


def ricci_in_frame(d: WalkerData) -> np.ndarray:
    fm = d.frame.matrix()
    return np.linalg.inv(fm) @ d.bundle.ricci_op @ fm


def r_l_from_walker(d: WalkerData) -> dict[str, np.ndarray]:
    """Endomorphisms R_L(p, X_i), R_L(p, q), R_L(X_i, X_j), R_L(X_i, q) in coordinates."""
    n = d.n
    fr = d.frame
    G = d.bundle.metric
    s = 2 * d.lam + d.s0
    w_frame = d.vvec - d.ric_tilde_p
    w = w_frame @ fr.X  # coordinate vector of v - RicP

    def E(vec_frame):
        return vec_frame @ fr.X

    def ric_h_vec(i, shift):
        return E(d.ric_h[:, i] + shift * np.eye(n)[i])

    c_pX = ((n - 1) * d.lam - d.s0) / (n + 1)
    out: dict[str, np.ndarray] = {}
    out["pX"] = np.array([wedge(G, fr.p, ric_h_vec(i, c_pX)) / n for i in range(n)])
    out["pq"] = ((2 * n * d.lam - d.s0) / (n + 1) * wedge(G, fr.p, fr.q) + wedge(G, fr.p, w)) / n
    XX = np.zeros((n, n, n + 2, n + 2))
    shift = -s / (2 * (n + 1))
    for i in range(n):
        for j in range(n):
            Xi, Xj = fr.X[i], fr.X[j]
            term = wedge(G, fr.p, (Xi @ G @ w) * Xj - (Xj @ G @ w) * Xi)
            term += wedge(G, ric_h_vec(i, shift), Xj) + wedge(G, Xi, ric_h_vec(j, shift))
            XX[i, j] = term / n
    out["XX"] = XX
    Xq = np.zeros((n, n + 2, n + 2))
    for i in range(n):
        Xi = fr.X[i]
        term = d.trace_T * wedge(G, fr.p, Xi) + (Xi @ G @ w) * wedge(G, fr.p, fr.q)
        term += wedge(G, Xi, w) + wedge(G, ric_h_vec(i, c_pX), fr.q)
        Xq[i] = term / n
    out["Xq"] = Xq
    return out


def r_l_coordinate(d: WalkerData) -> dict[str, np.ndarray]:
    """The same R_L endomorphisms from the coordinate pipeline."""
    b = d.bundle
    ginv = b.metric_inv
    rl_up = np.einsum("ae,ebcd->abcd", ginv, b.r_l_lo)
    fr = d.frame
    n = d.n

    def endo(y, z):
        return np.einsum("abcd,c,d->ab", rl_up, y, z)

    return {
        "pX": np.array([endo(fr.p, fr.X[i]) for i in range(n)]),
        "pq": endo(fr.p, fr.q),
        "XX": np.array([[endo(fr.X[i], fr.X[j]) for j in range(n)] for i in range(n)]),
        "Xq": np.array([endo(fr.X[i], fr.q) for i in range(n)]),
    }


def structure_residual(d: WalkerData) -> float:
    """Max deviation of the curvature from its Walker-frame structure equations."""
    b = d.bundle
    G = b.metric
    fr = d.frame
    n = d.n
    s = ORIENTATION

    def R(y, z):
        return s * np.einsum("abcd,c,d->ab", b.riemann_up, y, z)

    fm = fr.matrix()

    def P_endo(k):
        Mf = np.zeros((n + 2, n + 2))
        Mf[1 : n + 1, 1 : n + 1] = d.P[:, :, k]
        return _frame_endo(Mf, fm)

    def T_vec(k):
        return (np.linalg.inv(d.h) @ d.T[k]) @ fr.X

    vv = d.vvec @ fr.X
    res = [np.abs(R(fr.p, fr.q) - (-d.lam * wedge(G, fr.p, fr.q) - wedge(G, fr.p, vv))).max()]
    for k in range(n):
        Xk = fr.X[k]
        expect = -(vv @ G @ Xk) * wedge(G, fr.p, fr.q) + P_endo(k) - wedge(G, fr.p, T_vec(k))
        res.append(np.abs(R(Xk, fr.q) - expect).max())
        res.append(np.abs(R(fr.p, Xk)).max())
    return float(max(res))


# -- transformations ------------------------------------------------------------

Polynomial = Callable[[Sequence[Jet]], Jet]


def coordinate_transform(g: MetricField, phi: Callable[[list[Jet]], Sequence], label: str | None = None,
                         domain=None, sampler=None) -> MetricField:
    """Pullback of ``g`` by a jet-evaluable map from new to old coordinates."""

    def components(coords: Sequence[Jet]) -> Jet:
        old, jac = value_and_jacobian(phi, list(coords))
        gm = g.components([old[a] for a in range(g.dim)])
        return jac.T @ gm @ jac

    def default_domain(p):
        old = np.array([float(x) for x in phi([float(c) for c in p])])
        return g.contains(old)

    return MetricField(
        dim=g.dim,
        components=components,
        signature=g.signature,
        label=label or f"{g.label}:pullback",
        domain=domain or default_domain,
        sampler=sampler or g.sampler,
        params={"base": g},
    )


def gauge_transform(g: MetricField, phi: Callable[[list[Jet], Jet], Jet], points=None,
                    lam_tol: float = 1e-12) -> MetricField:
    """A -> A + d(phi), H0 -> H0 + H1 phi + 2 d_u phi for d_v^2 H = 0 (coordinates v = v' + phi)."""
    parts = _require_walker(g)
    n = parts.n
    rng = np.random.default_rng(0)
    for p in points if points is not None else g.sample_points(rng, 5):
        lam = 0.5 * eval_metric(g, p, 2)[n + 1, n + 1].derivative(0, 0)
        if abs(lam) > lam_tol:
            raise ValueError(f"{g.label}: gauge transform needs d_v^2 H = 0 (lambda = {lam:.3g})")

    def phi_list(s: list[Jet]):
        return [phi(s[:n], s[n])]

    def dphi(xs, u):
        val, jac = value_and_jacobian(phi_list, list(xs) + [u])
        return val[0], jac[0]

    def A(v, xs, u):
        _, jac = dphi(xs, u)
        return parts.A(v, xs, u) + jac[:n]

    def H(v, xs, u):
        ph, jac = dphi(xs, u)
        _, hjac = value_and_jacobian(lambda s: [parts.H(s[0], s[1 : n + 1], s[n + 1])], [v, *xs, u])
        return parts.H(v, xs, u) + ph * hjac[0, 0] + 2.0 * jac[n]

    new_parts = WalkerParts(n, parts.h, A, H, parts.h_depends_on_u)
    return walker_metric(
        new_parts,
        label=f"{g.label}:gauge",
        domain=g.domain,
        sampler=g.sampler,
        params=dict(g.params),
    )


def gauge_pullback(g: MetricField, phi: Callable[[list[Jet], Jet], Jet]) -> MetricField:
    """The same transformation as a plain coordinate change v = v' + phi(x, u)."""
    n = _require_walker(g).n

    def fmap(c):
        return [c[0] + phi(list(c[1 : n + 1]), c[n + 1]), *c[1:]]

    return coordinate_transform(g, fmap, label=f"{g.label}:gauge-pullback")


def rotation_map(Q: np.ndarray) -> Callable[[list], list]:
    """(v, x, u) -> (v, Q x, u) for a constant orthogonal matrix Q."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]

    def fmap(c):
        xs = c[1 : n + 1]
        new = []
        for i in range(n):
            acc = xs[0] * Q[i, 0]
            for j in range(1, n):
                acc = acc + xs[j] * Q[i, j]
            new.append(acc)
        return [c[0], *new, c[n + 1]]

    return fmap
