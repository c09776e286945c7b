"""Killing and conformal-Killing 1-form systems on the sphere and Lobachevskian charts."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .curvature import christoffel
from .families import psi
from .fields import MetricField, eval_metric
from .jets import Jet, variables

# A 1-form (or vector) field: n coordinate jets -> (n,) jet.
FormField = Callable[[Sequence[Jet]], Jet]


def _covariant_derivative(h: MetricField, A: FormField, point) -> np.ndarray:
    """nabla_i A_j at a point, as an n x n array indexed [i, j]."""
    point = np.asarray(point, dtype=float)
    eval_metric(h, point, 0)  # domain check
    Aj = A(variables(point, 1))
    dA = np.asarray(Aj.grad().value).T  # [i, j] = d_i A_j
    G = np.asarray(christoffel(h, point, order=1).value)
    return dA - np.einsum("kij,k->ij", G, np.asarray(Aj.value))


def killing_tensor(h: MetricField, A: FormField, point) -> np.ndarray:
    """The symmetric tensor nabla_i A_j + nabla_j A_i."""
    nab = _covariant_derivative(h, A, point)
    return nab + nab.T


def killing_residual(h: MetricField, A: FormField, point) -> float:
    return float(np.abs(killing_tensor(h, A, point)).max())


def conformal_system_residual(h: MetricField, A: FormField, point) -> float:
    """max over |nabla_i A_i - nabla_j A_j| and |nabla_i A_j + nabla_j A_i| (i != j)."""
    S = killing_tensor(h, A, point)
    diag = np.diag(S)
    off = S - np.diag(diag)
    spread = float(diag.max() - diag.min()) / 2.0
    return max(spread, float(np.abs(off).max()))


def _check_skew(f: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"f must be a square matrix, got shape {f.shape}")
    if np.abs(f + f.T).max() > tol:
        raise ValueError("f must be skew-symmetric")
    return f


def killing_vector(b, f, sign: int) -> FormField:
    """X^i = x^i (b.x) - (1/2) b_i |x|^2 + f_ik x^k + (sign/2) b_i."""
    b = np.asarray(b, dtype=float)
    f = _check_skew(f)
    n = b.shape[0]
    if f.shape != (n, n):
        raise ValueError(f"f has shape {f.shape}, expected {(n, n)}")

    def X(xs: Sequence[Jet]) -> Jet:
        bx = sum(xs[k] * b[k] for k in range(n))
        r2 = sum(x * x for x in xs)
        comps = []
        for i in range(n):
            fx = sum(xs[k] * f[i, k] for k in range(n))
            comps.append(xs[i] * bx - 0.5 * b[i] * r2 + fx + 0.5 * sign * b[i])
        return Jet.stack(comps)

    return X


def _lowered(X: FormField, sign: int, scale: float) -> FormField:
    def A(xs: Sequence[Jet]) -> Jet:
        return X(xs) * (psi(xs, sign) / scale)

    return A


def sphere_killing_form(b, f, c: float = 1.0) -> FormField:
    """A_i = h_ij X^j for h = (1/c) Psi sum dx^2, Psi = 4/(1+|x|^2)^2."""
    return _lowered(killing_vector(b, f, +1), +1, c)


def lobachevskian_killing_form(b, f, c: float = 1.0) -> FormField:
    """A_i = h_ij X^j for h = (1/c) Psi sum dx^2, Psi = 4/(1-|x|^2)^2."""
    return _lowered(killing_vector(b, f, -1), -1, c)


def conformal_solution_form(B, d, c: float, ci, sign: int = 1) -> FormField:
    """A_i = Psi (x^i (B.x) - (1/2) B_i |x|^2 + d_ik x^k + c x^i + c_i): the general conformal solution."""
    B = np.asarray(B, dtype=float)
    d = _check_skew(d)
    ci = np.asarray(ci, dtype=float)
    n = B.shape[0]

    def A(xs: Sequence[Jet]) -> Jet:
        P = psi(xs, sign)
        bx = sum(xs[k] * B[k] for k in range(n))
        r2 = sum(x * x for x in xs)
        comps = []
        for i in range(n):
            dx = sum(xs[k] * d[i, k] for k in range(n))
            comps.append(P * (xs[i] * bx - 0.5 * B[i] * r2 + dx + c * xs[i] + ci[i]))
        return Jet.stack(comps)

    return A


def killing_basis(n: int, sign: int) -> list[FormField]:
    """Vector fields for the unit b_i and the elementary skew f: n + n(n-1)/2 of them."""
    out = []
    zero_f = np.zeros((n, n))
    for i in range(n):
        out.append(killing_vector(np.eye(n)[i], zero_f, sign))
    for i in range(n):
        for j in range(i + 1, n):
            f = np.zeros((n, n))
            f[i, j], f[j, i] = 1.0, -1.0
            out.append(killing_vector(np.zeros(n), f, sign))
    return out


def killing_span_dim(n: int, sign: int, points: Sequence[np.ndarray], rel: float = 1e-9) -> int:
    """Rank of the stacked values and first derivatives of the basis fields at the given points.

    Values alone lose rank for n >= 4 at three points (a rotation fixing three
    points of S^4 survives); value plus Jacobian at one point already determines
    a Killing field.
    """
    rows = []
    for X in killing_basis(n, sign):
        parts = []
        for p in points:
            j = X(variables(np.asarray(p, dtype=float), 1))
            parts.append(np.asarray(j.value, dtype=float).ravel())
            parts.append(np.asarray(j.grad().value, dtype=float).ravel())
        rows.append(np.concatenate(parts))
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(s > rel * s[0]))


def _field_and_jacobian(X: FormField, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    j = X(variables(x, 1))
    return np.asarray(j.value, dtype=float), np.asarray(j.grad().value, dtype=float)


def flow_metric_drift(h: MetricField, X: FormField, x0, time: float = 0.1, steps: int = 20) -> float:
    """Flow x0 along X for ``time`` with RK4 and return max |phi^* h - h| at x0."""
    x = np.asarray(x0, dtype=float)
    n = x.shape[0]
    J = np.eye(n)
    dt = time / steps

    def rhs(x, J):
        v, DX = _field_and_jacobian(X, x)
        return v, DX @ J

    for _ in range(steps):
        k1x, k1J = rhs(x, J)
        k2x, k2J = rhs(x + dt / 2 * k1x, J + dt / 2 * k1J)
        k3x, k3J = rhs(x + dt / 2 * k2x, J + dt / 2 * k2J)
        k4x, k4J = rhs(x + dt * k3x, J + dt * k3J)
        x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        J = J + dt / 6 * (k1J + 2 * k2J + 2 * k3J + k4J)
    return float(np.abs(J.T @ h.value(x) @ J - h.value(np.asarray(x0, dtype=float))).max())


def rotate_form(A: FormField, Q: np.ndarray) -> FormField:
    """The same 1-form in coordinates x = Q x~: A~(x~) = Q^T A(Q x~)."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]

    def At(xs: Sequence[Jet]) -> Jet:
        old = [sum(xs[j] * Q[i, j] for j in range(n)) for i in range(n)]
        a = A(old)
        return Jet.stack([sum(a[k] * Q[k, i] for k in range(n)) for i in range(n)])

    return At
