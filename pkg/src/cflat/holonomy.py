"""Ambrose-Singer estimates of the holonomy algebra and their classification.

Curvature endomorphisms R_y(d_a, d_b) at sample points y are transported
back to a base point along axis-aligned coordinate polylines, and the span
of the results (closed under brackets) is a lower bound for the holonomy
algebra at the base point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .curvature import STEPS_PER_UNIT, curvature_bundle, parallel_transport
from .fields import ChartDomainError, MetricField

SVD_CUTOFF = 1e-7
ABS_FLOOR = 1e-10
LINE_TOL = 1e-6
COMPAT_TOL = 1e-6
REFINE_TOL = 1e-9
NEIGHBOURHOOD = 0.25


class TransportAccuracyError(RuntimeError):
    """Transported frame lost metric compatibility; raise the step count."""


@dataclass
class HolonomyFlags:
    preserves_null_line: bool = False
    preserves_nondeg_subspace: bool = False
    fiber_rotation_dim: int = 0
    null_line: np.ndarray | None = None
    blocks: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class EndoSpan:
    base: np.ndarray
    metric: np.ndarray
    gens: list[np.ndarray]
    basis: list[np.ndarray]
    dim: int
    bracket_closed_dim: int
    closed_basis: list[np.ndarray]
    flags: HolonomyFlags

    @property
    def d(self) -> int:
        return self.metric.shape[0]

    def skew_residual(self) -> float:
        """max |g A + (g A)^T| / max |A| over the generators."""
        g = self.metric
        scale = max((np.abs(A).max() for A in self.gens), default=0.0)
        if scale == 0.0:
            return 0.0
        return float(max(np.abs(g @ A + (g @ A).T).max() for A in self.gens) / scale)

    def is_abelian(self, tol: float = 1e-8) -> bool:
        B = self.closed_basis
        return all(np.abs(a @ b - b @ a).max() <= tol for a, b in itertools.combinations(B, 2))


def default_base(dim: int) -> np.ndarray:
    """(0.1, 0.2, ..., 0.2, 0.1): off every symmetry locus of the family charts."""
    base = np.full(dim, 0.2)
    base[0] = base[-1] = 0.1
    return base


def axis_path(base, target) -> list[np.ndarray]:
    """Polyline from base to target changing one coordinate at a time."""
    pts = [np.array(base, dtype=float)]
    cur = pts[0].copy()
    for k in range(len(cur)):
        if cur[k] != target[k]:
            cur = cur.copy()
            cur[k] = target[k]
            pts.append(cur)
    return pts


def neighbourhood_samples(g: MetricField, base, count: int, seed: int,
                          radius: float = NEIGHBOURHOOD) -> list[np.ndarray]:
    """Seeded points in a coordinate box around base whose axis paths stay in the chart."""
    rng = np.random.default_rng(seed)
    base = np.asarray(base, dtype=float)
    out: list[np.ndarray] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 1000 * max(count, 1):
            raise RuntimeError(f"{g.label}: cannot find admissible samples near {base.tolist()}")
        y = base + rng.uniform(-radius, radius, size=base.shape)
        if all(g.contains(c) for c in axis_path(base, y)):
            out.append(y)
    return out


def span_basis(mats: list[np.ndarray], cutoff: float = SVD_CUTOFF,
               floor: float = ABS_FLOOR) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of the span, dropping singular values below cutoff * max
    (and below an absolute floor, so roundoff-only input has rank 0)."""
    if not mats:
        return []
    d = mats[0].shape[0]
    M = np.array([m.ravel() for m in mats])
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] <= floor:
        return []
    r = int(np.sum(s > max(cutoff * s[0], floor)))
    return [vt[k].reshape(d, d) for k in range(r)]


def bracket_closure(basis: list[np.ndarray], max_rounds: int = 10) -> list[np.ndarray]:
    cur = list(basis)
    for _ in range(max_rounds):
        brackets = [a @ b - b @ a for a, b in itertools.combinations(cur, 2)]
        scale = max((np.abs(a).max() for a in cur), default=0.0)
        brackets = [c for c in brackets if np.abs(c).max() > 1e-12 * max(scale, 1.0)]
        nxt = span_basis(cur + brackets)
        if len(nxt) == len(cur):
            return nxt
        cur = nxt
    return cur


def _null_space(M: np.ndarray, rel: float = 1e-9) -> np.ndarray:
    _, s, vt = np.linalg.svd(M)
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > rel * max(top, 1e-300))) if top > 0 else 0
    return vt[rank:].T


def _find_null_line(basis: list[np.ndarray], g: np.ndarray, rng: np.random.Generator):
    d = g.shape[0]
    if not basis:
        return None
    cands: list[np.ndarray] = []
    K = _null_space(np.vstack(basis))
    cands.extend(K.T)
    combo = sum(c * A for c, A in zip(rng.normal(size=len(basis)), basis))
    w, V = np.linalg.eig(combo)
    scale = max(np.abs(w).max(), 1.0)
    for k in range(d):
        if abs(w[k].imag) <= 1e-9 * scale:
            cands.append(np.real(V[:, k]))
    # Null directions inside a common-kernel subspace of dimension > 1.
    if K.shape[1] > 1:
        gK = K.T @ g @ K
        ev, U = np.linalg.eigh(gK)
        if ev[0] < 0 < ev[-1]:
            i, j = 0, len(ev) - 1
            cands.append(K @ (U[:, i] / np.sqrt(-ev[i]) + U[:, j] / np.sqrt(ev[j])))
    gscale = np.abs(g).max()
    for ell in cands:
        ell = ell / np.linalg.norm(ell)
        if abs(ell @ g @ ell) > LINE_TOL * gscale:
            continue
        ok = True
        for A in basis:
            Al = A @ ell
            if np.linalg.norm(Al - (ell @ Al) * ell) > LINE_TOL:
                ok = False
                break
        if ok:
            return ell
    return None


def _commutant_blocks(basis: list[np.ndarray], g: np.ndarray, rng: np.random.Generator):
    """Signatures of the nondegenerate invariant blocks from a generic self-adjoint commutant element."""
    d = g.shape[0]
    eye = np.eye(d)
    rows = []
    for A in basis:
        # vec(A X - X A) with row-major vec
        rows.append(np.kron(A, eye) - np.kron(eye, A.T))
    # g X symmetric: (g X) - (g X)^T = 0
    gx = np.kron(g, eye)
    perm = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            perm[i * d + j, j * d + i] = 1.0
    rows.append(gx - perm @ gx)
    Ksp = _null_space(np.vstack(rows))
    Y = (Ksp @ rng.normal(size=Ksp.shape[1])).reshape(d, d)
    w, V = np.linalg.eig(Y)
    scale = max(np.abs(w).max(), 1e-300)
    clusters: list[list[int]] = []
    for k in range(d):
        for cl in clusters:
            c0 = w[cl[0]]
            if abs(w[k] - c0) <= 1e-6 * scale or abs(w[k] - np.conj(c0)) <= 1e-6 * scale:
                cl.append(k)
                break
        else:
            clusters.append([k])
    blocks = []
    if len(clusters) > 1:
        for cl in clusters:
            sub = V[:, cl]
            sub = np.hstack([sub.real, sub.imag])
            Q = span_basis_vectors(sub)
            ev = np.linalg.eigvalsh(Q.T @ g @ Q)
            blocks.append((int(np.sum(ev < 0)), int(np.sum(ev > 0))))
    return blocks


def span_basis_vectors(cols: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    r = int(np.sum(s > rel * s[0])) if s.size and s[0] > 0 else 0
    return U[:, :r]


def _fiber_rotation_dim(basis: list[np.ndarray], g: np.ndarray, ell: np.ndarray) -> int:
    """Rank of the induced action on ell^perp / ell."""
    d = g.shape[0]
    perp = _null_space((g @ ell)[None, :])  # basis of ell^perp
    # complement of ell inside ell^perp
    proj = perp - np.outer(ell, ell @ perp)
    comp = span_basis_vectors(proj)
    Bm = np.column_stack([ell, comp])
    blocks = []
    for A in basis:
        C, *_ = np.linalg.lstsq(Bm, A @ Bm, rcond=None)
        blocks.append(C[1:, 1:])
    if not blocks:
        return 0
    return len(span_basis(blocks))


def compute_flags(basis: list[np.ndarray], g: np.ndarray, seed: int = 0) -> HolonomyFlags:
    rng = np.random.default_rng(seed)
    d = g.shape[0]
    if not basis:
        return HolonomyFlags(True, True, 0, None, [])
    ell = _find_null_line(basis, g, rng)
    blocks = _commutant_blocks(basis, g, rng)
    return HolonomyFlags(
        preserves_null_line=ell is not None,
        preserves_nondeg_subspace=len(blocks) > 1,
        fiber_rotation_dim=_fiber_rotation_dim(basis, g, ell) if ell is not None else 0,
        null_line=ell,
        blocks=blocks,
    )


def transported_curvature(g: MetricField, base, y, steps_per_unit: int = STEPS_PER_UNIT,
                          refine_tol: float = REFINE_TOL, max_refine: int = 3):
    """R_y(d_a, d_b) for a < b, pulled back to base by transport along the axis path.

    The step count doubles (up to ``max_refine`` times) while the transported
    frame's metric drift exceeds ``refine_tol``.
    """
    base = np.asarray(base, dtype=float)
    path = axis_path(base, y)
    for c in path:
        if not g.contains(c):
            raise ChartDomainError(f"{g.label}: transport path leaves the chart at {c.tolist()}")
    g0 = g.value(base)
    gy = g.value(y)
    scale = max(1.0, np.abs(g0).max())
    spu = steps_per_unit
    for attempt in range(max_refine + 1):
        P = parallel_transport(g, path, steps_per_unit=spu)
        drift = np.abs(P.T @ gy @ P - g0).max()
        if drift <= refine_tol * scale:
            break
        spu *= 2
    if drift > COMPAT_TOL * scale:
        raise TransportAccuracyError(
            f"{g.label}: transport drift {drift:.3g} exceeds {COMPAT_TOL}; increase steps_per_unit"
        )
    Pinv = np.linalg.inv(P)
    b = curvature_bundle(g, y, 2)
    d = g.dim
    return [Pinv @ b.endomorphism(a, c) @ P for a in range(d) for c in range(a + 1, d)]


def curvature_span(g: MetricField, base=None, sample_points=None, seed: int = 0,
                   count: int = 20, steps_per_unit: int = STEPS_PER_UNIT) -> EndoSpan:
    base = default_base(g.dim) if base is None else np.asarray(base, dtype=float)
    if not g.contains(base):
        raise ChartDomainError(f"{g.label}: base point {base.tolist()} outside the chart")
    if sample_points is None:
        sample_points = neighbourhood_samples(g, base, count, seed)
    b0 = curvature_bundle(g, base, 2)
    d = g.dim
    gens = [b0.endomorphism(a, c) for a in range(d) for c in range(a + 1, d)]
    for y in sample_points:
        gens.extend(transported_curvature(g, base, y, steps_per_unit))
    basis = span_basis(gens)
    closed = bracket_closure(basis)
    flags = compute_flags(closed, b0.metric, seed)
    return EndoSpan(
        base=base,
        metric=b0.metric,
        gens=gens,
        basis=basis,
        dim=len(basis),
        bracket_closed_dim=len(closed),
        closed_basis=closed,
        flags=flags,
    )


def so_dim(k: int) -> int:
    return k * (k - 1) // 2


def classify(span: EndoSpan, n: int | None = None) -> str:
    """Name the estimated algebra; 'unrecognized(dim)' when it matches nothing on the list."""
    d = span.d
    n = d - 2 if n is None else n
    dim = span.bracket_closed_dim
    f = span.flags
    if dim == 0:
        return "trivial"
    if d == n + 2 and dim == so_dim(d):
        return f"so(1,{d - 1})"
    if f.preserves_nondeg_subspace:
        sigs = sorted(f.blocks)
        total = sum(so_dim(r + s) for r, s in sigs)
        if total == dim:
            parts = [f"so({r},{s})" if r else f"so({s})" for r, s in sigs if r + s >= 2]
            return "+".join(sorted(parts, key=lambda t: (not t.startswith("so(1"), t)))
        return f"unrecognized({dim})"
    if f.preserves_null_line:
        if dim == 1 + so_dim(n) + n:
            return f"sim({n})"
        if span.is_abelian() and f.fiber_rotation_dim == 0 and _nilpotent(span.closed_basis):
            return f"null_translations({dim})"
    return f"unrecognized({dim})"


def _nilpotent(basis: list[np.ndarray], tol: float = 1e-8) -> bool:
    return all(np.abs(A @ A @ A).max() <= tol for A in basis)
