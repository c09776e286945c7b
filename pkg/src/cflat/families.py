"""Constructors for the metric instances: conformally flat Walker families,
decomposable variants, the four-dimensional examples, and product spaces."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .fields import MetricField, UPoly, WalkerParts, walker_metric
from .jets import Jet
from .jets import sqrt as jsqrt

FAMILY_IDS = (
    "flat",
    "const_curv_riem",
    "const_curv_lorentz",
    "product",
    "ppwave_f1",
    "sim_f2",
    "sphere_f3",
    "hyp_f4",
    "thc3_dec",
    "thc3_flat",
    "gt_original",
    "gt_corrected",
    "gt_simplified",
    "cahen_wallach",
)

WALKER_FAMILIES = ("ppwave_f1", "sim_f2", "sphere_f3", "hyp_f4")

PSI_RADIUS2 = 0.81
U_INTERVAL = (-1.0, 1.0)


class FamilyConstraintError(ValueError):
    """A family parameter violates the constructor's constraints."""


@dataclass(frozen=True)
class FamilySpec:
    family_id: str
    n: int = 2
    a: UPoly = field(default_factory=lambda: UPoly((0.0,)))
    B: tuple[UPoly, ...] = ()
    C: tuple[UPoly, ...] = ()
    D: UPoly = field(default_factory=lambda: UPoly((0.0,)))
    lam: UPoly | None = None
    c: float = 1.0
    sign: int = 1

    def vector(self, name: str) -> tuple[UPoly, ...]:
        vals = getattr(self, name)
        if len(vals) == 0:
            return tuple(UPoly((0.0,)) for _ in range(self.n))
        if len(vals) != self.n:
            raise FamilyConstraintError(f"{name} has {len(vals)} components, expected n = {self.n}")
        return tuple(vals)


def random_spec(family_id: str, n: int, rng: np.random.Generator, degree: int = 2) -> FamilySpec:
    """Desk-scale random parameters: degree <= 2 polynomials with coefficients in [-1, 1]."""

    def poly():
        return UPoly.random(rng, degree)

    spec = FamilySpec(
        family_id=family_id,
        n=n,
        a=poly(),
        B=tuple(poly() for _ in range(n)),
        C=tuple(poly() for _ in range(n)),
        D=poly(),
    )
    if family_id == "ppwave_f1":
        spec = replace(spec, B=(), C=(), D=UPoly())
    if family_id in ("sphere_f3", "hyp_f4"):
        # |lambda| >= 0.25 on [-1, 1], with the sign each family requires
        c0, c1, c2 = rng.uniform(0.75, 1.5), rng.uniform(-0.25, 0.25), rng.uniform(0.0, 0.5)
        sign = -1.0 if family_id == "sphere_f3" else 1.0
        spec = replace(spec, lam=UPoly((sign * c0, sign * c1, sign * c2)))
    return spec


# -- jet helpers --------------------------------------------------------------

def _r2(xs: Sequence[Jet]) -> Jet:
    acc = xs[0] * xs[0]
    for x in xs[1:]:
        acc = acc + x * x
    return acc


def _dot(coeffs: Sequence, xs: Sequence[Jet]) -> Jet:
    acc = xs[0] * coeffs[0]
    for c, x in zip(coeffs[1:], xs[1:]):
        acc = acc + x * c
    return acc


def psi(xs: Sequence[Jet], sign: int) -> Jet:
    """4 / (1 + sign * sum x^2)^2: unit sphere for sign=+1, Lobachevskian for -1."""
    return 4.0 / (1.0 + sign * _r2(xs)) ** 2


def _identity(n: int, sp) -> Jet:
    return Jet.constant(np.eye(n), sp)


def _zeros(n: int, sp) -> Jet:
    return Jet.constant(np.zeros(n), sp)


def _diag(scalar: Jet, n: int) -> Jet:
    return scalar * np.eye(n)


def _walker_sampler(n: int, radius2: float | None, u_interval=U_INTERVAL):
    def sample(rng: np.random.Generator) -> np.ndarray:
        while True:
            x = rng.uniform(-0.9, 0.9, size=n)
            if radius2 is None or x @ x <= radius2:
                break
        v = rng.uniform(-1.0, 1.0)
        u = rng.uniform(*u_interval)
        return np.concatenate([[v], x, [u]])

    return sample


def _check_sign(lam: UPoly, sign: int, name: str) -> None:
    grid = np.linspace(*U_INTERVAL, 2001)
    vals = np.array([lam(u) for u in grid])
    roots = np.roots(list(reversed(lam.coeffs))) if lam.degree > 0 else np.array([])
    real_in = [
        r.real for r in np.atleast_1d(roots)
        if abs(r.imag) < 1e-12 and U_INTERVAL[0] <= r.real <= U_INTERVAL[1]
    ]
    if np.any(sign * vals <= 0.0) or real_in:
        rel = "< 0" if sign < 0 else "> 0"
        raise FamilyConstraintError(f"{name}: lambda(u) {rel} violated on u in [-1, 1]")


def _nonzero(polys: Sequence[UPoly]) -> bool:
    return any(not p.is_zero() for p in polys)


# -- conformally flat Walker families ---------------------------------------------

def ppwave_f1(spec: FamilySpec) -> MetricField:
    n, a = spec.n, spec.a

    def h(v, xs, u):
        return _identity(n, v.space)

    def A(v, xs, u):
        return _zeros(n, v.space)

    def H(v, xs, u):
        return a(u) * _r2(xs)

    return walker_metric(
        WalkerParts(n, h, A, H),
        label=spec.family_id,
        sampler=_walker_sampler(n, None),
        params={"spec": spec},
    )


def sim_f2(spec: FamilySpec) -> MetricField:
    n = spec.n
    B, C = spec.vector("B"), spec.vector("C")
    if not _nonzero(B):
        raise FamilyConstraintError("sim_f2: sum_i B_i(u)^2 must not vanish identically")
    a, D = spec.a, spec.D

    def h(v, xs, u):
        return _identity(n, v.space)

    def A(v, xs, u):
        Bu = [b(u) for b in B]
        bx = _dot(Bu, xs)
        r2 = _r2(xs)
        return Jet.stack([0.25 * (2.0 * bx * xs[i] - Bu[i] * r2) for i in range(n)])

    def H1(xs, u):
        return _dot([b(u) for b in B], xs)

    def H0(xs, u):
        Bu = [b(u) for b in B]
        r2 = _r2(xs)
        b2 = sum(bu * bu for bu in Bu)
        return (1.0 / 16.0) * b2 * r2 * r2 + a(u) * r2 + _dot([cc(u) for cc in C], xs) + D(u)

    def H(v, xs, u):
        return v * H1(xs, u) + H0(xs, u)

    return walker_metric(
        WalkerParts(n, h, A, H),
        label=spec.family_id,
        sampler=_walker_sampler(n, None),
        params={"spec": spec},
    )


def _sphere_like(spec: FamilySpec, sign: int) -> MetricField:
    """Families 3 (sign=+1, lambda<0, sphere fibers) and 4 (sign=-1, lambda>0)."""
    n = spec.n
    name = spec.family_id
    if spec.lam is None:
        raise FamilyConstraintError(f"{name}: lambda(u) is required")
    lam = spec.lam
    _check_sign(lam, -sign, name)
    B, C = spec.vector("B"), spec.vector("C")
    a, D = spec.a, spec.D
    if not (_nonzero(B) or not a.is_zero()):
        raise FamilyConstraintError(f"{name}: sum_i B_i(u)^2 + a(u)^2 must not vanish identically")

    def h(v, xs, u):
        return _diag(psi(xs, sign) / (-sign * lam(u)), n)

    def A(v, xs, u):
        P = psi(xs, sign)
        Bu = [b(u) for b in B]
        bx = _dot(Bu, xs)
        r2 = _r2(xs)
        return Jet.stack(
            [P * (bx * xs[i] - 0.5 * Bu[i] * r2 + sign * 0.5 * Bu[i]) for i in range(n)]
        )

    def H0(xs, u):
        P = psi(xs, sign)
        Bu = [b(u) for b in B]
        bx = _dot(Bu, xs)
        b2 = sum(bu * bu for bu in Bu)
        rest = a(u) * _r2(xs) + _dot([cc(u) for cc in C], xs) + D(u)
        return P * (b2 + sign * bx * bx) + jsqrt(P) * rest

    def H(v, xs, u):
        return lam(u) * (v * v - sign * H0(xs, u))

    def domain(p: np.ndarray) -> bool:
        x, u = p[1 : n + 1], p[n + 1]
        if sign < 0 and x @ x >= 1.0:
            return False
        return -sign * lam(u) > 0.0

    return walker_metric(
        WalkerParts(n, h, A, H, h_depends_on_u=lam.degree > 0),
        label=name,
        domain=domain,
        sampler=_walker_sampler(n, PSI_RADIUS2),
        params={"spec": spec},
    )


def sphere_f3(spec: FamilySpec) -> MetricField:
    return _sphere_like(spec, +1)


def hyp_f4(spec: FamilySpec) -> MetricField:
    return _sphere_like(spec, -1)


# -- decomposable Walker metrics ------------------------------------------------

def thc3_dec(spec: FamilySpec) -> MetricField:
    """(1/c) Psi sum dx^2 + 2 dv du -/+ c v^2 du^2 (sign=+1: sphere, -1: Lobachevskian)."""
    n, c, sign = spec.n, spec.c, spec.sign
    if not c > 0:
        raise FamilyConstraintError(f"thc3_dec: c > 0 violated (c = {c})")
    if sign not in (1, -1):
        raise FamilyConstraintError(f"thc3_dec: sign must be +1 or -1, got {sign}")

    def h(v, xs, u):
        return _diag(psi(xs, sign) / c, n)

    def A(v, xs, u):
        return _zeros(n, v.space)

    def H(v, xs, u):
        return -sign * c * v * v

    def domain(p):
        x = p[1 : n + 1]
        return sign > 0 or x @ x < 1.0

    return walker_metric(
        WalkerParts(n, h, A, H),
        label=spec.family_id,
        domain=domain,
        sampler=_walker_sampler(n, PSI_RADIUS2),
        params={"spec": spec},
    )


def flat_walker(n: int, label: str = "flat") -> MetricField:
    def h(v, xs, u):
        return _identity(n, v.space)

    def A(v, xs, u):
        return _zeros(n, v.space)

    def H(v, xs, u):
        return 0.0 * v

    return walker_metric(
        WalkerParts(n, h, A, H), label=label, sampler=_walker_sampler(n, None)
    )


def perturbed_ppwave(spec: FamilySpec, eps: float = 0.1) -> MetricField:
    """Family 1 with H0 += eps (x^1)^3: a Walker metric that is not conformally flat."""
    base = ppwave_f1(spec)
    parts = base.walker

    def H(v, xs, u):
        return parts.H(v, xs, u) + eps * xs[0] * xs[0] * xs[0]

    return walker_metric(
        WalkerParts(parts.n, parts.h, parts.A, H),
        label="ppwave_f1_perturbed",
        sampler=base.sampler,
        params={"spec": spec, "eps": eps},
    )


# -- dimension four ---------------------------------------------------------------

GT_Y_MIN = 0.05


def _gt_domain(p: np.ndarray) -> bool:
    return p[1] > GT_Y_MIN


def _gt_sampler(rng: np.random.Generator) -> np.ndarray:
    x, z, t = rng.uniform(-1.0, 1.0, size=3)
    y = rng.uniform(0.5, 1.5)
    return np.array([x, y, z, t])


def gt_original() -> MetricField:
    """2dxdt + 4y dxdy - 4z dxdz + (dy^2 + dz^2)/(2y^2) + 2(x + y^2 - z^2)^2 dt^2 in (x, y, z, t)."""

    def components(c: Sequence[Jet]) -> Jet:
        x, y, z, t = c
        fib = 1.0 / (2.0 * y * y)
        w = x + y * y - z * z
        zero = 0.0 * x
        return Jet.stack(
            [
                [zero, 2.0 * y, -2.0 * z, zero + 1.0],
                [2.0 * y, fib, zero, zero],
                [-2.0 * z, zero, fib, zero],
                [zero + 1.0, zero, zero, 2.0 * w * w],
            ]
        )

    return MetricField(
        dim=4,
        components=components,
        signature=(1, 3),
        label="gt_original",
        domain=_gt_domain,
        sampler=_gt_sampler,
    )


def _gt_walker(label: str, corrected: bool) -> MetricField:
    # Walker coordinates (v, x^1, x^2, u) = (x, y, z, t).
    def h(v, xs, u):
        y = xs[0]
        return _diag(1.0 / (2.0 * y * y), 2)

    def A(v, xs, u):
        y, z = xs
        if corrected:
            return Jet.stack([2.0 * y, -2.0 * z])
        return _zeros(2, v.space)

    def H(v, xs, u):
        y, z = xs
        w = v + y * y - z * z if corrected else v
        return 2.0 * w * w

    return walker_metric(
        WalkerParts(2, h, A, H),
        label=label,
        domain=_gt_domain,
        sampler=_gt_sampler,
    )


def gt_corrected() -> MetricField:
    """2dxdt + 4y dtdy - 4z dtdz + (dy^2 + dz^2)/(2y^2) + 2(x + y^2 - z^2)^2 dt^2."""
    return _gt_walker("gt_corrected", corrected=True)


def gt_simplified() -> MetricField:
    """2dxdt + 2x^2 dt^2 + (dy^2 + dz^2)/(2y^2)."""
    return _gt_walker("gt_simplified", corrected=False)


def gt_decomposition_map(coords: Sequence[Jet]) -> list[Jet]:
    """New (x, y, z, t) -> old coordinates with x_old = x - y^2 + z^2."""
    x, y, z, t = coords
    return [x - y * y + z * z, y, z, t]


# -- space forms and products -------------------------------------------------------

def space_form(dim: int, k: float, negatives: int = 0, label: str | None = None) -> MetricField:
    """eta / (1 + k eta(x, x) / 4)^2: constant sectional curvature k, signature (negatives, dim - negatives)."""
    eta = np.diag([-1.0] * negatives + [1.0] * (dim - negatives))

    def conformal(p: np.ndarray) -> float:
        return 1.0 + k * float(p @ eta @ p) / 4.0

    def components(c: Sequence[Jet]) -> Jet:
        q = _dot(np.diag(eta), [ci * ci for ci in c])
        f = 1.0 / (1.0 + (k / 4.0) * q) ** 2
        return f * eta

    return MetricField(
        dim=dim,
        components=components,
        signature=(negatives, dim - negatives),
        label=label or f"space_form(k={k})",
        domain=lambda p: conformal(p) > 0.1,
        sampler=lambda rng: rng.uniform(-0.8, 0.8, size=dim),
        params={"k": k},
    )


def psi_space(n: int, sign: int, c: float = 1.0) -> MetricField:
    """(1/c) Psi sum dx^2: sphere of curvature c (sign=+1) or Lobachevskian of curvature -c."""
    if not c > 0:
        raise FamilyConstraintError(f"psi_space: c > 0 violated (c = {c})")

    def components(xs: Sequence[Jet]) -> Jet:
        return _diag(psi(xs, sign) / c, n)

    def domain(p):
        return sign > 0 or p @ p < 1.0

    def sampler(rng):
        while True:
            x = rng.uniform(-0.9, 0.9, size=n)
            if x @ x <= PSI_RADIUS2:
                return x

    return MetricField(
        dim=n,
        components=components,
        signature=(0, n),
        label=f"{'sphere' if sign > 0 else 'lobachevskian'}(n={n}, c={c})",
        domain=domain,
        sampler=sampler,
        params={"sign": sign, "c": c},
    )


def line(sign: float = -1.0) -> MetricField:
    """The straight line with metric sign * dt^2."""
    return MetricField(
        dim=1,
        components=lambda c: Jet.stack([[0.0 * c[0] + sign]]),
        signature=(1, 0) if sign < 0 else (0, 1),
        label=f"line({'-' if sign < 0 else '+'}dt^2)",
    )


def product_metric(g1: MetricField, g2: MetricField) -> MetricField:
    """Block-diagonal metric on the product chart."""
    d1, d2 = g1.dim, g2.dim
    d = d1 + d2

    def components(c: Sequence[Jet]) -> Jet:
        m1 = g1.components(list(c[:d1]))
        m2 = g2.components(list(c[d1:]))
        sp = m1.space
        out = np.zeros((d, d, sp.size))
        out[:d1, :d1] = m1.coeffs
        out[d1:, d1:] = m2.coeffs
        return Jet(out, sp)

    def domain(p):
        return bool(g1.domain(p[:d1])) and bool(g2.domain(p[d1:]))

    def sampler(rng):
        return np.concatenate([g1.sample(rng), g2.sample(rng)])

    return MetricField(
        dim=d,
        components=components,
        signature=(g1.signature[0] + g2.signature[0], g1.signature[1] + g2.signature[1]),
        label=f"{g1.label} x {g2.label}",
        domain=domain,
        sampler=sampler,
        params={"factors": (g1, g2)},
    )


# -- dispatch ---------------------------------------------------------------------------

_BUILDERS: dict[str, Callable[[FamilySpec], MetricField]] = {
    "flat": lambda s: flat_walker(s.n),
    "thc3_flat": lambda s: flat_walker(s.n, label="thc3_flat"),
    "ppwave_f1": ppwave_f1,
    "cahen_wallach": lambda s: ppwave_f1(replace(s, a=UPoly((1.0,)))),
    "sim_f2": sim_f2,
    "sphere_f3": sphere_f3,
    "hyp_f4": hyp_f4,
    "thc3_dec": thc3_dec,
    "gt_original": lambda s: gt_original(),
    "gt_corrected": lambda s: gt_corrected(),
    "gt_simplified": lambda s: gt_simplified(),
    "const_curv_riem": lambda s: space_form(s.n, s.sign * s.c, 0, label="const_curv_riem"),
    "const_curv_lorentz": lambda s: space_form(s.n, s.sign * s.c, 1, label="const_curv_lorentz"),
    "product": lambda s: product_metric(psi_space(s.n // 2, 1, s.c), psi_space(s.n - s.n // 2, -1, s.c)),
}


def build(spec: FamilySpec) -> MetricField:
    """Construct the metric named by ``spec.family_id``.

    For ``const_curv_*`` and ``product`` the field ``n`` is the full dimension;
    for Walker families it is the fiber dimension (d = n + 2).
    """
    try:
        builder = _BUILDERS[spec.family_id]
    except KeyError:
        raise FamilyConstraintError(f"unknown family {spec.family_id!r}") from None
    if spec.n < 1:
        raise FamilyConstraintError(f"n >= 1 required, got {spec.n}")
    return builder(spec)
