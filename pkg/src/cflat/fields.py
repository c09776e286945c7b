"""Parameter polynomials in u and metrics as jet-valued matrix fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .jets import Jet, inverse, jet_space, variables

# A chart point is a plain coordinate vector; Walker charts order it (v, x^1..x^n, u).
ChartPoint = np.ndarray

Components = Callable[[Sequence[Jet]], Jet]


class ChartDomainError(ValueError):
    """Raised when a point lies outside a metric's coordinate chart."""


@dataclass(frozen=True)
class UPoly:
    """Polynomial c_0 + c_1 u + ... + c_d u^d."""

    coeffs: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs) or (0.0,)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def const(cls, c: float) -> "UPoly":
        return cls((c,))

    @classmethod
    def parse(cls, text: str) -> "UPoly":
        return cls(tuple(float(tok) for tok in text.split()))

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int = 2, scale: float = 1.0) -> "UPoly":
        return cls(tuple(rng.uniform(-scale, scale, size=degree + 1)))

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.coeffs) if c != 0.0]
        return nz[-1] if nz else 0

    def deriv(self) -> "UPoly":
        if len(self.coeffs) == 1:
            return UPoly((0.0,))
        return UPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def __call__(self, u):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * u + c
        return acc

    def __str__(self) -> str:
        return " ".join(repr(c) for c in self.coeffs)


@dataclass(frozen=True)
class WalkerParts:
    """Pieces of g = 2 dv du + h + 2 A du + H du^2 as jet-valued callables.

    Each callable receives ``(v, xs, u)`` with ``xs`` a list of ``n`` jets and
    returns h as an (n, n) jet, A as an (n,) jet and H as a scalar jet.
    """

    n: int
    h: Callable[[Jet, list[Jet], Jet], Jet]
    A: Callable[[Jet, list[Jet], Jet], Jet]
    H: Callable[[Jet, list[Jet], Jet], Jet]
    h_depends_on_u: bool = False


def _box_sampler(dim: int, radius: float = 1.0) -> Callable[[np.random.Generator], np.ndarray]:
    def sample(rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-radius, radius, size=dim)

    return sample


@dataclass(frozen=True)
class MetricField:
    """A metric on one coordinate chart, evaluated as a symmetric matrix of jets."""

    dim: int
    components: Components
    signature: tuple[int, int]
    label: str
    domain: Callable[[np.ndarray], bool] = lambda p: True
    sampler: Callable[[np.random.Generator], np.ndarray] | None = None
    params: dict = field(default_factory=dict)
    walker: WalkerParts | None = None

    def eval(self, point, order: int = 2) -> Jet:
        return eval_metric(self, point, order)

    def value(self, point) -> np.ndarray:
        return np.asarray(eval_metric(self, point, 0).value)

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=float)
        return point.shape == (self.dim,) and bool(self.domain(point))

    def sample(self, rng: np.random.Generator, max_tries: int = 10_000) -> np.ndarray:
        sampler = self.sampler or _box_sampler(self.dim)
        for _ in range(max_tries):
            p = sampler(rng)
            if self.contains(p):
                return p
        raise RuntimeError(f"could not sample an admissible point for {self.label}")

    def sample_points(self, rng: np.random.Generator, count: int) -> list[np.ndarray]:
        return [self.sample(rng) for _ in range(count)]

    @property
    def is_walker(self) -> bool:
        return self.walker is not None


def eval_metric(g: MetricField, point, order: int = 2) -> Jet:
    point = np.asarray(point, dtype=float)
    if point.shape != (g.dim,):
        raise ChartDomainError(f"{g.label}: expected a point of dimension {g.dim}, got {point.shape}")
    if not g.domain(point):
        raise ChartDomainError(f"{g.label}: point {point.tolist()} outside chart domain")
    return g.components(variables(point, order))


def inverse_metric(gmat: Jet) -> Jet:
    return inverse(gmat)


def walker_metric(
    parts: WalkerParts,
    label: str,
    domain: Callable[[np.ndarray], bool] = lambda p: True,
    sampler=None,
    params: dict | None = None,
) -> MetricField:
    """Assemble the (n+2)-dimensional Walker metric from its parts."""
    n = parts.n
    d = n + 2

    def components(coords: Sequence[Jet]) -> Jet:
        v, xs, u = coords[0], list(coords[1 : n + 1]), coords[n + 1]
        sp = v.space
        h = parts.h(v, xs, u)
        A = parts.A(v, xs, u)
        H = parts.H(v, xs, u)
        c = np.zeros((d, d, sp.size))
        c[0, n + 1, 0] = c[n + 1, 0, 0] = 1.0
        c[1 : n + 1, 1 : n + 1] = h.coeffs
        c[1 : n + 1, n + 1] = A.coeffs
        c[n + 1, 1 : n + 1] = A.coeffs
        c[n + 1, n + 1] = H.coeffs
        return Jet(c, sp)

    return MetricField(
        dim=d,
        components=components,
        signature=(1, n + 1),
        label=label,
        domain=domain,
        sampler=sampler,
        params=dict(params or {}),
        walker=parts,
    )


def fiber_metric(g: MetricField, v: float, u: float) -> MetricField:
    """The Riemannian metric h(u) of a Walker metric as a standalone n-dim field."""
    if g.walker is None:
        raise TypeError(f"{g.label} is not tagged as a Walker metric")
    parts = g.walker
    n = parts.n

    def components(xs: Sequence[Jet]) -> Jet:
        sp = xs[0].space
        return parts.h(Jet.constant(v, sp), list(xs), Jet.constant(u, sp))

    def domain(x: np.ndarray) -> bool:
        return g.domain(np.concatenate([[v], x, [u]]))

    return MetricField(
        dim=n,
        components=components,
        signature=(0, n),
        label=f"{g.label}:fiber",
        domain=domain,
        sampler=None,
        params={"v": v, "u": u},
    )


def constant_matrix(mat, point_dim: int, order: int) -> Jet:
    return Jet.constant(np.asarray(mat, dtype=float), jet_space(point_dim, order))
