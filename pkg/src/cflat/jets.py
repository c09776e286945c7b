"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` holds the Taylor coefficients of a (possibly array-valued)
function of ``nvars`` variables up to total degree ``order``.  Coefficients
live in the last axis of ``coeffs``, indexed by multi-indices sorted by
degree and then lexicographically, so truncation to a lower order is a
prefix slice.  Because every multi-index is stored once, higher-order blocks
are symmetric by construction.

Array-valued jets broadcast like numpy arrays over their leading axes; a
metric is simply a jet of shape ``(d, d)``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

# Public jets use order <= 3; one extra order is used internally for Jacobians.
MAX_ORDER = 4
_DENSE_SCATTER_LIMIT = 2_000_000


class JetSpace:
    """Multi-index tables for jets in ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1:
            raise ValueError(f"nvars must be >= 1, got {nvars}")
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in 0..{MAX_ORDER}, got {order}")
        self.nvars = nvars
        self.order = order
        monos: list[tuple[int, ...]] = []
        for deg in range(order + 1):
            block = [
                tuple(np.bincount(c, minlength=nvars))
                for c in itertools.combinations_with_replacement(range(nvars), deg)
            ]
            monos.extend(sorted(block, reverse=True))
        self.monos = monos
        self.index = {m: k for k, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in m) for m in monos], dtype=float
        )
        self.offsets = [int(np.sum(self.degree < k)) for k in range(order + 2)]

        ii, jj, kk = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if self.degree[i] + self.degree[j] <= order:
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self.pair_i = np.array(ii)
        self.pair_j = np.array(jj)
        if len(kk) * self.size <= _DENSE_SCATTER_LIMIT:
            scatter = np.zeros((len(kk), self.size))
            scatter[np.arange(len(kk)), kk] = 1.0
            self._dense = scatter
            self._sparse = None
        else:
            from scipy import sparse

            self._dense = None
            self._sparse = sparse.csr_matrix(
                (np.ones(len(kk)), (np.array(kk), np.arange(len(kk)))), shape=(self.size, len(kk))
            )

        # d/dx_v maps the coefficient of alpha + e_v (times alpha_v + 1) onto alpha.
        self.diff_src = []
        self.diff_fac = []
        if order >= 1:
            lower = self.offsets[order]
            for v in range(nvars):
                src, fac = [], []
                for m in monos[:lower]:
                    up = list(m)
                    up[v] += 1
                    src.append(self.index[tuple(up)])
                    fac.append(up[v])
                self.diff_src.append(np.array(src))
                self.diff_fac.append(np.array(fac, dtype=float))

    def scatter(self, prod: np.ndarray) -> np.ndarray:
        """Sum pairwise coefficient products (last axis) into result monomials."""
        if self._dense is not None:
            return prod @ self._dense
        flat = prod.reshape(-1, prod.shape[-1])
        return np.asarray((self._sparse @ flat.T).T).reshape(prod.shape[:-1] + (self.size,))

    def __repr__(self) -> str:
        return f"JetSpace(nvars={self.nvars}, order={self.order})"


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class Jet:
    """Truncated Taylor expansion; immutable by convention."""

    __slots__ = ("coeffs", "space")
    __array_priority__ = 1000

    def __init__(self, coeffs, space: JetSpace):
        coeffs = _as_array(coeffs)
        if coeffs.shape[-1:] != (space.size,):
            raise ValueError(
                f"coeffs last axis must have length {space.size}, got shape {coeffs.shape}"
            )
        self.coeffs = coeffs
        self.space = space

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, space: JetSpace) -> "Jet":
        value = _as_array(value)
        coeffs = np.zeros(value.shape + (space.size,))
        coeffs[..., 0] = value
        return cls(coeffs, space)

    @classmethod
    def stack(cls, items: Sequence, space: JetSpace | None = None) -> "Jet":
        """Stack jets (or nested lists of jets and numbers) into one array jet."""
        if space is None:
            space = _find_space(items)
            if space is None:
                raise ValueError("cannot infer jet space from constants only")

        def rec(obj):
            if isinstance(obj, Jet):
                return obj.coeffs
            if isinstance(obj, (list, tuple)):
                return np.stack([rec(o) for o in obj])
            return Jet.constant(obj, space).coeffs

        return cls(rec(items), space)

    # -- properties -------------------------------------------------------
    @property
    def order(self) -> int:
        return self.space.order

    @property
    def nvars(self) -> int:
        return self.space.nvars

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self) -> np.ndarray | float:
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v

    @property
    def gradient(self) -> np.ndarray:
        return self.derivatives(1)

    @property
    def hessian(self) -> np.ndarray:
        return self.derivatives(2)

    def coeff(self, multi_index: Sequence[int]):
        """Taylor coefficient for a derivative multi-index given as variable list.

        ``coeff((0, 1))`` is the coefficient of ``x0*x1``; index order is
        irrelevant.
        """
        expo = np.bincount(np.asarray(multi_index, dtype=int), minlength=self.nvars)
        return self.coeffs[..., self.space.index[tuple(expo)]]

    def derivative(self, *idx: int):
        """Partial derivative ``d^k f / dx_idx[0] ... dx_idx[k-1]``."""
        if len(idx) > self.order:
            raise ValueError(f"derivative of order {len(idx)} exceeds jet order {self.order}")
        expo = tuple(np.bincount(np.asarray(idx, dtype=int), minlength=self.nvars))
        k = self.space.index[expo]
        return self.coeffs[..., k] * self.space.factorial[k]

    def derivatives(self, k: int) -> np.ndarray:
        """Full symmetric tensor of k-th partial derivatives, axes appended."""
        if k > self.order:
            raise ValueError(f"derivative of order {k} exceeds jet order {self.order}")
        m = self.nvars
        out = np.empty(self.shape + (m,) * k)
        for idx in itertools.product(range(m), repeat=k):
            out[(...,) + idx] = self.derivative(*idx)
        return out

    # -- structural ops ---------------------------------------------------
    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key) or len(key) > len(self.shape):
            raise IndexError("jets index only their leading (shape) axes")
        return Jet(self.coeffs[key], self.space)

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def T(self) -> "Jet":
        nd = len(self.shape)
        return Jet(np.moveaxis(self.coeffs, range(nd), range(nd)[::-1]), self.space)

    def sum(self, axis=None) -> "Jet":
        nd = len(self.shape)
        if axis is None:
            axis = tuple(range(nd))
        return Jet(self.coeffs.sum(axis=axis), self.space)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise jet order by truncation")
        space = jet_space(self.nvars, order)
        return Jet(self.coeffs[..., : space.size], space)

    def diff(self, var: int) -> "Jet":
        """Partial derivative as a jet one order lower."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable index {var} out of range for {self.nvars} variables")
        sp = self.space
        low = jet_space(self.nvars, self.order - 1)
        return Jet(self.coeffs[..., sp.diff_src[var]] * sp.diff_fac[var], low)

    def grad(self) -> "Jet":
        """Gradient as a jet one order lower; a new trailing shape axis indexes the variable."""
        parts = [self.diff(v) for v in range(self.nvars)]
        return Jet(np.stack([p.coeffs for p in parts], axis=-2), parts[0].space)

    def _wrap(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError(f"jet space mismatch: {self.space} vs {other.space}")
            return other
        return Jet.constant(other, self.space)

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.space)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            c = self.coeffs.copy() if np.ndim(other) == 0 else np.broadcast_to(
                self.coeffs, np.broadcast_shapes(self.shape, np.shape(other)) + (self.space.size,)
            ).copy()
            c[..., 0] += other
            return Jet(c, self.space)
        return Jet(self.coeffs + self._wrap(other).coeffs, self.space)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.coeffs * _as_array(other)[..., None], self.space)
        other = self._wrap(other)
        sp = self.space
        prod = self.coeffs[..., sp.pair_i] * other.coeffs[..., sp.pair_j]
        out = sp.scatter(prod)
        out[..., 0] = self.coeffs[..., 0] * other.coeffs[..., 0]
        return Jet(out, sp)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.coeffs / _as_array(other)[..., None], self.space)
        other = self._wrap(other)
        out = self * reciprocal(other)
        out.coeffs[..., 0] = self.coeffs[..., 0] / other.coeffs[..., 0]
        return out

    def __rtruediv__(self, other) -> "Jet":
        return self._wrap(other) / self

    def __pow__(self, n: int) -> "Jet":
        return pow_int(self, n)

    def __matmul__(self, other) -> "Jet":
        other = self._wrap(other)
        if len(self.shape) == 2 and len(other.shape) == 2:
            return einsum("ij,jk->ik", self, other)
        if len(self.shape) == 2 and len(other.shape) == 1:
            return einsum("ij,j->i", self, other)
        if len(self.shape) == 1 and len(other.shape) == 2:
            return einsum("i,ij->j", self, other)
        if len(self.shape) == 1 and len(other.shape) == 1:
            return einsum("i,i->", self, other)
        raise ValueError(f"matmul not supported for shapes {self.shape} @ {other.shape}")

    def __rmatmul__(self, other) -> "Jet":
        return self._wrap(other) @ self

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order}, value={self.value!r})"


def _find_space(items) -> JetSpace | None:
    if isinstance(items, Jet):
        return items.space
    if isinstance(items, (list, tuple)):
        for it in items:
            sp = _find_space(it)
            if sp is not None:
                return sp
    return None


def einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Two-operand einsum with jet multiplication replacing scalar products."""
    if not isinstance(a, Jet):
        a = Jet.constant(a, b.space)
    if not isinstance(b, Jet):
        b = Jet.constant(b, a.space)
    if a.space is not b.space:
        raise ValueError(f"jet space mismatch: {a.space} vs {b.space}")
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    sp = a.space
    z = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.coeffs[..., sp.pair_i], b.coeffs[..., sp.pair_j])
    res = sp.scatter(z)
    res[..., 0] = np.einsum(f"{sa},{sb}->{out}", a.coeffs[..., 0], b.coeffs[..., 0])
    return Jet(res, sp)


# -- elementary functions --------------------------------------------------

def compose(a: Jet, derivs: Sequence) -> Jet:
    """Apply a scalar function given its derivatives ``f(a0), f'(a0), ...`` at the value part.

    ``derivs`` must hold at least ``order + 1`` arrays broadcastable to ``a.shape``.
    """
    order = a.order
    value = _as_array(derivs[0])
    delta = Jet(a.coeffs.copy(), a.space)
    delta.coeffs[..., 0] = 0.0
    out = Jet.constant(np.broadcast_to(value, a.shape), a.space)
    power = None
    for k in range(1, order + 1):
        power = delta if power is None else power * delta
        out = out + power * (_as_array(derivs[k]) / math.factorial(k))
    out.coeffs[..., 0] = value
    return out


def reciprocal(a: Jet) -> Jet:
    a0 = a.coeffs[..., 0]
    if np.any(a0 == 0.0):
        raise ZeroDivisionError("reciprocal of a jet with zero value part")
    r = 1.0 / a0
    return compose(a, [r, -r**2, 2 * r**3, -6 * r**4][: a.order + 1])


def sqrt(a: Jet) -> Jet:
    a0 = a.coeffs[..., 0]
    if np.any(a0 <= 0.0):
        raise ValueError("sqrt of a jet with nonpositive value part")
    s = np.sqrt(a0)
    return compose(a, [s, 0.5 / s, -0.25 / (s * a0), 0.375 / (s * a0 * a0)][: a.order + 1])


def pow_int(a: Jet, n: int) -> Jet:
    if not isinstance(n, (int, np.integer)):
        raise TypeError(f"pow_int needs an integer exponent, got {n!r}")
    n = int(n)
    a0 = a.coeffs[..., 0]
    if n < 0:
        if np.any(a0 == 0.0):
            raise ZeroDivisionError("negative power of a jet with zero value part")
        out = reciprocal(pow_int(a, -n))
        out.coeffs[..., 0] = a0**n
        return out
    derivs = []
    fall = 1.0
    for k in range(a.order + 1):
        derivs.append(fall * a0 ** (n - k) if n - k >= 0 else np.zeros_like(a0))
        fall *= n - k
    return compose(a, derivs)


def exp(a: Jet) -> Jet:
    e = np.exp(a.coeffs[..., 0])
    return compose(a, [e] * (a.order + 1))


_ARITH: dict[str, Callable[[Jet, Jet], Jet]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def arith(a: Jet, b: Jet, op: str) -> Jet:
    try:
        fn = _ARITH[op]
    except KeyError:
        raise ValueError(f"unknown arithmetic op {op!r}") from None
    if isinstance(a, Jet) and isinstance(b, Jet) and a.space is not b.space:
        raise ValueError(f"jet space mismatch: {a.space} vs {b.space}")
    return fn(a, b)


def elementary(a: Jet, fn: str, n: int | None = None) -> Jet:
    if fn == "sqrt":
        return sqrt(a)
    if fn == "reciprocal":
        return reciprocal(a)
    if fn == "pow_int":
        if n is None:
            raise ValueError("pow_int needs an exponent")
        return pow_int(a, n)
    raise ValueError(f"unknown elementary function {fn!r}")


# -- seeding ----------------------------------------------------------------

def seed_variable(index: int, value: float, order: int, nvars: int) -> Jet:
    """Jet of the coordinate function ``x -> x[index]`` at a point."""
    if not 0 <= index < nvars:
        raise IndexError(f"variable index {index} out of range for {nvars} variables")
    sp = jet_space(nvars, order)
    c = np.zeros(sp.size)
    c[0] = value
    if order >= 1:
        c[1 + index] = 1.0
    return Jet(c, sp)


def variables(point: Sequence[float], order: int) -> list[Jet]:
    point = np.asarray(point, dtype=float)
    return [seed_variable(i, x, order, len(point)) for i, x in enumerate(point)]


def inverse(mat: Jet) -> Jet:
    """Jet-level inverse of a square matrix jet via Newton iteration."""
    if len(mat.shape) != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"inverse needs a square matrix jet, got shape {mat.shape}")
    g0 = mat.coeffs[..., 0]
    cond = np.linalg.cond(g0)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError("singular value part in jet matrix inverse")
    inv0 = np.linalg.inv(g0)
    x = Jet.constant(inv0, mat.space)
    eye = np.eye(mat.shape[0])
    correct = 0
    while correct < mat.order:
        x = x + x @ (eye - mat @ x)
        correct = 2 * correct + 1
    x.coeffs[..., 0] = inv0
    return x


def substitute(outer: Jet, inner: Sequence[Jet]) -> Jet:
    """Compose a Taylor expansion with jets: sum_alpha outer[alpha] * prod inner_j^alpha_j.

    ``outer`` is expanded in ``len(inner)`` variables; each inner jet supplies
    the displacement of one variable and must have a zero value part.
    """
    sp_out = outer.space
    if len(inner) != sp_out.nvars:
        raise ValueError(f"need {sp_out.nvars} inner jets, got {len(inner)}")
    sp_in = inner[0].space
    if sp_out.order > sp_in.order:
        outer = outer.truncate(sp_in.order)
        sp_out = outer.space
    monos = {sp_out.monos[0]: Jet.constant(1.0, sp_in)}
    rows = [monos[sp_out.monos[0]].coeffs]
    for m in sp_out.monos[1:]:
        j = next(k for k, e in enumerate(m) if e > 0)
        prev = list(m)
        prev[j] -= 1
        monos[m] = monos[tuple(prev)] * inner[j]
        rows.append(monos[m].coeffs)
    table = np.stack(rows)
    return Jet(outer.coeffs @ table, sp_in)


def value_and_jacobian(
    fn: Callable[[list[Jet]], Sequence], inputs: Sequence[Jet]
) -> tuple[Jet, Jet]:
    """Evaluate ``fn`` and its Jacobian at arbitrary (scalar) jet inputs.

    ``fn`` maps a list of scalar jets to a sequence of jets or numbers.  It is
    expanded one order higher around the value point, differentiated, and the
    results are composed back onto ``inputs``.
    """
    order = inputs[0].order
    y0 = np.array([float(x.value) for x in inputs])
    seeds = variables(y0, order + 1)
    out = Jet.stack(list(fn(seeds)), seeds[0].space)
    jac = out.grad()
    delta = [x - c for x, c in zip(inputs, y0)]
    return substitute(out.truncate(order), delta), substitute(jac, delta)
