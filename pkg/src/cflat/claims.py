"""Registered claims: each one checks a stated result on seeded samples and yields a ClaimResult."""

from __future__ import annotations

import fnmatch
import math
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import families as fam
from .curvature import CurvatureBundle, cotton, curvature_bundle
from .fields import MetricField
from .jets import variables
from .holonomy import classify, curvature_span
from .killing import (
    killing_residual,
    killing_span_dim,
    lobachevskian_killing_form,
    sphere_killing_form,
)
from .walker import (
    WalkerData,
    coordinate_transform,
    lemma1_residuals,
    r_l_coordinate,
    r_l_from_walker,
    ricci_from_walker,
    ricci_in_frame,
    walker_closed_forms,
    walker_extract,
)

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 100
DEFAULT_NS = (2, 3, 4)
HOLONOMY_SAMPLES = 10
PERTURBED_X1_MIN = 0.05


@dataclass
class ClaimResult:
    claim_id: str
    family: str
    n: int
    samples: int
    max_residual: float | None
    tolerance: float
    pass_: bool
    elapsed_ms: int
    seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        return {k: d[k] for k in ("claim_id", "family", "n", "samples", "max_residual",
                                  "tolerance", "pass", "elapsed_ms", "seed")}

    @property
    def skipped(self) -> bool:
        return self.max_residual is None


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    ns: tuple[int, ...] = DEFAULT_NS
    order: int = 2
    tol: float | None = None
    holonomy_samples: int = HOLONOMY_SAMPLES
    select: tuple[str, ...] = ()
    specs: dict[str, fam.FamilySpec] = field(default_factory=dict)


@dataclass
class Claim:
    claim_id: str
    family: str
    n: int
    tolerance: float
    run: Callable[["Context"], tuple[float, int]]
    must_fail: bool = False  # residual must EXCEED tolerance; reported inverted


def _subseed(*parts) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) if isinstance(p, (int, np.integer)) and p >= 0
                                   else zlib.crc32(str(p).encode()) for p in parts])


class Context:
    """Seeded metric instances and per-point curvature shared by the claims of one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._metrics: dict = {}
        self._points: dict = {}
        self._walker: dict = {}
        self._bundles: dict = {}

    def rng(self, *parts) -> np.random.Generator:
        return np.random.default_rng(_subseed(self.cfg.seed, *parts))

    def spec(self, family: str, n: int) -> fam.FamilySpec:
        key = (family, n)
        if key not in self._metrics:
            given = self.cfg.specs.get(family)
            if given is not None and given.n == n:
                spec = given
            else:
                spec = fam.random_spec(family, n, self.rng("spec", family, n))
            self._metrics[key] = (spec, fam.build(spec))
        return self._metrics[key][0]

    def metric(self, family: str, n: int) -> MetricField:
        self.spec(family, n)
        return self._metrics[(family, n)][1]

    def points(self, family: str, n: int, g: MetricField | None = None, count: int | None = None):
        count = self.cfg.samples if count is None else count
        key = (family, n, count)
        if key not in self._points:
            g = g if g is not None else self.metric(family, n)
            self._points[key] = g.sample_points(self.rng("points", family, n), count)
        return self._points[key]

    def walker_data(self, family: str, n: int) -> list[WalkerData]:
        key = (family, n)
        if key not in self._walker:
            g = self.metric(family, n)
            self._walker[key] = [walker_extract(g, p, order=self.cfg.order, split=False)
                                 for p in self.points(family, n)]
        return self._walker[key]

    def bundles(self, label: str, g: MetricField, pts) -> list[CurvatureBundle]:
        if label not in self._bundles:
            self._bundles[label] = [curvature_bundle(g, p, self.cfg.order) for p in pts]
        return self._bundles[label]


def _inf(a) -> float:
    return float(np.abs(a).max()) if np.size(a) else 0.0


# -- claim bodies ------------------------------------------------------------------------

def _weyl_rel(family, n):
    def run(ctx: Context):
        ds = ctx.walker_data(family, n)
        return max(_inf(d.bundle.weyl_lo) / (1.0 + _inf(d.bundle.riemann_lo)) for d in ds), len(ds)
    return run


def _lemma1(family, n):
    def run(ctx: Context):
        g = ctx.metric(family, n)
        ds = ctx.walker_data(family, n)
        return max(float(lemma1_residuals(g, d.point, d).max()) for d in ds), len(ds)
    return run


def _lemma1_perturbed(n):
    def run(ctx: Context):
        g = fam.perturbed_ppwave(ctx.spec("ppwave_f1", n))
        rng = ctx.rng("points", "perturbed", n)
        pts = []
        while len(pts) < ctx.cfg.samples:
            p = g.sample(rng)
            if abs(p[1]) >= PERTURBED_X1_MIN:  # the perturbation vanishes to first order on x^1 = 0
                pts.append(p)
        worst = math.inf
        for p in pts:
            d = walker_extract(g, p, order=ctx.cfg.order, split=False)
            worst = min(worst, _inf(d.bundle.weyl_lo), float(lemma1_residuals(g, p, d).max()))
        return worst, len(pts)
    return run


def _ricci_f1(n):
    def run(ctx: Context):
        spec = ctx.spec("ppwave_f1", n)
        ds = ctx.walker_data("ppwave_f1", n)
        worst = 0.0
        for d in ds:
            Ric = d.bundle.ricci_op
            expect = np.zeros_like(Ric)
            expect[0, n + 1] = -n * spec.a(d.point[n + 1])
            worst = max(worst, _inf(Ric - expect), _inf(Ric @ Ric))
        return worst, len(ds)
    return run


def _ricci_f2_cubed(n):
    def run(ctx: Context):
        ds = ctx.walker_data("sim_f2", n)
        return max(_inf(np.linalg.matrix_power(d.bundle.ricci_op, 3)) for d in ds), len(ds)
    return run


def _ricci_f2_squared(n):
    def run(ctx: Context):
        ds = ctx.walker_data("sim_f2", n)
        ratios = [_inf(d.bundle.ricci_op @ d.bundle.ricci_op) / max(_inf(d.bundle.ricci_op) ** 2, 1e-300)
                  for d in ds]
        return min(ratios), len(ds)
    return run


def _scalar_f2(n):
    def run(ctx: Context):
        ds = ctx.walker_data("sim_f2", n)
        return max(abs(d.bundle.scalar) for d in ds), len(ds)
    return run


def _scalar_f34(family, n):
    def run(ctx: Context):
        spec = ctx.spec(family, n)
        ds = ctx.walker_data(family, n)
        return max(abs(d.bundle.scalar + (n - 2) * (n + 1) * spec.lam(d.point[n + 1])) for d in ds), len(ds)
    return run


def _holonomy(family, n):
    def run(ctx: Context):
        g = ctx.metric(family, n)
        span = curvature_span(g, seed=ctx.cfg.seed, count=ctx.cfg.holonomy_samples)
        f = span.flags
        bad = 0
        bad += not f.preserves_null_line
        if f.null_line is not None:
            e0 = np.zeros(g.dim)
            e0[0] = 1.0
            bad += min(np.linalg.norm(f.null_line - e0), np.linalg.norm(f.null_line + e0)) > 1e-6
        label = classify(span, n)
        if family == "ppwave_f1":
            bad += span.bracket_closed_dim > n
            bad += not span.is_abelian()
            bad += not label.startswith("null_translations")
        else:
            bad += span.bracket_closed_dim != 1 + n * (n - 1) // 2 + n
            bad += f.preserves_nondeg_subspace
            bad += label != f"sim({n})"
        bad += span.skew_residual() > 1e-8
        return float(bad), ctx.cfg.holonomy_samples
    return run


def _gt_weyl(which):
    def run(ctx: Context):
        g = fam.gt_original() if which == "original" else fam.gt_corrected()
        pts = ctx.points(f"gt_{which}", 2, g)
        bs = ctx.bundles(f"gt_{which}", g, pts)
        vals = [_inf(b.weyl_lo) for b in bs]
        return (min(vals) if which == "original" else max(vals)), len(bs)
    return run


def _gt_holonomy(ctx: Context):
    span = curvature_span(fam.gt_corrected(), seed=ctx.cfg.seed, count=ctx.cfg.holonomy_samples)
    f = span.flags
    bad = (span.bracket_closed_dim != 2) + (not f.preserves_nondeg_subspace)
    bad += classify(span, 2) != "so(1,1)+so(2)"
    return float(bad), ctx.cfg.holonomy_samples


def _gt_transform(ctx: Context):
    gs = fam.gt_simplified()
    gp = coordinate_transform(fam.gt_corrected(), fam.gt_decomposition_map)
    pts = ctx.points("gt_simplified", 2, gs)
    return max(_inf(gp.value(p) - gs.value(p)) for p in pts), len(pts)


def _thc3(sign, n):
    def run(ctx: Context):
        c = float(ctx.rng("c", sign, n).uniform(0.5, 2.0))
        g = fam.build(fam.FamilySpec("thc3_dec", n, c=c, sign=sign))
        pts = ctx.points(f"thc3_dec{sign:+d}", n, g)
        bs = ctx.bundles(f"thc3_dec{sign:+d}:{n}", g, pts)
        return max(_inf(b.weyl_lo) for b in bs), len(bs)
    return run


def _thc3_flat(quantity, n):
    def run(ctx: Context):
        g = fam.flat_walker(n, label="thc3_flat")
        pts = ctx.points("thc3_flat", n, g)
        bs = ctx.bundles(f"thc3_flat:{n}", g, pts)
        key = "weyl_lo" if quantity == "weyl" else "riemann_lo"
        return max(_inf(getattr(b, key)) for b in bs), len(bs)
    return run


def _product(d):
    def run(ctx: Context):
        c = float(ctx.rng("c", "product", d).uniform(0.5, 2.0))
        g = fam.build(fam.FamilySpec("product", d, c=c))
        pts = ctx.points("product", d, g)
        bs = ctx.bundles(f"product:{d}", g, pts)
        return max(_inf(b.weyl_lo) for b in bs), len(bs)
    return run


def _cotton(sign):
    def run(ctx: Context):
        c = float(ctx.rng("c", "cotton", sign).uniform(0.5, 2.0))
        g = fam.product_metric(fam.psi_space(2, sign, c), fam.line(-1.0))
        pts = ctx.points(f"surface_x_line{sign:+d}", 3, g)
        return max(_inf(cotton(g, p)) for p in pts), len(pts)
    return run


def _killing(sign, n):
    def run(ctx: Context):
        rng = ctx.rng("killing", sign, n)
        h = fam.psi_space(n, sign)
        form = sphere_killing_form if sign > 0 else lobachevskian_killing_form
        pts = h.sample_points(rng, ctx.cfg.samples)
        worst = 0.0
        for p in pts:
            b = rng.normal(size=n)
            f = rng.normal(size=(n, n))
            worst = max(worst, killing_residual(h, form(b, f - f.T), p))
        return worst, len(pts)
    return run


def _killing_span(sign, n):
    def run(ctx: Context):
        h = fam.psi_space(n, sign)
        pts = h.sample_points(ctx.rng("killing-span", sign, n), 3)
        return float(abs(killing_span_dim(n, sign, pts) - n * (n + 1) // 2)), 3
    return run


def _closed_forms(family, n):
    def run(ctx: Context):
        g = ctx.metric(family, n)
        ds = ctx.walker_data(family, n)
        worst = 0.0
        for d in ds:
            P, T = walker_closed_forms(g, d.point)
            worst = max(worst, _inf(P - d.P), _inf(T - d.T))
        return worst, len(ds)
    return run


def _ricci_frame(family, n):
    def run(ctx: Context):
        ds = ctx.walker_data(family, n)
        return max(_inf(ricci_from_walker(d) - ricci_in_frame(d)) for d in ds), len(ds)
    return run


def _rl_frame(family, n):
    def run(ctx: Context):
        ds = ctx.walker_data(family, n)
        worst = 0.0
        for d in ds:
            a, b = r_l_from_walker(d), r_l_coordinate(d)
            worst = max(worst, max(_inf(a[k] - b[k]) for k in a))
        return worst, len(ds)
    return run


FD_STEP = 1e-3


def _stencil(f, p, k, h=FD_STEP):
    """Fourth-order central difference of f along coordinate k."""
    e = np.zeros(p.shape[0])
    e[k] = h
    return (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h)


def jet_fd_error(g: MetricField, p) -> float:
    """Relative error of jet gradient and Hessian against fourth-order central differences
    (the Hessian is differenced from order-1 jet gradients)."""
    p = np.asarray(p, dtype=float)
    j = g.components(variables(p, 2))
    grad = np.asarray(j.grad().value)
    hess = np.asarray(j.grad().grad().value)

    def first(q):
        return np.asarray(g.components(variables(q, 1)).grad().value)

    fd_grad = np.stack([_stencil(g.value, p, k) for k in range(g.dim)], axis=-1)
    fd_hess = np.stack([_stencil(first, p, k) for k in range(g.dim)], axis=-1)
    return max(_inf(fd_grad - grad) / max(_inf(grad), 1.0), _inf(fd_hess - hess) / max(_inf(hess), 1.0))


def _jets_fd(family, n):
    def run(ctx: Context):
        g = ctx.metric(family, n)
        pts = ctx.points(family, n)[:10]
        return max(jet_fd_error(g, p) for p in pts), len(pts)
    return run


def _nordstrom(family):
    def run(ctx: Context):
        ds = ctx.walker_data(family, 2)
        return max(max(_inf(d.bundle.weyl_lo), abs(d.bundle.scalar)) for d in ds), len(ds)
    return run


# -- registry ---------------------------------------------------------------------------

def registry(cfg: RunConfig) -> list[Claim]:
    C = Claim
    out: list[Claim] = []
    for f in fam.WALKER_FAMILIES:
        for n in cfg.ns:
            out.append(C(f"c01_weyl_zero:{f}:n{n}", f, n, 1e-9, _weyl_rel(f, n)))
            out.append(C(f"c02_lemma1:{f}:n{n}", f, n, 1e-8, _lemma1(f, n)))
            out.append(C(f"c05_holonomy:{f}:n{n}", f, n, 0.0, _holonomy(f, n)))
            out.append(C(f"c10_ricci_frame:{f}:n{n}", f, n, 1e-8, _ricci_frame(f, n)))
            out.append(C(f"c10_rl_frame:{f}:n{n}", f, n, 1e-8, _rl_frame(f, n)))
            out.append(C(f"c10_jets_fd:{f}:n{n}", f, n, 1e-6, _jets_fd(f, n)))
        for n in cfg.ns:
            if f in ("sphere_f3", "hyp_f4"):
                out.append(C(f"c04_scalar:{f}:n{n}", f, n, 1e-8, _scalar_f34(f, n)))
            if f in ("ppwave_f1", "sim_f2"):
                out.append(C(f"c10_closed_forms:{f}:n{n}", f, n, 1e-8, _closed_forms(f, n)))
    for n in cfg.ns:
        out.append(C(f"c02_lemma1_perturbed:ppwave_f1:n{n}", "ppwave_f1_perturbed", n, 1e-3,
                     _lemma1_perturbed(n), must_fail=True))
        out.append(C(f"c03_ricci:ppwave_f1:n{n}", "ppwave_f1", n, 1e-10, _ricci_f1(n)))
        out.append(C(f"c03_ricci_cubed:sim_f2:n{n}", "sim_f2", n, 1e-9, _ricci_f2_cubed(n)))
        out.append(C(f"c03_ricci_squared_nonzero:sim_f2:n{n}", "sim_f2", n, 1e-6,
                     _ricci_f2_squared(n), must_fail=True))
        out.append(C(f"c04_scalar:sim_f2:n{n}", "sim_f2", n, 1e-9, _scalar_f2(n)))
        for sign in (1, -1):
            out.append(C(f"c07_weyl_zero:thc3_dec{sign:+d}:n{n}", "thc3_dec", n, 1e-9, _thc3(sign, n)))
            tag = "sphere" if sign > 0 else "lobachevskian"
            out.append(C(f"c09_killing:{tag}:n{n}", tag, n, 1e-9, _killing(sign, n)))
            out.append(C(f"c09_killing_span:{tag}:n{n}", tag, n, 0.0, _killing_span(sign, n)))
        out.append(C(f"c07_weyl_zero:thc3_flat:n{n}", "thc3_flat", n, 1e-9, _thc3_flat("weyl", n)))
        out.append(C(f"c07_riemann_zero:thc3_flat:n{n}", "thc3_flat", n, 1e-10, _thc3_flat("riemann", n)))
    out.append(C("c06_weyl_nonzero:gt_original", "gt_original", 2, 1e-3, _gt_weyl("original"), must_fail=True))
    out.append(C("c06_weyl_zero:gt_corrected", "gt_corrected", 2, 1e-9, _gt_weyl("corrected")))
    out.append(C("c06_holonomy:gt_corrected", "gt_corrected", 2, 0.0, _gt_holonomy))
    out.append(C("c06_transform:gt_corrected", "gt_corrected", 2, 1e-9, _gt_transform))
    for d in (4, 5, 6):
        out.append(C(f"c08_weyl_zero:product:d{d}", "product", d, 1e-9, _product(d)))
    for sign in (1, -1):
        out.append(C(f"c08_cotton_zero:surface{sign:+d}_x_line", "surface_x_line", 1, 1e-9, _cotton(sign)))
    for f in ("ppwave_f1", "sim_f2"):
        out.append(C(f"c11_nordstrom:{f}:n2", f, 2, 1e-9, _nordstrom(f)))
    if cfg.select:
        out = [c for c in out if any(fnmatch.fnmatchcase(c.claim_id, pat) for pat in cfg.select)]
    return sorted(out, key=lambda c: c.claim_id)


def run_claim(claim: Claim, ctx: Context) -> ClaimResult:
    t0 = time.perf_counter()
    tol = claim.tolerance
    if ctx.cfg.tol is not None and not claim.must_fail and claim.tolerance > 0:
        tol = ctx.cfg.tol
    try:
        observed, count = claim.run(ctx)
    except fam.FamilyConstraintError:
        return ClaimResult(claim.claim_id, claim.family, claim.n, 0, None, tol, False,
                           int((time.perf_counter() - t0) * 1000), ctx.cfg.seed)
    if claim.must_fail:
        # reported as 1/observed against 1/threshold so that pass <=> residual <= tolerance
        residual = math.inf if observed <= 0 else 1.0 / observed
        tolerance = 1.0 / tol
    else:
        residual, tolerance = float(observed), tol
    ok = bool(residual <= tolerance)
    elapsed = int((time.perf_counter() - t0) * 1000)
    return ClaimResult(claim.claim_id, claim.family, claim.n, count, residual, tolerance, ok, elapsed,
                       ctx.cfg.seed)


def run_claims(cfg: RunConfig) -> list[ClaimResult]:
    ctx = Context(cfg)
    return [run_claim(c, ctx) for c in registry(cfg)]


def criterion_of(claim_id: str) -> int:
    return int(claim_id[1:3])
