"""Command-line entry point: run claim suites, holonomy reports and transform checks."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import families as fam
from .claims import DEFAULT_NS, DEFAULT_SAMPLES, DEFAULT_SEED, ClaimResult, RunConfig, run_claims
from .fields import UPoly

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SCALAR_KEYS = {"family", "n", "seed", "samples", "order", "tol", "c", "sign", "claims"}
POLY_KEYS = {"a", "D", "lambda"}

# verify --group -> claim id patterns
GROUPS = {
    "weyl": ["c01_*"],
    "lemma1": ["c02_lemma1:*"],
    "ricci": ["c03_*"],
    "scalar": ["c04_*"],
    "holonomy": ["c05_*", "c06_holonomy*"],
    "gt": ["c06_*"],
    "decomposable": ["c07_*"],
    "products": ["c08_*"],
    "killing": ["c09_*"],
    "walker": ["c10_closed_forms:*", "c10_ricci_frame:*", "c10_rl_frame:*"],
    "jets": ["c10_jets_fd:*"],
    "nordstrom": ["c11_*"],
    "all": ["*"],
}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    """``key = value`` lines; '#' starts a comment. Polynomials are coefficient lists, constant first."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        is_vec = len(key) > 1 and key[0] in "BC" and key[1:].isdigit()
        if key not in SCALAR_KEYS and key not in POLY_KEYS and not is_vec:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in POLY_KEYS or is_vec:
                out[key] = UPoly.parse(value)
            elif key in ("n", "seed", "samples", "order", "sign"):
                out[key] = int(value)
            elif key in ("tol", "c"):
                out[key] = float(value)
            elif key == "claims":
                out[key] = tuple(value.split())
            else:
                out[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return out


def spec_from_config(conf: dict, family: str, n: int) -> fam.FamilySpec | None:
    """A FamilySpec when the config pins parameters for ``family``; None means randomize."""
    keys = set(conf) & (POLY_KEYS | {"c", "sign"}) | {k for k in conf if k[0] in "BC" and k[1:].isdigit()}
    if not keys:
        return None
    vec = {}
    for name in "BC":
        idx = sorted(int(k[1:]) for k in conf if k[0] == name and k[1:].isdigit())
        if idx:
            if idx != list(range(1, n + 1)):
                raise ConfigError(f"{name}1..{name}{n} must all be given (got indices {idx})")
            vec[name] = tuple(conf[f"{name}{i}"] for i in idx)
    spec = fam.FamilySpec(family, n, B=vec.get("B", ()), C=vec.get("C", ()))
    if "a" in conf:
        spec = replace(spec, a=conf["a"])
    if "D" in conf:
        spec = replace(spec, D=conf["D"])
    if "lambda" in conf:
        spec = replace(spec, lam=conf["lambda"])
    elif family in ("sphere_f3", "hyp_f4"):
        spec = replace(spec, lam=UPoly((-1.0 if family == "sphere_f3" else 1.0,)))
    if "c" in conf:
        spec = replace(spec, c=conf["c"])
    if "sign" in conf:
        spec = replace(spec, sign=conf["sign"])
    return spec


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, action="append", help="fiber dimension (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--order", type=int, default=None, choices=(2, 3))
    p.add_argument("--tol", type=float, default=None, help="override tolerances of non-inverted claims")
    p.add_argument("--json", type=Path, default=None, help="write a JSON-lines report here")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--timing", action="store_true", help="record elapsed_ms in the report file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cflat", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("claims", help="run the full claim suite (or a selection)")
    _common(p)
    p.add_argument("--only", nargs="*", default=None, help="claim id glob patterns")

    p = sub.add_parser("verify", help="one family, one claim group")
    _common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--group", default="all", choices=sorted(GROUPS))

    p = sub.add_parser("holonomy", help="curvature-span holonomy report for one family")
    _common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--count", type=int, default=20, help="sample points near the base point")

    p = sub.add_parser("transform", help="apply a coordinate or gauge transform and re-verify")
    _common(p)
    p.add_argument("--kind", choices=("gt", "rotation", "gauge"), default="gt")
    return parser


def _load(args) -> tuple[dict, RunConfig]:
    conf = parse_config(args.config.read_text(encoding="utf-8")) if args.config else {}
    ns = tuple(args.n) if args.n else ((conf["n"],) if "n" in conf else DEFAULT_NS)
    if any(n < 1 for n in ns):
        raise ConfigError(f"n must be >= 1, got {ns}")
    cfg = RunConfig(
        seed=args.seed if args.seed is not None else conf.get("seed", DEFAULT_SEED),
        samples=args.samples if args.samples is not None else conf.get("samples", DEFAULT_SAMPLES),
        ns=ns,
        order=args.order if args.order is not None else conf.get("order", 2),
        tol=args.tol if args.tol is not None else conf.get("tol"),
        select=tuple(conf.get("claims", ())),
    )
    if cfg.samples < 1:
        raise ConfigError("samples must be >= 1")
    family = getattr(args, "family", None) or conf.get("family")
    if family is not None:
        if family not in fam.FAMILY_IDS:
            raise ConfigError(f"unknown family {family!r}")
        conf["family"] = family
        spec = spec_from_config(conf, family, ns[0])
        if spec is not None:
            cfg.specs[family] = spec
    return conf, cfg


def emit(results: list[ClaimResult], cfg: RunConfig, json_path: Path | None, timing: bool) -> int:
    results = sorted(results, key=lambda r: r.claim_id)
    for r in results:
        status = "SKIP" if r.skipped else ("PASS" if r.pass_ else "FAIL")
        res = "-" if r.max_residual is None else f"{r.max_residual:.3e}"
        print(f"{status}  {r.claim_id:<48} n={r.n:<2} samples={r.samples:<4} "
              f"residual={res:<10} tol={r.tolerance:.1e} {r.elapsed_ms} ms")
    skipped = sum(r.skipped for r in results)
    passed = sum(r.pass_ for r in results)
    failed = len(results) - passed - skipped
    summary = {"summary": True, "total": len(results), "passed": passed, "failed": failed,
               "skipped": skipped, "seed": cfg.seed}
    print(f"{passed}/{len(results)} passed, {failed} failed, {skipped} skipped (seed {cfg.seed})")
    if json_path is not None:
        lines = []
        for r in results:
            d = r.to_dict()
            if not timing:
                d["elapsed_ms"] = 0  # keeps report files bit-identical across runs
            lines.append(json.dumps(d, sort_keys=False))
        lines.append(json.dumps(summary))
        json_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if skipped:
        return EXIT_USAGE
    return EXIT_OK if failed == 0 else EXIT_FAIL


def _family_patterns(family: str | None, group: str) -> tuple[str, ...]:
    pats = GROUPS[group]
    if family is None:
        return tuple(pats)
    return tuple(f"{p.rstrip('*')}*{family}*" if p.endswith("*") else p for p in pats)


def cmd_claims(args) -> int:
    _, cfg = _load(args)
    if args.only is not None:
        cfg = replace(cfg, select=tuple(args.only) or ("<none>",))
    return emit(run_claims(cfg), cfg, args.json, args.timing)


def cmd_verify(args) -> int:
    conf, cfg = _load(args)
    cfg = replace(cfg, select=_family_patterns(conf.get("family"), args.group))
    return emit(run_claims(cfg), cfg, args.json, args.timing)


def cmd_holonomy(args) -> int:
    from .holonomy import classify, curvature_span

    conf, cfg = _load(args)
    family = args.family or conf.get("family")
    if family is None:
        raise ConfigError("holonomy needs --family or 'family =' in the config")
    n = cfg.ns[0]
    spec = cfg.specs.get(family) or fam.random_spec(family, n, np.random.default_rng(cfg.seed))
    g = fam.build(spec)
    span = curvature_span(g, seed=cfg.seed, count=args.count)
    f = span.flags
    report = {
        "family": family,
        "n": n,
        "seed": cfg.seed,
        "dim": span.dim,
        "bracket_closed_dim": span.bracket_closed_dim,
        "preserves_null_line": f.preserves_null_line,
        "preserves_nondeg_subspace": f.preserves_nondeg_subspace,
        "fiber_rotation_dim": f.fiber_rotation_dim,
        "label": classify(span, n),
    }
    text = json.dumps(report)
    print(text)
    if args.json is not None:
        args.json.write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_transform(args) -> int:
    from .claims import ClaimResult, Context
    from .curvature import curvature_bundle
    from .walker import coordinate_transform, gauge_pullback, gauge_transform, rotation_map
    import time

    _, cfg = _load(args)
    ctx = Context(cfg)
    rng = ctx.rng("transform", args.kind)
    t0 = time.perf_counter()
    if args.kind == "gt":
        target = fam.gt_simplified()
        moved = coordinate_transform(fam.gt_corrected(), fam.gt_decomposition_map)
        family, n = "gt_corrected", 2
    else:
        n = cfg.ns[0]
        family = "ppwave_f1" if args.kind == "rotation" else "sim_f2"
        g = ctx.metric(family, n)
        if args.kind == "rotation":
            Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            moved, target = coordinate_transform(g, rotation_map(Q)), g
        else:
            coef = rng.normal(size=n + 1)

            def phi(xs, u):
                return sum(c * x for c, x in zip(coef[:n], xs)) * u + coef[n]

            moved, target = gauge_transform(g, phi), gauge_pullback(g, phi)
    pts = target.sample_points(rng, cfg.samples)
    agree = max(float(np.abs(moved.value(p) - target.value(p)).max()) for p in pts)
    weyl = max(float(np.abs(curvature_bundle(moved, p, 2).weyl_lo).max()) for p in pts[:10])
    ms = int((time.perf_counter() - t0) * 1000)
    tol = cfg.tol or 1e-9
    results = [
        ClaimResult(f"transform_{args.kind}:agreement", family, n, len(pts), agree, tol, agree <= tol, ms, cfg.seed),
        ClaimResult(f"transform_{args.kind}:weyl_zero", family, n, 10, weyl, tol, weyl <= tol, ms, cfg.seed),
    ]
    return emit(results, cfg, args.json, args.timing)


COMMANDS = {"claims": cmd_claims, "verify": cmd_verify, "holonomy": cmd_holonomy, "transform": cmd_transform}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.verb](args)
    except (ConfigError, fam.FamilyConstraintError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
