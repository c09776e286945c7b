#!/usr/bin/env python3
"""Holonomy span dimension and label for every Walker family and the corrected 4-dimensional metric, as a function of sample count."""

from __future__ import annotations

import argparse

import numpy as np

from cflat import families as fam
from cflat.holonomy import classify, curvature_span, default_base, neighbourhood_samples


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--counts", type=int, nargs="+", default=[0, 2, 5, 10, 20])
    args = ap.parse_args()

    rows = []
    for family in fam.WALKER_FAMILIES:
        for n in args.n:
            g = fam.build(fam.random_spec(family, n, np.random.default_rng(args.seed)))
            pts = neighbourhood_samples(g, default_base(g.dim), max(args.counts), args.seed)
            dims = [curvature_span(g, sample_points=pts[:k], seed=args.seed).bracket_closed_dim
                    for k in args.counts]
            span = curvature_span(g, sample_points=pts, seed=args.seed)
            rows.append((family, n, dims, classify(span, n)))
    for name in ("gt_corrected",):
        span = curvature_span(fam.build(fam.FamilySpec(name, 2)), seed=args.seed, count=max(args.counts))
        rows.append((name, 2, [span.bracket_closed_dim], classify(span, 2)))

    print(f"{'family':<14}{'n':>3}  closed dim by samples {args.counts}  label")
    for family, n, dims, label in rows:
        print(f"{family:<14}{n:>3}  {str(dims):<34} {label}")


if __name__ == "__main__":
    main()
