#!/usr/bin/env python3
"""Run the default claim suite and write a JSON-lines report (thin wrapper over the CLI)."""

from __future__ import annotations

import argparse
import sys

from cflat.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="claims_report.jsonl")
    ap.add_argument("--seed", type=int, default=42)
    args, rest = ap.parse_known_args()
    sys.exit(main(["claims", "--seed", str(args.seed), "--json", args.out, *rest]))
