#!/usr/bin/env python3
"""How many weighted-SINR ADMM runs meet the stopping tolerance within the
iteration budget, per lambda, plus the share that also pass the KKT audit."""

import argparse

from risadmm.config import load_config
from risadmm.harness import AUDIT_TOL, SweepSpec, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="wsinr_small")
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    spec = SweepSpec("lambda", tuple(cfg.sweep.values), args.trials, ("ris_opt_wsinr",), cfg)
    records = [r for r, _ in run_sweep(spec, workers=args.workers)]
    tol = AUDIT_TOL["ris_opt_wsinr"]
    print(f"{'lambda':>7} {'solved':>8} {'kkt ok':>8} {'mean iters':>11}")
    for lam in spec.values:
        sel = [r for r in records if r.value == lam]
        solved = sum(r.ok for r in sel)
        kkt = sum(r.kkt_stationarity <= tol and r.g_residual <= 1e-6 for r in sel)
        iters = sum(r.iterations for r in sel) / len(sel)
        print(f"{lam:>7g} {solved:>4d}/{len(sel):<3d} {kkt:>4d}/{len(sel):<3d} {iters:>11.1f}")


if __name__ == "__main__":
    main()
