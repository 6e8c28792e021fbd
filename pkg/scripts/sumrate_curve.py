#!/usr/bin/env python3
"""Mean sum rate against transmit power for every scheme of a power sweep."""

import argparse

from risadmm.config import load_config
from risadmm.harness import SweepSpec, run_sweep, summarize, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="sumrate_paper")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/sumrate_curve")
    args = ap.parse_args()

    cfg = load_config(args.config)
    spec = SweepSpec.from_config(cfg, trials=args.trials)
    if spec.kind != "power":
        ap.error(f"{args.config} is not a power sweep")
    pairs = run_sweep(spec, workers=args.workers)
    write_outputs(args.out, cfg, pairs)

    table = {(r.value, r.scheme): r for r in summarize(r for r, _ in pairs)}
    print("P_T [W] " + "".join(f"{s:>17}" for s in spec.schemes))
    for p in spec.values:
        cells = "".join(f"{table[p, s].mean_sum_rate:>17.3f}" for s in spec.schemes)
        print(f"{p:<8g}{cells}")


if __name__ == "__main__":
    main()
