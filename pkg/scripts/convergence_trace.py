#!/usr/bin/env python3
"""Per-iteration residuals of both ADMM variants on one channel draw."""

import argparse

from risadmm.admm_sumrate import run_alg2
from risadmm.admm_wsinr import run_alg1
from risadmm.channel import make_channel_set
from risadmm.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trial", type=int, default=0)
    ap.add_argument("--lam", type=float, default=0.5)
    args = ap.parse_args()

    cfg = load_config("wsinr_small")
    cs = make_channel_set(cfg, args.trial)
    _, st, kkt = run_alg1(cs, args.lam, cfg.admm1)
    print(f"weighted-SINR ADMM, lambda={args.lam}: converged={st.converged} "
          f"k={st.k} stationarity={kkt.stationarity_residual:.2e}")
    for row in st.trace.rows[:: max(1, len(st.trace) // 10)]:
        print("  k=%3d  obj=%.6e  |x-y|=%.2e  |dy|=%.2e  rho=%.3e  %s" % row)

    cfg = load_config("sumrate_paper")
    cs = make_channel_set(cfg, args.trial)
    _, split, st, kkt = run_alg2(cs, cfg.p_t, cfg.sigma2, cfg=cfg.admm2, alg1=cfg.admm1)
    print(f"sum-rate ADMM: converged={st.converged} k={st.k} sum rate={st.qos.sum_rate:.3f} "
          f"split t={split.t:.4f} ({split.regime.value})")
    for row in st.trace.rows:
        print("  k=%3d  obj=%.6e  |x-y|=%.2e  |h2-z|=%.2e  |dy|=%.2e  |dz|=%.2e  "
              "rho1=%.2e  rho2=%.2e  %s" % row)


if __name__ == "__main__":
    main()
