"""Command-line driver.

    risadmm wsinr    --config wsinr_small --seed 7 --out r/
    risadmm sumrate  --config sumrate_paper --trials 20 --out s/
    risadmm sweep    --config wsinr_small --scheme ris_opt_wsinr,ris_dft --workers 4
    risadmm baseline --config sumrate_paper --out b/
    risadmm audit    r/run.csv

Exit codes: 0 success, 1 usage or config error, 2 solver failure (including
an audit whose residuals exceed the thresholds).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .baselines import SCHEMES
from .config import ConfigError, load_config
from .harness import (AUDIT_TOL, SweepSpec, audit_runs, run_sweep, solved_table, summarize,
                      write_outputs)
from .qcqp import QcqpError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2
BASELINES = tuple(s for s in SCHEMES if not s.startswith("ris_opt"))
DEFAULT_CONFIG = {"wsinr": "wsinr_small", "sumrate": "sumrate_paper",
                  "sweep": "wsinr_small", "baseline": "wsinr_small"}

log = logging.getLogger("risadmm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _floats(s: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in s.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")


def _schemes(s: str) -> tuple[str, ...]:
    tags = tuple(t.strip() for t in s.split(",") if t.strip())
    bad = [t for t in tags if t not in SCHEMES]
    if bad or not tags:
        raise argparse.ArgumentTypeError(f"unknown scheme(s) {bad}; choose from {','.join(SCHEMES)}")
    return tags


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML config path or shipped name (wsinr_small, sumrate_paper)")
    common.add_argument("--seed", type=_u64, help="override scenario.seed")
    common.add_argument("--trials", type=_positive, help="override sweep.trials")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--trace", action="store_true", help="write per-iteration ADMM traces")
    common.add_argument("--scheme", type=_schemes, help="comma-separated scheme tags")
    common.add_argument("--workers", type=_positive, help="worker processes (default: scenario.workers)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="risadmm", description="RIS-assisted two-user MISO beamforming experiments")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    w = sub.add_parser("wsinr", parents=[common], help="weighted-sum-SINR ADMM over a lambda sweep")
    w.add_argument("--lam", type=_floats, help="lambda values (default: config sweep or 0.5)")
    s = sub.add_parser("sumrate", parents=[common], help="sum-rate ADMM over a power sweep")
    s.add_argument("--power", type=_floats, help="P_T values in watts (default: config sweep or p_t)")
    sub.add_parser("sweep", parents=[common], help="full sweep from the config, all its schemes")
    sub.add_parser("baseline", parents=[common], help="comparison schemes only")
    a = sub.add_parser("audit", help="recompute KKT residuals of a saved run.csv")
    a.add_argument("run_csv")
    a.add_argument("--tol-wsinr", type=float, default=AUDIT_TOL["ris_opt_wsinr"])
    a.add_argument("--tol-sumrate", type=float, default=AUDIT_TOL["ris_opt_sumrate"])
    a.add_argument("-v", "--verbose", action="store_true")
    return p


def _spec(args, cfg) -> SweepSpec:
    sw = cfg.sweep
    if args.command == "wsinr":
        values = args.lam or (sw.values if sw.kind == "lambda" else (0.5,))
        return SweepSpec("lambda", tuple(values), args.trials or sw.trials,
                         args.scheme or ("ris_opt_wsinr",), cfg)
    if args.command == "sumrate":
        values = args.power or (sw.values if sw.kind == "power" else (cfg.p_t,))
        return SweepSpec("power", tuple(values), args.trials or sw.trials,
                         args.scheme or ("ris_opt_sumrate",), cfg)
    schemes = args.scheme
    if schemes is None:
        schemes = sw.schemes if args.command == "sweep" else tuple(
            s for s in sw.schemes if s in BASELINES) or BASELINES
    return SweepSpec(sw.kind, tuple(sw.values), args.trials or sw.trials, tuple(schemes), cfg)


def _print_summary(records) -> None:
    print(f"{'value':>10} {'scheme':<16} {'solved':>9} {'weighted_sinr':>14} {'sum_rate':>10} {'iters':>7}")
    for r in summarize(records):
        print(f"{r.value:>10.4g} {r.scheme:<16} {r.solved:>4d}/{r.records:<4d} "
              f"{r.mean_weighted_sinr:>14.6e} {r.mean_sum_rate:>10.4f} {r.mean_iterations:>7.1f}")


def _run(args) -> int:
    cfg = load_config(args.config or DEFAULT_CONFIG[args.command])
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    spec = _spec(args, cfg)
    pairs = run_sweep(spec, workers=args.workers or cfg.workers)
    write_outputs(args.out, cfg, pairs, trace=args.trace)
    records = [r for r, _ in pairs]
    _print_summary(records)
    for scheme in spec.schemes:
        if scheme.startswith("ris_opt"):
            counts = ", ".join(f"{v:g}: {s}/{n}" for v, s, n in solved_table(records, scheme))
            print(f"solved ({scheme}): {counts}")
    failed = [r for r in records if r.failed]
    if failed:
        log.error("%d of %d solves failed; see status column in records.csv", len(failed), len(records))
        return EXIT_SOLVER
    return EXIT_OK


def _audit(args) -> int:
    rows = audit_runs(args.run_csv, {"ris_opt_wsinr": args.tol_wsinr,
                                     "ris_opt_sumrate": args.tol_sumrate})
    worst = 0.0
    for r in rows:
        flag = "ok" if r.passed else "FAIL"
        print(f"{r.scheme:<16} value={r.value:<8g} trial={r.trial:<4d} "
              f"stationarity={r.stationarity:.3e} |g|={r.g_residual:.3e} {flag}")
        worst = max(worst, r.stationarity) if math.isfinite(r.stationarity) else math.inf
    n_bad = sum(not r.passed for r in rows)
    print(f"audited {len(rows)} runs, {n_bad} above threshold, worst stationarity {worst:.3e}")
    return EXIT_OK if n_bad == 0 else EXIT_SOLVER


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _audit(args) if args.command == "audit" else _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QcqpError, ArithmeticError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
