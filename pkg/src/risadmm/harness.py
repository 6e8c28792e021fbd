"""Seeded Monte-Carlo sweeps over lambda or transmit power, CSV persistence and
the KKT audit of saved runs."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .admm_sumrate import kkt_residual_sumrate, run_alg2
from .admm_wsinr import kkt_residual, run_alg1
from .baselines import (SCHEMES, dft_phase_ris, fixed_ris_sumrate, fixed_ris_wsinr,
                        random_phase_ris, wmmse_no_ris, zf_no_ris)
from .channel import link_rng, make_channel_set
from .config import ConfigError, ScenarioConfig, dump_config, load_config
from .qcqp import QcqpError
from .system_model import evaluate, mrt_precoders

log = logging.getLogger(__name__)

SCHEMA = "# schema=1"
NAN = float("nan")

# KKT stationarity thresholds used by the audit
AUDIT_TOL = {"ris_opt_wsinr": 1e-4, "ris_opt_sumrate": 1e-3}


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    values: tuple[float, ...]
    trials: int
    schemes: tuple[str, ...]
    base: ScenarioConfig

    def __post_init__(self):
        if self.kind not in ("lambda", "power"):
            raise ConfigError(f"sweep kind must be 'lambda' or 'power', got {self.kind!r}")
        if not self.values:
            raise ConfigError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.schemes:
            raise ConfigError("no schemes selected")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown scheme(s) {bad}; expected a subset of {SCHEMES}")

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, schemes: Sequence[str] | None = None,
                    trials: int | None = None) -> "SweepSpec":
        sw = cfg.sweep
        return cls(sw.kind, tuple(sw.values), trials if trials is not None else sw.trials,
                   tuple(schemes if schemes is not None else sw.schemes), cfg)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    scheme: str
    value: float
    lam: float
    p_t: float
    sinr1: float
    sinr2: float
    rate1: float
    rate2: float
    sum_rate: float
    weighted_sinr: float
    interference1: float
    interference2: float
    orthogonality_residual: float
    status: str
    iterations: int
    kkt_stationarity: float
    g_residual: float

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failed(self) -> bool:
        return self.status.startswith("failed")


RECORD_FIELDS = tuple(f.name for f in fields(TrialRecord))


@dataclass
class RunDetail:
    """Iterates kept for auditing and traces; not part of ``records.csv``."""

    x: np.ndarray | None = None
    mu: np.ndarray | None = None
    z: np.ndarray | None = None
    trace_columns: tuple[str, ...] = ()
    trace_rows: list = field(default_factory=list)
    seconds: float = 0.0


def _point(spec_kind: str, value: float, cfg: ScenarioConfig) -> tuple[float, float]:
    """``(lambda, P_T)`` for one sweep value."""
    if spec_kind == "lambda":
        return float(value), cfg.p_t
    return 0.5, float(value)


def run_scheme(cfg: ScenarioConfig, kind: str, value: float, trial: int, scheme: str,
               cs=None) -> tuple[TrialRecord, RunDetail]:
    """Run one scheme on one channel draw; solver failures become a ``failed:*`` status."""
    lam, p_t = _point(kind, value, cfg)
    s2 = cfg.sigma2
    cs = make_channel_set(cfg, trial) if cs is None else cs
    det = RunDetail()
    t0 = time.perf_counter()
    iters, kkt_s, g_res, status = 0, NAN, NAN, "ok"
    try:
        if scheme == "ris_opt_wsinr":
            x, st, kkt = run_alg1(cs, lam, cfg.admm1)
            qos = evaluate(cs, mrt_precoders(cs, x, math.sqrt(0.5), math.sqrt(0.5), p_t), x, s2, s2)
            iters, kkt_s, g_res = st.k, kkt.stationarity_residual, kkt.g_residual
            status = "ok" if st.converged else "nonconverged"
            det.x, det.mu = x, st.mu
            det.trace_columns, det.trace_rows = st.trace.columns, st.trace.rows
        elif scheme == "ris_opt_sumrate":
            x, split, st, kkt = run_alg2(cs, p_t, s2, cfg=cfg.admm2, alg1=cfg.admm1)
            qos = st.qos
            iters, kkt_s, g_res = st.k, kkt.stationarity_residual, kkt.g_residual
            status = "ok" if st.converged else ("diverged" if st.diverged else "nonconverged")
            det.x, det.mu, det.z = x, st.mu1, st.z
            det.trace_columns, det.trace_rows = st.trace.columns, st.trace.rows
        elif scheme in ("ris_random", "ris_dft"):
            if scheme == "ris_random":
                x = random_phase_ris(cs.n, link_rng(cfg.seed, trial, "ris_random"))
            else:
                x = dft_phase_ris(cs.n, cs.m)
            if kind == "lambda":
                res = fixed_ris_wsinr(cs, x, lam, s2, per_user_power=cfg.per_user_power, scheme=scheme)
            else:
                res = fixed_ris_sumrate(cs, x, p_t, s2, scheme=scheme)
            qos = res.qos
            det.x = x
        elif scheme == "no_ris_zf":
            qos = zf_no_ris(cs, p_t, s2).qos
        elif scheme == "no_ris_wmmse":
            res = wmmse_no_ris(cs, p_t, s2, iters=cfg.wmmse_iters)
            qos, iters = res.qos, res.meta["iterations"]
        else:
            raise ConfigError(f"unknown scheme {scheme!r}")
    except (QcqpError, np.linalg.LinAlgError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        log.warning("trial %d scheme %s value %g failed: %s", trial, scheme, value, exc)
        det.seconds = time.perf_counter() - t0
        rec = TrialRecord(trial, cfg.seed, scheme, float(value), lam, p_t, *([NAN] * 9),
                          f"failed:{type(exc).__name__}", iters, NAN, NAN)
        return rec, det
    det.seconds = time.perf_counter() - t0
    rec = TrialRecord(trial, cfg.seed, scheme, float(value), lam, p_t, qos.sinr1, qos.sinr2,
                      qos.rate1, qos.rate2, qos.sum_rate, qos.weighted_sinr(lam),
                      qos.interference1, qos.interference2, qos.orthogonality_residual,
                      status, int(iters), float(kkt_s), float(g_res))
    return rec, det


def _run_cell(args):
    cfg, kind, value, trial, schemes = args
    cs = make_channel_set(cfg, trial)
    return [run_scheme(cfg, kind, value, trial, s, cs=cs) for s in schemes]


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[tuple[TrialRecord, RunDetail]]:
    """All ``(value, trial, scheme)`` combinations, in that nesting order.

    Channels depend only on ``(seed, trial)``, so every scheme and every sweep
    value sees the same draw for a given trial. Output order does not depend
    on ``workers``.
    """
    tasks = [(spec.base, spec.kind, v, t, spec.schemes)
             for v in spec.values for t in range(spec.trials)]
    if workers <= 1:
        cells = map(_run_cell, tasks)
        return [r for cell in cells for r in cell]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        cells = pool.map(_run_cell, tasks, chunksize=1)
        return [r for cell in cells for r in cell]


# ---------------------------------------------------------------------------
# summaries and statistics


@dataclass(frozen=True)
class SummaryRow:
    value: float
    scheme: str
    records: int
    solved: int
    failed: int
    mean_weighted_sinr: float
    std_weighted_sinr: float
    mean_sum_rate: float
    std_sum_rate: float
    mean_iterations: float


def _mean_std(v: np.ndarray) -> tuple[float, float]:
    if v.size == 0:
        return NAN, NAN
    return float(v.mean()), float(v.std())


def summarize(records: Iterable[TrialRecord]) -> list[SummaryRow]:
    """Per ``(value, scheme)`` mean and population std over non-failed records.

    ``solved`` counts records whose status is ``ok``; cells where every
    record failed report NaN means.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    cells: dict[tuple[float, str], list[TrialRecord]] = {}
    for r in records:
        cells.setdefault((r.value, r.scheme), []).append(r)
    out = []
    for (value, scheme), rs in cells.items():
        good = [r for r in rs if not r.failed]
        ws = np.array([r.weighted_sinr for r in good], dtype=float)
        sr = np.array([r.sum_rate for r in good], dtype=float)
        it = np.array([r.iterations for r in good], dtype=float)
        mw, sw = _mean_std(ws)
        ms, ss = _mean_std(sr)
        out.append(SummaryRow(value, scheme, len(rs), sum(r.ok for r in rs), len(rs) - len(good),
                              mw, sw, ms, ss, float(it.mean()) if it.size else NAN))
    return out


def paired_bootstrap_lower(a, b, n_boot: int = 10000, alpha: float = 0.05, seed: int = 0) -> float:
    """One-sided ``1 - alpha`` lower confidence bound of ``mean(a - b)`` (paired percentile bootstrap)."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("need two equal-length nonempty samples")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, d.size, size=(n_boot, d.size))
    means = d[idx].mean(axis=1)
    return float(np.quantile(means, alpha))


def solved_table(records: Iterable[TrialRecord], scheme: str) -> list[tuple[float, int, int]]:
    """``(value, solved, total)`` per sweep value for one scheme."""
    out: dict[float, list[int]] = {}
    for r in records:
        if r.scheme == scheme:
            c = out.setdefault(r.value, [0, 0])
            c[0] += r.ok
            c[1] += 1
    return [(v, s, n) for v, (s, n) in out.items()]


# ---------------------------------------------------------------------------
# CSV I/O


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17e" % float(v)
    return str(v)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _read_rows(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != SCHEMA:
            raise ValueError(f"{path}: expected '{SCHEMA}' header, got {first!r}")
        return list(csv.DictReader(fh))


def write_records(path, records: Iterable[TrialRecord]) -> None:
    _write_rows(Path(path), RECORD_FIELDS, ([getattr(r, k) for k in RECORD_FIELDS] for r in records))


def read_records(path) -> list[TrialRecord]:
    out = []
    for row in _read_rows(Path(path)):
        vals = {}
        for f in fields(TrialRecord):
            raw = row[f.name]
            vals[f.name] = int(raw) if f.type in ("int", int) else (
                float(raw) if f.type in ("float", float) else raw)
        out.append(TrialRecord(**vals))
    return out


def write_summary(path, rows: Iterable[SummaryRow]) -> None:
    names = [f.name for f in fields(SummaryRow)]
    _write_rows(Path(path), names, (list(asdict(r).values()) for r in rows))


def encode_vector(v) -> str:
    if v is None:
        return ""
    return " ".join("%.17e%+.17ej" % (c.real, c.imag) for c in np.asarray(v, dtype=complex))


def decode_vector(s: str) -> np.ndarray | None:
    s = s.strip()
    if not s:
        return None
    return np.array([complex(t) for t in s.split()], dtype=complex)


RUN_FIELDS = ("trial", "seed", "scheme", "value", "lam", "p_t", "sigma2", "status",
              "kkt_stationarity", "x", "mu", "z")


def write_runs(path, pairs: Iterable[tuple[TrialRecord, RunDetail]], sigma2: float) -> None:
    """ADMM iterates needed to re-derive the KKT residuals offline."""
    rows = []
    for rec, det in pairs:
        if rec.scheme not in AUDIT_TOL or det.x is None:
            continue
        rows.append([rec.trial, rec.seed, rec.scheme, rec.value, rec.lam, rec.p_t, sigma2,
                     rec.status, rec.kkt_stationarity, encode_vector(det.x),
                     encode_vector(det.mu), encode_vector(det.z)])
    _write_rows(Path(path), RUN_FIELDS, rows)


def write_timings(path, pairs: Iterable[tuple[TrialRecord, RunDetail]]) -> None:
    _write_rows(Path(path), ("trial", "scheme", "value", "seconds"),
                ([r.trial, r.scheme, r.value, d.seconds] for r, d in pairs))


def write_trace(path, det: RunDetail) -> None:
    _write_rows(Path(path), det.trace_columns, det.trace_rows)


def write_outputs(out_dir, cfg: ScenarioConfig, pairs, trace: bool = False) -> dict[str, Path]:
    """Write ``records.csv``, ``summary.csv``, ``run.csv``, ``timings.csv`` and ``config.toml``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = [r for r, _ in pairs]
    paths = {name: out / name for name in
             ("records.csv", "summary.csv", "run.csv", "timings.csv", "config.toml")}
    write_records(paths["records.csv"], records)
    write_summary(paths["summary.csv"], summarize(records))
    write_runs(paths["run.csv"], pairs, cfg.sigma2)
    write_timings(paths["timings.csv"], pairs)
    paths["config.toml"].write_text(dump_config(cfg))
    if trace:
        values = sorted({r.value for r in records})
        schemes = sorted({r.scheme for r in records if r.scheme in AUDIT_TOL})
        single = len(values) == 1 and len(schemes) == 1
        for rec, det in pairs:
            if not det.trace_columns:
                continue
            name = (f"trace_{rec.trial}.csv" if single
                    else f"trace_{rec.scheme}_v{values.index(rec.value)}_{rec.trial}.csv")
            write_trace(out / name, det)
    return paths


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class AuditRow:
    trial: int
    scheme: str
    value: float
    stationarity: float
    g_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.stationarity <= self.tolerance and self.g_residual <= 1e-6


def load_saved_config(run_csv) -> ScenarioConfig:
    cfg_path = Path(run_csv).with_name("config.toml")
    if not cfg_path.exists():
        raise ConfigError(f"config file not found: {cfg_path}")
    return load_config(cfg_path)


def audit_runs(run_csv, tolerances: dict[str, float] | None = None) -> list[AuditRow]:
    """Recompute KKT residuals of every saved ADMM run from its stored iterates."""
    tol = dict(AUDIT_TOL if tolerances is None else tolerances)
    base = load_saved_config(run_csv)
    out = []
    for row in _read_rows(Path(run_csv)):
        cfg = base.replace(seed=int(row["seed"]))
        trial = int(row["trial"])
        cs = make_channel_set(cfg, trial)
        x, mu, z = decode_vector(row["x"]), decode_vector(row["mu"]), decode_vector(row["z"])
        scheme = row["scheme"]
        if scheme == "ris_opt_wsinr":
            rep = kkt_residual(cs, float(row["lam"]), x, mu)
        else:
            rep = kkt_residual_sumrate(cs, x, mu, None, float(row["p_t"]), float(row["sigma2"]), z=z)
        out.append(AuditRow(trial, scheme, float(row["value"]), rep.stationarity_residual,
                            rep.g_residual, tol[scheme]))
    return out
