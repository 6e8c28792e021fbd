"""ADMM for the weighted-sum-SINR surrogate

    max  lam ||d1 + F1 x||^2 + (1 - lam) ||d2 + F2 x||^2
    s.t. (d1 + F1 x)^H (d2 + F2 x) = 0,  |x_l| <= 1,

split as x (orthogonality constraint) and y (modulus box) with consensus x = y.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, effective_channel
from .config import Alg1Config
from .qcqp import (NoDecreaseError, Qcqp1, QcqpSolution, Status, assemble_wsinr_x,
                   boundedness_margin, escape_step, polish_feasibility, restored_init,
                   solve_bounded)
from .system_model import wsinr_surrogate_objective

log = logging.getLogger(__name__)

ACTIVE_TOL = 1e-6


@dataclass
class AdmmTrace:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def append(self, *row) -> None:
        self.rows.append(tuple(row))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


WSINR_TRACE_COLUMNS = ("k", "objective", "primal_gap", "dual_gap", "rho", "branch")


@dataclass
class WsinrState:
    x: np.ndarray
    y: np.ndarray
    mu: np.ndarray
    rho: float
    k: int = 0
    trace: AdmmTrace = field(default_factory=lambda: AdmmTrace(WSINR_TRACE_COLUMNS))
    converged: bool = False
    rho_threshold: float = float("nan")

    @property
    def nonconvergence(self) -> bool:
        return not self.converged


@dataclass(frozen=True)
class KktReport:
    stationarity_residual: float  # ||r|| / max(1, ||grad objective||)
    stationarity_abs: float
    complementarity_residual: float
    g_residual: float
    modulus_violation: float
    nu: complex
    tau: np.ndarray
    z_residual: float = 0.0

    @property
    def primal_feasibility(self) -> tuple[float, float]:
        return self.g_residual, self.modulus_violation


def project_unit_disc(b: complex) -> complex:
    a = abs(b)
    return b if a <= 1.0 else b / a


def y_update(x, mu, rho: float) -> np.ndarray:
    """Elementwise projection of ``x + mu / rho`` onto the closed unit disc."""
    if not rho > 0:
        raise ValueError("rho must be > 0")
    b = np.asarray(x, dtype=complex) + np.asarray(mu, dtype=complex) / rho
    a = np.abs(b)
    out = b.copy()
    big = a > 1.0
    out[big] = b[big] / a[big]
    return out


def boundedness_threshold(cs: ChannelSet, lam: float) -> float:
    """Smallest penalty ``2 lambda_max(lam F1^H F1 + (1-lam) F2^H F2)`` that bounds the x-step."""
    F12 = lam * cs.F1.conj().T @ cs.F1 + (1.0 - lam) * cs.F2.conj().T @ cs.F2
    return 2.0 * float(np.linalg.eigvalsh(0.5 * (F12 + F12.conj().T))[-1])


def x_step(q: Qcqp1, x_k: np.ndarray):
    """Global solve when the subproblem is bounded, otherwise an escape step.

    An escape step with no available decrease leaves ``x_k`` in place; the
    other splitting blocks still move, so the loop is not stuck.
    """
    scale = float(np.abs(q.A1).max()) if q.A1.size else 0.0
    if boundedness_margin(q) > 1e-12 * scale:
        try:
            return solve_bounded(q)
        except ValueError:  # numerically singular after all
            pass
    try:
        return escape_step(q, x_k)
    except NoDecreaseError:
        x_k = np.asarray(x_k, dtype=complex)
        return QcqpSolution(x_k, q.f(x_k), abs(q.g(x_k)), Status.ESCAPE_STEP)


def finalize_point(q: Qcqp1, x: np.ndarray) -> np.ndarray:
    """Clip onto the modulus box, then restore ``g(x) = 0`` without leaving the box."""
    x = y_update(x, np.zeros_like(x), 1.0)
    return polish_feasibility(q, x, box=True)


def _multiplier_fit(grad_obj, tau, x, gr, gi):
    r0 = grad_obj + tau * x
    G = np.stack([gr, gi], axis=1)
    A = np.vstack([G.real, G.imag])
    rhs = -np.concatenate([r0.real, r0.imag])
    nu = np.linalg.lstsq(A, rhs, rcond=None)[0] if np.any(A) else np.zeros(2)
    return r0 + G @ nu, complex(nu[0], nu[1])


def kkt_audit(cs: ChannelSet, x, mu, grad_obj) -> KktReport:
    """KKT residuals for ``min obj(x) s.t. h1^H h2 = 0, |x_l| <= 1`` with box multipliers read off ``mu``."""
    x = np.asarray(x, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    p = cs.F1.conj().T @ h2
    qv = cs.F2.conj().T @ h1
    gr, gi = p + qv, 1j * (qv - p)
    mod = np.abs(x)
    active = mod >= 1.0 - ACTIVE_TOL
    tau = np.zeros(x.shape[0])
    tau[active] = np.maximum((mu[active] * x[active].conj()).real / mod[active] ** 2, 0.0)
    r, nu = _multiplier_fit(grad_obj, tau, x, gr, gi)
    absres = float(np.linalg.norm(r))
    return KktReport(
        stationarity_residual=absres / max(1.0, float(np.linalg.norm(grad_obj))),
        stationarity_abs=absres,
        complementarity_residual=float(np.linalg.norm(tau * (mod ** 2 - 1.0))),
        g_residual=float(abs(np.vdot(h1, h2))),
        modulus_violation=float(max(0.0, mod.max() - 1.0)) if x.size else 0.0,
        nu=nu,
        tau=tau,
    )


def kkt_residual(cs: ChannelSet, lam: float, x, mu_star) -> KktReport:
    """KKT audit of the weighted-sum-SINR surrogate at ``x`` with consensus multiplier ``mu_star``."""
    x = np.asarray(x, dtype=complex)
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    grad_obj = -2.0 * lam * cs.F1.conj().T @ h1 - 2.0 * (1.0 - lam) * cs.F2.conj().T @ h2
    return kkt_audit(cs, x, mu_star, grad_obj)


def _random_disc(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def run_alg1(cs: ChannelSet, lam: float, cfg: Alg1Config = Alg1Config(),
             rng: np.random.Generator | None = None, x0=None):
    """Run the weighted-sum-SINR ADMM; returns ``(x, state, kkt_report)``.

    ``x`` is the last x-iterate clipped onto the modulus box with its
    orthogonality restored. Hitting ``k_max`` is reported through
    ``state.converged`` rather than raised.

    The default start is :func:`~risadmm.qcqp.restored_init`. The
    null-space construction of :func:`~risadmm.qcqp.feasible_init` generally
    returns ``h2 = 0``, which is a stationary point when ``lam = 0``.
    """
    n = cs.n
    x = restored_init(cs) if x0 is None else np.asarray(x0, dtype=complex)
    if cfg.random_init:
        rng = rng if rng is not None else np.random.default_rng()
        y = _random_disc(rng, n)
        mu = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        y = y_update(x, np.zeros(n), 1.0)
        mu = np.zeros(n, dtype=complex)
    threshold = boundedness_threshold(cs, lam)
    # a blind RIS path (F = 0) has threshold 0; fall back to the absolute start
    rho = cfg.rho0 if cfg.rho0_rel is None or threshold <= 0 else cfg.rho0_rel * threshold
    st = WsinrState(x, y, mu, rho, rho_threshold=threshold)
    gap = float(np.linalg.norm(x - y))
    while st.k < cfg.k_max:
        q = assemble_wsinr_x(cs, lam, st.rho, st.mu, st.y)
        sol = x_step(q, st.x)
        x_new = sol.x
        y_new = y_update(x_new, st.mu, st.rho)
        st.mu = st.mu + st.rho * (x_new - y_new)
        gap_new = float(np.linalg.norm(x_new - y_new))
        dy = float(np.linalg.norm(y_new - st.y))
        st.k += 1
        st.trace.append(st.k, wsinr_surrogate_objective(cs, x_new, lam), gap_new, dy, st.rho,
                        "sdr" if sol.status is Status.GLOBAL_SDR else "escape")
        if gap_new > 0.25 * gap:
            st.rho *= cfg.delta
        st.x, st.y, gap = x_new, y_new, gap_new
        if max(gap_new, dy) <= cfg.eps:
            st.converged = True
            break
    if st.rho <= threshold:
        log.warning("final penalty %.3e does not exceed the boundedness threshold %.3e; "
                    "KKT certification premise not met", st.rho, threshold)
    q = assemble_wsinr_x(cs, lam, st.rho, st.mu, st.y)
    x_out = finalize_point(q, st.x)
    return x_out, st, kkt_residual(cs, lam, x_out, st.mu)
