"""ADMM for the two-user sum-rate approximation

    max  P^2 ||h1||^2 ||h2||^2 + 2 P s^2 (||h1||^2 + ||h2||^2)
    s.t. h1^H h2 = 0,  |x_l| <= 1,        h_j = d_j + F_j x,

with splitting variables y (modulus box, y = x) and z (z = h2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .admm_wsinr import (AdmmTrace, KktReport, _random_disc, finalize_point, kkt_audit, run_alg1,
                         x_step, y_update)
from .channel import ChannelSet, effective_channel
from .config import Alg1Config, Alg2Config
from .qcqp import Status, assemble_sumrate_x, feasible_init, restored_init
from .system_model import DegenerateChannelError, QosReport, evaluate, mrt_precoders

log = logging.getLogger(__name__)

SUMRATE_TRACE_COLUMNS = ("k", "objective_ap", "xy_gap", "z_gap", "y_step", "z_step",
                         "rho1", "rho2", "branch")


class UnequalNoiseError(ValueError):
    """The sum-rate approximation needs the same noise power at both users."""


class Regime(str, Enum):
    INTERIOR = "interior"
    ALL_USER2 = "all_user2"
    ALL_USER1 = "all_user1"


@dataclass(frozen=True)
class PowerSplit:
    """``t`` is the fraction of the transmit power given to user 2 (``t = omega_2^2``)."""

    t: float
    regime: Regime

    @property
    def omegas(self) -> tuple[float, float]:
        return float(np.sqrt(1.0 - self.t)), float(np.sqrt(self.t))

    @property
    def single_user(self) -> bool:
        return self.regime is not Regime.INTERIOR


def power_split_ab(a1: float, a2: float, b1: float, b2: float) -> PowerSplit:
    """Maximizer over ``t in [0, 1]`` of ``(b1 (1 - t) + a1) (b2 t + a2)``.

    A zero ``b_j`` leaves only one user worth serving; both zero raises
    :class:`DegenerateChannelError`.
    """
    if b1 <= 0 and b2 <= 0:
        raise DegenerateChannelError("both effective channels vanish")
    if b1 <= 0:
        return PowerSplit(1.0, Regime.ALL_USER2)
    if b2 <= 0:
        return PowerSplit(0.0, Regime.ALL_USER1)
    diff = a1 * b2 - a2 * b1
    prod = b1 * b2
    if diff > prod:
        return PowerSplit(1.0, Regime.ALL_USER2)
    if diff + prod < 0:
        return PowerSplit(0.0, Regime.ALL_USER1)
    return PowerSplit(0.5 + diff / (2.0 * prod), Regime.INTERIOR)


def power_split(cs: ChannelSet, x, p_t: float, sigma1_2: float, sigma2_2: float) -> PowerSplit:
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    return power_split_ab(sigma1_2, sigma2_2, p_t * np.vdot(h1, h1).real, p_t * np.vdot(h2, h2).real)


def objective_ap(cs: ChannelSet, x, p_t: float, sigma2: float) -> float:
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    n1, n2 = np.vdot(h1, h1).real, np.vdot(h2, h2).real
    return float(p_t ** 2 * n1 * n2 + 2.0 * p_t * sigma2 * (n1 + n2))


def dropped_ratio_terms(cs: ChannelSet, x, sigma2: float) -> float:
    """The ratio terms the approximation replaces by their lower bound ``2 sigma^4``."""
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    n1, n2 = np.vdot(h1, h1).real, np.vdot(h2, h2).real
    return float(sigma2 ** 2 * (n2 / n1 + n1 / n2))


def z_curvature(cs: ChannelSet, x, rho2: float, p_t: float, sigma2: float) -> float:
    h1 = effective_channel(cs, 1, x)
    return float(rho2 - 2.0 * p_t * (p_t * np.vdot(h1, h1).real + 2.0 * sigma2))


def z_objective(z, c: float, p) -> float:
    """``h(z) = c/2 ||z||^2 + Re(z^H p)``."""
    z = np.asarray(z, dtype=complex)
    return float(0.5 * c * np.vdot(z, z).real + np.vdot(z, p).real)


def z_update(cs: ChannelSet, x, mu2, rho2: float, p_t: float, sigma2: float, z_prev):
    """Minimize ``h(z)`` when it is convex, otherwise take a unit gradient step from ``z_prev``."""
    if not rho2 > 0:
        raise ValueError("rho2 must be > 0")
    c = z_curvature(cs, x, rho2, p_t, sigma2)
    p = -np.asarray(mu2, dtype=complex) - rho2 * effective_channel(cs, 2, x)
    z_prev = np.asarray(z_prev, dtype=complex)
    if c > 0:
        return -p / c
    if c == 0:
        return z_prev - p
    return (1.0 - c) * z_prev - p


def sumrate_gradient(cs: ChannelSet, x, p_t: float, sigma2: float) -> np.ndarray:
    """Gradient (``df = Re(g^H dx)``) of the negated approximate objective."""
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    n1, n2 = np.vdot(h1, h1).real, np.vdot(h2, h2).real
    g1, g2 = cs.F1.conj().T @ h1, cs.F2.conj().T @ h2
    return -2.0 * p_t ** 2 * (n2 * g1 + n1 * g2) - 4.0 * p_t * sigma2 * (g1 + g2)


def kkt_residual_sumrate(cs: ChannelSet, x, mu1, mu2, p_t: float, sigma2: float,
                         z=None) -> KktReport:
    """KKT audit of the approximate sum-rate problem.

    Box multipliers are read off ``mu1``. ``mu2`` only matters through ``z``
    at a fixed point and is accepted for symmetry. When ``z`` is given, its
    consistency residual ``||F2 x + d2 - z||`` is attached.
    """
    del mu2
    x = np.asarray(x, dtype=complex)
    rep = kkt_audit(cs, x, mu1, sumrate_gradient(cs, x, p_t, sigma2))
    if z is None:
        return rep
    zr = float(np.linalg.norm(effective_channel(cs, 2, x) - np.asarray(z, dtype=complex)))
    return KktReport(rep.stationarity_residual, rep.stationarity_abs, rep.complementarity_residual,
                     rep.g_residual, rep.modulus_violation, rep.nu, rep.tau, zr)


@dataclass
class SumRateState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    rho1: float
    rho2: float
    k: int = 0
    trace: AdmmTrace = field(default_factory=lambda: AdmmTrace(SUMRATE_TRACE_COLUMNS))
    converged: bool = False
    diverged: bool = False
    qos: QosReport | None = None

    @property
    def single_user_degenerate(self) -> bool:
        return self.qos is not None and (self.qos.sinr1 == 0.0 or self.qos.sinr2 == 0.0)


def x_threshold(cs: ChannelSet, z, p_t: float, sigma2: float) -> float:
    """``2 lambda_max(P (P ||z||^2 + 2 s^2) F1^H F1)``: above it the x-step is bounded for any rho2."""
    z = np.asarray(z, dtype=complex)
    coef = p_t * (p_t * np.vdot(z, z).real + 2.0 * sigma2)
    return float(2.0 * coef * np.linalg.norm(cs.F1, 2) ** 2)


def z_threshold(cs: ChannelSet, x, p_t: float, sigma2: float) -> float:
    """Penalty above which the z-step is strictly convex at ``x``."""
    return -z_curvature(cs, x, 0.0, p_t, sigma2)


def initial_point(cs: ChannelSet, cfg: Alg2Config, alg1: Alg1Config | None = None) -> np.ndarray:
    """Starting RIS vector satisfying the orthogonality constraint, per ``cfg.init``."""
    if cfg.init == "appendix":
        return feasible_init(cs)
    x = restored_init(cs)
    if cfg.init == "wsinr":
        a1 = alg1 if alg1 is not None else Alg1Config(rho0_rel=1.05)
        x = run_alg1(cs, 0.5, a1, x0=x)[0]
    return x


def run_alg2(cs: ChannelSet, p_t: float, sigma1_2: float, sigma2_2: float | None = None,
             cfg: Alg2Config = Alg2Config(), rng: np.random.Generator | None = None, x0=None,
             alg1: Alg1Config | None = None):
    """Run the sum-rate ADMM.

    Returns ``(x, split, state, kkt)``. ``x`` is the final iterate clipped onto
    the modulus box with orthogonality restored; ``split`` is the optimal power
    split there and ``state.qos`` the achieved SINRs and rates under MRT.
    A boundary split (all power to one user) is reported through
    ``split.regime``, not raised. ``alg1`` configures the warm start when
    ``cfg.init == "wsinr"``.
    """
    sigma2_2 = sigma1_2 if sigma2_2 is None else sigma2_2
    if not np.isclose(sigma1_2, sigma2_2, rtol=1e-12, atol=0.0):
        raise UnequalNoiseError(f"noise powers differ ({sigma1_2} vs {sigma2_2}); "
                                "the sum-rate approximation needs equal noise")
    sigma2 = float(sigma1_2)
    n, m = cs.n, cs.m
    x = initial_point(cs, cfg, alg1) if x0 is None else np.asarray(x0, dtype=complex)
    if cfg.random_init:
        rng = rng if rng is not None else np.random.default_rng()
        y = _random_disc(rng, n)
        z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2.0)
        mu1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        mu2 = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    else:
        y = y_update(x, np.zeros(n), 1.0)
        z = effective_channel(cs, 2, x)
        mu1 = np.zeros(n, dtype=complex)
        mu2 = np.zeros(m, dtype=complex)
    rho1, rho2 = cfg.rho1_0, cfg.rho2_0
    tx, tz = x_threshold(cs, z, p_t, sigma2), z_threshold(cs, x, p_t, sigma2)
    if cfg.rho1_rel is not None and tx > 0:
        rho1 = cfg.rho1_rel * tx
    if cfg.rho2_rel is not None and tz > 0:
        rho2 = cfg.rho2_rel * tz
    st = SumRateState(x, y, z, mu1, mu2, rho1, rho2)
    xy_gap = float(np.linalg.norm(x - y))
    z_gap = float(np.linalg.norm(effective_channel(cs, 2, x) - z))
    while st.k < cfg.k_max:
        with np.errstate(over="ignore", invalid="ignore"):
            q = assemble_sumrate_x(cs, p_t, sigma2, st.z, st.rho1, st.rho2, st.mu1, st.mu2, st.y)
        sol = None
        if np.all(np.isfinite(q.A1)) and np.all(np.isfinite(q.a1)):
            try:
                sol = x_step(q, st.x)
            except np.linalg.LinAlgError:
                pass
        if sol is not None:
            x_new = sol.x
            y_new = y_update(x_new, st.mu1, st.rho1)
            z_new = z_update(cs, x_new, st.mu2, st.rho2, p_t, sigma2, st.z)
            h2 = effective_channel(cs, 2, x_new)
            mu1_new = st.mu1 + st.rho1 * (x_new - y_new)
            mu2_new = st.mu2 + st.rho2 * (h2 - z_new)
        if sol is None or not all(np.all(np.isfinite(v)) for v in (x_new, z_new, mu1_new, mu2_new)) \
                or not np.isfinite(np.vdot(z_new, z_new).real):
            st.diverged = True
            log.warning("sum-rate ADMM iterates overflowed at k=%d; stopping", st.k + 1)
            break
        st.mu1, st.mu2 = mu1_new, mu2_new
        xy_new = float(np.linalg.norm(x_new - y_new))
        z_new_gap = float(np.linalg.norm(h2 - z_new))
        dy = float(np.linalg.norm(y_new - st.y))
        dz = float(np.linalg.norm(z_new - st.z))
        st.k += 1
        st.trace.append(st.k, objective_ap(cs, x_new, p_t, sigma2), xy_new, z_new_gap, dy, dz,
                        st.rho1, st.rho2, "sdr" if sol.status is Status.GLOBAL_SDR else "escape")
        if xy_new > 0.25 * xy_gap:
            st.rho1 *= cfg.delta1
        if z_new_gap > z_gap:
            st.rho2 *= cfg.delta2
        st.x, st.y, st.z, xy_gap, z_gap = x_new, y_new, z_new, xy_new, z_new_gap
        if max(xy_new, z_new_gap, dy, dz) <= cfg.eps:
            st.converged = True
            break
    q = assemble_sumrate_x(cs, p_t, sigma2, st.z, st.rho1, st.rho2, st.mu1, st.mu2, st.y)
    x_out = finalize_point(q, st.x)
    split = power_split(cs, x_out, p_t, sigma2, sigma2)
    w1, w2 = split.omegas
    st.qos = evaluate(cs, mrt_precoders(cs, x_out, w1, w2, p_t), x_out, sigma2, sigma2)
    if split.single_user:
        log.info("power split at the final point is %s; single-user rate reported", split.regime.value)
    kkt = kkt_residual_sumrate(cs, x_out, st.mu1, st.mu2, p_t, sigma2, z=st.z)
    return x_out, split, st, kkt
