"""SINRs, rates, MRT precoding and the achievable SINR upper bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .channel import ChannelSet, effective_channel

RIS_TOL = 1e-9


class DegenerateChannelError(ValueError):
    """An effective channel vanished where a direction was needed."""


@dataclass(frozen=True)
class Precoders:
    w1: np.ndarray
    w2: np.ndarray

    @property
    def power(self) -> float:
        return float(np.vdot(self.w1, self.w1).real + np.vdot(self.w2, self.w2).real)

    def is_feasible(self, p_t: float, tol: float = 1e-10) -> bool:
        return self.power <= p_t + tol


@dataclass(frozen=True)
class QosReport:
    sinr1: float
    sinr2: float
    rate1: float
    rate2: float
    sum_rate: float
    interference1: float
    interference2: float
    orthogonality_residual: float

    def weighted_sinr(self, lam: float) -> float:
        return lam * self.sinr1 + (1.0 - lam) * self.sinr2

    def as_dict(self) -> dict:
        return asdict(self)


def ris_feasible(x: np.ndarray, tol: float = RIS_TOL) -> bool:
    return bool(np.all(np.abs(x) <= 1.0 + tol))


def orthogonality_residual(h1: np.ndarray, h2: np.ndarray) -> float:
    """``|h1^H h2| / (||h1|| ||h2||)``, zero when either channel vanishes."""
    den = np.linalg.norm(h1) * np.linalg.norm(h2)
    return float(abs(np.vdot(h1, h2)) / den) if den > 0 else 0.0


def evaluate_channels(h1, h2, prec: Precoders, sigma1_2: float, sigma2_2: float) -> QosReport:
    if not (sigma1_2 > 0 and sigma2_2 > 0):
        raise ValueError("noise powers must be > 0")
    s1 = abs(np.vdot(h1, prec.w1)) ** 2
    i1 = abs(np.vdot(h1, prec.w2)) ** 2
    s2 = abs(np.vdot(h2, prec.w2)) ** 2
    i2 = abs(np.vdot(h2, prec.w1)) ** 2
    sinr1 = s1 / (i1 + sigma1_2)
    sinr2 = s2 / (i2 + sigma2_2)
    r1, r2 = np.log2(1.0 + sinr1), np.log2(1.0 + sinr2)
    return QosReport(float(sinr1), float(sinr2), float(r1), float(r2), float(r1 + r2),
                     float(i1), float(i2), orthogonality_residual(h1, h2))


def evaluate(cs: ChannelSet, prec: Precoders, x, sigma1_2: float, sigma2_2: float) -> QosReport:
    """Per-user SINR, rate and interference for precoders ``prec`` and RIS vector ``x``."""
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    return evaluate_channels(h1, h2, prec, sigma1_2, sigma2_2)


def mrt_direction(h: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(h)
    if nrm == 0:
        raise DegenerateChannelError("effective channel is zero; MRT direction undefined")
    return h / nrm


def mrt_from_channels(h1, h2, omega1: float, omega2: float, p_t: float) -> Precoders:
    if omega1 ** 2 + omega2 ** 2 > 1.0 + 1e-12:
        raise ValueError("power split must satisfy omega1^2 + omega2^2 <= 1")
    w1 = omega1 * np.sqrt(p_t) * mrt_direction(h1) if omega1 != 0 else np.zeros_like(h1)
    w2 = omega2 * np.sqrt(p_t) * mrt_direction(h2) if omega2 != 0 else np.zeros_like(h2)
    return Precoders(w1, w2)


def mrt_precoders(cs: ChannelSet, x, omega1: float, omega2: float, p_t: float) -> Precoders:
    """``w_j = omega_j sqrt(P_T) h_j / ||h_j||``."""
    return mrt_from_channels(effective_channel(cs, 1, x), effective_channel(cs, 2, x),
                             omega1, omega2, p_t)


def sinr_upper_bound(cs: ChannelSet, x, omega_j: float, p_t: float, sigma_j2: float, j: int) -> float:
    """``omega_j^2 P_T ||h_j||^2 / sigma_j^2``: no interference, full MRT gain."""
    h = effective_channel(cs, j, x)
    return float(omega_j ** 2 * p_t * np.vdot(h, h).real / sigma_j2)


def wsinr_surrogate_objective(cs: ChannelSet, x, lam: float) -> float:
    """``lam ||h_1||^2 + (1 - lam) ||h_2||^2``.

    Multiplying by ``P_T / (2 sigma^2)`` gives the weighted sum SINR attained
    by equal-split MRT once ``h_1`` and ``h_2`` are orthogonal.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    return float(lam * np.vdot(h1, h1).real + (1.0 - lam) * np.vdot(h2, h2).real)
