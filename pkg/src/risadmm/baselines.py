"""Comparison schemes: ZF without RIS, random and DFT RIS phases with optimal
fixed-RIS precoding, and WMMSE without RIS."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channel import ChannelSet, effective_channel
from .system_model import DegenerateChannelError, Precoders, QosReport, evaluate_channels

SCHEMES = ("no_ris_zf", "ris_random", "ris_dft", "ris_opt_wsinr", "ris_opt_sumrate", "no_ris_wmmse")


@dataclass(frozen=True)
class BaselineResult:
    scheme: str
    x: np.ndarray | None
    precoders: Precoders
    qos: QosReport
    meta: dict = field(default_factory=dict)


def _channels(cs: ChannelSet, x):
    if x is None:
        return cs.d1.copy(), cs.d2.copy()
    return effective_channel(cs, 1, x), effective_channel(cs, 2, x)


# ---------------------------------------------------------------------------
# RIS phase baselines


def random_phase_ris(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus vector with i.i.d. uniform phases."""
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n))


def dft_phase_ris(n: int, m: int) -> np.ndarray:
    """``theta_l = exp(-i (l-1)^2 / M)``, ``l = 1..N``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    l = np.arange(n, dtype=float)
    return np.exp(-1j * l ** 2 / m)


# ---------------------------------------------------------------------------
# zero forcing without RIS


def zf_directions(h1, h2, cond_max: float = 1e12) -> np.ndarray:
    """Unit-norm ZF columns: ``w_1 ⟂ h_2`` and ``w_2 ⟂ h_1``."""
    H = np.stack([h1, h2], axis=1)
    if np.linalg.cond(H) > cond_max:
        raise DegenerateChannelError("channels are (numerically) collinear; ZF undefined")
    W = np.linalg.pinv(H.conj().T)
    return W / np.linalg.norm(W, axis=0, keepdims=True)


def zf_no_ris(cs: ChannelSet, p_t: float, sigma1_2: float, sigma2_2: float | None = None) -> BaselineResult:
    """ZF on the direct links with ``P_T / 2`` per user."""
    sigma2_2 = sigma1_2 if sigma2_2 is None else sigma2_2
    W = zf_directions(cs.d1, cs.d2) * np.sqrt(p_t / 2.0)
    prec = Precoders(W[:, 0].copy(), W[:, 1].copy())
    qos = evaluate_channels(cs.d1, cs.d2, prec, sigma1_2, sigma2_2)
    return BaselineResult("no_ris_zf", None, prec, qos)


# ---------------------------------------------------------------------------
# fixed RIS, weighted sum SINR, per-user power


def _efficient_direction(h_own, h_other):
    """Unit beamformers between ZF (``a=0``) and MRT along ``h_own``.

    Returns a function of ``a in [0, 1]`` (vectorized) producing M x len(a)
    directions ``a P h / ||P h|| + (1 - a) Q h / ||Q h||`` renormalized,
    where ``P`` projects onto ``h_other`` and ``Q = I - P``.
    """
    no = np.vdot(h_other, h_other).real
    par = h_other * (np.vdot(h_other, h_own) / no) if no > 0 else np.zeros_like(h_own)
    perp = h_own - par
    npar, nperp = np.linalg.norm(par), np.linalg.norm(perp)
    if nperp <= 1e-12 * max(np.linalg.norm(h_own), 1e-300):
        u = par / npar if npar > 0 else np.zeros_like(h_own)
        return lambda a: np.repeat(u[:, None], np.size(a), axis=1)
    if npar == 0:
        u = perp / nperp
        return lambda a: np.repeat(u[:, None], np.size(a), axis=1)
    up, uq = par / npar, perp / nperp

    def direction(a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        v = a[None, :] * up[:, None] + (1.0 - a[None, :]) * uq[:, None]
        return v / np.linalg.norm(v, axis=0, keepdims=True)

    return direction


def _wsinr_grid(h1, h2, dir1, dir2, a1, a2, lam, p, s1, s2):
    V1, V2 = dir1(a1), dir2(a2)
    sig1 = p * np.abs(h1.conj() @ V1) ** 2  # over a1
    leak1 = p * np.abs(h1.conj() @ V2) ** 2  # over a2
    sig2 = p * np.abs(h2.conj() @ V2) ** 2
    leak2 = p * np.abs(h2.conj() @ V1) ** 2
    g1 = sig1[:, None] / (leak1[None, :] + s1)
    g2 = sig2[None, :] / (leak2[:, None] + s2)
    return lam * g1 + (1.0 - lam) * g2


def fixed_ris_wsinr(cs: ChannelSet, x, lam: float, sigma1_2: float, sigma2_2: float | None = None,
                    per_user_power: float = 1.0, grid: int = 64, refinements: int = 2,
                    scheme: str = "fixed_ris_wsinr") -> BaselineResult:
    """Maximize ``lam SINR_1 + (1 - lam) SINR_2`` over ``||w_j||^2 <= per_user_power``.

    With one power budget per beamformer, Pareto-optimal beamformers use full
    power and a direction on the MRT-to-ZF arc, so a two-parameter search is
    exhaustive. The search is a ``grid x grid`` scan refined ``refinements``
    times around the best cell and finished with a bounded local polish.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    sigma2_2 = sigma1_2 if sigma2_2 is None else sigma2_2
    h1, h2 = _channels(cs, x)
    dir1, dir2 = _efficient_direction(h1, h2), _efficient_direction(h2, h1)
    p = per_user_power
    lo1, hi1, lo2, hi2 = 0.0, 1.0, 0.0, 1.0
    best = (-np.inf, 0.0, 0.0)
    for _ in range(refinements + 1):
        a1 = np.linspace(lo1, hi1, grid)
        a2 = np.linspace(lo2, hi2, grid)
        vals = _wsinr_grid(h1, h2, dir1, dir2, a1, a2, lam, p, sigma1_2, sigma2_2)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[i, j] > best[0]:
            best = (float(vals[i, j]), float(a1[i]), float(a2[j]))
        w1, w2 = (hi1 - lo1) / (grid - 1), (hi2 - lo2) / (grid - 1)
        lo1, hi1 = max(0.0, best[1] - 2 * w1), min(1.0, best[1] + 2 * w1)
        lo2, hi2 = max(0.0, best[2] - 2 * w2), min(1.0, best[2] + 2 * w2)
    scale = max(best[0], 1e-300)

    def neg(a):
        return -float(_wsinr_grid(h1, h2, dir1, dir2, a[:1], a[1:], lam, p, sigma1_2, sigma2_2)[0, 0]) / scale

    res = minimize(neg, np.array(best[1:]), method="L-BFGS-B", bounds=[(0.0, 1.0), (0.0, 1.0)])
    a_opt = res.x if -res.fun * scale > best[0] else np.array(best[1:])
    w1 = np.sqrt(p) * dir1(a_opt[:1])[:, 0]
    w2 = np.sqrt(p) * dir2(a_opt[1:])[:, 0]
    prec = Precoders(w1, w2)
    qos = evaluate_channels(h1, h2, prec, sigma1_2, sigma2_2)
    return BaselineResult(scheme, None if x is None else np.asarray(x), prec, qos,
                          {"a1": float(a_opt[0]), "a2": float(a_opt[1]), "grid": grid,
                           "refinements": refinements})


# ---------------------------------------------------------------------------
# fixed RIS, sum rate, sum power


def min_power_two_user(a, b, c, g1, g2):
    """Minimum total transmit power meeting SINR targets ``g1, g2`` at unit noise.

    ``a = ||h1||^2``, ``b = ||h2||^2``, ``c = |h1^H h2|^2``. By uplink-downlink
    duality this equals the minimum uplink power with MMSE receivers, whose
    fixed point reduces to one quadratic. Vectorized over ``g1, g2``;
    returns ``(q1, q2)`` uplink powers (``inf`` where infeasible).
    """
    g1, g2 = np.broadcast_arrays(np.asarray(g1, dtype=float), np.asarray(g2, dtype=float))
    D = max(a * b - c, 0.0)
    # q1 = (g1 - g2 + q2 b (1 + g1)) / (a (1 + g2)), substituted into
    # q2 b + q1 q2 D = g2 + g2 a q1
    k0 = (g1 - g2) / (a * (1.0 + g2))
    k1 = b * (1.0 + g1) / (a * (1.0 + g2))
    A = D * k1
    B = b + D * k0 - g2 * a * k1
    C = -(g2 + g2 * a * k0)
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = B * B - 4.0 * A * C
        root = np.where(A > 1e-300 * (abs(a * b) + 1.0),
                        (-B + np.sqrt(np.maximum(disc, 0.0))) / (2.0 * A), -C / B)
        q2 = np.where((disc >= 0) & (root >= 0), root, np.inf)
        q1 = k0 + k1 * q2
    q1 = np.where(q1 >= 0, q1, np.inf)
    return q1, q2


def _downlink_from_uplink(h1, h2, q1, q2, g1, g2):
    # MMSE receivers (I + H Q H^H)^{-1} H = H (I + Q H^H H)^{-1}; the 2x2 form
    # stays well scaled when q ||h||^2 swamps the identity
    H = np.stack([h1, h2], axis=1)
    C = np.linalg.solve(np.eye(2) + np.diag([q1, q2]) @ (H.conj().T @ H), np.eye(2))
    U = H @ C
    u1, u2 = U[:, 0], U[:, 1]
    u1, u2 = u1 / np.linalg.norm(u1), u2 / np.linalg.norm(u2)
    s11, s12 = abs(np.vdot(h1, u1)) ** 2, abs(np.vdot(h1, u2)) ** 2
    s22, s21 = abs(np.vdot(h2, u2)) ** 2, abs(np.vdot(h2, u1)) ** 2
    G = np.array([[s11 / g1, -s12], [-s21, s22 / g2]])
    p = np.linalg.solve(G, np.ones(2))
    return np.sqrt(max(p[0], 0.0)) * u1, np.sqrt(max(p[1], 0.0)) * u2


def fixed_ris_sumrate(cs: ChannelSet, x, p_t: float, sigma2: float, bisect_iters: int = 40,
                      grid: int = 64, refinements: int = 2,
                      scheme: str = "fixed_ris_sumrate") -> BaselineResult:
    """Maximize ``log2(1+SINR_1) + log2(1+SINR_2)`` over ``||w_1||^2 + ||w_2||^2 <= P_T``.

    Bisection on the total rate ``R``; ``R`` is achievable iff some split
    ``(s R, (1-s) R)`` has minimum power at most ``P_T``. The split is scanned
    on a refining grid that also includes the single-user endpoints.
    """
    h1, h2 = _channels(cs, x)
    sc = 1.0 / np.sqrt(sigma2)
    h1n, h2n = h1 * sc, h2 * sc
    a, b = np.vdot(h1n, h1n).real, np.vdot(h2n, h2n).real
    c = abs(np.vdot(h1n, h2n)) ** 2
    if a == 0 and b == 0:
        raise DegenerateChannelError("both effective channels vanish")

    def best_split(R):
        lo, hi = 0.0, 1.0
        best = (np.inf, 0.5)
        for _ in range(refinements + 1):
            s = np.linspace(lo, hi, grid)
            g1 = np.expm1(np.log(2.0) * s * R)
            g2 = np.expm1(np.log(2.0) * (1.0 - s) * R)
            if a > 0 and b > 0:
                q1, q2 = min_power_two_user(a, b, c, g1, g2)
                tot = q1 + q2
            else:
                tot = np.full_like(s, np.inf)
            # single-user endpoints need no interference handling
            tot = np.where(s == 1.0, g1 / a if a > 0 else np.inf, tot)
            tot = np.where(s == 0.0, g2 / b if b > 0 else np.inf, tot)
            i = int(np.argmin(tot))
            if tot[i] < best[0]:
                best = (float(tot[i]), float(s[i]))
            w = (hi - lo) / (grid - 1)
            lo, hi = max(0.0, best[1] - 2 * w), min(1.0, best[1] + 2 * w)
        return best

    r_hi = np.log2(1.0 + p_t * a) + np.log2(1.0 + p_t * b)
    r_lo = 0.0
    split = (0.0, 0.5)
    for _ in range(bisect_iters):
        mid = 0.5 * (r_lo + r_hi)
        pw, s = best_split(mid)
        if pw <= p_t:
            r_lo, split = mid, (mid, s)
        else:
            r_hi = mid
    R, s = split
    g1 = float(np.expm1(np.log(2.0) * s * R))
    g2 = float(np.expm1(np.log(2.0) * (1.0 - s) * R))
    if s >= 1.0 or b == 0 or g2 <= 0:
        w1, w2 = np.sqrt(p_t) * h1n / np.linalg.norm(h1n), np.zeros_like(h1n)
    elif s <= 0.0 or a == 0 or g1 <= 0:
        w1, w2 = np.zeros_like(h1n), np.sqrt(p_t) * h2n / np.linalg.norm(h2n)
    else:
        q1, q2 = min_power_two_user(a, b, c, g1, g2)
        w1, w2 = _downlink_from_uplink(h1n, h2n, float(q1), float(q2), g1, g2)
    total = np.vdot(w1, w1).real + np.vdot(w2, w2).real
    if total > p_t:
        f = np.sqrt(p_t / total) * (1.0 - 1e-15)
        w1, w2 = w1 * f, w2 * f
    prec = Precoders(w1, w2)
    qos = evaluate_channels(h1, h2, prec, sigma2, sigma2)
    return BaselineResult(scheme, None if x is None else np.asarray(x), prec, qos,
                          {"bisection_width": float(r_hi - r_lo), "rate_split": float(s),
                           "iterations": bisect_iters})


# ---------------------------------------------------------------------------
# WMMSE without RIS


def _sum_power_precoder(A, B, p_t):
    """``W = (A + mu I)^{-1} B`` with the smallest ``mu >= 0`` meeting the power budget."""
    evals, U = np.linalg.eigh(A)
    C = U.conj().T @ B
    c2 = np.sum(np.abs(C) ** 2, axis=1)

    def power(mu):
        return float(np.sum(c2 / (evals + mu) ** 2))

    if evals[0] > 1e-12 * max(evals[-1], 1e-300) and power(0.0) <= p_t:
        return U @ (C / evals[:, None])
    lo, hi = 0.0, max(1e-12, float(np.sqrt(c2.sum() / p_t)))
    while power(hi) > p_t:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if power(mid) > p_t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return U @ (C / (evals + hi)[:, None])


def wmmse_no_ris(cs: ChannelSet, p_t: float, sigma2: float, iters: int = 200,
                 tol: float = 1e-8) -> BaselineResult:
    """Two-user WMMSE on the direct links under a sum-power budget."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    sc = 1.0 / np.sqrt(sigma2)
    H = np.stack([cs.d1, cs.d2], axis=1) * sc  # columns h_j, unit noise
    W = H / np.maximum(np.linalg.norm(H, axis=0, keepdims=True), 1e-300) * np.sqrt(p_t / 2.0)

    def rates(W):
        G = np.abs(H.conj().T @ W) ** 2  # G[j, i] = |h_j^H w_i|^2
        sig = np.diag(G)
        interf = G.sum(axis=1) - sig
        return np.log2(1.0 + sig / (interf + 1.0))

    trace = [float(rates(W).sum())]
    for _ in range(iters):
        HW = H.conj().T @ W
        tot = np.sum(np.abs(HW) ** 2, axis=1) + 1.0
        u = np.diag(HW) / tot
        e = 1.0 - np.abs(np.diag(HW)) ** 2 / tot
        v = 1.0 / np.maximum(e, 1e-300)
        A = (H * (v * np.abs(u) ** 2)[None, :]) @ H.conj().T
        B = H * (v * u)[None, :]
        W_new = _sum_power_precoder(0.5 * (A + A.conj().T), B, p_t)
        r = float(rates(W_new).sum())
        W = W_new
        trace.append(r)
        if abs(trace[-1] - trace[-2]) < tol:
            break
    prec = Precoders(W[:, 0].copy(), W[:, 1].copy())
    qos = evaluate_channels(cs.d1, cs.d2, prec, sigma2, sigma2)
    return BaselineResult("no_ris_wmmse", None, prec, qos,
                          {"iterations": len(trace) - 1, "rate_trace": trace})
