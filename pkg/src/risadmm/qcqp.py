"""The ADMM x-subproblem: a quadratic objective under one complex quadratic equality.

    minimize    f(x) = x^H A1 x + x^H a1 + a1^H x
    subject to  g(x) = x^H A2 x + x^H a2 + a3^H x + a4 = 0

When ``A1`` is positive definite the problem is solved globally through its
homogenized semidefinite relaxation. The lifted problem has three real
constraints (Re g, Im g and the homogenizing entry), so the complex relaxation
is tight and a rank-one optimum exists. We work on the dual side: the dual
function of the two real multipliers of ``g`` is smooth and concave on the
region where the Lagrangian Hessian stays positive definite, and its maximizer
hands back the rank-one primal point ``x = -Q(nu)^{-1} b(nu)`` directly.

When ``A1`` is not positive definite the subproblem may be unbounded and
:func:`escape_step` instead produces a feasible point with lower objective
along a direction that keeps ``g`` constant for every step length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .channel import ChannelSet

log = logging.getLogger(__name__)

RANK_RTOL = 1e-9


class QcqpError(RuntimeError):
    """Base class for hard failures of the x-subproblem solvers."""


class NullspaceEmptyError(QcqpError):
    pass


class NoDecreaseError(QcqpError):
    pass


class ConditionsUnmetError(QcqpError):
    """Neither user ordering satisfies the feasibility construction's hypotheses."""


class Status(str, Enum):
    GLOBAL_SDR = "sdr"
    ESCAPE_STEP = "escape"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class Qcqp1:
    A1: np.ndarray
    a1: np.ndarray
    A2: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    a4: complex
    m: int | None = None  # antenna count when assembled from channels

    @property
    def n(self) -> int:
        return self.A1.shape[0]

    def f(self, x) -> float:
        return float(np.vdot(x, self.A1 @ x).real + 2.0 * np.vdot(x, self.a1).real)

    def g(self, x) -> complex:
        return complex(np.vdot(x, self.A2 @ x) + np.vdot(x, self.a2) + np.vdot(self.a3, x) + self.a4)

    def grad_f(self, x) -> np.ndarray:
        """Gradient in the convention ``df = Re(grad^H dx)``."""
        return 2.0 * (self.A1 @ x + self.a1)

    def grad_g(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of ``Re g`` and ``Im g`` (same convention as :meth:`grad_f`)."""
        p = self.A2 @ x + self.a2
        q = self.A2.conj().T @ x + self.a3
        return p + q, 1j * (q - p)

    @property
    def tol_feas(self) -> float:
        return 1e-8 * (1.0 + abs(self.a4))

    def scaled(self, c: float) -> "Qcqp1":
        """Same feasible set, objective multiplied by ``c``."""
        return Qcqp1(c * self.A1, c * self.a1, self.A2, self.a2, self.a3, self.a4, self.m)


@dataclass(frozen=True)
class QcqpSolution:
    x: np.ndarray
    objective: float
    g_residual: float
    status: Status
    dual: tuple[float, float, float] | None = None  # (nu_R, nu_I, homogenization multiplier)
    gap: float | None = None  # relative duality gap, bounded solves only
    iterations: int = 0


def _result(q: Qcqp1, x, status, **kw) -> QcqpSolution:
    return QcqpSolution(x, q.f(x), abs(q.g(x)), status, **kw)


# ---------------------------------------------------------------------------
# assembly


def _hermitize(A):
    return 0.5 * (A + A.conj().T)


def _constraint_terms(cs: ChannelSet):
    F1, F2 = cs.F1, cs.F2
    return (F1.conj().T @ F2, F1.conj().T @ cs.d2, F2.conj().T @ cs.d1,
            complex(np.vdot(cs.d1, cs.d2)))


def assemble_wsinr_x(cs: ChannelSet, lam: float, rho: float, mu, y) -> Qcqp1:
    """x-subproblem of the weighted-sum-SINR ADMM (constants dropped)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if not rho > 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    mu, y = np.asarray(mu, dtype=complex), np.asarray(y, dtype=complex)
    if mu.shape != (cs.n,) or y.shape != (cs.n,):
        raise ValueError("mu and y must have length N")
    F1, F2 = cs.F1, cs.F2
    F1h, F2h = F1.conj().T, F2.conj().T
    A1 = -lam * (F1h @ F1) - (1.0 - lam) * (F2h @ F2) + 0.5 * rho * np.eye(cs.n)
    a1 = -lam * (F1h @ cs.d1) - (1.0 - lam) * (F2h @ cs.d2) - 0.5 * rho * y + 0.5 * mu
    return Qcqp1(_hermitize(A1), a1, *_constraint_terms(cs), m=cs.m)


def assemble_sumrate_x(cs: ChannelSet, p_t: float, sigma2: float, z, rho1: float, rho2: float,
                       mu1, mu2, y) -> Qcqp1:
    """x-subproblem of the sum-rate ADMM (constants dropped)."""
    if not (rho1 > 0 and rho2 > 0):
        raise ValueError("rho1 and rho2 must be > 0")
    z, mu1, mu2, y = (np.asarray(v, dtype=complex) for v in (z, mu1, mu2, y))
    if z.shape != (cs.m,) or mu2.shape != (cs.m,) or mu1.shape != (cs.n,) or y.shape != (cs.n,):
        raise ValueError("dimension mismatch in sum-rate x-subproblem data")
    F1, F2 = cs.F1, cs.F2
    F1h, F2h = F1.conj().T, F2.conj().T
    coef = p_t * (p_t * np.vdot(z, z).real + 2.0 * sigma2)
    A1 = -coef * (F1h @ F1) + 0.5 * rho1 * np.eye(cs.n) + 0.5 * rho2 * (F2h @ F2)
    a1 = (-coef * (F1h @ cs.d1) + 0.5 * mu1 + 0.5 * (F2h @ mu2) - 0.5 * rho1 * y
          + 0.5 * rho2 * (F2h @ (cs.d2 - z)))
    return Qcqp1(_hermitize(A1), a1, *_constraint_terms(cs), m=cs.m)


def boundedness_margin(q: Qcqp1) -> float:
    """Smallest eigenvalue of ``A1``; positive means f is bounded below."""
    return float(np.linalg.eigvalsh(q.A1)[0])


# ---------------------------------------------------------------------------
# bounded case: concave dual over the two real multipliers of g


class _Dual:
    """Dual function ``phi(nu) = min_x f(x) + nu_R Re g(x) + nu_I Im g(x)``."""

    def __init__(self, q: Qcqp1):
        self.q = q
        self.A2h = q.A2.conj().T

    def evaluate(self, nu: np.ndarray):
        q = self.q
        w = complex(nu[0], nu[1])
        Q = q.A1 + 0.5 * (np.conj(w) * q.A2 + w * self.A2h)
        Q = _hermitize(Q)
        try:
            L = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            return None
        b = q.a1 + 0.5 * (np.conj(w) * q.a2 + w * q.a3)
        x = -_chol_solve(L, b)
        phi = float((np.conj(w) * q.a4).real + np.vdot(b, x).real)
        gx = q.g(x)
        return phi, x, gx, L

    def hessian(self, x, L) -> np.ndarray:
        gr, gi = self.q.grad_g(x)
        G = np.stack([gr, gi], axis=1)
        S = _chol_solve(L, G)
        return -0.5 * (G.conj().T @ S).real


def _chol_solve(L, b):
    y = solve_triangular(L, b, lower=True)
    return solve_triangular(L.conj().T, y, lower=False)


def solve_bounded(q: Qcqp1, tol: float = 1e-12, max_iter: int = 200) -> QcqpSolution:
    """Global minimizer of a bounded instance (``A1`` positive definite).

    Damped Newton ascent on the concave dual. At an interior dual optimum the
    Lagrangian minimizer is primal feasible and optimal; if the optimum sits on
    the boundary of the dual domain (the hard case) the minimizer is completed
    along the null direction of the Lagrangian Hessian.
    """
    dual = _Dual(q)
    nu = np.zeros(2)
    cur = dual.evaluate(nu)
    if cur is None:
        raise ValueError("solve_bounded needs a positive definite A1")
    gscale = 1.0 + abs(q.a4)
    it = 0
    for it in range(1, max_iter + 1):
        phi, x, gx, L = cur
        grad = np.array([gx.real, gx.imag])
        if abs(gx) <= tol * gscale:
            break
        H = dual.hessian(x, L)
        try:
            step = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = grad / max(np.abs(np.diag(H)).max(), 1e-300)
        slope = float(grad @ step)
        if not np.isfinite(slope) or slope <= 0:
            step, slope = grad, float(grad @ grad)
        alpha = 1.0
        new = None
        while alpha > 1e-14:
            cand = dual.evaluate(nu + alpha * step)
            if cand is not None and cand[0] >= phi + 1e-4 * alpha * slope - 1e-15 * (1 + abs(phi)):
                new = cand
                break
            alpha *= 0.5
        if new is None:
            break
        nu = nu + alpha * step
        cur = new
        if np.linalg.norm(nu) > 1e15:
            return _result(q, cur[1], Status.INFEASIBLE, dual=(nu[0], nu[1], cur[0]), iterations=it)
    phi, x, gx, L = cur
    if abs(gx) > 1e3 * tol * gscale:
        x = _hard_case_completion(q, nu, x)
    x = polish_feasibility(q, x)
    fx = q.f(x)
    gap = (fx - phi) / (1.0 + abs(fx))
    # the homogenization multiplier equals the dual value phi
    return _result(q, x, Status.GLOBAL_SDR, dual=(float(nu[0]), float(nu[1]), float(phi)),
                   gap=float(gap), iterations=it)


def solve_circle_system(r: complex, p: complex, qv: complex, c: complex) -> list[complex]:
    """All complex ``t`` with ``r |t|^2 + conj(t) p + t qv + c = 0``.

    Real and imaginary parts are each a circle (or line) in the plane of ``t``;
    a real combination cancels ``|t|^2`` and leaves a line to intersect with one
    of the circles.
    """
    # Re/Im of conj(t) p + t qv as linear forms in (u, v), t = u + i v
    lin_re = np.array([(p + qv).real, (p - qv).imag])
    lin_im = np.array([(p + qv).imag, (qv - p).real])
    quad = np.array([r.real, r.imag])
    cons = np.array([c.real, c.imag])
    # pick the equation with the larger |t|^2 coefficient as the circle
    k = int(np.argmax(np.abs(quad)))
    lins = (lin_re, lin_im)
    if abs(quad[k]) < 1e-300:
        # both linear: 2x2 system
        M = np.stack(lins)
        try:
            uv = np.linalg.solve(M, -cons)
        except np.linalg.LinAlgError:
            return []
        return [complex(uv[0], uv[1])]
    o = 1 - k
    # line: quad[k]*eq_o - quad[o]*eq_k = 0
    a_line = quad[k] * lins[o] - quad[o] * lins[k]
    c_line = quad[k] * cons[o] - quad[o] * cons[k]
    # circle: quad[k](u^2+v^2) + lins[k].(u,v) + cons[k] = 0
    A, B = lins[k] / quad[k], cons[k] / quad[k]
    nrm = np.hypot(*a_line)
    if nrm < 1e-300:
        return []
    nvec = a_line / nrm
    d = -c_line / nrm  # nvec . (u,v) = d
    center = -0.5 * A
    rad2 = center @ center - B
    if rad2 < 0:
        return []
    dist = d - nvec @ center
    h2 = rad2 - dist ** 2
    if h2 < -1e-12 * max(rad2, 1e-300):
        return []
    h = np.sqrt(max(h2, 0.0))
    foot = center + dist * nvec
    tang = np.array([-nvec[1], nvec[0]])
    pts = [foot + h * tang, foot - h * tang]
    return [complex(pt[0], pt[1]) for pt in pts]


def _hard_case_completion(q: Qcqp1, nu, x) -> np.ndarray:
    w = complex(nu[0], nu[1])
    Q = _hermitize(q.A1 + 0.5 * (np.conj(w) * q.A2 + w * q.A2.conj().T))
    evals, evecs = np.linalg.eigh(Q)
    best, best_f = x, np.inf
    for k in range(min(3, len(evals))):
        z = evecs[:, k]
        r = complex(np.vdot(z, q.A2 @ z))
        p = complex(np.vdot(z, q.A2 @ x + q.a2))
        qv = complex(np.vdot(q.A2.conj().T @ x + q.a3, z))
        for t in solve_circle_system(r, p, qv, q.g(x)):
            cand = x + t * z
            fc = q.f(cand)
            if fc < best_f:
                best, best_f = cand, fc
        if np.isfinite(best_f):
            break
    if not np.isfinite(best_f):
        log.warning("hard-case completion found no root; keeping Lagrangian minimizer")
    return best


def polish_feasibility(q: Qcqp1, x, box: bool = False, iters: int = 8) -> np.ndarray:
    """Minimum-norm Gauss-Newton correction driving ``g(x)`` to rounding level.

    With ``box=True`` entries on the unit circle only move tangentially, so the
    modulus bound ``|x_l| <= 1`` is preserved.
    """
    x = np.array(x, dtype=complex)
    n = x.shape[0]
    for _ in range(iters):
        gx = q.g(x)
        if abs(gx) <= 1e-15 * (1.0 + abs(q.a4) + np.linalg.norm(x) ** 2 * np.linalg.norm(q.A2)):
            break
        gr, gi = q.grad_g(x)
        if box:
            active = np.abs(x) >= 1.0 - 1e-12
        else:
            active = np.zeros(n, dtype=bool)
        dirs = []
        idx = np.arange(n)
        for l in idx[~active]:
            e = np.zeros(n, dtype=complex)
            e[l] = 1.0
            dirs.append(e)
            dirs.append(1j * e)
        for l in idx[active]:
            e = np.zeros(n, dtype=complex)
            e[l] = 1j * x[l]
            dirs.append(e)
        D = np.stack(dirs, axis=1)
        J = np.stack([(gr.conj() @ D).real, (gi.conj() @ D).real])
        delta = np.linalg.lstsq(J, -np.array([gx.real, gx.imag]), rcond=None)[0]
        step = D @ delta
        if box:
            # tangential moves on the circle are first order; renormalize them
            new = x + step
            new[active] = new[active] / np.abs(new[active])
            over = np.abs(new) > 1.0
            new[over] = new[over] / np.abs(new[over])
        else:
            new = x + step
        if abs(q.g(new)) >= abs(gx):
            break
        x = new
    return x


# ---------------------------------------------------------------------------
# unbounded case


def escape_matrix(q: Qcqp1, x_k) -> np.ndarray:
    """Real (2N+2) x 2N matrix whose null space gives g-preserving directions at ``x_k``."""
    B = q.A2
    c1 = q.a2 + q.A2 @ x_k
    c2 = q.a3 + q.A2.conj().T @ x_k
    BR, BI = B.real, B.imag
    top = np.block([[BR, -BI], [BI, BR]])
    r1 = np.concatenate([(c1.real + c2.real), (c1.imag + c2.imag)])
    r2 = np.concatenate([(c2.imag - c1.imag), (c1.real - c2.real)])
    return np.vstack([top, r1, r2])


def _numerical_rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def rank_deficiency_check(q: Qcqp1, x_k, m: int | None = None) -> tuple[int, int]:
    """Numerical rank of the escape matrix and the bound ``2M + 2``."""
    m = q.m if m is None else m
    if m is None:
        raise ValueError("antenna count unknown; pass m")
    s = np.linalg.svd(escape_matrix(q, x_k), compute_uv=False)
    return _numerical_rank(s), 2 * m + 2


def _real_form(A: np.ndarray) -> np.ndarray:
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def escape_step(q: Qcqp1, x_k, min_decrease: float = 1e-12) -> QcqpSolution:
    """Feasible descent step for an unbounded (or unverified) subproblem.

    Directions ``s`` with ``A2 s = 0`` and a vanishing linear term keep
    ``g(x_k + alpha s) = g(x_k)`` for every ``alpha``. Within that subspace the
    objective change is the real quadratic ``u^T T u + 2 t^T u``; we take a
    non-positive curvature direction when one exists and the Newton step
    otherwise.
    """
    x_k = np.asarray(x_k, dtype=complex)
    n = q.n
    W = escape_matrix(q, x_k)
    _, s, Vt = np.linalg.svd(W)
    r = _numerical_rank(s)
    if r >= 2 * n:
        raise NullspaceEmptyError(f"escape matrix has full column rank {r}")
    V2 = Vt[r:]
    v = q.A1 @ x_k + q.a1
    T = V2 @ _real_form(q.A1) @ V2.T
    T = 0.5 * (T + T.T)
    t = V2 @ np.concatenate([v.real, v.imag])
    f0 = q.f(x_k)
    need = min_decrease * (1.0 + abs(f0))

    def change(u):
        return float(u @ T @ u + 2.0 * t @ u)

    evals, evecs = np.linalg.eigh(T)
    tscale = np.linalg.norm(t) + 1e-300
    u = None
    if evals[0] <= 0:
        for k in np.flatnonzero(evals <= 0):  # most negative first
            cand = evecs[:, k]
            tu = float(t @ cand)
            if tu > 0:
                cand, tu = -cand, -tu
            if abs(evals[k]) <= 1e-14 * max(1.0, abs(evals[-1])) and abs(tu) <= 1e-14 * tscale:
                continue
            sigma = 1.0
            while sigma < 2.0 ** 60 and change(sigma * cand) > -need:
                sigma *= 2.0
            if change(sigma * cand) <= -need:
                u = sigma * cand
                break
        if u is None:
            cand = -np.linalg.pinv(T) @ t
            if change(cand) <= -need:
                u = cand
    else:
        u = -np.linalg.solve(T, t)
        if change(u) > -need:
            u = None
    if u is None:
        raise NoDecreaseError("no feasible descent direction found at x_k")
    st = V2.T @ u
    x_new = x_k + (st[:n] + 1j * st[n:])
    return _result(q, x_new, Status.ESCAPE_STEP)


# ---------------------------------------------------------------------------
# initial feasible point


def _phase_normalize(y: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(y)))
    return y * (abs(y[k]) / y[k])


def _orthogonal_point(Fa, da, Fb, db, tol_rank):
    """Point making ``d_b + F_b w`` orthogonal to ``d_a + F_a w`` with ``||w||_inf <= 1``.

    Returns ``None`` when ``F_b`` lacks full row rank or its min-norm solution
    of ``F_b w = -d_b`` leaves the unit box.
    """
    m, n = Fb.shape
    sv = np.linalg.svd(Fb, compute_uv=False)
    if _numerical_rank(sv) < m or sv[0] == 0:
        return None
    p = np.linalg.pinv(Fb) @ db
    pinf = float(np.max(np.abs(p)))
    if pinf > 1.0:
        return None
    A = np.vstack([Fa.conj().T, da.conj()[None, :]]) @ Fb
    _, s, Vt = np.linalg.svd(A)
    rank = _numerical_rank(s)
    if rank >= n:
        return None
    y = _phase_normalize(Vt[-1].conj())
    a = 1.0 - pinf
    return a * y / np.linalg.norm(y) - p


def feasible_init(cs: ChannelSet) -> np.ndarray:
    """RIS vector with orthogonal equivalent channels and ``||x||_inf <= 1``."""
    w = _orthogonal_point(cs.F1, cs.d1, cs.F2, cs.d2, RANK_RTOL)
    if w is None:
        w = _orthogonal_point(cs.F2, cs.d2, cs.F1, cs.d1, RANK_RTOL)
    if w is None:
        raise ConditionsUnmetError(
            "feasibility construction needs rank(F_j) = M and ||F_j^+ d_j||_inf <= 1 for j = 2 or j = 1")
    return w


def restored_init(cs: ChannelSet, start=None, iters: int = 100) -> np.ndarray:
    """Feasible point near ``start`` (default: the zero vector, i.e. direct links only).

    Damped minimum-norm Gauss-Newton on ``h1^H h2 = 0`` with backtracking,
    clipped onto the modulus box after every step. Unlike
    :func:`feasible_init` the result keeps both effective channels nonzero
    in generic instances. Falls back to :func:`feasible_init` on failure.
    """
    q = Qcqp1(np.zeros((cs.n, cs.n), dtype=complex), np.zeros(cs.n, dtype=complex),
              *_constraint_terms(cs), m=cs.m)
    x = np.zeros(cs.n, dtype=complex) if start is None else np.array(start, dtype=complex)
    x = np.where(np.abs(x) > 1.0, x / np.maximum(np.abs(x), 1e-300), x)
    for _ in range(iters):
        gx = q.g(x)
        if abs(gx) <= 1e-3 * q.tol_feas:
            break
        gr, gi = q.grad_g(x)
        J = np.stack([np.concatenate([gr.real, gr.imag]), np.concatenate([gi.real, gi.imag])])
        d = np.linalg.lstsq(J, -np.array([gx.real, gx.imag]), rcond=None)[0]
        step = d[:cs.n] + 1j * d[cs.n:]
        t = 1.0
        while t > 1e-6:
            new = x + t * step
            big = np.abs(new) > 1.0
            new[big] = new[big] / np.abs(new[big])
            if abs(q.g(new)) < abs(gx):
                break
            t *= 0.5
        else:
            break
        x = new
    x = polish_feasibility(q, x, box=True)
    if abs(q.g(x)) <= q.tol_feas and np.all(np.abs(x) <= 1.0 + 1e-12):
        return x
    return feasible_init(cs)


# ---------------------------------------------------------------------------
# debug dump


def dump_qcqp(q: Qcqp1, path: str | Path) -> None:
    """Write an instance as labelled blocks of ``re,im`` rows."""
    out = []
    for name in ("A1", "a1", "A2", "a2", "a3", "a4"):
        val = np.asarray(getattr(q, name), dtype=complex)
        out.append(f"# {name} {' '.join(str(d) for d in val.shape)}".rstrip())
        for row in val.reshape(-1, val.shape[-1] if val.ndim else 1):
            out.append(" ".join(f"{v.real:.17e},{v.imag:.17e}" for v in row))
    Path(path).write_text("\n".join(out) + "\n")


def load_qcqp(path: str | Path) -> Qcqp1:
    blocks: dict[str, tuple[tuple[int, ...], list[list[complex]]]] = {}
    name = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            parts = line[1:].split()
            name = parts[0]
            blocks[name] = (tuple(int(p) for p in parts[1:]), [])
        elif line.strip():
            row = []
            for pair in line.split():
                re, im = pair.split(",")
                row.append(complex(float(re), float(im)))
            blocks[name][1].append(row)
    vals = {}
    for key, (shape, data) in blocks.items():
        arr = np.array(data, dtype=complex)
        vals[key] = arr.reshape(shape) if shape else complex(arr.ravel()[0])
    return Qcqp1(vals["A1"], vals["a1"], vals["A2"], vals["a2"], vals["a3"], complex(vals["a4"]))
