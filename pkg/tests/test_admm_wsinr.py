import numpy as np
import pytest
from hypothesis import given, strategies as st

from risadmm.admm_wsinr import (kkt_audit, kkt_residual, project_unit_disc, run_alg1, x_step,
                                y_update)
from risadmm.channel import ChannelSet, effective_channel, gen_rician
from risadmm.config import Alg1Config
from risadmm.qcqp import (ConditionsUnmetError, Status, assemble_wsinr_x, feasible_init,
                          solve_bounded)
from risadmm.system_model import wsinr_surrogate_objective

from conftest import cn, random_cs

CFG = Alg1Config(rho0_rel=1.05)


def rician_cs(seed, m, n):
    rng = np.random.default_rng(seed)
    shapes = [(n, m), (m,), (m,), (n,), (n,)]
    return ChannelSet.from_links(*(gen_rician(rng, s, 3.0) for s in shapes))


# -- y-step -----------------------------------------------------------------


@pytest.mark.parametrize("b,expected", [
    (0.3 - 0.4j, 0.3 - 0.4j),
    (3.0, 1.0),
    (1 + 1j, (1 + 1j) / np.sqrt(2)),
])
def test_project_unit_disc(b, expected):
    assert project_unit_disc(b) == pytest.approx(expected, abs=1e-15)


def test_y_update_identity_inside(rng):
    x = 0.9 * np.exp(2j * np.pi * rng.uniform(size=6)) * rng.uniform(size=6)
    assert np.array_equal(y_update(x, np.zeros(6), 3.0), x)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 20))
def test_y_update_matches_polar_grid(seed, rho):
    rng = np.random.default_rng(seed)
    x, mu = 1.5 * cn(rng, 8), 2 * cn(rng, 8)
    y = y_update(x, mu, rho)
    r = np.sqrt(np.linspace(0, 1, 100))[:, None]
    grid = (r * np.exp(1j * np.linspace(0, 2 * np.pi, 100, endpoint=False))[None, :]).ravel()
    for l in rng.choice(8, 3, replace=False):
        cost = lambda v: 0.5 * rho * np.abs(v) ** 2 - (np.conj(v) * (rho * x[l] + mu[l])).real
        best = grid[np.argmin(cost(grid))]
        assert cost(y[l]) <= cost(best) + 1e-12
        assert abs(y[l] - best) <= 0.1  # grid spacing is ~0.06
        assert abs(y[l]) <= 1 + 1e-15


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100))
def test_y_update_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    x, mu = cn(rng, 5), cn(rng, 5)
    assert np.allclose(y_update(x, mu, 0.7), y_update(x, c * mu, c * 0.7), atol=1e-14)


def test_y_update_rejects_nonpositive_rho():
    with pytest.raises(ValueError):
        y_update(np.zeros(2), np.zeros(2), 0.0)


# -- full runs ----------------------------------------------------------------


def test_blind_ris_terminates_at_direct_objective(rng):
    d1 = cn(rng, 3)
    d2 = cn(rng, 3)
    d2 -= np.vdot(d1, d2) / np.vdot(d1, d1) * d1  # orthogonal, so g is identically 0
    cs = ChannelSet.from_links(np.zeros((5, 3)), d1, d2, cn(rng, 5), cn(rng, 5))
    lam = 0.3
    x, st_, kkt = run_alg1(cs, lam, Alg1Config(rho0=1.0))
    assert st_.converged
    assert np.linalg.norm(st_.x - st_.y) <= 1e-5
    ref = lam * np.vdot(d1, d1).real + (1 - lam) * np.vdot(d2, d2).real
    assert wsinr_surrogate_objective(cs, x, lam) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_small_instances_reach_feasibility(seed):
    """With a larger iteration budget the consensus and orthogonality targets are met."""
    cs = rician_cs(seed, 2, 4)
    x, st_, kkt = run_alg1(cs, 0.5, Alg1Config(rho0_rel=1.05, k_max=1000))
    assert st_.converged
    assert np.linalg.norm(st_.x - st_.y) <= 1e-5
    assert kkt.g_residual <= 1e-6
    assert kkt.modulus_violation == 0.0


@pytest.mark.xfail(strict=True, reason="consensus contracts by about 1.5% per iteration and "
                   "the stationarity left at the stopping point scales with rho*||dy||; see "
                   "the convergence notes in README")
def test_small_instances_full_certificate():
    ok = 0
    for seed in range(20):
        cs = rician_cs(seed, 2, 4)
        _, st_, kkt = run_alg1(cs, 0.5, CFG)
        ok += st_.converged and kkt.g_residual <= 1e-6 and kkt.stationarity_residual <= 1e-4
    assert ok == 20


@pytest.mark.slow
def test_never_ends_below_its_start():
    better = total = 0
    for seed in range(200):
        cs = rician_cs(1000 + seed, 2, 8)
        try:
            x0 = feasible_init(cs)
        except ConditionsUnmetError:
            continue
        x, _, _ = run_alg1(cs, 0.5, CFG, x0=x0)
        total += 1
        better += wsinr_surrogate_objective(cs, x, 0.5) >= wsinr_surrogate_objective(cs, x0, 0.5) - 1e-12
    assert total >= 150
    assert better >= 0.95 * total


def test_trace_and_penalty_guard():
    cs = rician_cs(3, 2, 4)
    _, st_, _ = run_alg1(cs, 0.5, Alg1Config(rho0_rel=1.05, k_max=30))
    assert len(st_.trace) == st_.k == 30
    rho = st_.trace.column("rho")
    gap = st_.trace.column("primal_gap")
    assert np.all(np.diff(rho) >= 0)
    # the penalty grows exactly when the gap failed to shrink by a factor four
    for k in range(1, 29):
        grew = rho[k + 1] > rho[k] if k + 1 < 30 else None
        if grew is not None:
            assert grew == (gap[k] > 0.25 * gap[k - 1])


def test_random_init_is_seeded():
    cs = rician_cs(4, 2, 4)
    cfg = Alg1Config(rho0_rel=1.05, k_max=20, random_init=True)
    a = run_alg1(cs, 0.5, cfg, rng=np.random.default_rng(9))[0]
    b = run_alg1(cs, 0.5, cfg, rng=np.random.default_rng(9))[0]
    assert np.array_equal(a, b)


def test_x_step_prefers_global_solve(rng):
    cs = random_cs(rng, 2, 4)
    q = assemble_wsinr_x(cs, 0.5, 100.0, np.zeros(4), np.zeros(4))
    assert x_step(q, np.zeros(4)).status is Status.GLOBAL_SDR
    q = assemble_wsinr_x(cs, 0.5, 1e-3, np.zeros(4), np.zeros(4))
    assert x_step(q, np.zeros(4)).status is Status.ESCAPE_STEP


# -- KKT audit ------------------------------------------------------------------


def test_kkt_homogeneous_origin(rng):
    cs = random_cs(rng, 2, 4)
    hom = ChannelSet.from_links(cs.F, np.zeros(2), np.zeros(2), cs.g1, cs.g2)
    rep = kkt_residual(hom, 0.5, np.zeros(4), np.zeros(4))
    assert rep.stationarity_residual == 0 and rep.g_residual == 0
    assert rep.nu == 0 and np.all(rep.tau == 0)


@pytest.mark.parametrize("seed", range(5))
def test_kkt_certifies_global_subproblem_optimum(seed):
    rng = np.random.default_rng(seed)
    cs = random_cs(rng, 2, 2)
    q = assemble_wsinr_x(cs, 0.5, 50.0, np.zeros(2), 0.1 * cn(rng, 2))
    sol = solve_bounded(q)
    assert np.all(np.abs(sol.x) < 1)
    rep = kkt_audit(cs, sol.x, np.zeros(2), q.grad_f(sol.x))
    assert rep.stationarity_residual <= 1e-6


def test_kkt_perturbation_increases_residual():
    for seed in (1, 3, 5):
        cs = rician_cs(seed, 2, 4)
        x, st_, kkt = run_alg1(cs, 0.5, Alg1Config(rho0_rel=1.05, k_max=1000))
        d = cn(np.random.default_rng(seed), 4)
        xp = x + 1e-2 * d / np.linalg.norm(d)
        assert kkt_residual(cs, 0.5, xp, st_.mu).stationarity_residual > kkt.stationarity_residual


def test_kkt_complementarity_and_feasibility_fields(rng):
    cs = random_cs(rng, 2, 4)
    x = np.exp(1j * rng.uniform(0, 6, 4))
    rep = kkt_residual(cs, 0.5, x, x * 2.0)  # mu along x: tau = 2 on every active entry
    assert np.allclose(rep.tau, 2.0)
    assert rep.complementarity_residual == pytest.approx(0.0, abs=1e-12)
    h1, h2 = effective_channel(cs, 1, x), effective_channel(cs, 2, x)
    assert rep.g_residual == pytest.approx(abs(np.vdot(h1, h2)))
