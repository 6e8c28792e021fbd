import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from risadmm.admm_sumrate import power_split_ab
from risadmm.baselines import (dft_phase_ris, fixed_ris_sumrate, fixed_ris_wsinr,
                               random_phase_ris, wmmse_no_ris, zf_no_ris)
from risadmm.channel import ChannelSet
from risadmm.system_model import DegenerateChannelError, evaluate_channels, mrt_from_channels

from conftest import cn, random_cs
from oracles import sumrate_precoder_oracle, wsinr_precoder_oracle


def direct_only(d1, d2, n=3):
    return ChannelSet.from_links(np.zeros((n, d1.size)), d1, d2, np.ones(n), np.ones(n))


def h_of(cs, x):
    return cs.d1 + cs.F1 @ x, cs.d2 + cs.F2 @ x


def assert_consistent(res, h1, h2, s1, s2):
    q = evaluate_channels(h1, h2, res.precoders, s1, s2)
    for a, b in zip(q.as_dict().values(), res.qos.as_dict().values()):
        assert a == pytest.approx(b, rel=1e-10, abs=1e-300)


# -- zero forcing ------------------------------------------------------------------


def test_zf_orthonormal_is_mrt():
    cs = direct_only(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    res = zf_no_ris(cs, 2.0, 0.5)
    assert res.qos.sinr1 == pytest.approx(1.0 / 0.5, rel=1e-12)
    assert res.qos.sinr2 == pytest.approx(1.0 / 0.5, rel=1e-12)
    assert abs(np.vdot(res.precoders.w1, [1, 0, 0])) == pytest.approx(1.0, rel=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_zf_nulls_interference(seed):
    rng = np.random.default_rng(seed)
    cs = direct_only(cn(rng, 4), cn(rng, 4))
    res = zf_no_ris(cs, 3.0, 1.0)
    w = res.precoders
    assert abs(np.vdot(cs.d1, w.w2)) <= 1e-10 and abs(np.vdot(cs.d2, w.w1)) <= 1e-10
    assert w.power == pytest.approx(3.0, rel=1e-12)
    assert np.linalg.norm(w.w1) ** 2 == pytest.approx(1.5, rel=1e-12)
    assert_consistent(res, cs.d1, cs.d2, 1.0, 1.0)


def test_zf_collinear_raises(rng):
    d = cn(rng, 3)
    with pytest.raises(DegenerateChannelError):
        zf_no_ris(direct_only(d, 2j * d), 1.0, 1.0)


@pytest.mark.parametrize("seed", range(3))
def test_zf_below_exhaustive_precoders(seed):
    rng = np.random.default_rng(seed)
    d1, d2 = cn(rng, 2), cn(rng, 2)
    res = zf_no_ris(direct_only(d1, d2), 1.0, 0.5)
    assert res.qos.sum_rate <= sumrate_precoder_oracle(d1, d2, 1.0, 0.5) * (1 + 1e-9)


# -- RIS phase baselines -----------------------------------------------------------


def test_random_phase_unit_modulus_and_seeded():
    a = random_phase_ris(64, np.random.default_rng(3))
    assert np.allclose(np.abs(a), 1.0, rtol=0, atol=1e-15)  # exact up to rounding of exp
    assert np.array_equal(a, random_phase_ris(64, np.random.default_rng(3)))
    assert not np.array_equal(a, random_phase_ris(64, np.random.default_rng(4)))


def test_random_phase_uniform_chi_square():
    x = random_phase_ris(100_000, np.random.default_rng(12345))
    phases = np.mod(np.angle(x), 2 * np.pi)
    counts, _ = np.histogram(phases, bins=36, range=(0, 2 * np.pi))
    assert chisquare(counts).pvalue > 0.05


def test_dft_phases():
    th = dft_phase_ris(5, 4)
    assert th[0] == 1.0
    assert th[2] == pytest.approx(np.exp(-1j), abs=1e-15)
    assert np.allclose(np.abs(dft_phase_ris(40, 7)), 1.0, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        dft_phase_ris(4, 0)


# -- fixed RIS, weighted SINR ----------------------------------------------------------


def test_wsinr_lambda_one_is_single_user_mrt(rng):
    cs = random_cs(rng, 3, 4)
    x = random_phase_ris(4, rng)
    h1, h2 = h_of(cs, x)
    res = fixed_ris_wsinr(cs, x, 1.0, 0.2)
    assert abs(np.vdot(h1, res.precoders.w1)) == pytest.approx(np.linalg.norm(h1), rel=1e-9)
    assert res.qos.sinr1 == pytest.approx(np.vdot(h1, h1).real / 0.2, rel=1e-9)


@pytest.mark.parametrize("seed,lam", [(0, 0.5), (1, 0.3), (2, 0.8), (3, 0.5)])
def test_wsinr_matches_grid_oracle(seed, lam):
    rng = np.random.default_rng(seed)
    cs = random_cs(rng, 2, 4)
    x = random_phase_ris(4, rng)
    h1, h2 = h_of(cs, x)
    res = fixed_ris_wsinr(cs, x, lam, 0.3, 0.5)
    ours = res.qos.weighted_sinr(lam)
    ref = wsinr_precoder_oracle(h1, h2, lam, 0.3, 0.5)
    assert ours == pytest.approx(ref, rel=1e-2)
    assert max(np.linalg.norm(res.precoders.w1), np.linalg.norm(res.precoders.w2)) <= 1 + 1e-10
    assert_consistent(res, h1, h2, 0.3, 0.5)


def test_wsinr_dominates_equal_split_mrt(rng):
    for _ in range(20):
        cs = random_cs(rng, 3, 5)
        x = random_phase_ris(5, rng)
        h1, h2 = h_of(cs, x)
        mrt = evaluate_channels(h1, h2, mrt_from_channels(h1, h2, np.sqrt(0.5), np.sqrt(0.5), 2.0), 1.0, 1.0)
        assert fixed_ris_wsinr(cs, x, 0.4, 1.0).qos.weighted_sinr(0.4) >= mrt.weighted_sinr(0.4) * (1 - 1e-9)


def test_wsinr_rejects_bad_lambda(rng):
    with pytest.raises(ValueError):
        fixed_ris_wsinr(random_cs(rng), np.ones(4), 1.5, 1.0)


# -- fixed RIS, sum rate ---------------------------------------------------------------


def test_sumrate_orthogonal_matches_power_split(rng):
    d1 = cn(rng, 3)
    d2 = cn(rng, 3)
    d2 = 0.4 * (d2 - np.vdot(d1, d2) / np.vdot(d1, d1) * d1)
    cs = direct_only(d1, d2)
    p_t, s2 = 2.0, 0.7
    n1, n2 = np.vdot(d1, d1).real, np.vdot(d2, d2).real
    t = power_split_ab(s2, s2, p_t * n1, p_t * n2).t
    ref = np.log2(1 + (1 - t) * p_t * n1 / s2) + np.log2(1 + t * p_t * n2 / s2)
    res = fixed_ris_sumrate(cs, None, p_t, s2)
    assert res.qos.sum_rate == pytest.approx(ref, rel=1e-6)


def test_sumrate_capacity_bound_at_high_noise(rng):
    cs = random_cs(rng, 3, 4)
    x = random_phase_ris(4, rng)
    h1, h2 = h_of(cs, x)
    for s2 in (1e2, 1e4, 1e6):
        r = fixed_ris_sumrate(cs, x, 1.0, s2).qos.sum_rate
        cap = 2 * np.log2(1 + max(np.vdot(h1, h1).real, np.vdot(h2, h2).real) / s2)
        assert 0 <= r <= cap * (1 + 1e-9)
    assert r <= 1e-4


@pytest.mark.parametrize("seed", range(4))
def test_sumrate_matches_grid_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    cs = random_cs(rng, 2, 4)
    x = random_phase_ris(4, rng)
    h1, h2 = h_of(cs, x)
    res = fixed_ris_sumrate(cs, x, 1.0, 0.2)
    assert res.qos.sum_rate == pytest.approx(sumrate_precoder_oracle(h1, h2, 1.0, 0.2), rel=1e-2)
    assert res.precoders.power <= 1.0 + 1e-10
    assert_consistent(res, h1, h2, 0.2, 0.2)


def test_sumrate_extreme_snr_stays_finite():
    rng = np.random.default_rng(5)
    cs = random_cs(rng, 4, 10)
    res = fixed_ris_sumrate(cs, random_phase_ris(10, rng), 4.0, 1e-16)
    assert np.isfinite(res.qos.sum_rate) and res.precoders.power <= 4.0 * (1 + 1e-10)


# -- WMMSE ----------------------------------------------------------------------------


def test_wmmse_orthogonal_equal_norms():
    d = np.array([1.5, 0, 0], dtype=complex)
    cs = direct_only(d, np.array([0, 0, 1.5j]))
    res = wmmse_no_ris(cs, 2.0, 0.5)
    assert res.qos.sum_rate == pytest.approx(2 * np.log2(1 + 1.0 * 2.25 / 0.5), rel=1e-9)


def test_wmmse_rate_trace_monotone():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        cs = direct_only(cn(rng, 4), cn(rng, 4))
        tr = np.array(wmmse_no_ris(cs, 1.0, 0.1).meta["rate_trace"])
        assert np.all(np.diff(tr) >= -1e-9)


def test_wmmse_single_user():
    d1 = np.array([1.0, 2.0j, 0.5])
    res = wmmse_no_ris(direct_only(d1, np.zeros(3)), 3.0, 0.5)
    assert res.precoders.power == pytest.approx(3.0, rel=1e-9)
    assert np.linalg.norm(res.precoders.w2) <= 1e-9
    assert res.qos.sum_rate == pytest.approx(np.log2(1 + 3.0 * 5.25 / 0.5), rel=1e-9)


def test_wmmse_below_exhaustive_precoders():
    rng = np.random.default_rng(8)
    d1, d2 = cn(rng, 2), cn(rng, 2)
    res = wmmse_no_ris(direct_only(d1, d2), 1.0, 0.3)
    ref = sumrate_precoder_oracle(d1, d2, 1.0, 0.3)
    assert res.qos.sum_rate <= ref * (1 + 1e-9)
    assert res.qos.sum_rate >= 0.9 * ref


def test_wmmse_rejects_zero_iters(rng):
    with pytest.raises(ValueError):
        wmmse_no_ris(random_cs(rng), 1.0, 1.0, iters=0)
