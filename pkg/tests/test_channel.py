import numpy as np
import pytest
from hypothesis import given, strategies as st

from risadmm.channel import (ChannelSet, complex_gaussian, effective_channel, gen_pathloss_rician, gen_rician,
                             link_rng, make_channel_set)
from risadmm.config import ScenarioConfig

from conftest import cn, random_cs


def test_rician_los_limit():
    h = gen_rician(np.random.default_rng(0), (3, 5), beta_db=60.0)  # beta = 1e6
    assert np.max(np.abs(h - 1.0)) < 1e-3 * 5  # NLoS amplitude is 1e-3 per unit CN(0,1)
    assert np.mean(np.abs(h - 1.0)) < 1e-3


def test_rician_moments_monte_carlo():
    beta = 10 ** 0.3
    h = gen_rician(np.random.default_rng(1), (10_000,), 3.0)
    assert abs(h.mean() - np.sqrt(beta / (1 + beta))) < 0.02
    assert abs(np.var(h - np.sqrt(beta / (1 + beta))) - 1 / (1 + beta)) < 0.02


def test_rician_is_deterministic_per_stream():
    a = gen_rician(link_rng(5, 3, "br"), (4, 2), 3.0)
    b = gen_rician(link_rng(5, 3, "br"), (4, 2), 3.0)
    assert np.array_equal(a, b)
    c = gen_rician(link_rng(5, 3, "bu1"), (4, 2), 3.0)
    assert not np.array_equal(a, c)


def test_pathloss_los_mean():
    # kappa = 10^-2 * 10^-2; the CN(0,1) part averages out over many draws
    h = np.stack([gen_pathloss_rician(np.random.default_rng(s), (2, 2), -20.0, 2.0, 10.0)
                  for s in range(10_000)])
    assert np.all(np.abs(h.mean(axis=0) - 1e-4) < 0.02)


def test_pathloss_exponent_free_case():
    rng_a, rng_b = np.random.default_rng(3), np.random.default_rng(3)
    h = gen_pathloss_rician(rng_a, (3,), 0.0, 0.0, 7.0)
    g = complex_gaussian(rng_b, (3,))
    assert np.allclose(h, 1.0 + g)


def test_pathloss_far_field_is_gaussian():
    h = np.array([gen_pathloss_rician(np.random.default_rng(s), (1,), 0.0, 2.0, 1e9)[0]
                  for s in range(10_000)])
    assert abs(h.mean()) < 0.03  # sampling error of the CN(0,1) mean is ~0.01
    assert abs(np.mean(np.abs(h) ** 2) - 1.0) < 0.05


def test_pathloss_rejects_bad_distance():
    with pytest.raises(ValueError):
        gen_pathloss_rician(np.random.default_rng(0), (1,), 0.0, 2.0, 0.0)


def test_channel_set_shapes_and_determinism():
    cfg = ScenarioConfig(m=2, n=4)
    a, b = make_channel_set(cfg, 3), make_channel_set(cfg, 3)
    assert a.F1.shape == a.F2.shape == (2, 4)
    assert a == b
    assert a != make_channel_set(cfg, 4)


def test_zero_ris_link_annihilates_reflection(rng):
    cs = random_cs(rng, 2, 4)
    z = ChannelSet.from_links(cs.F, cs.d1, cs.d2, cs.g1, np.zeros(4))
    assert np.all(z.F2 == 0)
    x = np.exp(1j * rng.uniform(0, 6, 4))
    assert np.array_equal(effective_channel(z, 2, x), z.d2)


def test_effective_channel_trivial_cases(rng):
    cs = random_cs(rng, 3, 5)
    assert np.array_equal(effective_channel(cs, 1, np.zeros(5)), cs.d1)
    blind = ChannelSet.from_links(np.zeros((5, 3)), cs.d1, cs.d2, cs.g1, cs.g2)
    assert np.allclose(effective_channel(blind, 2, cn(rng, 5)), cs.d2)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 8))
def test_effective_channel_matches_theta_form(seed, m, n):
    rng = np.random.default_rng(seed)
    cs = random_cs(rng, m, n)
    x = cn(rng, n)
    theta = np.diag(x.conj())
    for j, g in ((1, cs.g1), (2, cs.g2)):
        ref = cs.d(j) + cs.F.conj().T @ theta.conj().T @ g
        got = effective_channel(cs, j, x)
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-12 * np.linalg.norm(ref))


def test_effective_channel_shape_check(rng):
    cs = random_cs(rng, 2, 4)
    with pytest.raises(ValueError):
        effective_channel(cs, 1, np.zeros(3))
    with pytest.raises(ValueError):
        effective_channel(cs, 3, np.zeros(4))
