"""Random channel realizations and the equivalent-channel algebra.

Every link is drawn from its own RNG stream, derived from ``(seed, trial, tag)``
through :class:`numpy.random.SeedSequence`, so a link's realization does not
depend on which other links were drawn or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, db_to_linear

# Fixed stream tags. Changing these changes every generated channel.
LINK_TAGS = {
    "br": 1,
    "bu1": 2,
    "bu2": 3,
    "ru1": 4,
    "ru2": 5,
    "ris_random": 6,
    "admm_init": 7,
}


def link_rng(seed: int, trial: int, tag: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), LINK_TAGS[tag]))
    return np.random.default_rng(ss)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def rician_weights(beta_db: float) -> tuple[float, float]:
    """LoS and NLoS amplitudes; their squares sum to one."""
    beta = db_to_linear(beta_db)
    return np.sqrt(beta / (1.0 + beta)), np.sqrt(1.0 / (1.0 + beta))


def gen_rician(rng: np.random.Generator, shape, beta_db: float) -> np.ndarray:
    """Normalized Rician link ``sqrt(b/(1+b)) J + sqrt(1/(1+b)) G`` with an all-ones LoS ``J``."""
    los, nlos = rician_weights(beta_db)
    return los * np.ones(shape, dtype=complex) + nlos * complex_gaussian(rng, shape)


def gen_pathloss_rician(rng: np.random.Generator, shape, c_db: float, rho: float,
                        distance: float) -> np.ndarray:
    """Link ``kappa J + G`` with ``kappa = C d^-rho``.

    Only the LoS part carries the distance-dependent scaling; the scattered part
    stays CN(0, 1).
    """
    if not distance > 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    kappa = db_to_linear(c_db) * float(distance) ** (-rho)
    return kappa * np.ones(shape, dtype=complex) + complex_gaussian(rng, shape)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization.

    ``F`` is the N x M BS-to-RIS matrix, ``d1, d2`` the length-M direct links and
    ``g1, g2`` the length-N RIS-to-user links. ``F1, F2`` (M x N) map the RIS
    vector ``x`` onto the reflected contribution: ``F^H Theta^H g_j = F_j x``.
    """

    F: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray

    @classmethod
    def from_links(cls, F, d1, d2, g1, g2) -> "ChannelSet":
        F = np.atleast_2d(np.asarray(F, dtype=complex))
        d1, d2, g1, g2 = (np.atleast_1d(np.asarray(v, dtype=complex)) for v in (d1, d2, g1, g2))
        n, m = F.shape
        if d1.shape != (m,) or d2.shape != (m,):
            raise ValueError(f"direct links must have length M={m}")
        if g1.shape != (n,) or g2.shape != (n,):
            raise ValueError(f"RIS links must have length N={n}")
        Fh = F.conj().T
        return cls(_frozen(F), _frozen(d1), _frozen(d2), _frozen(g1), _frozen(g2),
                   _frozen(Fh * g1[None, :]), _frozen(Fh * g2[None, :]))

    @property
    def m(self) -> int:
        return self.F.shape[1]

    @property
    def n(self) -> int:
        return self.F.shape[0]

    def d(self, j: int) -> np.ndarray:
        return (self.d1, self.d2)[_user(j)]

    def Fj(self, j: int) -> np.ndarray:
        return (self.F1, self.F2)[_user(j)]

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("F", "d1", "d2", "g1", "g2"))


def _user(j: int) -> int:
    if j not in (1, 2):
        raise ValueError(f"user index must be 1 or 2, got {j}")
    return j - 1


def make_channel_set(cfg: ScenarioConfig, trial: int = 0) -> ChannelSet:
    """Draw all five links for ``trial`` under ``cfg``."""
    m, n = cfg.m, cfg.n
    shapes = {"br": (n, m), "bu1": (m,), "bu2": (m,), "ru1": (n,), "ru2": (n,)}
    betas = {"br": cfg.beta_br_db, "bu1": cfg.beta_bu_db, "bu2": cfg.beta_bu_db,
             "ru1": cfg.beta_ru_db, "ru2": cfg.beta_ru_db}
    links = {}
    for tag, shape in shapes.items():
        rng = link_rng(cfg.seed, trial, tag)
        if cfg.pathloss:
            pl = cfg.pathloss[tag]
            links[tag] = gen_pathloss_rician(rng, shape, pl.c_db, pl.rho, pl.distance)
        else:
            links[tag] = gen_rician(rng, shape, betas[tag])
    return ChannelSet.from_links(links["br"], links["bu1"], links["bu2"], links["ru1"], links["ru2"])


def effective_channel(cs: ChannelSet, j: int, x: np.ndarray) -> np.ndarray:
    """Equivalent BS-to-user-j channel ``h_j = d_j + F_j x``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (cs.n,):
        raise ValueError(f"RIS vector must have length N={cs.n}, got shape {x.shape}")
    return cs.d(j) + cs.Fj(j) @ x
