"""Scenario configuration and the flat dotted-key config file loader."""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LINKS = ("br", "bu1", "bu2", "ru1", "ru2")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Pathloss:
    """Large-scale fading of one link, ``kappa = 10**(c_db/10) * distance**-rho``."""

    c_db: float
    rho: float
    distance: float

    @property
    def kappa(self) -> float:
        return db_to_linear(self.c_db) * self.distance ** (-self.rho)


@dataclass(frozen=True)
class Alg1Config:
    eps: float = 1e-5
    k_max: int = 100
    rho0: float = 1e-4
    delta: float = 1.01
    # When set, rho0 = rho0_rel * 2*lambda_max(lam F1^H F1 + (1-lam) F2^H F2).
    rho0_rel: float | None = None
    random_init: bool = False


@dataclass(frozen=True)
class Alg2Config:
    eps: float = 1e-4
    k_max: int = 100
    rho1_0: float = 0.01
    rho2_0: float = 0.01
    delta1: float = 5.0
    delta2: float = 5.0
    random_init: bool = False
    # "direct": restore orthogonality starting from x = 0; "appendix": closed-form
    # construction; "wsinr": the weighted-SINR ADMM (lambda = 1/2) run from "direct"
    init: str = "direct"
    # When set, the initial penalties are these multiples of the boundedness
    # thresholds of the x- and z-steps evaluated at the initial point.
    rho1_rel: float | None = None
    rho2_rel: float | None = None


@dataclass(frozen=True)
class SweepConfig:
    kind: str = "lambda"
    values: tuple[float, ...] = (0.5,)
    trials: int = 1
    schemes: tuple[str, ...] = ()


@dataclass(frozen=True)
class ScenarioConfig:
    m: int = 4
    n: int = 16
    p_t: float = 2.0
    sigma2: float = dbm_to_watts(-80.0)
    beta_br_db: float = 3.0
    beta_bu_db: float = 3.0
    beta_ru_db: float = 3.0
    # link tag -> Pathloss; empty means the normalized Rician model on every link
    pathloss: Mapping[str, Pathloss] = field(default_factory=dict)
    seed: int = 0
    admm1: Alg1Config = Alg1Config()
    admm2: Alg2Config = Alg2Config()
    sweep: SweepConfig = SweepConfig()
    per_user_power: float = 1.0
    wmmse_iters: int = 200
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ConfigError(f"m and n must be >= 1, got m={self.m}, n={self.n}")
        if not self.p_t > 0:
            raise ConfigError(f"p_t must be > 0, got {self.p_t}")
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be > 0, got {self.sigma2}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        for name, a in (("admm1", self.admm1), ("admm2", self.admm2)):
            if a.eps < 0:
                raise ConfigError(f"{name}.eps must be >= 0")
            if a.k_max < 1:
                raise ConfigError(f"{name}.k_max must be >= 1")
        if not self.admm1.delta > 1:
            raise ConfigError("admm1.delta must be > 1")
        if not (self.admm2.delta1 > 1 and self.admm2.delta2 > 1):
            raise ConfigError("admm2.delta1 and admm2.delta2 must be > 1")
        if not (self.admm1.rho0 > 0 and self.admm2.rho1_0 > 0 and self.admm2.rho2_0 > 0):
            raise ConfigError("initial penalties must be > 0")
        if self.admm2.init not in ("direct", "appendix", "wsinr"):
            raise ConfigError(f"admm2.init must be 'direct', 'appendix' or 'wsinr', got {self.admm2.init!r}")
        for name in ("rho1_rel", "rho2_rel"):
            v = getattr(self.admm2, name)
            if v is not None and not v > 0:
                raise ConfigError(f"admm2.{name} must be > 0")
        if self.admm1.rho0_rel is not None and not self.admm1.rho0_rel > 0:
            raise ConfigError("admm1.rho0_rel must be > 0")
        for tag in self.pathloss:
            if tag not in LINKS:
                raise ConfigError(f"unknown pathloss link {tag!r}; expected one of {LINKS}")
            if not self.pathloss[tag].distance > 0:
                raise ConfigError(f"pathloss.{tag}.distance must be > 0")
        if self.pathloss and set(self.pathloss) != set(LINKS):
            missing = sorted(set(LINKS) - set(self.pathloss))
            raise ConfigError(f"pathloss model needs every link; missing {missing}")
        sw = self.sweep
        if sw.kind not in ("lambda", "power"):
            raise ConfigError(f"sweep.kind must be 'lambda' or 'power', got {sw.kind!r}")
        if not sw.values:
            raise ConfigError("sweep.values must be nonempty")
        if any(b <= a for a, b in zip(sw.values, sw.values[1:])):
            raise ConfigError("sweep.values must be strictly increasing")
        if sw.kind == "lambda" and not all(0 <= v <= 1 for v in sw.values):
            raise ConfigError("lambda values must lie in [0, 1]")
        if sw.kind == "power" and not all(v > 0 for v in sw.values):
            raise ConfigError("power values must be > 0")
        if sw.trials < 1:
            raise ConfigError("sweep.trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


# key -> (section attribute or None, field name, caster)
_SCALAR_KEYS = {
    "scenario.m": (None, "m", int),
    "scenario.n": (None, "n", int),
    "scenario.p_t": (None, "p_t", float),
    "scenario.seed": (None, "seed", int),
    "scenario.workers": (None, "workers", int),
    "channel.beta_br_db": (None, "beta_br_db", float),
    "channel.beta_bu_db": (None, "beta_bu_db", float),
    "channel.beta_ru_db": (None, "beta_ru_db", float),
    "baseline.per_user_power": (None, "per_user_power", float),
    "baseline.wmmse_iters": (None, "wmmse_iters", int),
    "admm1.eps": ("admm1", "eps", float),
    "admm1.k_max": ("admm1", "k_max", int),
    "admm1.rho0": ("admm1", "rho0", float),
    "admm1.rho0_rel": ("admm1", "rho0_rel", float),
    "admm1.delta": ("admm1", "delta", float),
    "admm1.random_init": ("admm1", "random_init", bool),
    "admm2.eps": ("admm2", "eps", float),
    "admm2.k_max": ("admm2", "k_max", int),
    "admm2.rho1_0": ("admm2", "rho1_0", float),
    "admm2.rho2_0": ("admm2", "rho2_0", float),
    "admm2.delta1": ("admm2", "delta1", float),
    "admm2.delta2": ("admm2", "delta2", float),
    "admm2.random_init": ("admm2", "random_init", bool),
    "admm2.init": ("admm2", "init", str),
    "admm2.rho1_rel": ("admm2", "rho1_rel", float),
    "admm2.rho2_rel": ("admm2", "rho2_rel", float),
    "sweep.kind": ("sweep", "kind", str),
    "sweep.values": ("sweep", "values", lambda v: tuple(float(x) for x in v)),
    "sweep.trials": ("sweep", "trials", int),
    "sweep.schemes": ("sweep", "schemes", lambda v: tuple(str(x) for x in v)),
}


def flatten(d: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def config_from_flat(flat: Mapping[str, Any]) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from ``{"section.key": value}`` pairs."""
    top: dict[str, Any] = {}
    sections: dict[str, dict[str, Any]] = {"admm1": {}, "admm2": {}, "sweep": {}}
    pathloss: dict[str, dict[str, float]] = {}
    sigma_keys = [k for k in ("scenario.sigma2_dbm", "scenario.sigma2_watts") if k in flat]
    if len(sigma_keys) > 1:
        raise ConfigError("give exactly one of scenario.sigma2_dbm / scenario.sigma2_watts")
    for key, value in flat.items():
        if key == "scenario.sigma2_dbm":
            top["sigma2"] = dbm_to_watts(float(value))
        elif key == "scenario.sigma2_watts":
            top["sigma2"] = float(value)
        elif key.startswith("pathloss."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("c_db", "rho", "distance"):
                raise ConfigError(f"bad pathloss key {key!r}")
            pathloss.setdefault(parts[1], {})[parts[2]] = float(value)
        elif key in _SCALAR_KEYS:
            section, name, cast = _SCALAR_KEYS[key]
            try:
                v = cast(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
            if section is None:
                top[name] = v
            else:
                sections[section][name] = v
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        links = {tag: Pathloss(**p) for tag, p in pathloss.items()}
    except TypeError as exc:
        raise ConfigError(f"incomplete pathloss entry: {exc}") from exc
    return ScenarioConfig(
        **top,
        pathloss=links,
        admm1=Alg1Config(**sections["admm1"]),
        admm2=Alg2Config(**sections["admm2"]),
        sweep=SweepConfig(**sections["sweep"]),
    )


BUILTIN_DIR = Path(__file__).parent / "configs"


def load_config(path: str | Path) -> ScenarioConfig:
    """Load a config file; a bare name such as ``wsinr_small`` resolves to a shipped config."""
    p = Path(path)
    if not p.exists() and not p.suffix and (BUILTIN_DIR / f"{p.name}.toml").exists():
        p = BUILTIN_DIR / f"{p.name}.toml"
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return config_from_flat(flatten(raw))


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else f'"{v}"'
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, str):
        return f'"{v}"'
    return str(v)


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize to the flat dotted-key format accepted by :func:`load_config`."""
    lines = ["# risadmm scenario config"]
    for key, (section, name, _) in _SCALAR_KEYS.items():
        obj = cfg if section is None else getattr(cfg, section)
        v = getattr(obj, name)
        if v is None:
            continue
        lines.append(f"{key} = {_fmt(v)}")
        if key == "scenario.p_t":
            lines.append(f"scenario.sigma2_watts = {_fmt(cfg.sigma2)}")
    for tag, pl in sorted(cfg.pathloss.items()):
        for name in ("c_db", "rho", "distance"):
            lines.append(f"pathloss.{tag}.{name} = {_fmt(float(getattr(pl, name)))}")
    return "\n".join(lines) + "\n"
