"""System configuration: schema, unit conversion, validation and (de)serialization.

Config documents are YAML. Logarithmic quantities (``*_dBm``, ``*_dB``) are
converted to linear units here; every other module sees linear units only.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import yaml


class ConfigError(ValueError):
    """Base class for configuration problems."""


class SchemaError(ConfigError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class ValidationError(ConfigError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


def dbm_to_watt(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def watt_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p) + 30.0


Point = tuple[float, float]


@dataclass(frozen=True)
class Geometry:
    """2-D node positions in meters.

    The STAR-RIS surface is the vertical line ``x = ris[0]``. The side holding
    the BS is the reflection side; the other side is the transmission side.
    """

    bs: Point = (0.0, 0.0)
    ris: Point = (50.0, 0.0)
    user1: Point = (45.0, 5.0)
    user2: Point = (55.0, 5.0)
    eve: Point = (48.0, 8.0)

    def side(self, point: Point) -> int:
        """+1 on the reflection side, -1 on the transmission side, 0 on the surface."""
        bs_side = math.copysign(1.0, self.bs[0] - self.ris[0])
        d = point[0] - self.ris[0]
        if d == 0.0:
            return 0
        return 1 if math.copysign(1.0, d) == bs_side else -1

    def distance(self, a: str, b: str) -> float:
        pa, pb = getattr(self, a), getattr(self, b)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])


@dataclass(frozen=True)
class ChannelParams:
    lambda0: float = 1e-3        # path gain at 1 m (linear)
    alpha_los: float = 2.0       # BS-RIS
    alpha_nlos_r: float = 2.8    # RIS-User1, RIS-Eve
    alpha_nlos_t: float = 3.0    # RIS-User2
    alpha_direct: float = 3.0    # BS-User1, BS-Eve
    rician_k: float = 1.0        # linear


@dataclass(frozen=True)
class AlgorithmParams:
    epsilon: float = 0.01
    zeta0: float = 1e-4
    xi0: float = 1e-4
    omega: float = 1.5
    max_inner: int = 30
    max_outer: int = 20
    solver_tol: float = 1e-7
    # "agm": mu = sqrt(r/Gamma); "literal": mu = sqrt(r/tau)
    mu_update: str = "agm"
    # "dc": Tr(Z) - lambda^H Z lambda; "printed": Tr(Z) + lambda^H Z lambda
    rank_surrogate: str = "dc"
    # +1 subtracts the binary surrogate from the objective, -1 adds it
    binary_penalty_sign: int = 1
    # "inner": scale penalties every passive iteration; "outer": once per outer round
    penalty_schedule: str = "inner"
    sic_trace_order: bool = False
    jamming_full_leakage: bool = False
    randomization_samples: int = 100
    rank_tol: float = 1e-4
    max_polish: int = 60


@dataclass(frozen=True)
class SystemConfig:
    N: int = 2
    K: int = 30
    Pmax: Optional[float] = None     # W; None means "not given"
    sigma2: float = 1e-12            # W
    tau: float = 1.0                 # bits/s/Hz
    geometry: Geometry = field(default_factory=Geometry)
    channel_params: ChannelParams = field(default_factory=ChannelParams)
    algo_params: AlgorithmParams = field(default_factory=AlgorithmParams)
    seed: int = 0

    @property
    def power(self) -> float:
        """Power budget in watts; raises if the document never set one."""
        if self.Pmax is None:
            raise ConfigError("Pmax_dBm: transmit power must be set explicitly")
        return self.Pmax

    def with_power_dbm(self, p_dbm: float) -> "SystemConfig":
        return dataclasses.replace(self, Pmax=dbm_to_watt(p_dbm))

    def replace(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def replace_algo(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, algo_params=dataclasses.replace(self.algo_params, **changes))


_TOP_KEYS = {"N", "K", "Pmax_dBm", "Pmax_W", "sigma2_dBm", "sigma2_W", "tau", "seed",
             "geometry", "channel", "algorithm"}
_GEOM_KEYS = {f.name for f in dataclasses.fields(Geometry)}
_CHANNEL_KEYS = {"lambda0", "lambda0_dB", "alpha_los", "alpha_nlos_r", "alpha_nlos_t",
                 "alpha_direct", "rician_k", "rician_k_dB"}
_ALGO_KEYS = {f.name for f in dataclasses.fields(AlgorithmParams)}


def _number(key: str, value: Any, integer: bool = False) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(key, f"expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise SchemaError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _point(key: str, value: Any) -> Point:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise SchemaError(key, f"expected [x, y], got {value!r}")
    return (_number(key, value[0]), _number(key, value[1]))


def _mapping(key: str, value: Any) -> Mapping[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise SchemaError(key, f"expected a mapping, got {type(value).__name__}")
    return value


def _check_keys(prefix: str, doc: Mapping[str, Any], allowed: set[str]) -> None:
    for k in doc:
        if k not in allowed:
            raise SchemaError(f"{prefix}{k}", "unknown key")


def _either(prefix: str, doc: Mapping[str, Any], linear: str, log: str, conv) -> Optional[float]:
    if linear in doc and log in doc:
        raise SchemaError(prefix + log, f"give either {linear} or {log}, not both")
    if log in doc:
        return conv(_number(prefix + log, doc[log]))
    if linear in doc:
        return None if doc[linear] is None else _number(prefix + linear, doc[linear])
    return None


def config_from_dict(doc: Mapping[str, Any], require_power: bool = False) -> SystemConfig:
    doc = _mapping("<root>", doc)
    _check_keys("", doc, _TOP_KEYS)
    default = SystemConfig()

    pmax = _either("", doc, "Pmax_W", "Pmax_dBm", dbm_to_watt)
    if pmax is None and require_power:
        raise SchemaError("Pmax_dBm", "transmit power must be set explicitly")
    sigma2 = _either("", doc, "sigma2_W", "sigma2_dBm", dbm_to_watt)

    gdoc = _mapping("geometry", doc.get("geometry"))
    _check_keys("geometry.", gdoc, _GEOM_KEYS)
    geometry = Geometry(**{k: _point(f"geometry.{k}", v) for k, v in gdoc.items()})

    cdoc = _mapping("channel", doc.get("channel"))
    _check_keys("channel.", cdoc, _CHANNEL_KEYS)
    cvals: dict[str, Any] = {}
    lam = _either("channel.", cdoc, "lambda0", "lambda0_dB", db_to_linear)
    if lam is not None:
        cvals["lambda0"] = lam
    kr = _either("channel.", cdoc, "rician_k", "rician_k_dB", db_to_linear)
    if kr is not None:
        cvals["rician_k"] = kr
    for k in ("alpha_los", "alpha_nlos_r", "alpha_nlos_t", "alpha_direct"):
        if k in cdoc:
            cvals[k] = _number(f"channel.{k}", cdoc[k])
    channel = ChannelParams(**cvals)

    adoc = _mapping("algorithm", doc.get("algorithm"))
    _check_keys("algorithm.", adoc, _ALGO_KEYS)
    avals: dict[str, Any] = {}
    for f in dataclasses.fields(AlgorithmParams):
        if f.name not in adoc:
            continue
        v = adoc[f.name]
        ref = getattr(AlgorithmParams(), f.name)
        key = f"algorithm.{f.name}"
        if isinstance(ref, bool):
            if not isinstance(v, bool):
                raise SchemaError(key, f"expected true/false, got {v!r}")
            avals[f.name] = v
        elif isinstance(ref, int):
            avals[f.name] = _number(key, v, integer=True)
        elif isinstance(ref, float):
            avals[f.name] = _number(key, v)
        else:
            if not isinstance(v, str):
                raise SchemaError(key, f"expected a string, got {v!r}")
            avals[f.name] = v
    algo = AlgorithmParams(**avals)

    cfg = SystemConfig(
        N=_number("N", doc["N"], integer=True) if "N" in doc else default.N,
        K=_number("K", doc["K"], integer=True) if "K" in doc else default.K,
        Pmax=pmax,
        sigma2=sigma2 if sigma2 is not None else default.sigma2,
        tau=_number("tau", doc["tau"]) if "tau" in doc else default.tau,
        geometry=geometry,
        channel_params=channel,
        algo_params=algo,
        seed=_number("seed", doc["seed"], integer=True) if "seed" in doc else default.seed,
    )
    violations = validate(cfg)
    if violations:
        raise ValidationError(violations)
    return cfg


def parse_config(text: str, require_power: bool = False) -> SystemConfig:
    """Parse a YAML config document; absent keys take the Table-I defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<document>", f"not valid YAML: {exc}") from exc
    return config_from_dict(doc if doc is not None else {}, require_power=require_power)


def config_to_dict(cfg: SystemConfig) -> dict[str, Any]:
    """Document form using linear-unit keys, so parsing it back is exact."""
    return {
        "N": cfg.N,
        "K": cfg.K,
        "Pmax_W": cfg.Pmax,
        "sigma2_W": cfg.sigma2,
        "tau": cfg.tau,
        "seed": cfg.seed,
        "geometry": {k: list(v) for k, v in dataclasses.asdict(cfg.geometry).items()},
        "channel": dataclasses.asdict(cfg.channel_params),
        "algorithm": dataclasses.asdict(cfg.algo_params),
    }


def serialize_config(cfg: SystemConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)


def apply_overrides(doc: Mapping[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``key=value`` strings (dotted keys for sections) to a raw document."""
    out: dict[str, Any] = {k: (dict(v) if isinstance(v, Mapping) else v) for k, v in (doc or {}).items()}
    for item in overrides:
        if "=" not in item:
            raise SchemaError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        parts = key.strip().split(".")
        target = out
        for p in parts[:-1]:
            target = target.setdefault(p, {})
            if not isinstance(target, dict):
                raise SchemaError(key, "cannot descend into a non-mapping")
        # keep a single spelling of each quantity so _either() stays unambiguous
        leaf = parts[-1]
        for a, b in (("Pmax_W", "Pmax_dBm"), ("sigma2_W", "sigma2_dBm"),
                     ("lambda0", "lambda0_dB"), ("rician_k", "rician_k_dB")):
            if leaf in (a, b):
                target.pop(b if leaf == a else a, None)
        target[leaf] = value
    return out


def validate(cfg: SystemConfig) -> list[str]:
    """Every violated invariant, sorted by field name. Empty means valid."""
    v: list[tuple[str, str]] = []
    if cfg.N < 1:
        v.append(("N", f"N: must be >= 1 (got {cfg.N})"))
    if cfg.K < 1:
        v.append(("K", f"K: must be >= 1 (got {cfg.K})"))
    if cfg.Pmax is not None and not cfg.Pmax >= 0:
        v.append(("Pmax", f"Pmax: must be >= 0 (got {cfg.Pmax})"))
    if not cfg.sigma2 > 0:
        v.append(("sigma2", f"sigma2: must be > 0 (got {cfg.sigma2})"))
    if not cfg.tau > 0:
        v.append(("tau", f"tau: must be > 0 (got {cfg.tau})"))
    if cfg.seed < 0:
        v.append(("seed", f"seed: must be unsigned (got {cfg.seed})"))

    g = cfg.geometry
    bad = []
    if g.bs[0] == g.ris[0]:
        bad.append("bs lies on the surface")
    if g.side(g.user1) != 1:
        bad.append("user1 must be on the reflection side")
    if g.side(g.eve) != 1:
        bad.append("eve must be on the reflection side")
    if g.side(g.user2) != -1:
        bad.append("user2 must be on the transmission side")
    if bad:
        v.append(("geometry", "geometry: " + ", ".join(bad)))

    c = cfg.channel_params
    if not c.lambda0 > 0:
        v.append(("lambda0", f"lambda0: must be > 0 (got {c.lambda0})"))
    for name in ("alpha_direct", "alpha_los", "alpha_nlos_r", "alpha_nlos_t"):
        if getattr(c, name) < 0:
            v.append((name, f"{name}: must be >= 0 (got {getattr(c, name)})"))
    if c.rician_k < 0:
        v.append(("rician_k", f"rician_k: must be >= 0 (got {c.rician_k})"))

    a = cfg.algo_params
    for name in ("epsilon", "zeta0", "xi0", "solver_tol", "rank_tol"):
        if not getattr(a, name) > 0:
            v.append((name, f"{name}: must be > 0 (got {getattr(a, name)})"))
    if not a.omega > 1:
        v.append(("omega", f"omega: must be > 1 (got {a.omega})"))
    for name in ("max_inner", "max_outer", "max_polish", "randomization_samples"):
        if getattr(a, name) < 1:
            v.append((name, f"{name}: must be >= 1 (got {getattr(a, name)})"))
    if a.mu_update not in ("agm", "literal"):
        v.append(("mu_update", f"mu_update: must be 'agm' or 'literal' (got {a.mu_update!r})"))
    if a.rank_surrogate not in ("dc", "printed"):
        v.append(("rank_surrogate", f"rank_surrogate: must be 'dc' or 'printed' (got {a.rank_surrogate!r})"))
    if a.binary_penalty_sign not in (1, -1):
        v.append(("binary_penalty_sign", f"binary_penalty_sign: must be +1 or -1 (got {a.binary_penalty_sign})"))
    if a.penalty_schedule not in ("inner", "outer"):
        v.append(("penalty_schedule", f"penalty_schedule: must be 'inner' or 'outer' (got {a.penalty_schedule!r})"))

    return [msg for _, msg in sorted(v, key=lambda t: t[0])]
