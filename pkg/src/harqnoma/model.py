"""Scenario configuration shared by every simulation and analysis module.

A scenario is a superposition-coded downlink with M users, decoded in
ascending order of average channel gain, retransmitted for up to K rounds.
Configurations are immutable after validation and safe to share across
threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum

SIMPLE = "simple"
POWER_EFFICIENT = "power_efficient"

_STRATEGIES = (SIMPLE, POWER_EFFICIENT)


class ConfigError(ValueError):
    """Raised when a configuration violates a model invariant."""


class HarqScheme(Enum):
    """Retransmission combining discipline.

    TYPE_I decodes each round on its own (selection combining), CHASE
    combines SINRs additively (MRC), INCREMENTAL adds mutual information
    across rounds (code combining).
    """

    TYPE_I = "I"
    CHASE = "CC"
    INCREMENTAL = "IR"

    def __str__(self) -> str:
        return self.value


ALL_SCHEMES = (HarqScheme.TYPE_I, HarqScheme.CHASE, HarqScheme.INCREMENTAL)


def _astuple(value, name):
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value)
    except TypeError:
        raise ConfigError(f"{name} must be a sequence of numbers") from None


@dataclass(frozen=True)
class SystemConfig:
    """Full scenario description.

    Powers can be given absolutely (`powers`, watts) or as a reference
    power plus per-layer ratios (`p1_watts`, `ratios` where ratios[j-2] is
    P_j divided by the sum of all lower-layer powers).  `validate_config`
    materializes the absolute form.
    """

    num_users: int
    max_rounds: int
    rates: tuple
    mean_gains: tuple
    powers: tuple | None = None
    p1_watts: float | None = None
    ratios: tuple | None = None
    csi_error_vars: tuple | None = None
    strategy: str = SIMPLE

    def __post_init__(self):
        object.__setattr__(self, "rates", _astuple(self.rates, "rates"))
        object.__setattr__(self, "mean_gains", _astuple(self.mean_gains, "mean_gains"))
        object.__setattr__(self, "powers", _astuple(self.powers, "powers"))
        object.__setattr__(self, "ratios", _astuple(self.ratios, "ratios"))
        object.__setattr__(
            self, "csi_error_vars", _astuple(self.csi_error_vars, "csi_error_vars")
        )

    @property
    def total_power(self) -> float:
        return sum(self.powers)

    def interferer_power(self, layer: int) -> float:
        """Sum of powers decoded before `layer` (1-based); 0 for the first layer."""
        return sum(self.powers[: layer - 1])


@dataclass(frozen=True)
class PowerRatios:
    """Per-layer power ratios; values[0] is math.inf for the interference-free layer."""

    values: tuple

    def __getitem__(self, layer: int) -> float:
        # 1-based layer index, matching the user numbering used throughout.
        return self.values[layer - 1]

    def __len__(self) -> int:
        return len(self.values)


def materialize_powers(p1_watts: float, ratios) -> tuple:
    """Absolute powers from a reference power and layer-over-sum ratios."""
    powers = [float(p1_watts)]
    for c in ratios:
        powers.append(float(c) * sum(powers))
    return tuple(powers)


def validate_config(raw: SystemConfig) -> SystemConfig:
    """Check all invariants and return a normalized copy with powers materialized.

    Raises ConfigError naming the offending field.  Rates of exactly zero
    are tolerated (a zero-rate message can never be in outage), everything
    else must be strictly positive.
    """
    m = raw.num_users
    if not isinstance(m, int) or m < 1:
        raise ConfigError("num_users must be a positive integer")
    if not isinstance(raw.max_rounds, int) or raw.max_rounds < 1:
        raise ConfigError("max_rounds must be a positive integer")

    if raw.rates is None or len(raw.rates) != m:
        raise ConfigError(f"rates must list {m} values")
    if any(r < 0 or not math.isfinite(r) for r in raw.rates):
        raise ConfigError("rates must be non-negative and finite")

    if raw.mean_gains is None or len(raw.mean_gains) != m:
        raise ConfigError(f"mean_gains must list {m} values")
    if any(g <= 0 or not math.isfinite(g) for g in raw.mean_gains):
        raise ConfigError("mean_gains must be positive")
    if any(
        raw.mean_gains[i] < raw.mean_gains[i + 1] for i in range(m - 1)
    ):
        raise ConfigError("mean gains must be non-increasing")

    if raw.powers is not None:
        if raw.p1_watts is not None or raw.ratios is not None:
            raise ConfigError("give either powers or p1_watts+ratios, not both")
        if len(raw.powers) != m:
            raise ConfigError(f"powers must list {m} values")
        powers = raw.powers
    else:
        if raw.p1_watts is None:
            raise ConfigError("powers or p1_watts+ratios required")
        if raw.p1_watts <= 0:
            raise ConfigError("p1_watts must be positive")
        ratios = raw.ratios if raw.ratios is not None else ()
        if len(ratios) != m - 1:
            raise ConfigError(f"ratios must list {m - 1} values")
        if any(c <= 0 for c in ratios):
            raise ConfigError("ratios must be positive")
        powers = materialize_powers(raw.p1_watts, ratios)
    if any(p <= 0 or not math.isfinite(p) for p in powers):
        raise ConfigError("powers must be positive")

    csi = raw.csi_error_vars if raw.csi_error_vars is not None else (0.0,) * m
    if len(csi) != m:
        raise ConfigError(f"csi_error_vars must list {m} values")
    if any(v < 0 for v in csi):
        raise ConfigError("csi_error_vars must be non-negative")
    if any(v >= g for v, g in zip(csi, raw.mean_gains)):
        raise ConfigError("csi_error_vars must stay below the mean gains")

    if raw.strategy not in _STRATEGIES:
        raise ConfigError(f"strategy must be one of {_STRATEGIES}")
    if raw.strategy == POWER_EFFICIENT and m != 2:
        raise ConfigError("power-efficient strategy supported for M=2 only")

    return replace(
        raw, powers=tuple(powers), p1_watts=None, ratios=None, csi_error_vars=tuple(csi)
    )


def power_ratios(config: SystemConfig) -> PowerRatios:
    """Layer-over-sum power ratios of a validated config; the first entry is inf."""
    p = config.powers
    values = [math.inf]
    for j in range(2, config.num_users + 1):
        values.append(p[j - 1] / sum(p[: j - 1]))
    return PowerRatios(tuple(values))


def db_to_watts(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


def watts_to_db(watts: float) -> float:
    return 10.0 * math.log10(watts)


_CONFIG_KEYS = (
    "num_users",
    "max_rounds",
    "rates",
    "mean_gains",
    "powers",
    "p1_watts",
    "ratios",
    "csi_error_vars",
    "strategy",
)


def config_from_dict(data: dict) -> SystemConfig:
    """Build a validated config from a flat JSON-style mapping.

    Keys outside the config schema are ignored so that experiment files can
    carry sweep settings alongside the scenario.
    """
    kwargs = {k: data[k] for k in _CONFIG_KEYS if k in data}
    missing = [k for k in ("num_users", "max_rounds", "rates", "mean_gains") if k not in kwargs]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    return validate_config(SystemConfig(**kwargs))


def config_to_dict(config: SystemConfig) -> dict:
    """Canonical mapping for a validated config (absolute powers form)."""
    return {
        "num_users": config.num_users,
        "max_rounds": config.max_rounds,
        "rates": list(config.rates),
        "mean_gains": list(config.mean_gains),
        "powers": list(config.powers),
        "csi_error_vars": list(config.csi_error_vars),
        "strategy": config.strategy,
    }


def load_config(path) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
