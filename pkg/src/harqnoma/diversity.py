"""Closed-form diversity orders and empirical slope estimation.

The diversity order is the high-power log-log slope of the outage curve.
Per (user, layer) it is a step function of the layer rate driven by a floor
of the threshold-to-ratio quotient; a user's order is the minimum over the
layers it must decode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import POWER_EFFICIENT, SIMPLE, HarqScheme, SystemConfig, power_ratios

_SNAP = 1e-9


def _floor_snapped(x: float) -> int:
    """Floor with a relative snap so exactly-integral quotients computed in
    floating point land on the mathematical boundary value."""
    nearest = round(x)
    if abs(x - nearest) <= _SNAP * max(1.0, abs(x)):
        return int(nearest)
    return int(math.floor(x))


def _rate_steps(scheme: HarqScheme, rate: float, c_ratio: float) -> int:
    """Number of diversity levels lost to the rate at a given power ratio."""
    if math.isinf(c_ratio):
        return 0
    if scheme is HarqScheme.INCREMENTAL:
        return _floor_snapped(rate / math.log2(1.0 + c_ratio))
    return _floor_snapped((2.0**rate - 1.0) / c_ratio)


def pairwise_diversity(scheme: HarqScheme, k_rounds: int, rate: float, c_ratio: float) -> int:
    """Diversity order of the single event "layer not decoded after K rounds".

    An infinite ratio marks the interference-free layer, which always
    achieves full order K.
    """
    if k_rounds < 1:
        raise ValueError("k_rounds must be >= 1")
    if rate < 0 or (c_ratio <= 0 and not math.isinf(c_ratio)):
        raise ValueError("rate must be >= 0 and c_ratio positive or inf")
    steps = _rate_steps(scheme, rate, c_ratio)
    if scheme is HarqScheme.TYPE_I:
        return k_rounds * max(0, 1 - steps)
    return max(0, k_rounds - steps)


@dataclass(frozen=True)
class DiversityReport:
    """Closed-form orders per user plus the per-layer values they derive from.

    `layer_orders[j-1]` is the order of the layer-j decoding event, the
    same for every observing user; `pairwise[i-1][j-1]` repeats it in
    matrix form.  `conditional_orders` is only populated for the
    power-efficient strategy; `empirical` holds optional measured slopes.
    """

    scheme: HarqScheme
    strategy: str
    user_orders: tuple
    layer_orders: tuple
    pairwise: tuple
    conditional_orders: tuple | None = None
    empirical: tuple | None = None


def user_diversity(config: SystemConfig, scheme: HarqScheme) -> DiversityReport:
    """Per-user diversity orders via the backward minimum over decoded layers."""
    m = config.num_users
    ratios = power_ratios(config)
    layers = tuple(
        pairwise_diversity(scheme, config.max_rounds, config.rates[j - 1], ratios[j])
        for j in range(1, m + 1)
    )
    users = [0] * m
    users[m - 1] = layers[m - 1]
    for i in range(m - 2, -1, -1):
        users[i] = min(layers[i], users[i + 1])
    pairwise = tuple(layers for _ in range(m))
    return DiversityReport(
        scheme=scheme,
        strategy=SIMPLE,
        user_orders=tuple(users),
        layer_orders=layers,
        pairwise=pairwise,
    )


def conditional_diversity(scheme: HarqScheme, k_rounds: int, ell: int, rate: float, c_ratio: float) -> int:
    """Order of the far user's failure given the near user decoded after
    round `ell`: the first `ell` rounds count as interfered, the remaining
    K - ell rounds are interference-free and contribute full order."""
    if not 1 <= ell <= k_rounds:
        raise ValueError(f"ell {ell} out of range 1..{k_rounds}")
    steps = _rate_steps(scheme, rate, c_ratio)
    if scheme is HarqScheme.TYPE_I:
        interfered = ell * max(0, 1 - steps)
    else:
        interfered = max(0, ell - steps)
    return interfered + (k_rounds - ell)


def power_efficient_diversity(config: SystemConfig, scheme: HarqScheme) -> DiversityReport:
    """Diversity under the strategy that stops resending decoded messages.

    The orders match the simple strategy exactly; the per-split conditional
    orders are attached for inspection and the internal total-probability
    decomposition is cross-checked.
    """
    if config.num_users != 2:
        raise ValueError("power-efficient strategy supported for M=2 only")
    base = user_diversity(config, scheme)
    k = config.max_rounds
    rate2 = config.rates[1]
    c = power_ratios(config)[2]
    conditional = tuple(conditional_diversity(scheme, k, ell, rate2, c) for ell in range(1, k + 1))
    # near-user order after ell rounds; an empty prefix has order 0
    d1 = [0] + [pairwise_diversity(scheme, ell, rate2, c) for ell in range(1, k + 1)]
    combined = min(d1[ell - 1] + conditional[ell - 1] for ell in range(1, k + 1))
    if combined != base.user_orders[1]:
        raise RuntimeError(
            f"total-probability decomposition gives order {combined}, expected {base.user_orders[1]}"
        )
    return DiversityReport(
        scheme=scheme,
        strategy=POWER_EFFICIENT,
        user_orders=base.user_orders,
        layer_orders=base.layer_orders,
        pairwise=base.pairwise,
        conditional_orders=conditional,
    )


def empirical_diversity(p_low: float, p_high: float, delta_db: float) -> float:
    """Two-point slope estimate: outage p_low at some power, p_high at
    delta_db decibels more power."""
    if p_low <= 0 or p_high <= 0:
        raise ValueError("outage probabilities must be positive")
    if delta_db <= 0:
        raise ValueError("delta_db must be positive")
    return 10.0 * (math.log10(p_low) - math.log10(p_high)) / delta_db


def union_diversity(orders) -> int:
    """Order of a union of events: the slowest-decaying term dominates."""
    orders = list(orders)
    if not orders:
        raise ValueError("orders must be non-empty")
    return min(orders)
