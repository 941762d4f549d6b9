"""Per-round SINRs and accumulated mutual information for each combining scheme.

All SINRs are linear; conversion to bits happens once, at accumulation.
The array kernels operate along the last axis so the Monte Carlo engine
can batch trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import HarqScheme

LN2 = math.log(2.0)


@dataclass(frozen=True)
class AccumulatedInfo:
    bits: float
    scheme: HarqScheme
    rounds_used: int


def per_round_sinr(gain: float, target: int, powers, noise_var: float = 1.0) -> float:
    """SINR seen when decoding layer `target` (1-based) at channel gain `gain`.

    Layers decoded after the target act as noise; for the first layer the
    interference sum is empty.
    """
    if not 1 <= target <= len(powers):
        raise ValueError(f"target layer {target} out of range 1..{len(powers)}")
    interferers = sum(powers[: target - 1])
    return gain * powers[target - 1] / (gain * interferers + noise_var)


def accumulated_bits(scheme: HarqScheme, sinr, axis: int = -1) -> np.ndarray:
    """Accumulated mutual information in bits/s/Hz along `axis`."""
    s = np.asarray(sinr, dtype=float)
    if scheme is HarqScheme.TYPE_I:
        return np.log1p(np.max(s, axis=axis)) / LN2
    if scheme is HarqScheme.CHASE:
        return np.log1p(np.sum(s, axis=axis)) / LN2
    if scheme is HarqScheme.INCREMENTAL:
        return np.sum(np.log1p(s), axis=axis) / LN2
    raise ValueError(f"unknown scheme {scheme!r}")


def accumulate(scheme: HarqScheme, sinrs) -> AccumulatedInfo:
    """Mutual information accumulated over a whole round sequence."""
    s = np.asarray(sinrs, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("sinrs must be a non-empty 1-D sequence")
    return AccumulatedInfo(bits=float(accumulated_bits(scheme, s)), scheme=scheme, rounds_used=s.size)


def accumulate_power_efficient(scheme: HarqScheme, interfered, clean) -> AccumulatedInfo:
    """Accumulation when interference disappears partway through.

    `interfered` holds the SINRs of the rounds before the stronger-decoded
    message left the superposition, `clean` the interference-free rounds
    after it.  With no clean rounds this equals plain `accumulate`.
    """
    a = np.asarray(interfered, dtype=float)
    b = np.asarray(clean, dtype=float)
    if a.ndim > 1 or b.ndim > 1:
        raise ValueError("round sequences must be 1-D")
    total = a.size + b.size
    if total == 0:
        raise ValueError("at least one round required")
    joined = np.concatenate([a, b])
    return AccumulatedInfo(bits=float(accumulated_bits(scheme, joined)), scheme=scheme, rounds_used=total)
