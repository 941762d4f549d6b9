"""Monte Carlo outage estimation for all users, schemes and strategies.

Trials are partitioned into fixed-size chunks; each chunk draws its gains
through the counter-based sampler in `channel`, so the failure count is
identical for any chunk execution order or worker count.  Failure counts
reduce by integer summation, which is exactly associative.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import apply_imperfect_csi, sample_user_gains
from .model import POWER_EFFICIENT, HarqScheme, SystemConfig
from .mutual_info import LN2

Z95 = 1.959963984540054  # two-sided 95% normal quantile
DEFAULT_TRIALS = 10_000_000
CHUNK_TRIALS = 1 << 18


@dataclass(frozen=True)
class OutageEstimate:
    p_hat: float
    trials: int
    failures: int
    ci_low: float
    ci_high: float
    seed: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


def wilson_interval(failures: int, trials: int) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    p = failures / trials
    z2 = Z95 * Z95
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    margin = (Z95 / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    # the boundary endpoints are exact; avoid cancellation residue there
    low = 0.0 if failures == 0 else max(0.0, center - margin)
    high = 1.0 if failures == trials else min(1.0, center + margin)
    return low, high


def _spans(trials: int):
    start = 0
    while start < trials:
        stop = min(start + CHUNK_TRIALS, trials)
        yield start, stop
        start = stop


def _map_chunks(kernel, trials: int, workers):
    spans = list(_spans(trials))
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: kernel(*s), spans))
    return [kernel(*s) for s in spans]


def _fails(scheme: HarqScheme, sinr: np.ndarray, rate: float) -> np.ndarray:
    """Per-trial outage flags for one decoding event, compared on the linear
    scale (strictly below the threshold, so zero rate never fails)."""
    thr = 2.0**rate - 1.0
    if scheme is HarqScheme.TYPE_I:
        return np.max(sinr, axis=1) < thr
    if scheme is HarqScheme.CHASE:
        return np.sum(sinr, axis=1) < thr
    return np.sum(np.log1p(sinr), axis=1) < rate * LN2


def _user_chunk_flags(eff, user: int, scheme: HarqScheme, seed: int, t0: int, t1: int) -> np.ndarray:
    cfg = eff.config
    gains = sample_user_gains(cfg.mean_gains[user - 1], cfg.max_rounds, seed, user, t0, t1 - t0)
    nv = eff.noise_vars[user - 1]
    out = np.zeros(t1 - t0, dtype=bool)
    for j in range(user, cfg.num_users + 1):
        q = cfg.interferer_power(j)
        sinr = gains * cfg.powers[j - 1] / (gains * q + nv)
        out |= _fails(scheme, sinr, cfg.rates[j - 1])
    return out


def simulate_outage_flags(config: SystemConfig, user: int, scheme: HarqScheme, trials: int, seed: int) -> np.ndarray:
    """Per-trial outage indicators; intended for paired-sample comparisons."""
    if not 1 <= user <= config.num_users:
        raise ValueError(f"user {user} out of range 1..{config.num_users}")
    eff = apply_imperfect_csi(config)
    parts = [_user_chunk_flags(eff, user, scheme, seed, t0, t1) for t0, t1 in _spans(trials)]
    return np.concatenate(parts)


def _estimate(failures: int, trials: int, seed: int) -> OutageEstimate:
    lo, hi = wilson_interval(failures, trials)
    return OutageEstimate(
        p_hat=failures / trials, trials=trials, failures=failures, ci_low=lo, ci_high=hi, seed=seed
    )


def estimate_outage(
    config: SystemConfig,
    user: int,
    scheme: HarqScheme,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    workers: int | None = None,
) -> OutageEstimate:
    """Outage probability of `user`: the fraction of trials in which any of
    the layers it must decode stays below its rate after all rounds."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= user <= config.num_users:
        raise ValueError(f"user {user} out of range 1..{config.num_users}")
    eff = apply_imperfect_csi(config)

    def kernel(t0, t1):
        return int(np.sum(_user_chunk_flags(eff, user, scheme, seed, t0, t1)))

    failures = sum(_map_chunks(kernel, trials, workers))
    return _estimate(failures, trials, seed)


# ---------------------------------------------------------------------------
# power-efficient strategy (two users)
# ---------------------------------------------------------------------------

def _cumulative_success(scheme: HarqScheme, sinr: np.ndarray, rate: float) -> np.ndarray:
    """(n, K) flags: decoding succeeds using rounds 1..k."""
    thr = 2.0**rate - 1.0
    if scheme is HarqScheme.TYPE_I:
        return np.maximum.accumulate(sinr, axis=1) >= thr
    if scheme is HarqScheme.CHASE:
        return np.cumsum(sinr, axis=1) >= thr
    return np.cumsum(np.log1p(sinr), axis=1) >= rate * LN2


def _pe_chunk_flags(eff, scheme: HarqScheme, seed: int, t0: int, t1: int) -> np.ndarray:
    cfg = eff.config
    k = cfg.max_rounds
    n = t1 - t0
    p1, p2 = cfg.powers
    r1, r2 = cfg.rates
    nv1, nv2 = eff.noise_vars

    g1 = sample_user_gains(cfg.mean_gains[0], k, seed, 1, t0, n)
    g2 = sample_user_gains(cfg.mean_gains[1], k, seed, 2, t0, n)

    # first round after which the near user has decoded both messages;
    # afterwards only the far message is resent
    ok = _cumulative_success(scheme, g1 * p2 / (g1 * p1 + nv1), r2) & _cumulative_success(
        scheme, g1 * p1 / nv1, r1
    )
    first = np.argmax(ok, axis=1) + 1  # 1-based; garbage when no success
    n_interfered = np.where(ok.any(axis=1), first, k)

    s_int = g2 * p2 / (g2 * p1 + nv2)
    s_clean = g2 * p2 / nv2
    idx = n_interfered[:, None]
    thr2 = 2.0**r2 - 1.0
    if scheme is HarqScheme.TYPE_I:
        pad = np.zeros((n, 1))
        prefix = np.hstack([pad, np.maximum.accumulate(s_int, axis=1)])
        suffix = np.hstack([np.maximum.accumulate(s_clean[:, ::-1], axis=1)[:, ::-1], pad])
        best = np.maximum(
            np.take_along_axis(prefix, idx, axis=1), np.take_along_axis(suffix, idx, axis=1)
        )[:, 0]
        return best < thr2
    if scheme is HarqScheme.CHASE:
        pre = np.hstack([np.zeros((n, 1)), np.cumsum(s_int, axis=1)])
        cl = np.hstack([np.zeros((n, 1)), np.cumsum(s_clean, axis=1)])
    else:
        pre = np.hstack([np.zeros((n, 1)), np.cumsum(np.log1p(s_int), axis=1)])
        cl = np.hstack([np.zeros((n, 1)), np.cumsum(np.log1p(s_clean), axis=1)])
    total = (
        np.take_along_axis(pre, idx, axis=1)[:, 0]
        + cl[:, k]
        - np.take_along_axis(cl, idx, axis=1)[:, 0]
    )
    limit = thr2 if scheme is HarqScheme.CHASE else r2 * LN2
    return total < limit


def simulate_power_efficient_flags(config: SystemConfig, scheme: HarqScheme, trials: int, seed: int) -> np.ndarray:
    """Per-trial far-user outage indicators under the power-efficient strategy."""
    _check_power_efficient(config)
    eff = apply_imperfect_csi(config)
    parts = [_pe_chunk_flags(eff, scheme, seed, t0, t1) for t0, t1 in _spans(trials)]
    return np.concatenate(parts)


def _check_power_efficient(config: SystemConfig):
    if config.num_users != 2:
        raise ValueError("power-efficient strategy supported for M=2 only")
    if config.strategy != POWER_EFFICIENT:
        raise ValueError("config strategy must be power_efficient")


def estimate_outage_power_efficient(
    config: SystemConfig,
    scheme: HarqScheme,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    workers: int | None = None,
) -> OutageEstimate:
    """Far-user outage when decoded messages are dropped from retransmissions.

    Per trial the near user's decoding round is found first; from the next
    round on, the far user's SINR loses its interference term.  Round
    draws are keyed exactly as in `estimate_outage`, so running both with
    the same seed gives a common-random-numbers comparison.
    """
    _check_power_efficient(config)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    eff = apply_imperfect_csi(config)

    def kernel(t0, t1):
        return int(np.sum(_pe_chunk_flags(eff, scheme, seed, t0, t1)))

    failures = sum(_map_chunks(kernel, trials, workers))
    return _estimate(failures, trials, seed)
