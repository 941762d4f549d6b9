"""Rayleigh fading gains and the MMSE channel-estimation-error transform.

Gains are exponential with per-user means.  Sampling is counter-based:
every draw is addressed by (seed, user, round, trial) through a Philox
stream, so trials can be generated in any chunking or order, serially or
in parallel, with bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator, Philox

from .model import SystemConfig

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def uniform_stream(seed: int, user: int, round_index: int, first_trial: int, n_trials: int) -> np.ndarray:
    """Uniforms on [0,1) for trials [first_trial, first_trial+n_trials).

    One 64-bit word per trial from a Philox stream keyed by (seed, user,
    round); the counter addresses the trial index, so any chunking of the
    trial range reproduces the same values.
    """
    key = np.array([seed & _MASK64, ((user & 0xFFFFFFFF) << 32) | (round_index & 0xFFFFFFFF)], dtype=_U64)
    block0, offset = divmod(first_trial, 4)
    n_words = offset + n_trials
    n_padded = -(-n_words // 4) * 4
    u = Generator(Philox(key=key, counter=block0)).random(n_padded)
    return u[offset : offset + n_trials]


def sample_user_gains(
    mean_gain: float, k_rounds: int, seed: int, user: int, first_trial: int, n_trials: int
) -> np.ndarray:
    """(n_trials, k_rounds) exponential gains for one user.

    Inverse-CDF sampling: gain = -mean * ln(u) with u uniform on (0,1].
    """
    out = np.empty((n_trials, k_rounds))
    for k in range(1, k_rounds + 1):
        u = uniform_stream(seed, user, k, first_trial, n_trials)
        # 1 - u lies in (0, 1], keeping the log finite.
        out[:, k - 1] = -mean_gain * np.log1p(-u)
    return out


def sample_gains(config: SystemConfig, seed: int, trial_index: int) -> np.ndarray:
    """One trial's (num_users, max_rounds) gain matrix for a validated config."""
    rows = [
        sample_user_gains(config.mean_gains[i - 1], config.max_rounds, seed, i, trial_index, 1)[0]
        for i in range(1, config.num_users + 1)
    ]
    return np.vstack(rows)


@dataclass(frozen=True)
class EffectiveConfig:
    """Perfect-CSI-equivalent view of a scenario with estimation errors.

    The mean gains are reduced by the error variances and the residual
    error appears as extra Gaussian noise per user; with zero error
    variances this is the identity transform with unit noise.
    """

    config: SystemConfig
    noise_vars: tuple

    @property
    def mean_gains(self):
        return self.config.mean_gains

    @property
    def powers(self):
        return self.config.powers


def apply_imperfect_csi(config: SystemConfig) -> EffectiveConfig:
    """Fold channel-estimation error into effective gains and noise variances.

    Each user's effective mean gain is mean_gain - error_var and its noise
    variance becomes 1 + error_var * (total transmit power).  Downstream
    SINRs divide by that variance, which reduces the analysis to the
    perfect-CSI case.
    """
    gains = config.mean_gains
    errs = config.csi_error_vars if config.csi_error_vars is not None else (0.0,) * config.num_users
    if any(v >= g for v, g in zip(errs, gains)):
        raise ValueError("csi error variance must stay below the mean gain")
    total = config.total_power
    eff_gains = tuple(g - v for g, v in zip(gains, errs))
    noise = tuple(1.0 + v * total for v in errs)
    eff = replace(config, mean_gains=eff_gains, csi_error_vars=(0.0,) * config.num_users)
    return EffectiveConfig(config=eff, noise_vars=noise)
