"""Closed-form and bounded outage analysis for the combining schemes.

The chase-combining and incremental-redundancy outage probabilities reduce
to K-dimensional integrals over the cube (0, c]^K: a weight
exp(-(c/a) * sum 1/z_k) / prod z_k^2 restricted by a step condition on
sum z_k (chase) or on prod (1+c-z_k) (incremental), where a is the product
of mean channel gain and interferer power.  Outside a few exactly solvable
regimes, lower/upper bounds follow from a domain-partition recursion that
peels off one dimension per level.  A uniform Monte Carlo integrator over
the same cube serves as the independent brute-force oracle.

Everything is computed in log space so that high-power sweeps cannot
overflow; public results are returned on the linear scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .channel import apply_imperfect_csi
from .model import HarqScheme, SystemConfig

LOG_ZERO = float("-inf")


class DeltaPolicyError(ValueError):
    """Raised when a partition policy returns a value outside (0, c]."""


def cc_midpoint_delta(rounds: int, threshold: float, ratio: float, scale: float) -> float:
    """Default partition offset for the sum kernel: half the gap between the
    threshold and the next lattice multiple of the power ratio."""
    return (ratio - math.fmod(threshold, ratio)) / 2.0


def ir_midpoint_delta(rounds: int, threshold: float, ratio: float, scale: float) -> float:
    """Default partition offset for the product kernel: the geometric analogue
    of `cc_midpoint_delta` on the log-threshold lattice."""
    r = math.fmod(math.log(threshold), math.log1p(ratio))
    return (1.0 + ratio - math.exp(r)) / 2.0


@dataclass(frozen=True)
class KernelParams:
    """Arguments of the outage kernels.

    rounds     -- number of HARQ rounds K
    threshold  -- linear decoding threshold (sum kernel: 2**rate - 1,
                  product kernel: 2**rate)
    ratio      -- power ratio of the target layer to its interferers
    mean_gain  -- average channel gain of the observing user
    p_base     -- aggregate interferer power (the reference power for a
                  two-user system)
    delta_policy -- optional per-level partition rule (rounds, threshold,
                  ratio, scale) -> delta in (0, ratio]
    """

    rounds: int
    threshold: float
    ratio: float
    mean_gain: float
    p_base: float
    delta_policy: object = None

    def __post_init__(self):
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValueError("rounds must be a positive integer")
        if self.ratio <= 0 or self.mean_gain <= 0 or self.p_base <= 0:
            raise ValueError("ratio, mean_gain and p_base must be positive")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    @property
    def scale(self) -> float:
        """Product of mean gain and interferer power; the kernels depend on it only."""
        return self.mean_gain * self.p_base


@dataclass(frozen=True)
class BoundInterval:
    """Analytic lower/upper bracket for a kernel value or an outage probability."""

    lower: float
    upper: float
    quantity: str
    params: dict = field(default_factory=dict)
    log_lower: float = LOG_ZERO
    log_upper: float = LOG_ZERO

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper or math.isnan(self.upper)):
            raise ValueError("interval must satisfy 0 <= lower <= upper")

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class OracleEstimate:
    """Monte Carlo integral estimate with its standard error."""

    value: float
    std_error: float
    samples: int
    seed: int


def _delta(params: KernelParams, default, rounds: int, threshold: float) -> float:
    policy = params.delta_policy if params.delta_policy is not None else default
    d = policy(rounds, threshold, params.ratio, params.scale)
    if not 0.0 < d <= params.ratio:
        raise DeltaPolicyError(f"partition offset {d} outside (0, {params.ratio}]")
    return d


def _log_diff_exp(x: float, y: float) -> float:
    # log(e^x - e^y) for x > y.
    return x + math.log1p(-math.exp(y - x))


# ---------------------------------------------------------------------------
# sum kernel (chase combining)
# ---------------------------------------------------------------------------

def _cc_log_exact(k: int, g: float, c: float, a: float):
    """Log of the sum kernel in its exactly solvable regimes, else None."""
    if g <= 0.0:
        return LOG_ZERO
    if g >= k * c:
        return k * (math.log(a) - math.log(c)) - k / a
    if k == 1:
        # single integral of the weight over [c-g, c]
        x = -1.0 / a
        y = -c / (a * (c - g))
        return math.log(a) - math.log(c) + _log_diff_exp(x, y)
    return None


def _cc_log_bounds(params: KernelParams, k: int, g: float):
    c, a = params.ratio, params.scale
    exact = _cc_log_exact(k, g, c, a)
    if exact is not None:
        return exact, exact
    if g < c:  # k >= 2, constant-order regime: closed bracket
        gk = g / k
        llo = k * math.log(gk / (c * (c - gk))) - k * c / (a * (c - gk))
        lup = k * math.log(g / (c * (c - g))) - k / a
        return min(llo, lup), lup
    # c <= g < k*c with k >= 2: peel one dimension
    d = _delta(params, cc_midpoint_delta, k, g)
    lo_tail, _ = _cc_log_bounds(params, k - 1, g - c)
    llo = math.log(a) - math.log(c) - 1.0 / a + lo_tail
    _, up_same = _cc_log_bounds(params, k - 1, g)
    _, up_shift = _cc_log_bounds(params, k - 1, g - c + d)
    t_same = LOG_ZERO if d >= c else math.log(c - d) - math.log(c * d) + up_same
    t_shift = math.log(a) - math.log(c) + up_shift
    lup = -1.0 / a + np.logaddexp(t_same, t_shift)
    return min(llo, lup), lup


def cc_kernel_exact(params: KernelParams) -> float:
    """Sum-kernel value in an exactly solvable regime.

    Regimes: threshold <= 0 (kernel vanishes), threshold >= rounds*ratio
    (step condition always met), or a single round.  Raises ValueError
    elsewhere.
    """
    v = _cc_log_exact(params.rounds, params.threshold, params.ratio, params.scale)
    if v is None:
        raise ValueError("parameters outside the exactly solvable regimes")
    return math.exp(v)


def cc_kernel_bounds(params: KernelParams) -> BoundInterval:
    """Lower/upper bracket of the sum kernel; degenerate in exact regimes."""
    llo, lup = _cc_log_bounds(params, params.rounds, params.threshold)
    return BoundInterval(
        lower=math.exp(llo),
        upper=math.exp(lup),
        quantity="cc_kernel",
        params=_kernel_tags(params),
        log_lower=llo,
        log_upper=lup,
    )


# ---------------------------------------------------------------------------
# product kernel (incremental redundancy)
# ---------------------------------------------------------------------------

def _ir_log_exact(k: int, g: float, c: float, a: float):
    if g <= 1.0:
        return LOG_ZERO
    if g >= (1.0 + c) ** k:
        return k * (math.log(a) - math.log(c)) - k / a
    if k == 1:
        x = -1.0 / a
        y = -c / (a * (1.0 + c - g))
        return math.log(a) - math.log(c) + _log_diff_exp(x, y)
    return None


def _ir_log_bounds(params: KernelParams, k: int, g: float):
    c, a = params.ratio, params.scale
    exact = _ir_log_exact(k, g, c, a)
    if exact is not None:
        return exact, exact
    if g < 1.0 + c:  # k >= 2, constant-order regime
        r = g ** (1.0 / k)
        llo = k * math.log((r - 1.0) / (c * (1.0 + c - r))) - k * c / (a * (1.0 + c - r))
        lup = k * math.log((g - 1.0) / (c * (1.0 + c - g))) - k / a
        return min(llo, lup), lup
    # (1+c) <= g < (1+c)**k with k >= 2
    d = _delta(params, ir_midpoint_delta, k, g)
    lo_tail, _ = _ir_log_bounds(params, k - 1, g / (1.0 + c))
    llo = math.log(a) - math.log(c) - 1.0 / a + lo_tail
    _, up_same = _ir_log_bounds(params, k - 1, g)
    _, up_shift = _ir_log_bounds(params, k - 1, g / (1.0 + c - d))
    t_same = LOG_ZERO if d >= c else math.log(c - d) - math.log(c * d) + up_same
    t_shift = math.log(a) - math.log(c) + up_shift
    lup = -1.0 / a + np.logaddexp(t_same, t_shift)
    return min(llo, lup), lup


def ir_kernel_exact(params: KernelParams) -> float:
    """Product-kernel value in an exactly solvable regime (see cc_kernel_exact)."""
    v = _ir_log_exact(params.rounds, params.threshold, params.ratio, params.scale)
    if v is None:
        raise ValueError("parameters outside the exactly solvable regimes")
    return math.exp(v)


def ir_kernel_bounds(params: KernelParams) -> BoundInterval:
    llo, lup = _ir_log_bounds(params, params.rounds, params.threshold)
    return BoundInterval(
        lower=math.exp(llo),
        upper=math.exp(lup),
        quantity="ir_kernel",
        params=_kernel_tags(params),
        log_lower=llo,
        log_upper=lup,
    )


def _kernel_tags(params: KernelParams) -> dict:
    return {
        "rounds": params.rounds,
        "threshold": params.threshold,
        "ratio": params.ratio,
        "mean_gain": params.mean_gain,
        "p_base": params.p_base,
    }


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------

def _kernel_oracle(params: KernelParams, samples: int, seed: int, product_form: bool) -> OracleEstimate:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    k, g, c, a = params.rounds, params.threshold, params.ratio, params.scale
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    remaining = samples
    while remaining > 0:
        m = min(remaining, 2_000_000)
        z = c * (1.0 - rng.random((m, k)))  # uniform on (0, c]
        weight = np.exp(-(c / a) * np.sum(1.0 / z, axis=1)) / np.prod(z, axis=1) ** 2
        if product_form:
            inside = np.prod(1.0 + c - z, axis=1) <= g
        else:
            inside = g + np.sum(z, axis=1) - k * c >= 0.0
        f = weight * inside
        total += float(np.sum(f))
        total_sq += float(np.sum(f * f))
        remaining -= m
    vol = c**k
    mean = total / samples
    var = max(0.0, (total_sq - samples * mean * mean) / max(1, samples - 1))
    return OracleEstimate(
        value=vol * mean,
        std_error=vol * math.sqrt(var / samples),
        samples=samples,
        seed=seed,
    )


def cc_kernel_oracle(params: KernelParams, samples: int = 1_000_000, seed: int = 0) -> OracleEstimate:
    """Uniform Monte Carlo integration of the sum kernel over (0, c]^K."""
    return _kernel_oracle(params, samples, seed, product_form=False)


def ir_kernel_oracle(params: KernelParams, samples: int = 1_000_000, seed: int = 0) -> OracleEstimate:
    """Uniform Monte Carlo integration of the product kernel over (0, c]^K."""
    return _kernel_oracle(params, samples, seed, product_form=True)


# ---------------------------------------------------------------------------
# outage probabilities
# ---------------------------------------------------------------------------

def type_i_outage(k_rounds: int, rate: float, c_ratio: float, mean_gain: float, power_base: float) -> float:
    """Closed-form per-layer outage for independently decoded rounds.

    `power_base` is the aggregate interferer power for a finite ratio; for
    the interference-free layer (c_ratio = inf) pass the layer's own power.
    """
    if k_rounds < 1:
        raise ValueError("k_rounds must be >= 1")
    if mean_gain <= 0 or power_base <= 0:
        raise ValueError("mean_gain and power_base must be positive")
    if rate < 0:
        raise ValueError("rate must be non-negative")
    thr = 2.0**rate - 1.0
    if thr <= 0.0:
        return 0.0
    if math.isinf(c_ratio):
        per_round = -math.expm1(-thr / (mean_gain * power_base))
    else:
        if thr / c_ratio >= 1.0:
            return 1.0
        per_round = -math.expm1(-thr / (mean_gain * power_base * (c_ratio - thr)))
    return per_round**k_rounds


def type_i_user_outage(config: SystemConfig, user: int) -> float:
    """Exact outage of a user under independent per-round decoding.

    The user fails a round only if its gain is below every layer's
    per-round threshold, so the union over layers collapses to the largest
    threshold and the outage stays in closed form.
    """
    eff = apply_imperfect_csi(config)
    cfg = eff.config
    if not 1 <= user <= cfg.num_users:
        raise ValueError(f"user {user} out of range 1..{cfg.num_users}")
    v = eff.noise_vars[user - 1]
    gain = cfg.mean_gains[user - 1]
    t_max = 0.0
    for j in range(user, cfg.num_users + 1):
        thr = 2.0 ** cfg.rates[j - 1] - 1.0
        if thr <= 0.0:
            continue
        margin = cfg.powers[j - 1] - thr * cfg.interferer_power(j)
        if margin <= 0.0:
            return 1.0
        t_max = max(t_max, thr * v / margin)
    if t_max == 0.0:
        return 0.0
    return (-math.expm1(-t_max / gain)) ** cfg.max_rounds


def _layer_log_prefactor(k: int, ratio: float, scale: float) -> float:
    return k * (math.log(ratio) - math.log(scale)) + k / scale


def _clip_prob(x: float) -> float:
    return min(1.0, max(0.0, x))


def _layer_interval(config: SystemConfig, eff, user: int, layer: int, scheme: HarqScheme, delta_policy):
    """[lower, upper] for the event that `user` fails to decode `layer`."""
    cfg = eff.config
    k = cfg.max_rounds
    rate = cfg.rates[layer - 1]
    v = eff.noise_vars[user - 1]
    gain = cfg.mean_gains[user - 1] / v  # unit-noise equivalent gain
    if layer == 1:
        a1 = gain * cfg.powers[0]
        thr = 2.0**rate - 1.0
        if thr <= 0.0:
            return 0.0, 0.0
        if scheme is HarqScheme.CHASE:
            # sum of k exponentials: regularized incomplete gamma CDF
            p = float(gammainc(k, thr / a1))
            return p, p
        # incremental redundancy: bracket the product event by the sum event
        # (upper) and by the all-rounds-below event (lower)
        lo = (-math.expm1(-(2.0 ** (rate / k) - 1.0) / a1)) ** k
        up = float(gammainc(k, thr / a1))
        return lo, min(1.0, up)
    q = cfg.interferer_power(layer)
    ratio = cfg.powers[layer - 1] / q
    scale = gain * q
    if scheme is HarqScheme.CHASE:
        thr = 2.0**rate - 1.0
        if thr <= 0.0:
            return 0.0, 0.0
        if thr >= k * ratio:
            return 1.0, 1.0  # step condition always met: certain outage
        params = KernelParams(k, thr, ratio, gain, q, delta_policy)
        llo, lup = _cc_log_bounds(params, k, thr)
    else:
        thr = 2.0**rate
        if thr <= 1.0:
            return 0.0, 0.0
        if thr >= (1.0 + ratio) ** k:
            return 1.0, 1.0
        params = KernelParams(k, thr, ratio, gain, q, delta_policy)
        llo, lup = _ir_log_bounds(params, k, thr)
    lpre = _layer_log_prefactor(k, ratio, scale)
    return _clip_prob(math.exp(lpre + llo)), _clip_prob(math.exp(lpre + lup))


def _outage_bounds(config: SystemConfig, user: int, scheme: HarqScheme, delta_policy, quantity: str) -> BoundInterval:
    if not 1 <= user <= config.num_users:
        raise ValueError(f"user {user} out of range 1..{config.num_users}")
    eff = apply_imperfect_csi(config)
    lowers, uppers = [], []
    for layer in range(user, config.num_users + 1):
        lo, up = _layer_interval(config, eff, user, layer, scheme, delta_policy)
        lowers.append(lo)
        uppers.append(up)
    # union of per-layer outage events: at least the largest single event,
    # at most the sum of all of them
    lower = max(lowers)
    upper = min(1.0, sum(uppers))
    upper = max(upper, lower)
    return BoundInterval(
        lower=lower,
        upper=upper,
        quantity=quantity,
        params={"user": user, "rounds": config.max_rounds},
        log_lower=math.log(lower) if lower > 0 else LOG_ZERO,
        log_upper=math.log(upper) if upper > 0 else LOG_ZERO,
    )


def cc_outage_bounds(config: SystemConfig, user: int, delta_policy=None) -> BoundInterval:
    """Outage bracket for a user under chase combining."""
    return _outage_bounds(config, user, HarqScheme.CHASE, delta_policy, "outage_cc")


def ir_outage_bounds(config: SystemConfig, user: int, delta_policy=None) -> BoundInterval:
    """Outage bracket for a user under incremental redundancy."""
    return _outage_bounds(config, user, HarqScheme.INCREMENTAL, delta_policy, "outage_ir")
