"""Outage probability and diversity-order analysis of HARQ-aided downlink NOMA.

Monte Carlo simulation, closed forms, and recursive analytic bounds for
Type I, chase-combining and incremental-redundancy retransmissions over
Rayleigh fading, including multi-user, power-efficient and imperfect-CSI
variants.
"""

from .analytic import (
    BoundInterval,
    DeltaPolicyError,
    KernelParams,
    OracleEstimate,
    cc_kernel_bounds,
    cc_kernel_exact,
    cc_kernel_oracle,
    cc_midpoint_delta,
    cc_outage_bounds,
    ir_kernel_bounds,
    ir_kernel_exact,
    ir_kernel_oracle,
    ir_midpoint_delta,
    ir_outage_bounds,
    type_i_outage,
    type_i_user_outage,
)
from .channel import (
    EffectiveConfig,
    apply_imperfect_csi,
    sample_gains,
    sample_user_gains,
    uniform_stream,
)
from .diversity import (
    DiversityReport,
    conditional_diversity,
    empirical_diversity,
    pairwise_diversity,
    power_efficient_diversity,
    union_diversity,
    user_diversity,
)
from .model import (
    ALL_SCHEMES,
    POWER_EFFICIENT,
    SIMPLE,
    ConfigError,
    HarqScheme,
    PowerRatios,
    SystemConfig,
    config_from_dict,
    config_to_dict,
    db_to_watts,
    load_config,
    materialize_powers,
    power_ratios,
    validate_config,
    watts_to_db,
)
from .montecarlo import (
    OutageEstimate,
    estimate_outage,
    estimate_outage_power_efficient,
    simulate_outage_flags,
    simulate_power_efficient_flags,
    wilson_interval,
)
from .mutual_info import (
    AccumulatedInfo,
    accumulate,
    accumulate_power_efficient,
    accumulated_bits,
    per_round_sinr,
)

__version__ = "0.1.0"
