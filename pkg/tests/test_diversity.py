import math

import numpy as np
import pytest

from harqnoma import (
    HarqScheme,
    SystemConfig,
    conditional_diversity,
    config_from_dict,
    empirical_diversity,
    pairwise_diversity,
    power_efficient_diversity,
    union_diversity,
    user_diversity,
    validate_config,
)

I, CC, IR = HarqScheme.TYPE_I, HarqScheme.CHASE, HarqScheme.INCREMENTAL


def fig5_config():
    return config_from_dict(
        {
            "num_users": 4,
            "max_rounds": 3,
            "rates": [2, 2, 2, 2],
            "mean_gains": [2, 1, 0.5, 1 / 3],
            "p1_watts": 1.0,
            "ratios": [2, 1.4, 4],
        }
    )


def test_pairwise_staircase_values():
    assert [pairwise_diversity(CC, 4, 1.0, c) for c in (0.4, 0.8, 1.2)] == [2, 3, 4]
    assert pairwise_diversity(I, 4, 1.0, 1.0) == 0
    assert pairwise_diversity(IR, 4, 1.0, 0.4) == 2
    assert pairwise_diversity(I, 4, 1.0, 1.2) == 4


def test_pairwise_interference_free_layer():
    for s in HarqScheme:
        assert pairwise_diversity(s, 5, 3.0, math.inf) == 5


def test_pairwise_rejects_bad_inputs():
    with pytest.raises(ValueError):
        pairwise_diversity(CC, 0, 1.0, 1.0)
    with pytest.raises(ValueError):
        pairwise_diversity(CC, 4, 1.0, -1.0)


def test_floor_snap_at_exact_quotients():
    # (2**1 - 1) / 0.1 evaluates to 9.999999999999998; the snap must land on
    # the mathematical value 10, which belongs to the lower-diversity side
    assert pairwise_diversity(CC, 12, 1.0, 0.1) == 2
    assert pairwise_diversity(CC, 4, 1.0, 0.5) == 2  # quotient exactly 2


def test_four_user_table():
    cfg = fig5_config()
    assert user_diversity(cfg, I).user_orders == (0, 0, 0, 3)
    assert user_diversity(cfg, CC).user_orders == (1, 1, 1, 3)
    assert user_diversity(cfg, IR).user_orders == (2, 2, 2, 3)


def test_user_orders_derive_from_layer_minimum():
    cfg = fig5_config()
    rep = user_diversity(cfg, CC)
    m = cfg.num_users
    for i in range(1, m + 1):
        assert rep.user_orders[i - 1] == min(rep.layer_orders[i - 1 :])
    # pairwise matrix repeats the layer values for every observer
    assert all(row == rep.layer_orders for row in rep.pairwise)


def test_scheme_ordering_on_full_grid():
    rates = [round(0.1 * i, 10) for i in range(1, 41)]
    ratios = [round(0.1 * i, 10) for i in range(1, 41)]
    for k in range(1, 7):
        for r in rates:
            for c in ratios:
                d_i = pairwise_diversity(I, k, r, c)
                d_cc = pairwise_diversity(CC, k, r, c)
                d_ir = pairwise_diversity(IR, k, r, c)
                assert d_i <= d_cc <= d_ir, (k, r, c)
                assert 0 <= d_i and d_ir <= k


def test_step_function_non_increasing_in_rate():
    rates = [0.05 * i for i in range(1, 90)]
    for s in HarqScheme:
        for c in (0.4, 1.0, 2.5):
            values = [pairwise_diversity(s, 4, r, c) for r in rates]
            assert all(a >= b for a, b in zip(values, values[1:]))


def test_full_diversity_iff_rate_below_log_ratio():
    rates = [round(0.1 * i, 10) for i in range(1, 41)]
    ratios = [round(0.1 * i, 10) for i in range(1, 41)]
    for k in (1, 3, 5):
        for r in rates:
            for c in ratios:
                full = r < math.log2(1 + c)
                for s in HarqScheme:
                    assert (pairwise_diversity(s, k, r, c) == k) == full, (s, k, r, c)


def test_multiuser_ordering_on_random_configs():
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = int(rng.integers(2, 6))
        gains = tuple(sorted(rng.uniform(0.2, 4.0, m), reverse=True))
        powers = tuple(rng.uniform(0.5, 20.0, m))
        rates = tuple(rng.uniform(0.2, 3.0, m))
        cfg = validate_config(SystemConfig(m, int(rng.integers(1, 6)), rates, gains, powers=powers))
        for s in HarqScheme:
            d = user_diversity(cfg, s).user_orders
            assert d[0] == d[1]
            assert all(a <= b for a, b in zip(d, d[1:]))


def test_orders_invariant_under_power_scaling():
    cfg = fig5_config()
    scaled = validate_config(
        SystemConfig(4, 3, cfg.rates, cfg.mean_gains, powers=tuple(37.0 * p for p in cfg.powers))
    )
    for s in HarqScheme:
        assert user_diversity(cfg, s).user_orders == user_diversity(scaled, s).user_orders


def test_conditional_diversity_values():
    assert conditional_diversity(CC, 4, 2, 1.0, 0.4) == 2
    assert conditional_diversity(I, 3, 1, 1.0, 1.2) == 3
    for s in HarqScheme:
        for c in (0.4, 0.9, 1.7):
            assert conditional_diversity(s, 4, 4, 1.0, c) == pairwise_diversity(s, 4, 1.0, c)
    with pytest.raises(ValueError, match="out of range"):
        conditional_diversity(CC, 4, 0, 1.0, 0.4)
    with pytest.raises(ValueError, match="out of range"):
        conditional_diversity(CC, 4, 5, 1.0, 0.4)


def test_power_efficient_orders_match_simple():
    for c in (0.4, 0.8, 1.2, 2.0):
        cfg = validate_config(
            SystemConfig(2, 4, (1.0, 1.0), (2.0, 1.0), powers=(1.0, c), strategy="power_efficient")
        )
        for s in HarqScheme:
            eff = power_efficient_diversity(cfg, s)
            simple = user_diversity(cfg, s)
            assert eff.user_orders == simple.user_orders
            assert eff.strategy == "power_efficient"
            assert len(eff.conditional_orders) == 4


def test_power_efficient_conditional_example():
    cfg = validate_config(
        SystemConfig(2, 4, (1.0, 1.0), (2.0, 1.0), powers=(1.0, 0.4), strategy="power_efficient")
    )
    rep = power_efficient_diversity(cfg, CC)
    assert rep.user_orders[1] == 2
    assert rep.conditional_orders == (3, 2, 2, 2)


def test_power_efficient_rejects_multiuser():
    with pytest.raises(ValueError, match="M=2"):
        power_efficient_diversity(fig5_config(), CC)


def test_empirical_diversity():
    assert empirical_diversity(2e-2, 2e-5, 10.0) == pytest.approx(3.0)
    assert empirical_diversity(1e-3, 1e-3, 5.0) == 0.0
    # exact power law p = C * P^-2 read off at two powers
    delta_db = 7.0
    p_low = 0.31
    p_high = p_low * 10 ** (-2 * delta_db / 10)
    assert empirical_diversity(p_low, p_high, delta_db) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        empirical_diversity(0.0, 1e-3, 10.0)
    with pytest.raises(ValueError):
        empirical_diversity(1e-3, 1e-4, 0.0)


def test_union_diversity():
    assert union_diversity([4, 2, 3]) == 2
    assert union_diversity([5]) == 5
    assert union_diversity([2, 6]) == 2
    with pytest.raises(ValueError):
        union_diversity([])
