"""Experiment plans: sweeps over power or rate grids with MC, bound,
closed-form and diversity outputs collected into stable tabular rows.

A plan file is the flat scenario JSON plus sweep settings, e.g.:

    {"num_users": 2, "max_rounds": 4, "rates": [1, 1],
     "mean_gains": [2, 1], "p1_watts": 1.0, "ratios": [1.2],
     "sweep_p1_dbw": {"start": -10, "stop": 30, "step": 2},
     "schemes": ["I", "CC"], "users": [2],
     "trials": 1000000, "seed": 7, "outputs": "all"}

Row order is deterministic: (variant, scheme, user, sweep index).  Worker
count only parallelizes the Monte Carlo chunks and never changes a value.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

from . import analytic, diversity, montecarlo
from .model import (
    ALL_SCHEMES,
    HarqScheme,
    SystemConfig,
    config_from_dict,
    config_to_dict,
    db_to_watts,
    materialize_powers,
    power_ratios,
    watts_to_db,
)

OUTPUT_KINDS = ("mc", "bounds", "closed_form", "diversity")
MIN_MC_TRIALS = 1000
FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5")
DEFAULT_FIGURE_TRIALS = 1_000_000

CSV_COLUMNS = (
    "variant",
    "scheme",
    "user",
    "p1_dbw",
    "rate",
    "p_mc",
    "ci_low",
    "ci_high",
    "p_lower_bound",
    "p_upper_bound",
    "p_closed_form",
    "d_closed_form",
    "d_tilde",
    "config_hash",
)


class ExperimentError(ValueError):
    """Raised for malformed experiment plans."""


@dataclass(frozen=True)
class SweepAxis:
    kind: str  # "p1_dbw" or "r2"
    values: tuple


@dataclass(frozen=True)
class ExperimentSpec:
    config: SystemConfig
    sweep: SweepAxis
    schemes: tuple
    users: tuple
    trials: int
    seed: int
    outputs: tuple
    variant: str = ""


@dataclass(frozen=True)
class ResultRow:
    variant: str
    scheme: str
    user: int
    p1_dbw: float
    rate: float
    p_mc: float | None
    ci_low: float | None
    ci_high: float | None
    p_lower_bound: float | None
    p_upper_bound: float | None
    p_closed_form: float | None
    d_closed_form: int | None
    d_tilde: float | None
    config_hash: str


def config_hash(config: SystemConfig) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _grid(start: float, stop: float, step: float) -> tuple:
    if step <= 0:
        raise ExperimentError("sweep step must be positive")
    values = []
    v = float(start)
    while v <= stop + 1e-9:
        values.append(v)
        v = start + (len(values)) * step
    if not values:
        raise ExperimentError("sweep produced no points")
    return tuple(values)


def _parse_outputs(raw) -> tuple:
    if raw in (None, "all"):
        return OUTPUT_KINDS
    items = (raw,) if isinstance(raw, str) else tuple(raw)
    for item in items:
        if item not in OUTPUT_KINDS:
            raise ExperimentError(f"unknown output kind {item!r}")
    return items


def _parse_schemes(raw) -> tuple:
    if raw is None:
        return ALL_SCHEMES
    return tuple(HarqScheme(s) for s in raw)


def experiment_from_dict(data: dict) -> ExperimentSpec:
    config = config_from_dict(data)
    if "sweep_p1_dbw" in data and "sweep_r2" in data:
        raise ExperimentError("give one sweep axis only")
    if "sweep_p1_dbw" in data:
        g = data["sweep_p1_dbw"]
        sweep = SweepAxis("p1_dbw", _grid(g["start"], g["stop"], g["step"]))
    elif "sweep_r2" in data:
        if config.num_users < 2:
            raise ExperimentError("rate sweep needs at least two users")
        g = data["sweep_r2"]
        sweep = SweepAxis("r2", _grid(g["start"], g["stop"], g["step"]))
    else:
        sweep = SweepAxis("p1_dbw", _grid(-10.0, 40.0, 2.0))
    schemes = _parse_schemes(data.get("schemes"))
    users = tuple(int(u) for u in data.get("users", range(1, config.num_users + 1)))
    if any(not 1 <= u <= config.num_users for u in users):
        raise ExperimentError("users out of range")
    outputs = _parse_outputs(data.get("outputs"))
    trials = int(data.get("trials", montecarlo.DEFAULT_TRIALS))
    if "mc" in outputs and trials < MIN_MC_TRIALS:
        raise ExperimentError(f"trials must be >= {MIN_MC_TRIALS} for MC outputs")
    seed = int(data.get("seed", 0))
    return ExperimentSpec(
        config=config,
        sweep=sweep,
        schemes=schemes,
        users=users,
        trials=trials,
        seed=seed,
        outputs=outputs,
        variant=str(data.get("variant", "")),
    )


def load_experiment(path) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return experiment_from_dict(json.load(fh))


def _config_at(spec: ExperimentSpec, value: float) -> SystemConfig:
    cfg = spec.config
    if spec.sweep.kind == "p1_dbw":
        ratios = power_ratios(cfg).values[1:]
        powers = materialize_powers(db_to_watts(value), ratios)
        return replace(cfg, powers=powers)
    rates = list(cfg.rates)
    rates[1] = float(value)
    return replace(cfg, rates=tuple(rates))


def _sandwich_ok(p_hat: float, lower: float, upper: float, trials: int) -> bool:
    """MC estimate consistent with the analytic bracket: the slack is three
    binomial standard errors evaluated at the bracket endpoints."""
    slack_lo = 3.0 * math.sqrt(lower * (1.0 - lower) / trials)
    slack_hi = 3.0 * math.sqrt(upper * (1.0 - upper) / trials)
    return (lower - slack_lo) <= p_hat <= (upper + slack_hi)


def run_rows(spec: ExperimentSpec, workers: int | None = None):
    """All result rows for one plan plus a list of sandwich violations."""
    rows = []
    violations = []
    for scheme in spec.schemes:
        for user in spec.users:
            prev = None  # (p1_dbw, p_mc) of the previous sweep point
            for value in spec.sweep.values:
                cfg = _config_at(spec, value)
                p1_dbw = value if spec.sweep.kind == "p1_dbw" else watts_to_db(cfg.powers[0])
                p_mc = ci_low = ci_high = None
                if "mc" in spec.outputs:
                    est = montecarlo.estimate_outage(
                        cfg, user, scheme, trials=spec.trials, seed=spec.seed, workers=workers
                    )
                    p_mc, ci_low, ci_high = est.p_hat, est.ci_low, est.ci_high
                lower = upper = None
                if "bounds" in spec.outputs and scheme is not HarqScheme.TYPE_I:
                    fn = (
                        analytic.cc_outage_bounds
                        if scheme is HarqScheme.CHASE
                        else analytic.ir_outage_bounds
                    )
                    interval = fn(cfg, user)
                    lower, upper = interval.lower, interval.upper
                closed = None
                if "closed_form" in spec.outputs and scheme is HarqScheme.TYPE_I:
                    closed = analytic.type_i_user_outage(cfg, user)
                d_closed = None
                if "diversity" in spec.outputs:
                    d_closed = diversity.user_diversity(cfg, scheme).user_orders[user - 1]
                d_tilde = None
                if p_mc is not None and spec.sweep.kind == "p1_dbw" and prev is not None:
                    prev_db, prev_p = prev
                    if prev_p and p_mc and p1_dbw > prev_db:
                        d_tilde = diversity.empirical_diversity(prev_p, p_mc, p1_dbw - prev_db)
                if p_mc is not None:
                    prev = (p1_dbw, p_mc)
                if p_mc is not None and lower is not None:
                    if not _sandwich_ok(p_mc, lower, upper, spec.trials):
                        violations.append(
                            f"{spec.variant or 'run'} {scheme} user={user} "
                            f"p1_dbw={p1_dbw:g}: p_mc={p_mc:.6g} outside "
                            f"[{lower:.6g}, {upper:.6g}]"
                        )
                rows.append(
                    ResultRow(
                        variant=spec.variant,
                        scheme=scheme.value,
                        user=user,
                        p1_dbw=p1_dbw,
                        rate=cfg.rates[user - 1],
                        p_mc=p_mc,
                        ci_low=ci_low,
                        ci_high=ci_high,
                        p_lower_bound=lower,
                        p_upper_bound=upper,
                        p_closed_form=closed,
                        d_closed_form=d_closed,
                        d_tilde=d_tilde,
                        config_hash=config_hash(cfg),
                    )
                )
    return rows, violations


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def rows_to_json(rows) -> str:
    payload = [{col: getattr(row, col) for col in CSV_COLUMNS} for row in rows]
    return json.dumps(payload, indent=2) + "\n"


# ---------------------------------------------------------------------------
# built-in figure plans
# ---------------------------------------------------------------------------

def _two_user(c: float) -> dict:
    return {
        "num_users": 2,
        "max_rounds": 4,
        "rates": [1.0, 1.0],
        "mean_gains": [2.0, 1.0],
        "p1_watts": 1.0,
        "ratios": [c],
    }


def figure_plan(figure_id: str, trials: int | None = None, seed: int | None = None):
    """Built-in sweep plans reproducing the headline outage and diversity figures."""
    if figure_id not in FIGURE_IDS:
        raise ExperimentError(f"unknown figure {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}")
    trials = DEFAULT_FIGURE_TRIALS if trials is None else trials
    seed = 1 if seed is None else seed
    sweep = {"start": -10, "stop": 30, "step": 2}

    def build(extra, variant):
        return experiment_from_dict({**extra, "trials": trials, "seed": seed, "variant": variant})

    if figure_id == "fig1":
        return [
            build(
                {**_two_user(c), "sweep_p1_dbw": sweep, "schemes": ["I"], "users": [2],
                 "outputs": ["mc", "closed_form", "diversity"]},
                f"c={c:g}",
            )
            for c in (0.8, 1.0, 1.2)
        ]
    if figure_id in ("fig2", "fig3"):
        scheme = "CC" if figure_id == "fig2" else "IR"
        return [
            build(
                {**_two_user(c), "sweep_p1_dbw": sweep, "schemes": [scheme], "users": [2],
                 "outputs": ["mc", "bounds", "diversity"]},
                f"c={c:g}",
            )
            for c in (0.4, 0.8, 1.2)
        ]
    if figure_id == "fig4":
        return [
            build(
                {**_two_user(1.2), "sweep_r2": {"start": 0.1, "stop": 4.0, "step": 0.1},
                 "schemes": ["I", "CC", "IR"], "users": [2], "outputs": ["diversity"]},
                "c=1.2",
            )
        ]
    # fig5: four users, three rounds, layered power ratios
    return [
        build(
            {
                "num_users": 4,
                "max_rounds": 3,
                "rates": [2.0, 2.0, 2.0, 2.0],
                "mean_gains": [2.0, 1.0, 0.5, 1.0 / 3.0],
                "p1_watts": 1.0,
                "ratios": [2.0, 1.4, 4.0],
                "sweep_p1_dbw": {"start": -10, "stop": 20, "step": 2},
                "schemes": ["I", "CC", "IR"],
                "users": [1, 2, 3, 4],
                "outputs": ["mc", "bounds", "diversity"],
            },
            "m4",
        )
    ]


def run_plans(plans, workers: int | None = None):
    rows, violations = [], []
    for plan in plans:
        r, v = run_rows(plan, workers=workers)
        rows.extend(r)
        violations.extend(v)
    return rows, violations
