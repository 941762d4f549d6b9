"""Command-line front end.

Verbs:
    run <spec.json>        sweep a user-provided experiment plan
    figure <id>            run a built-in plan (fig1..fig5)
    diversity <spec.json>  closed-form diversity table for a scenario

Common flags: --trials, --seed, --out, --format {csv,json}, --workers.
The worker count never changes any output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import experiments
from .diversity import user_diversity
from .model import ALL_SCHEMES, ConfigError, HarqScheme, config_from_dict


def _add_common(parser):
    parser.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    parser.add_argument("--seed", type=int, default=None, help="base RNG seed")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--workers", type=int, default=None, help="parallel chunk workers")


def _write(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_rows(rows, violations, args) -> int:
    text = experiments.rows_to_csv(rows) if args.format == "csv" else experiments.rows_to_json(rows)
    _write(text, args.out)
    if violations:
        sys.stderr.write(f"{len(violations)} sandwich check(s) failed beyond CI slack:\n")
        for v in violations:
            sys.stderr.write(f"  {v}\n")
        return 2
    return 0


def _cmd_run(args) -> int:
    spec = experiments.load_experiment(args.spec)
    if args.trials is not None:
        if "mc" in spec.outputs and args.trials < experiments.MIN_MC_TRIALS:
            raise experiments.ExperimentError(
                f"trials must be >= {experiments.MIN_MC_TRIALS} for MC outputs"
            )
        spec = replace(spec, trials=args.trials)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    rows, violations = experiments.run_rows(spec, workers=args.workers)
    return _emit_rows(rows, violations, args)


def _cmd_figure(args) -> int:
    plans = experiments.figure_plan(args.figure_id, trials=args.trials, seed=args.seed)
    rows, violations = experiments.run_plans(plans, workers=args.workers)
    return _emit_rows(rows, violations, args)


def _cmd_diversity(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    config = config_from_dict(data)
    schemes = (
        tuple(HarqScheme(s) for s in data["schemes"]) if "schemes" in data else ALL_SCHEMES
    )
    digest = experiments.config_hash(config)
    if args.format == "json":
        payload = []
        for scheme in schemes:
            report = user_diversity(config, scheme)
            for user in range(1, config.num_users + 1):
                payload.append(
                    {
                        "scheme": scheme.value,
                        "user": user,
                        "d_user": report.user_orders[user - 1],
                        "d_layer": report.layer_orders[user - 1],
                        "config_hash": digest,
                    }
                )
        _write(json.dumps(payload, indent=2) + "\n", args.out)
        return 0
    lines = ["scheme,user,d_user,d_layer,config_hash"]
    for scheme in schemes:
        report = user_diversity(config, scheme)
        for user in range(1, config.num_users + 1):
            lines.append(
                f"{scheme.value},{user},{report.user_orders[user - 1]},"
                f"{report.layer_orders[user - 1]},{digest}"
            )
    _write("\n".join(lines) + "\n", args.out)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="harq-noma",
        description="Outage probability and diversity analysis of HARQ-aided downlink NOMA.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment plan file")
    p_run.add_argument("spec", help="path to the plan JSON")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_fig = sub.add_parser("figure", help="run a built-in figure plan")
    p_fig.add_argument("figure_id", help=f"one of: {', '.join(experiments.FIGURE_IDS)}")
    _add_common(p_fig)
    p_fig.set_defaults(func=_cmd_figure)

    p_div = sub.add_parser("diversity", help="closed-form diversity table")
    p_div.add_argument("spec", help="path to a scenario JSON")
    _add_common(p_div)
    p_div.set_defaults(func=_cmd_diversity)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, experiments.ExperimentError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
