import json

import pytest

from harqnoma.cli import main
from harqnoma.experiments import (
    ExperimentError,
    _sandwich_ok,
    experiment_from_dict,
    figure_plan,
    run_rows,
)


def spec_dict(**kw):
    base = {
        "num_users": 2,
        "max_rounds": 4,
        "rates": [1, 1],
        "mean_gains": [2, 1],
        "p1_watts": 1.0,
        "ratios": [1.2],
        "sweep_p1_dbw": {"start": 0, "stop": 10, "step": 5},
        "schemes": ["I", "CC"],
        "users": [2],
        "trials": 20_000,
        "seed": 7,
        "outputs": "all",
    }
    base.update(kw)
    return base


def write_spec(tmp_path, name="spec.json", **kw):
    path = tmp_path / name
    path.write_text(json.dumps(spec_dict(**kw)))
    return str(path)


# ---------------------------------------------------------------------------
# plan parsing
# ---------------------------------------------------------------------------

def test_spec_validation_errors():
    with pytest.raises(ExperimentError, match="one sweep axis"):
        experiment_from_dict(spec_dict(sweep_r2={"start": 0.1, "stop": 1, "step": 0.1}))
    with pytest.raises(ExperimentError, match="trials"):
        experiment_from_dict(spec_dict(trials=0))
    with pytest.raises(ExperimentError, match="unknown output"):
        experiment_from_dict(spec_dict(outputs=["mc", "plots"]))
    with pytest.raises(ExperimentError, match="users"):
        experiment_from_dict(spec_dict(users=[3]))
    with pytest.raises(ExperimentError, match="step"):
        experiment_from_dict(spec_dict(sweep_p1_dbw={"start": 0, "stop": 10, "step": 0}))
    # diversity-only plans may use any trial count
    spec = experiment_from_dict(spec_dict(trials=1, outputs=["diversity"]))
    assert spec.trials == 1


def test_grid_is_inclusive():
    spec = experiment_from_dict(spec_dict())
    assert spec.sweep.values == (0.0, 5.0, 10.0)


def test_sandwich_check():
    # zero estimate is consistent with a tiny positive lower bound
    assert _sandwich_ok(0.0, 1e-11, 1e-6, 10**6)
    # an estimate far above the upper bound is not
    assert not _sandwich_ok(0.5, 1e-3, 2e-3, 10**6)
    assert _sandwich_ok(1.5e-3, 1e-3, 2e-3, 10**6)


def test_rows_have_slope_estimates(tmp_path):
    spec = experiment_from_dict(spec_dict(schemes=["I"], trials=50_000))
    rows, violations = run_rows(spec)
    assert violations == []
    assert rows[0].d_tilde is None
    assert rows[1].d_tilde is not None  # both neighboring estimates are positive
    assert rows[0].p_closed_form is not None
    assert rows[0].d_closed_form == 4


# ---------------------------------------------------------------------------
# CLI behaviour
# ---------------------------------------------------------------------------

def test_run_outputs_are_byte_identical(tmp_path):
    spec = write_spec(tmp_path)
    a, b, c = (str(tmp_path / n) for n in ("a.csv", "b.csv", "c.csv"))
    assert main(["run", spec, "--out", a]) == 0
    assert main(["run", spec, "--out", b]) == 0
    assert main(["run", spec, "--out", c, "--workers", "4"]) == 0
    data = open(a, "rb").read()
    assert data == open(b, "rb").read()
    assert data == open(c, "rb").read()
    header = data.decode().splitlines()[0]
    assert header.startswith("variant,scheme,user,p1_dbw,rate,p_mc")


def test_run_json_format(tmp_path):
    spec = write_spec(tmp_path)
    out = str(tmp_path / "rows.json")
    assert main(["run", spec, "--out", out, "--format", "json"]) == 0
    rows = json.loads(open(out).read())
    assert len(rows) == 6  # 2 schemes x 1 user x 3 sweep points
    assert {r["scheme"] for r in rows} == {"I", "CC"}
    assert all(r["config_hash"] for r in rows)


def test_trials_zero_is_rejected(tmp_path, capsys):
    spec = write_spec(tmp_path, trials=0)
    assert main(["run", spec]) == 1
    assert "trials" in capsys.readouterr().err


def test_trials_flag_validated(tmp_path, capsys):
    spec = write_spec(tmp_path)
    assert main(["run", spec, "--trials", "10"]) == 1
    assert "trials" in capsys.readouterr().err


def test_unknown_figure_lists_valid_ids(capsys):
    assert main(["figure", "fig9"]) == 1
    err = capsys.readouterr().err
    assert "fig1" in err and "fig5" in err


def test_figure_plans_match_headline_parameters():
    plans = figure_plan("fig2")
    assert [p.variant for p in plans] == ["c=0.4", "c=0.8", "c=1.2"]
    assert all(p.config.max_rounds == 4 for p in plans)
    plans = figure_plan("fig5")
    assert plans[0].config.num_users == 4
    assert plans[0].config.max_rounds == 3


def test_figure_diversity_staircase(tmp_path):
    out = str(tmp_path / "fig4.csv")
    assert main(["figure", "fig4", "--out", out]) == 0
    lines = open(out).read().splitlines()
    header = lines[0].split(",")
    idx_scheme = header.index("scheme")
    idx_rate = header.index("rate")
    idx_d = header.index("d_closed_form")
    by_scheme = {}
    for line in lines[1:]:
        cells = line.split(",")
        by_scheme.setdefault(cells[idx_scheme], []).append(
            (float(cells[idx_rate]), int(cells[idx_d]))
        )
    assert set(by_scheme) == {"I", "CC", "IR"}
    for scheme, pairs in by_scheme.items():
        pairs.sort()
        orders = [d for _, d in pairs]
        assert all(a >= b for a, b in zip(orders, orders[1:])), scheme
        assert orders[0] == 4  # R2 = 0.1 < log2(1+c): full diversity
        assert orders[-1] == (1 if scheme == "IR" else 0)  # at R2 = 4.0


def test_figure_fig1_saturated_curve(tmp_path):
    out = str(tmp_path / "fig1.csv")
    assert main(["figure", "fig1", "--out", out, "--trials", "1000"]) == 0
    lines = open(out).read().splitlines()
    header = lines[0].split(",")
    idx_variant, idx_cf = header.index("variant"), header.index("p_closed_form")
    closed = {}
    for line in lines[1:]:
        cells = line.split(",")
        closed.setdefault(cells[idx_variant], []).append(float(cells[idx_cf]))
    # power ratios at or below the threshold keep the closed form pinned at 1
    assert all(v == 1.0 for v in closed["c=0.8"])
    assert all(v == 1.0 for v in closed["c=1"])
    assert any(v < 1.0 for v in closed["c=1.2"])


def test_diversity_verb(tmp_path, capsys):
    cfg = {
        "num_users": 4,
        "max_rounds": 3,
        "rates": [2, 2, 2, 2],
        "mean_gains": [2, 1, 0.5, 1 / 3],
        "p1_watts": 1.0,
        "ratios": [2, 1.4, 4],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["diversity", str(path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "scheme,user,d_user,d_layer,config_hash"
    got = {(c[0], int(c[1])): int(c[2]) for c in (line.split(",") for line in out[1:])}
    assert got[("I", 1)] == 0 and got[("CC", 2)] == 1 and got[("IR", 3)] == 2
    assert got[("I", 4)] == got[("CC", 4)] == got[("IR", 4)] == 3
