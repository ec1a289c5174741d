"""Config files and the command-line runner."""

import numpy as np
import pytest

from socialbayes.cli import main
from socialbayes.config import (
    ConfigError,
    build_schedule,
    parse_config,
    serialize_config,
)
from socialbayes.schedules import (
    CounterexampleSchedule,
    PeriodicSchedule,
    RandomSchedule,
    TableSchedule,
)
from socialbayes.tables import files_match, read_table

BASE = """
[params]
n = 4
seed = 11
x0 = 2.0

[schedule]
kind = periodic
kappa = 3
peer_rule = ring

[run]
horizon = 120
ensemble = 2
record_every = 10
"""


def config_file(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------- config


def test_round_trip_all_kinds():
    variants = [
        BASE,
        BASE.replace("kind = periodic\nkappa = 3\npeer_rule = ring",
                     "kind = random\nkappa = 2\nedge_probability = 0.25"),
        BASE.replace("n = 4", "n = 2").replace(
            "kind = periodic\nkappa = 3\npeer_rule = ring",
            "kind = counterexample\nstart = 2.0"),
        BASE.replace("n = 4", "n = 2").replace(
            "kind = periodic\nkappa = 3\npeer_rule = ring",
            "kind = explicit-table\nedges =\n    0 1 0\n    1 2 0"),
    ]
    for text in variants:
        cfg = parse_config(text)
        assert parse_config(serialize_config(cfg)) == cfg


def test_round_trip_with_optional_sections():
    text = BASE + """
[verify]
checks = identities norms
kappa = 3
inject_fault = none

[ratefit]
input = expected.csv
window = 10 120
d = 2
kappa = 3

[output]
directory = results
format = jsonl
"""
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
    assert cfg.out_format == "jsonl"
    assert cfg.verify.checks == ("identities", "norms")


def test_build_schedule_kinds():
    assert isinstance(build_schedule(parse_config(BASE)), PeriodicSchedule)
    rnd = BASE.replace("kind = periodic\nkappa = 3\npeer_rule = ring",
                       "kind = random\nkappa = 2\nedge_probability = 0.5")
    assert isinstance(build_schedule(parse_config(rnd)), RandomSchedule)
    ce = BASE.replace("n = 4", "n = 2").replace(
        "kind = periodic\nkappa = 3\npeer_rule = ring", "kind = counterexample")
    assert isinstance(build_schedule(parse_config(ce)), CounterexampleSchedule)
    tbl = BASE.replace("kind = periodic\nkappa = 3\npeer_rule = ring",
                       "kind = explicit-table\nedges =\n    0 1 0")
    assert isinstance(build_schedule(parse_config(tbl)), TableSchedule)


def test_missing_seed_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config(BASE.replace("seed = 11\n", ""))
    assert "seed" in str(err.value)


def test_counterexample_needs_two_agents():
    bad = BASE.replace("kind = periodic\nkappa = 3\npeer_rule = ring",
                       "kind = counterexample")
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert "n = 2" in str(err.value)


def test_bad_values_carry_section_and_key():
    cases = [
        (BASE.replace("kappa = 3", "kappa = three"), "schedule"),
        (BASE.replace("kind = periodic", "kind = lattice"), "kind"),
        (BASE.replace("horizon = 120", "horizon = -3"), "horizon"),
        (BASE.replace("ensemble = 2", "ensemble = 0"), "ensemble"),
        (BASE.replace("x0 = 2.0", "x0 = 1.0 2.0"), "x0"),
        (BASE + "\n[verify]\nchecks = identities gravity\n", "gravity"),
        (BASE + "\n[output]\nformat = parquet\n", "format"),
        (BASE + "\n[ratefit]\ninput = a\nwindow = 9 3\nd = 2\nkappa = 3\n",
         "window"),
    ]
    for text, needle in cases:
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert needle in str(err.value)


def test_external_edge_file(tmp_path):
    edge_file = tmp_path / "edges.txt"
    edge_file.write_text("# listener speaker pairs per time\n0 1 0\n1 2 0\n")
    text = BASE.replace("n = 4", "n = 2").replace(
        "kind = periodic\nkappa = 3\npeer_rule = ring",
        "kind = explicit-table\npath = %s" % edge_file)
    sched = build_schedule(parse_config(text))
    assert sched.edges_at(0) == ((1, 0),)
    assert sched.edges_at(1) == ((2, 0),)


# ------------------------------------------------------------------- cli


def test_simulate_writes_runs_and_summary(tmp_path, capsys):
    cfg = config_file(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "run-0000.csv").exists()
    assert (out / "run-0001.csv").exists()
    table = read_table(out / "summary.csv")
    assert table.meta["kind"] == "ensemble-summary"
    assert table.meta["runs"] == "2"
    assert "variance" in table.columns


def test_simulate_single_row_at_zero_horizon(tmp_path):
    text = BASE.replace("horizon = 120", "horizon = 0") \
               .replace("ensemble = 2", "ensemble = 1")
    cfg = config_file(tmp_path, text)
    out = tmp_path / "o"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    table = read_table(out / "run-0000.csv")
    assert list(np.unique(table["t"])) == [0]


def test_rerun_is_byte_identical(tmp_path):
    cfg = config_file(tmp_path, BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == 0
    for name in ("run-0000.csv", "run-0001.csv", "summary.csv"):
        assert files_match(a / name, b / name)


def test_seed_override_changes_output(tmp_path):
    cfg = config_file(tmp_path, BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b),
                 "--seed", "99"]) == 0
    assert not files_match(a / "run-0000.csv", b / "run-0000.csv")


def test_expected_warns_on_ensemble(tmp_path, capsys):
    cfg = config_file(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["expected", "--config", cfg, "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "deterministic" in captured.err
    table = read_table(out / "expected.csv")
    assert table.meta["kind"] == "expected"
    # truth agent's precision stays symbolic infinity
    prec = table["precision"]
    agents = table["agent"]
    assert np.all(np.isinf(np.asarray(prec, dtype=float)[agents == 0]))


def test_expected_respects_record_times(tmp_path):
    text = BASE.replace("record_every = 10", "record_times = 0 7 120")
    cfg = config_file(tmp_path, text)
    out = tmp_path / "out"
    assert main(["expected", "--config", cfg, "--out", str(out)]) == 0
    table = read_table(out / "expected.csv")
    assert list(np.unique(table["t"])) == [0, 7, 120]


def test_verify_passes_on_clean_schedule(tmp_path):
    cfg = config_file(tmp_path, BASE + "\n[verify]\nchecks = identities norms\n")
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    report = read_table(out / "verify.csv")
    assert set(report["status"].tolist()) == {"pass"}
    assert (out / "verify.txt").exists()


def test_verify_empty_selection_succeeds(tmp_path):
    cfg = config_file(tmp_path, BASE + "\n[verify]\nchecks =\n")
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    report = read_table(out / "verify.csv")
    assert report.columns == {} or len(report["name"]) == 0


def test_verify_fault_injection_fails(tmp_path):
    cfg = config_file(
        tmp_path,
        BASE + "\n[verify]\nchecks = identities\ninject_fault = transition\n")
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 1
    report = read_table(out / "verify.csv")
    assert "FAIL" in set(report["status"].tolist())


def test_verify_windowed_checks_on_random(tmp_path):
    text = BASE.replace("kind = periodic\nkappa = 3\npeer_rule = ring",
                        "kind = random\nkappa = 3\nedge_probability = 0.3") \
               .replace("horizon = 120", "horizon = 60")
    cfg = config_file(tmp_path, text + "\n[verify]\nchecks = diagonal contraction\n")
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    report = read_table(out / "verify.csv")
    names = report["name"].tolist()
    assert any(n.startswith("diagonal_bound") for n in names)
    assert any(n.startswith("contraction") for n in names)
    assert not any(n.startswith("truth_pull") for n in names)


def test_counterexample_command(tmp_path, capsys):
    text = """
[params]
n = 2
seed = 5
x0 = 2.0 2.0

[schedule]
kind = counterexample

[run]
horizon = 200000
record_every = 1000
"""
    cfg = config_file(tmp_path, text)
    out = tmp_path / "out"
    assert main(["counterexample", "--config", cfg, "--out", str(out)]) == 0
    switches = read_table(out / "switches.csv")
    t_k = switches["t_k"]
    s_k = switches["s_k"]
    merged = np.ravel(np.column_stack([t_k, s_k]))
    assert np.all(np.diff(merged) > 0)  # dumped switch times strictly increase
    assert (out / "trajectory.csv").exists()
    assert "status: pass" in (out / "verdict.txt").read_text()


def test_counterexample_insufficient_horizon(tmp_path):
    text = """
[params]
n = 2
seed = 5

[schedule]
kind = counterexample

[run]
horizon = 4
"""
    cfg = config_file(tmp_path, text)
    code = main(["counterexample", "--config", cfg,
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "insufficient horizon" in (tmp_path / "o" / "verdict.txt").read_text()


def test_counterexample_rejects_other_schedules(tmp_path):
    cfg = config_file(tmp_path, BASE)
    assert main(["counterexample", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2


def test_ratefit_on_expected_output(tmp_path):
    text = BASE + """
[ratefit]
input = expected.csv
window = 10 120
d = 2
kappa = 3
"""
    cfg = config_file(tmp_path, text)
    out = tmp_path / "out"
    assert main(["expected", "--config", cfg, "--out", str(out)]) == 0
    assert main(["ratefit", "--config", cfg, "--out", str(out)]) == 0
    report = read_table(out / "ratefit.csv")
    assert float(report["slope"][0]) < 0
    assert report["status"][0] == "ok"
    points = read_table(out / "ratefit-points.csv")
    assert len(points["t"]) > 5


def test_ratefit_missing_input(tmp_path):
    text = BASE + """
[ratefit]
input = nowhere.csv
window = 10 120
d = 2
kappa = 3
"""
    cfg = config_file(tmp_path, text)
    assert main(["ratefit", "--config", cfg,
                 "--out", str(tmp_path / "empty")]) == 2


def test_ratefit_without_section(tmp_path):
    cfg = config_file(tmp_path, BASE)
    assert main(["ratefit", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "ghost.ini")]) == 2


def test_horizon_override(tmp_path):
    cfg = config_file(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["expected", "--config", cfg, "--out", str(out),
                 "--horizon", "40"]) == 0
    table = read_table(out / "expected.csv")
    assert table["t"].max() == 40


def test_table_schedule_beyond_coverage_is_config_error(tmp_path):
    text = BASE.replace("n = 4", "n = 2").replace(
        "kind = periodic\nkappa = 3\npeer_rule = ring",
        "kind = explicit-table\nedges =\n    0 1 0\n    1 2 0")
    cfg = config_file(tmp_path, text)  # run horizon 120 >> table coverage 2
    assert main(["simulate", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2


def test_jsonl_output_round_trips(tmp_path):
    text = BASE + "\n[output]\nformat = jsonl\n"
    cfg = config_file(tmp_path, text)
    out = tmp_path / "out"
    assert main(["expected", "--config", cfg, "--out", str(out)]) == 0
    table = read_table(out / "expected.jsonl")
    assert table.meta["kind"] == "expected"
    assert len(table["t"]) > 0


def test_pipeline_smoke(tmp_path):
    """Simulate -> summary -> ratefit consumes the summary without error.

    Scaled-down version of the full pipeline: n=10, kappa=4, a modest
    ensemble, and a short horizon keep it test-suite sized.
    """
    text = """
[params]
n = 10
seed = 77
x0 = 2.0

[schedule]
kind = periodic
kappa = 4
peer_rule = ring

[run]
horizon = 2000
ensemble = 30
record_every = 20

[ratefit]
input = summary.csv
window = 100 2000
d = 2
kappa = 4
"""
    cfg = config_file(tmp_path, text)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert main(["ratefit", "--config", cfg, "--out", str(out)]) == 0
    report = read_table(out / "ratefit.csv")
    assert float(report["slope"][0]) < 0
