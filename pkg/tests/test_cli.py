import csv
import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from sasflow import cli
from sasflow.cli import (EXIT_ERROR, EXIT_OK, EXIT_UNDECIDED, EXIT_USAGE, ConfigError,
                         ExperimentConfig, build_parser, dump_report, main, resolve_config)


def _report(path):
    return json.loads((path / "report.json").read_text())


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.1, 1.99), seed=st.one_of(st.none(), st.integers(0, 2**63)),
       points=st.integers(1, 10_000), gross=st.booleans(),
       grid=st.one_of(st.none(), st.lists(st.integers(1, 2**20), min_size=1, max_size=5)),
       catalog=st.sampled_from(sorted(cli.CATALOG)), command=st.sampled_from(cli.COMMANDS))
def test_config_round_trip_property(alpha, seed, points, gross, grid, catalog, command):
    cfg = ExperimentConfig(command=command, catalog=catalog, alpha=alpha, seed=seed, points=points,
                           gross=gross, maxima_grid=grid, classifier={"block": 5})
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


@pytest.mark.parametrize("bad", [
    {"colour": "red"},
    {"command": "plot"},
    {"catalog": "nope"},
    {"points": 0},
    {"points": True},
    {"seed": 1.5},
    {"classifier": {"depth": 3}},
    {"times": {"start": 0, "stop": 3}},
])
def test_config_rejects_malformed_values(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_flags_override_file_and_env_seed(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"catalog": "rotation", "alpha": 1.1, "points": 7,
                                "classifier": {"block": 4, "dt": 0.1}}))
    args = build_parser().parse_args(["classify", "--config", str(conf), "--alpha", "1.3",
                                      "--block", "5"])
    cfg = resolve_config(args, environ={"SASFLOW_SEED": "99"})
    assert (cfg.catalog, cfg.alpha, cfg.points, cfg.seed) == ("rotation", 1.3, 7, 99)
    assert cfg.classifier == {"block": 5, "dt": 0.1}
    args = build_parser().parse_args(["classify", "--seed", "5"])
    assert resolve_config(args, environ={"SASFLOW_SEED": "99"}).seed == 5
    assert resolve_config(build_parser().parse_args(["classify"]), environ={}).seed == cli.DEFAULT_SEED
    with pytest.raises(ConfigError):
        resolve_config(build_parser().parse_args(["classify"]), environ={"SASFLOW_SEED": "x"})


def test_kernel_option_values_are_json(tmp_path):
    args = build_parser().parse_args(["simulate", "--kernel-option", "discrete=true",
                                      "--kernel-option", 'f={"breaks": [0, 2], "values": [0.5]}'])
    cfg = resolve_config(args, environ={})
    assert cfg.kernel_options["discrete"] is True
    assert cfg.kernel_options["f"] == {"breaks": [0, 2], "values": [0.5]}


def test_classify_writes_csv_and_report(tmp_path):
    out = tmp_path / "run"
    code = main(["classify", "--catalog", "moving_average_discrete", "--points", "5", "--seed", "3",
                 "--out", str(out)])
    assert code == EXIT_OK
    assert _header(out / "classification.csv") == ["point_id", "pn_verdict", "cd_verdict",
                                                   "S_final_w_0.5", "S_final_w_0.75", "S_final_w_1"]
    rep = _report(out)
    assert rep["exit_status"] == 0 and rep["seed"] == 3
    assert rep["results"]["classification"]["majority"] == "dissipative"
    assert rep["timestamp"] is not None


def test_classify_is_deterministic(tmp_path):
    argv = ["classify", "--catalog", "cyclic", "--points", "4", "--seed", "11"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(argv + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a, b = _report(tmp_path / "a"), _report(tmp_path / "b")
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    assert (tmp_path / "a" / "classification.csv").read_bytes() == \
        (tmp_path / "b" / "classification.csv").read_bytes()


def test_undecided_majority_exits_2(tmp_path):
    code = main(["classify", "--catalog", "rotation_discrete", "--points", "3", "--rho-null", "0",
                 "--rho-pos", "1e9", "--out", str(tmp_path), "--no-timestamp"])
    assert code == EXIT_UNDECIDED
    assert _report(tmp_path)["timestamp"] is None


def test_simulate_paths_csv(tmp_path):
    code = main(["simulate", "--catalog", "moving_average", "--count", "5", "--step", "0.5",
                 "--paths", "2", "--n-terms", "200", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert _header(tmp_path / "paths.csv") == ["time", "path_0", "path_1", "truncation"]
    with open(tmp_path / "paths.csv") as fh:
        assert len(fh.readlines()) == 6


def test_diagnose_and_maxima_csvs(tmp_path):
    code = main(["diagnose", "--catalog", "moving_average_discrete", "--M-grid", "4,16",
                 "--maxima-grid", "16,64", "--replications", "10", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert _header(tmp_path / "ergodicity.csv") == ["M", "average"]
    assert _header(tmp_path / "maxima.csv") == ["n", "median", "q25", "q75"]
    assert _header(tmp_path / "gross.csv") == ["n", "average"]
    code = main(["maxima", "--catalog", "moving_average_discrete", "--maxima-grid", "16,32",
                 "--replications", "5", "--out", str(tmp_path / "m")])
    assert code == EXIT_OK and (tmp_path / "m" / "maxima.csv").exists()


def test_decompose_and_catalog(tmp_path, capsys):
    assert main(["decompose", "--catalog", "mixture", "--points", "12", "--out", str(tmp_path)]) == 0
    assert _header(tmp_path / "components.csv") == ["component", "q_fraction", "norm_alpha",
                                                    "norm_share"]
    assert main(["catalog", "--out", str(tmp_path / "c")]) == EXIT_OK
    assert "markov_chain" in capsys.readouterr().out


def test_usage_errors_exit_64(tmp_path):
    assert main(["classify", "--catalog", "nope", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["verify", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["verify", "--criteria", "42", "--out", str(tmp_path)]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["classify", "--config", str(bad)]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--points", "many"])
    assert exc.value.code == EXIT_USAGE


def test_runtime_error_exits_1(tmp_path):
    code = main(["simulate", "--catalog", "moving_average_discrete", "--start", "0.5",
                 "--out", str(tmp_path)])
    assert code == EXIT_ERROR


def test_verify_subset_reports_each_criterion(tmp_path, capsys):
    code = main(["verify", "--criteria", "7", "--seed", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "criterion  7 PASS" in capsys.readouterr().out
    assert _report(tmp_path)["results"]["all_passed"] is True


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sasflow.cli", "frobnicate"], capture_output=True)
    assert proc.returncode == EXIT_USAGE


def test_dump_report_is_sorted_and_finite():
    text = dump_report({"b": float("nan"), "a": [1.0, float("inf")]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.0, None], "b": None}
