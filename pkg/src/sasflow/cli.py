"""Command-line runner: one experiment per invocation, JSON report plus CSV tables.

Exit codes: 0 success, 1 runtime error or failed acceptance check,
2 when undecided points dominate a classification, 64 for malformed
usage or configuration.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .catalog import CATALOG, get_entry, list_catalog
from .kernels import StepFunction

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED, EXIT_USAGE = 0, 1, 2, 64
COMMANDS = ("classify", "simulate", "diagnose", "maxima", "decompose", "catalog", "verify")
SEED_ENV = "SASFLOW_SEED"
DEFAULT_SEED = 20240917

# one stream id per command so the same seed drives unrelated experiments independently
_STREAM = {c: i for i, c in enumerate(COMMANDS, start=1)}

CLASSIFIER_KEYS = ("horizon_discrete", "horizon_continuous", "dt", "block", "rho_null", "rho_pos",
                   "cd_block", "diss_tol", "cons_tol", "weights", "recentre", "min_radius_fraction")


class ConfigError(ValueError):
    """Malformed configuration (exit 64)."""


@dataclass
class ExperimentConfig:
    command: str = "classify"
    catalog: str = "moving_average"
    alpha: float = 1.5
    seed: Optional[int] = None
    kernel_options: dict = field(default_factory=dict)
    points: int = 200
    classifier: dict = field(default_factory=dict)
    times: dict = field(default_factory=lambda: {"start": 0.0, "count": 100, "step": 1.0})
    n_terms: int = 10_000
    paths: int = 1
    M_grid: Optional[list] = None
    maxima_grid: Optional[list] = None
    replications: int = 200
    gross: bool = True
    maxima: bool = True
    criteria: Optional[list] = None
    threads: int = 1
    out_dir: str = "sasflow_out"
    timestamp: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.command not in ("catalog", "verify") and self.catalog not in CATALOG:
            raise ConfigError(f"unknown catalog entry {self.catalog!r}; known: {sorted(CATALOG)}")
        if not isinstance(self.kernel_options, dict):
            raise ConfigError("kernel_options must be an object")
        bad = set(self.classifier) - set(CLASSIFIER_KEYS)
        if bad:
            raise ConfigError(f"unknown classifier keys {sorted(bad)}")
        if not isinstance(self.times, dict) or set(self.times) - {"start", "count", "step"}:
            raise ConfigError("times must be an object with keys start, count, step")
        for name in ("points", "n_terms", "paths", "replications", "threads"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not isinstance(self.alpha, (int, float)) or isinstance(self.alpha, bool):
            raise ConfigError("alpha must be a number")
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)):
            raise ConfigError("seed must be an integer")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        return cls(**d)


# -- argument parsing --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(float(v)) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _option(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("kernel options take the form KEY=VALUE")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override its values")
    common.add_argument("--catalog", help="catalog entry name")
    common.add_argument("--alpha", type=float)
    common.add_argument("--seed", type=int, help=f"root seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--kernel-option", action="append", type=_option, metavar="KEY=VALUE",
                        help="extra keyword for the catalog builder; VALUE is parsed as JSON")
    common.add_argument("--out", dest="out_dir", help="output directory")
    common.add_argument("--threads", type=int, help="worker cap for point classification")
    common.add_argument("--no-timestamp", dest="timestamp", action="store_false", default=None)

    p = _Parser(prog="sasflow", description="Flow-based analysis of stationary SαS processes.")
    p.add_argument("--version", action="version", version=f"sasflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def classifier_flags(sp):
        sp.add_argument("--points", type=int)
        sp.add_argument("--horizon-discrete", type=int)
        sp.add_argument("--horizon-continuous", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--block", type=int)
        sp.add_argument("--rho-null", type=float)
        sp.add_argument("--rho-pos", type=float)
        sp.add_argument("--weights", type=lambda s: [w for w in s.split(",") if w])

    classifier_flags(sub.add_parser("classify", parents=[common], help="per-point Hopf/positive-null verdicts"))
    classifier_flags(sub.add_parser("decompose", parents=[common], help="split a kernel into three components"))

    sp = sub.add_parser("simulate", parents=[common], help="LePage series sample paths")
    sp.add_argument("--start", type=float)
    sp.add_argument("--count", type=int)
    sp.add_argument("--step", type=float)
    sp.add_argument("--n-terms", type=int)
    sp.add_argument("--paths", type=int)

    sp = sub.add_parser("diagnose", parents=[common], help="ergodicity, Gross averages and maxima")
    sp.add_argument("--M-grid", dest="M_grid", type=_float_list)
    sp.add_argument("--maxima-grid", type=_int_list)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--n-terms", type=int)
    sp.add_argument("--no-gross", dest="gross", action="store_false", default=None)
    sp.add_argument("--no-maxima", dest="maxima", action="store_false", default=None)

    sp = sub.add_parser("maxima", parents=[common], help="partial-maxima scaling table")
    sp.add_argument("--maxima-grid", type=_int_list)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--n-terms", type=int)

    sub.add_parser("catalog", parents=[common], help="list catalog entries")

    sp = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    sp.add_argument("--all", action="store_true", help="run every criterion")
    sp.add_argument("--criteria", type=_int_list, help="comma-separated criterion ids")
    return p


_FLAG_TO_CLASSIFIER = {"horizon_discrete": "horizon_discrete", "horizon_continuous": "horizon_continuous",
                       "dt": "dt", "block": "block", "rho_null": "rho_null", "rho_pos": "rho_pos",
                       "weights": "weights"}
_TIME_FLAGS = ("start", "count", "step")


def resolve_config(args: argparse.Namespace, environ=None) -> ExperimentConfig:
    """Defaults, then the config file, then explicit flags."""
    environ = os.environ if environ is None else environ
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
    data = dict(data)
    data["command"] = args.command
    ns = vars(args)
    for key in ("catalog", "alpha", "seed", "out_dir", "threads", "timestamp", "points", "n_terms",
                "paths", "M_grid", "maxima_grid", "replications", "gross", "maxima", "criteria"):
        if ns.get(key) is not None:
            data[key] = ns[key]
    if ns.get("kernel_option"):
        data["kernel_options"] = {**data.get("kernel_options", {}), **dict(ns["kernel_option"])}
    clf = dict(data.get("classifier", {}))
    for flag, key in _FLAG_TO_CLASSIFIER.items():
        if ns.get(flag) is not None:
            clf[key] = ns[flag]
    if clf:
        data["classifier"] = clf
    times = dict(data.get("times", ExperimentConfig().times))
    for key in _TIME_FLAGS:
        if ns.get(key) is not None:
            times[key] = ns[key]
    data["times"] = times
    if data.get("seed") is None:
        env = environ.get(SEED_ENV)
        try:
            data["seed"] = int(env) if env not in (None, "") else DEFAULT_SEED
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    if args.command == "verify":
        if ns.get("all"):
            data["criteria"] = None
        elif not data.get("criteria"):
            raise ConfigError("verify needs --all or --criteria")
    try:
        return ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- helpers -------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def dump_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _kernel_options(opts: dict) -> dict:
    # step functions are given inline as {"breaks": [...], "values": [...]}
    out = {}
    for k, v in opts.items():
        if isinstance(v, dict) and set(v) == {"breaks", "values"}:
            v = StepFunction(v["breaks"], v["values"])
        elif k == "atoms" and isinstance(v, list):
            v = [(nu, StepFunction(f["breaks"], f["values"])) if isinstance(f, dict) else (nu, f)
                 for nu, f in v]
        out[k] = v
    return out


def _entry(cfg: ExperimentConfig):
    try:
        return get_entry(cfg.catalog, cfg.alpha, **_kernel_options(cfg.kernel_options))
    except TypeError as exc:
        raise ConfigError(f"bad kernel_options for {cfg.catalog!r}: {exc}") from None


def _classifier_config(cfg: ExperimentConfig):
    from .classify import ClassifierConfig

    kw = dict(cfg.classifier)
    if "weights" in kw:
        kw["weights"] = tuple(kw["weights"])
    try:
        return ClassifierConfig(workers=cfg.threads, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad classifier settings: {exc}") from None


def _stream(cfg: ExperimentConfig):
    from .stable_core import RngStream

    return RngStream(int(cfg.seed), _STREAM[cfg.command])


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_csv_cell(v) for v in r])


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# -- commands --------------------------------------------------------------------------


def _classification_rows(report, weights):
    rows = []
    for i, v in enumerate(report.per_point):
        rows.append([i, v.positive_null, v.cons_diss] + [v.final.get(f"S_{w}") for w in weights])
    return rows


def cmd_classify(cfg: ExperimentConfig, out: Path):
    from .classify import classify_process

    entry = _entry(cfg)
    ccfg = _classifier_config(cfg)
    rep = classify_process(entry.kernel, cfg.points, ccfg, _stream(cfg))
    weights = list(ccfg.weights)
    _write_csv(out / "classification.csv", ["point_id", "pn_verdict", "cd_verdict"]
               + [f"S_final_{w}" for w in weights], _classification_rows(rep, weights))
    results = {"entry": entry.name, "ground_truth": entry.ground_truth,
               "agreement_with_ground_truth": rep.agreement(entry.ground_truth)
               if entry.ground_truth != "mixed" else None,
               "classification": rep.to_dict()}
    code = EXIT_UNDECIDED if rep.majority() == "undecided" else EXIT_OK
    return results, code


def cmd_decompose(cfg: ExperimentConfig, out: Path):
    from .classify import classify_process, component_norms, decompose

    entry = _entry(cfg)
    ccfg = _classifier_config(cfg)
    rep = classify_process(entry.kernel, cfg.points, ccfg, _stream(cfg))
    comps = decompose(entry.kernel, rep, ccfg)
    norms = component_norms(entry.kernel, comps)
    total = entry.kernel.combination_integral([1.0], [0.0])
    frac = {"dissipative": rep.fractions["D"], "conservative_null": rep.fractions["CN"],
            "positive": rep.fractions["P"]}
    rows = [[c, frac[c], norms[c], norms[c] / total if total > 0 else float("nan")] for c in comps]
    _write_csv(out / "components.csv", ["component", "q_fraction", "norm_alpha", "norm_share"], rows)
    weights = list(ccfg.weights)
    _write_csv(out / "classification.csv", ["point_id", "pn_verdict", "cd_verdict"]
               + [f"S_final_{w}" for w in weights], _classification_rows(rep, weights))
    results = {"entry": entry.name, "ground_truth": entry.ground_truth, "total_norm_alpha": total,
               "components": {c: {"q_fraction": frac[c], "norm_alpha": norms[c],
                                  "norm_share": norms[c] / total if total > 0 else None}
                              for c in comps},
               "classification": rep.to_dict(include_points=False)}
    code = EXIT_UNDECIDED if rep.majority() == "undecided" else EXIT_OK
    return results, code


def cmd_simulate(cfg: ExperimentConfig, out: Path):
    from .simulate import SeriesConfig, simulate_series

    entry = _entry(cfg)
    t = cfg.times
    times = float(t.get("start", 0.0)) + float(t.get("step", 1.0)) * np.arange(int(t.get("count", 100)))
    ps = simulate_series(entry.kernel, times, SeriesConfig(cfg.n_terms), _stream(cfg), n_paths=cfg.paths)
    vals = np.atleast_2d(ps.values)
    _write_csv(out / "paths.csv", ["time"] + [f"path_{i}" for i in range(vals.shape[0])] + ["truncation"],
               [[times[j]] + list(vals[:, j]) + [ps.truncation[j]] for j in range(times.size)])
    return {"entry": entry.name, "method": ps.method, "seed": ps.seed,
            "max_truncation": float(np.max(ps.truncation)), "paths": vals.shape[0],
            "times": times.size}, EXIT_OK


def _maxima_rows(out: Path, rows):
    _write_csv(out / "maxima.csv", ["n", "median", "q25", "q75"], rows)


def cmd_diagnose(cfg: ExperimentConfig, out: Path):
    from .diagnostics import diagnose
    from .simulate import SeriesConfig

    entry = _entry(cfg)
    grid = cfg.maxima_grid or [2**6, 2**8, 2**10]
    rep = diagnose(entry.kernel, cfg.M_grid, grid, cfg.replications, SeriesConfig(min(cfg.n_terms, 2048)),
                   _stream(cfg), gross=cfg.gross, maxima=cfg.maxima)
    _write_csv(out / "ergodicity.csv", ["M", "average"], rep.ergodicity_cesaro)
    if rep.maxima_table:
        _maxima_rows(out, rep.maxima_table)
    if rep.gross_averages:
        _write_csv(out / "gross.csv", ["n", "average"], rep.gross_averages)
    return {"entry": entry.name, "ground_truth": entry.ground_truth, "diagnostics": rep.to_dict()}, EXIT_OK


def cmd_maxima(cfg: ExperimentConfig, out: Path):
    from .diagnostics import maxima_scaling, maxima_verdict
    from .simulate import SeriesConfig

    entry = _entry(cfg)
    grid = cfg.maxima_grid or [2**10, 2**12, 2**14, 2**16]
    rows = maxima_scaling(entry.kernel, grid, cfg.replications, SeriesConfig(min(cfg.n_terms, 2048)),
                          _stream(cfg))
    _maxima_rows(out, rows)
    return {"entry": entry.name, "table": rows, "verdict": maxima_verdict(rows)}, EXIT_OK


def cmd_catalog(cfg: ExperimentConfig, out: Path):
    rows = list_catalog(cfg.alpha)
    for r in rows:
        print(f"{r['name']:34s} {r['ground_truth']:18s} {r['time_domain']:10s} {r['provenance']}")
    _write_csv(out / "catalog.csv", ["name", "ground_truth", "time_domain", "provenance"],
               [[r["name"], r["ground_truth"], r["time_domain"], r["provenance"]] for r in rows])
    return {"entries": rows}, EXIT_OK


def cmd_verify(cfg: ExperimentConfig, out: Path):
    from .acceptance import CRITERIA, run_criteria

    ids = cfg.criteria or sorted(CRITERIA)
    bad = [i for i in ids if i not in CRITERIA]
    if bad:
        raise ConfigError(f"unknown criteria {bad}; known: {sorted(CRITERIA)}")

    def progress(res):
        print(f"criterion {res['id']:2d} {'PASS' if res['passed'] else 'FAIL'}  {res['title']}",
              flush=True)

    results = run_criteria(cfg.seed, ids, cfg.threads, progress)
    _write_csv(out / "acceptance.csv", ["criterion", "title", "passed"],
               [[r["id"], r["title"], r["passed"]] for r in results])
    passed = all(r["passed"] for r in results)
    return {"criteria": results, "all_passed": passed}, EXIT_OK if passed else EXIT_ERROR


HANDLERS = {"classify": cmd_classify, "decompose": cmd_decompose, "simulate": cmd_simulate,
            "diagnose": cmd_diagnose, "maxima": cmd_maxima, "catalog": cmd_catalog,
            "verify": cmd_verify}


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment, write ``report.json`` and CSVs, return the exit status."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, code = HANDLERS[cfg.command](cfg, out)
    # where the report lives is not part of the experiment
    config = {k: v for k, v in cfg.to_dict().items() if k != "out_dir"}
    report = {
        "tool": "sasflow",
        "version": __version__,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": config,
        "results": results,
        "exit_status": code,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat() if cfg.timestamp else None,
    }
    (out / "report.json").write_text(dump_report(report))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"sasflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # reported, not re-raised: the exit code carries it
        print(f"sasflow: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
