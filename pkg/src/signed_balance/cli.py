"""Command-line entry point: ``signed-balance <command> [options]``.

Options may also come from a JSON file given with ``--config``; command-line
flags override file values, which override built-in defaults.  Exit codes:
0 success, 2 usage error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .balance import classify_q_hbm, classify_q_ibm, is_balanced_multi, is_socially_balanced
from .core import ToleranceConfig
from .dynamics import HBM, DomainWarning, ModelKind, SimConfig, simulate
from .experiments import (
    InitKind,
    McConfig,
    SweepGrid,
    ally_competition_scenario,
    ally_outcome,
    apply_single_link,
    chernoff_sample_size,
    faction_sweep,
    mc_convergence_probability,
)

logger = logging.getLogger("signed_balance")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("simulate", "mc", "perturb", "ally", "sweep", "classify")
FORMATS = ("csv", "json", "heatmap")

DEFAULTS = {
    "common": {"out": ".", "formats": "csv,json", "seed": 0, "zero_tol": 1e-9, "rel_tol": 1e-6, "abs_tol": 1e-12},
    "simulate": {"model": None, "epsilon": None, "init": None, "steps": 10_000, "convergence_tol": 1e-12,
                 "record_every": 1, "frames": "0", "cell_pixels": 8},
    "mc": {"model": None, "epsilon": None, "init": "uniform-nzrow", "n": 8, "trials": 1000, "a": 1.0,
           "x_min": -1.0, "x_max": 1.0, "floor": 0.001, "check_start": 100, "check_end": 1000,
           "chernoff": None, "per_trial": False},
    "perturb": {"model": "hbm", "epsilon": None, "init": None, "link": [], "bilateral": False, "steps": 10_000,
                "convergence_tol": 1e-12, "record_every": 1, "frames": "0,1,5", "cell_pixels": 8},
    "ally": {"n1": 3, "n2": 3, "n3": 3, "alpha": 1.0, "alpha_hat": 1.0, "eps1": 0.5, "eps2": 0.2, "steps": 20_000,
             "convergence_tol": 1e-12},
    "sweep": {"n_values": "4,8,16,32", "ave_values": "0,0.25,0.5,0.75,1.0", "samples": 30, "horizon": 500},
    "classify": {"input": None},
}
REQUIRED = {"simulate": ("model", "init"), "mc": ("model",), "perturb": ("init",), "classify": ("input",)}
PATH_KEYS = {"simulate": ("init",), "perturb": ("init",), "classify": ("input",)}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    @property
    def out(self) -> Path:
        return Path(self.params["out"])

    @property
    def formats(self) -> set:
        return set(self.params["formats"])

    @property
    def tol(self) -> ToleranceConfig:
        p = self.params
        return ToleranceConfig(p["zero_tol"], p["rel_tol"], p["abs_tol"])


def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=S, help="JSON file of option values")
    common.add_argument("--out", default=S, help="output directory")
    common.add_argument("--formats", default=S, help="comma list from csv,json,heatmap")
    common.add_argument("--seed", type=int, default=S, help="master seed")
    common.add_argument("--zero-tol", dest="zero_tol", type=float, default=S)
    common.add_argument("--rel-tol", dest="rel_tol", type=float, default=S)
    common.add_argument("--abs-tol", dest="abs_tol", type=float, default=S)
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    parser = argparse.ArgumentParser(prog="signed-balance", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p):
        p.add_argument("--model", choices=("hbm", "ibm", "hbm-memory"), default=S)
        p.add_argument("--epsilon", type=float, default=S, help="memory weight for hbm-memory")

    def sim_args(p):
        p.add_argument("--steps", type=int, default=S, help="maximum number of steps")
        p.add_argument("--convergence-tol", dest="convergence_tol", type=float, default=S)
        p.add_argument("--record-every", dest="record_every", type=int, default=S)
        p.add_argument("--frames", default=S, help="comma list of steps to snapshot as heatmaps")
        p.add_argument("--cell-pixels", dest="cell_pixels", type=int, default=S)

    p = sub.add_parser("simulate", parents=[common], help="iterate a model from a matrix file")
    model_args(p)
    p.add_argument("--init", default=S, help="initial matrix (text or .csv)")
    sim_args(p)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo non-vanishing probability")
    model_args(p)
    p.add_argument("--init", choices=("uniform-nzrow", "rs-symm", "interval"), default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--a", type=float, default=S, help="support half-width for uniform-nzrow")
    p.add_argument("--x-min", dest="x_min", type=float, default=S)
    p.add_argument("--x-max", dest="x_max", type=float, default=S)
    p.add_argument("--floor", type=float, default=S)
    p.add_argument("--check-start", dest="check_start", type=int, default=S)
    p.add_argument("--check-end", dest="check_end", type=int, default=S)
    p.add_argument("--chernoff", type=float, nargs=2, metavar=("EPS", "XI"), default=S,
                   help="size the run by the Chernoff bound instead of --trials")
    p.add_argument("--per-trial", dest="per_trial", action="store_true", default=S)

    p = sub.add_parser("perturb", parents=[common], help="add links to a balanced network and simulate")
    model_args(p)
    p.add_argument("--init", default=S, help="base matrix file")
    p.add_argument("--link", nargs=3, action="append", metavar=("I", "J", "ETA"), default=S)
    p.add_argument("--bilateral", action="store_true", default=S)
    sim_args(p)

    p = sub.add_parser("ally", parents=[common], help="ally-competition scenario")
    for name in ("n1", "n2", "n3"):
        p.add_argument(f"--{name}", type=int, default=S)
    for name in ("alpha", "alpha_hat", "eps1", "eps2"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=S)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--convergence-tol", dest="convergence_tol", type=float, default=S)

    p = sub.add_parser("sweep", parents=[common], help="faction formation vs. initial distribution")
    p.add_argument("--n-values", dest="n_values", default=S)
    p.add_argument("--ave-values", dest="ave_values", default=S)
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--horizon", type=int, default=S)

    p = sub.add_parser("classify", parents=[common], help="balance and fixed-point report for a matrix")
    p.add_argument("--input", default=S, help="matrix file")
    return parser


def _split(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(v) for v in str(value).split(",") if v.strip()]


def parse_config(argv) -> RunConfig:
    """Build a validated RunConfig; raises UsageError on any problem."""
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("invalid command line") from exc
    flags = vars(ns)
    command = flags.pop("command")
    params = dict(DEFAULTS["common"])
    params.update(DEFAULTS[command])
    params["verbose"] = False
    allowed = set(params)

    config_path = flags.pop("config", None)
    if config_path is not None:
        try:
            file_values = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {config_path}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(file_values) - allowed - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if file_values.get("command", command) != command:
            raise UsageError(f"config file is for command {file_values['command']!r}, not {command!r}")
        file_values.pop("command", None)
        params.update(file_values)
    params.update(flags)

    for key in REQUIRED.get(command, ()):
        if params.get(key) in (None, ""):
            raise UsageError(f"missing required option --{key.replace('_', '-')}")
    for key in PATH_KEYS.get(command, ()):
        if not Path(params[key]).is_file():
            raise UsageError(f"input file does not exist: {params[key]}")

    try:
        params["formats"] = _split(params["formats"], str)
        bad = set(params["formats"]) - set(FORMATS)
        if bad:
            raise UsageError(f"unknown output formats: {', '.join(sorted(bad))}")
        if "frames" in params:
            params["frames"] = _split(params["frames"], int)
        if command == "sweep":
            params["n_values"] = _split(params["n_values"], int)
            params["ave_values"] = _split(params["ave_values"], float)
        if command == "perturb":
            params["link"] = [(int(i), int(j), float(eta)) for i, j, eta in params["link"]]
        if "model" in params and params["model"] is not None:
            params["model_kind"] = ModelKind.parse(params["model"], params.get("epsilon"))
        if params.get("chernoff"):
            eps, xi = params["chernoff"]
            params["trials"] = chernoff_sample_size(float(eps), float(xi))
        cfg = RunConfig(command, params)
        cfg.tol  # validates tolerances
    except UsageError:
        raise
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def _effective(cfg: RunConfig) -> dict:
    return {k: v for k, v in cfg.params.items() if k not in ("model_kind", "verbose")} | {"command": cfg.command}


def _write(cfg: RunConfig, name: str, text: str) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / name).write_text(text)


def _sim_config(p) -> SimConfig:
    return SimConfig(max_steps=p["steps"], convergence_tol=p["convergence_tol"], record_every=p["record_every"])


def _emit_trajectory(cfg: RunConfig, traj, extra: dict | None = None) -> None:
    p = cfg.params
    if "csv" in cfg.formats:
        _write(cfg, "trajectory.csv", io.trajectory_csv(traj))
    cfg.out.mkdir(parents=True, exist_ok=True)
    io.write_matrix(traj.final, cfg.out / "final.txt")
    if "json" in cfg.formats:
        summary = {
            "config": _effective(cfg),
            "stop_reason": traj.stop_reason,
            "steps": traj.steps,
            "balance_time": traj.balance_time,
            "failed_row": traj.failed_row,
            "domain_warning": traj.domain_warning,
            "final_max_norm": traj.summaries[-1].max_norm,
            "final_min_abs": traj.summaries[-1].min_abs,
        }
        summary.update(extra or {})
        _write(cfg, "summary.json", io.to_json(summary))
    if "heatmap" in cfg.formats:
        spec = io.HeatmapSpec(cell_pixels=p["cell_pixels"], frames=tuple(p["frames"]))
        times = list(traj.state_times)
        for t in spec.frames:
            if t in times:
                cfg.out.mkdir(parents=True, exist_ok=True)
                io.emit_heatmap(traj.states[times.index(t)], spec, cfg.out / f"frame_t{t:05d}.pgm", cfg.tol)
            else:
                logger.warning("frame t=%d not recorded (run stopped at t=%d)", t, traj.steps)


def cmd_simulate(cfg: RunConfig) -> int:
    p = cfg.params
    X0 = io.read_matrix(p["init"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        traj = simulate(X0, p["model_kind"], _sim_config(p), cfg.tol)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _emit_trajectory(cfg, traj)
    print(f"{traj.stop_reason} after {traj.steps} steps; balance_time={traj.balance_time}")
    if traj.stop_reason == "ZeroRowEncountered" and traj.steps == 0:
        logger.error("initial matrix has a vanished row %d", traj.failed_row)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    p = cfg.params
    init = InitKind(p["init"], a=p["a"], x_min=p["x_min"], x_max=p["x_max"])
    mc = McConfig(n=p["n"], model=p["model_kind"], trials=p["trials"], horizon_check_start=p["check_start"],
                  horizon_check_end=p["check_end"], floor=p["floor"], master_seed=p["seed"], init=init)
    result = mc_convergence_probability(mc, cfg.tol, keep_trials=p["per_trial"])
    if "csv" in cfg.formats:
        _write(cfg, "mc.csv", io.mc_csv(result))
    if "json" in cfg.formats:
        _write(cfg, "mc.json", io.to_json({
            "config": _effective(cfg), "p_hat": result.p_hat, "std_err": result.std_err,
            "trials": result.trials, "successes": result.successes,
        }))
    print(f"p_hat={result.p_hat:.6g} std_err={result.std_err:.3g} ({result.successes}/{result.trials})")
    return EXIT_OK


def cmd_perturb(cfg: RunConfig) -> int:
    p = cfg.params
    X = io.read_matrix(p["init"])
    for i, j, eta in p["link"]:
        try:
            X = apply_single_link(X, i, j, eta, p["bilateral"])
        except (IndexError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    traj = simulate(X, p["model_kind"], _sim_config(p), cfg.tol)
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = is_balanced_multi(traj.final, cfg.tol)
    if "csv" in cfg.formats:
        _write(cfg, "factions.csv", io.factions_csv(report.factions))
    _emit_trajectory(cfg, traj, {"final_balance": report.to_record()})
    print(f"{traj.stop_reason} after {traj.steps} steps; components={report.factions.n_components} "
          f"balanced={report.balanced}")
    return EXIT_OK


def cmd_ally(cfg: RunConfig) -> int:
    p = cfg.params
    try:
        X0, preds, groups = ally_competition_scenario(p["n1"], p["n2"], p["n3"], p["alpha"], p["alpha_hat"],
                                                      p["eps1"], p["eps2"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    traj = simulate(X0, HBM, SimConfig(max_steps=p["steps"], convergence_tol=p["convergence_tol"]), cfg.tol)
    outcome = ally_outcome(traj.final, groups, cfg.tol)
    cfg.out.mkdir(parents=True, exist_ok=True)
    io.write_matrix(traj.final, cfg.out / "final.txt")
    if "json" in cfg.formats:
        _write(cfg, "ally.json", io.to_json({
            "config": _effective(cfg), "predictions": preds.__dict__, "outcome": outcome,
            "stop_reason": traj.stop_reason, "steps": traj.steps,
        }))
    if "csv" in cfg.formats:
        rows = [(k, v) for k, v in list(preds.__dict__.items()) + list(outcome.items())]
        _write(cfg, "ally.csv", io.rows_to_csv(("key", "value"), rows))
    print(io.format_record({"predictions": preds.__dict__, "outcome": outcome}), end="")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    p = cfg.params
    grid = SweepGrid(tuple(p["n_values"]), tuple(p["ave_values"]), p["samples"], p["horizon"], master_seed=p["seed"])
    records = faction_sweep(grid, cfg.tol)
    if "csv" in cfg.formats:
        _write(cfg, "sweep.csv", io.sweep_csv(records))
    if "json" in cfg.formats:
        _write(cfg, "sweep.json", io.to_json({"config": _effective(cfg), "cells": records}))
    for r in records:
        print(f"n={r['n']:3d} ave={r['ave']:.2f} two={r['two_factions']:3d} one={r['one_faction']:3d} "
              f"other={r['indeterminate']:3d} {r['classification']}")
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    X = io.read_matrix(cfg.params["input"])
    tol = cfg.tol
    record = {
        "n": X.shape[0],
        "balance": is_socially_balanced(X, tol).to_record(),
        "multi_balance": is_balanced_multi(X, tol).to_record(),
        "q_hbm": classify_q_hbm(X, tol).to_record(),
        "q_ibm": classify_q_ibm(X, tol).to_record(),
    }
    text = io.format_record(record)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write(cfg, "classify.txt", text)
    if "json" in cfg.formats:
        _write(cfg, "classify.json", io.to_json({"config": _effective(cfg), **record}))
    if "csv" in cfg.formats:
        _write(cfg, "factions.csv", io.factions_csv(is_balanced_multi(X, tol).factions))
    if "heatmap" in cfg.formats:
        io.emit_heatmap(X, io.HeatmapSpec(), cfg.out / "matrix.pgm", tol)
    print(text, end="")
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate, "mc": cmd_mc, "perturb": cmd_perturb,
    "ally": cmd_ally, "sweep": cmd_sweep, "classify": cmd_classify,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if cfg.params.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
