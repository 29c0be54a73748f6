"""Config-driven experiment runner.

Subcommands:

* ``run``        execute verification suites, write reports and samples
* ``list-suites``  enumerate registered suites and what they check
* ``simulate``   write simulated paths only, one JSON object per line
* ``exit-limit`` sweep t toward 1 and report the KS distance per t

Configs are TOML.  Seed precedence: ``--seed`` flag, then the
POLYAFLOW_SEED environment variable, then the config file, then the
built-in default.  Outputs are UTF-8 and byte-identical across runs,
thread counts included, for a fixed (config, seed, build).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .kernels import FlowSpec
from .measures import CellMeasure, Window, config_to_json
from .samplers import RNG_ALGORITHM, RngStream
from .suites import DEFAULT_SEED, SUITES, exit_limit_sweep, run_suites
from .flows import simulate_path

_SIMULATE_STREAM_BASE = 12_000_000
_DEFAULT_OUT = "polyaflow-out"

_VARIANTS = ("polya_sum", "poisson", "polya_difference", "cox_mixture")

_TOP_KEYS = {"seed", "replicas", "suites", "output_dir", "grid", "flow"}
_FLOW_KEYS = {"variant", "window", "rho", "z", "gamma_rate", "mixture"}


class ConfigError(ValueError):
    """Invalid experiment configuration; carries every violated constraint."""

    def __init__(self, violations: list[str]) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: which suites to run, with what flow and seed."""

    flow: FlowSpec | None
    grid: tuple
    replicas: int | None
    seed: int
    suites: tuple
    output_dir: str


def list_suites() -> list:
    """Registered suites as (name, description, identity) triples."""
    return [(s.name, s.description, s.identity) for s in SUITES.values()]


def _check_window(raw: dict, bad: list) -> Window | None:
    if not isinstance(raw, dict):
        bad.append("flow.window must be a table with keys lo, hi, cells")
        return None
    missing = {"lo", "hi", "cells"} - set(raw)
    unknown = set(raw) - {"lo", "hi", "cells"}
    for k in sorted(missing):
        bad.append(f"flow.window is missing required key {k!r}")
    for k in sorted(unknown):
        bad.append(f"flow.window has unknown key {k!r}")
    if missing or unknown:
        return None
    try:
        return Window(float(raw["lo"]), float(raw["hi"]), int(raw["cells"]))
    except (TypeError, ValueError) as e:
        bad.append(f"flow.window is invalid: {e}")
        return None


def _check_masses(raw, window: Window | None, key: str, bad: list) -> CellMeasure | None:
    if not isinstance(raw, list) or not all(isinstance(x, (int, float)) for x in raw):
        bad.append(f"{key} must be a list of numbers")
        return None
    if window is None:
        return None
    if len(raw) != window.cells:
        bad.append(f"{key} must have one entry per cell ({window.cells}), got {len(raw)}")
        return None
    try:
        return CellMeasure(window, np.asarray(raw, dtype=np.float64))
    except (TypeError, ValueError) as e:
        bad.append(f"{key} is invalid: {e}")
        return None


def _check_flow(raw: dict, bad: list) -> FlowSpec | None:
    for k in sorted(set(raw) - _FLOW_KEYS):
        bad.append(f"flow has unknown key {k!r}")
    variant = raw.get("variant")
    if variant not in _VARIANTS:
        bad.append(f"flow.variant must be one of {', '.join(_VARIANTS)}, got {variant!r}")
        return None
    if "window" not in raw or "rho" not in raw:
        for k in ("window", "rho"):
            if k not in raw:
                bad.append(f"flow is missing required key {k!r}")
        return None
    window = _check_window(raw["window"], bad)
    rho = _check_masses(raw["rho"], window, "flow.rho", bad)

    kwargs: dict = {}
    if "z" in raw:
        if not isinstance(raw["z"], (int, float)):
            bad.append("flow.z must be a number")
        else:
            kwargs["z"] = float(raw["z"])
    if "gamma_rate" in raw:
        if not isinstance(raw["gamma_rate"], (int, float)):
            bad.append("flow.gamma_rate must be a number")
        else:
            kwargs["gamma_rate"] = float(raw["gamma_rate"])
    if "mixture" in raw:
        comps = raw["mixture"]
        entries = []
        if not isinstance(comps, list) or not comps:
            bad.append("flow.mixture must be a non-empty array of tables")
        else:
            for i, comp in enumerate(comps):
                if not isinstance(comp, dict) or set(comp) != {"weight", "masses"}:
                    bad.append(f"flow.mixture[{i}] must be a table with keys weight, masses")
                    continue
                if not isinstance(comp["weight"], (int, float)):
                    bad.append(f"flow.mixture[{i}].weight must be a number")
                    continue
                lam = _check_masses(comp["masses"], window, f"flow.mixture[{i}].masses", bad)
                if lam is not None:
                    entries.append((float(comp["weight"]), lam))
            if len(entries) == len(comps):
                kwargs["mixture"] = tuple(entries)
    if rho is None or bad:
        return None
    try:
        return FlowSpec(variant, rho, **kwargs)
    except (TypeError, ValueError) as e:
        bad.append(f"flow is invalid: {e}")
        return None


def _check_grid(raw, spec: FlowSpec | None, has_flow: bool, bad: list) -> tuple:
    if not isinstance(raw, list) or not all(isinstance(t, (int, float)) for t in raw):
        bad.append("grid must be a list of numbers")
        return ()
    grid = tuple(float(t) for t in raw)
    if not has_flow:
        if grid:
            bad.append("grid requires a [flow] section")
        return grid
    if not grid:
        bad.append("grid must contain at least one time when a [flow] section is present")
    if spec is not None:
        # time bounds depend on the variant, so they are only checkable
        # once the flow itself validated
        for t in grid:
            try:
                spec.validate_time(t)
            except ValueError as e:
                bad.append(f"grid time {t} is invalid: {e}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        bad.append(f"grid must be strictly increasing, got {list(grid)}")
    return grid


def validate_config(data: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed TOML, or raise ConfigError
    listing every violated constraint."""
    bad: list = []
    for k in sorted(set(data) - _TOP_KEYS):
        bad.append(f"unknown key {k!r} in config")

    seed = DEFAULT_SEED
    if seed_override is not None:
        seed = seed_override
    elif "seed" in data:
        if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
            bad.append(f"seed must be an integer, got {data['seed']!r}")
        elif not 0 <= data["seed"] < 2**64:
            bad.append(f"seed must be a 64-bit unsigned integer, got {data['seed']}")
        else:
            seed = data["seed"]

    replicas = None
    if "replicas" in data:
        if not isinstance(data["replicas"], int) or isinstance(data["replicas"], bool):
            bad.append(f"replicas must be an integer, got {data['replicas']!r}")
        elif data["replicas"] < 1:
            bad.append(f"replicas must be at least 1, got {data['replicas']}")
        else:
            replicas = data["replicas"]

    suites = tuple(SUITES)
    if "suites" in data:
        raw = data["suites"]
        if not isinstance(raw, list) or not all(isinstance(s, str) for s in raw):
            bad.append("suites must be a list of suite names")
        else:
            for name in raw:
                if name not in SUITES:
                    known = ", ".join(SUITES)
                    bad.append(f"unknown suite {name!r}; registered suites: {known}")
            suites = tuple(raw)

    output_dir = data.get("output_dir", _DEFAULT_OUT)
    if not isinstance(output_dir, str) or not output_dir:
        bad.append(f"output_dir must be a non-empty string, got {output_dir!r}")
        output_dir = _DEFAULT_OUT

    flow = _check_flow(data["flow"], bad) if isinstance(data.get("flow"), dict) else None
    if "flow" in data and not isinstance(data["flow"], dict):
        bad.append("flow must be a table")
    grid = _check_grid(data.get("grid", []), flow, "flow" in data, bad)

    if bad:
        raise ConfigError(bad)
    return ExperimentConfig(flow, grid, replicas, seed, suites, output_dir)


def _resolve_seed(flag_seed: int | None, bad_env: list) -> int | None:
    """Flag beats environment; None defers to the config file."""
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get("POLYAFLOW_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        bad_env.append(f"POLYAFLOW_SEED must be an integer, got {env!r}")
        return None


def _load_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
    bad_env: list = []
    seed = _resolve_seed(args.seed, bad_env)
    if bad_env:
        raise ConfigError(bad_env)
    config = validate_config(data, seed_override=seed)
    if args.replicas is not None:
        if args.replicas < 1:
            raise ConfigError([f"replicas must be at least 1, got {args.replicas}"])
        config = ExperimentConfig(
            config.flow, config.grid, args.replicas, config.seed, config.suites, config.output_dir
        )
    if args.out is not None:
        config = ExperimentConfig(
            config.flow, config.grid, config.replicas, config.seed, config.suites, args.out
        )
    return config


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _reports_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "statistic", "p_or_err", "passed"])
    for r in reports:
        value = r.p_value if r.p_value is not None else r.max_abs_error
        writer.writerow([r.name, repr(float(r.statistic)), repr(float(value)),
                         "true" if r.passed else "false"])
    return buf.getvalue()


def _write_reports(reports, config: ExperimentConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    payload = [r.to_dict() for r in reports]
    _write_text(os.path.join(out_dir, "reports.json"),
                json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_text(os.path.join(out_dir, "reports.csv"), _reports_csv(reports))
    meta = {
        "package": "polyaflow",
        "version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "seed": config.seed,
        "replicas": config.replicas,
        "suites": list(config.suites),
    }
    _write_text(os.path.join(out_dir, "metadata.json"),
                json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_paths(config: ExperimentConfig, out_dir: str, n: int) -> str:
    os.makedirs(out_dir, exist_ok=True)
    stream = RngStream(config.seed, _SIMULATE_STREAM_BASE)
    dest = os.path.join(out_dir, "paths.jsonl")
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        for k in range(n):
            g = stream.substream(k).generator()
            path = simulate_path(config.flow, config.grid, g)
            record = {
                "replica": k,
                "variant": path.variant,
                "grid": list(path.grid),
                "states": [config_to_json(s) for s in path.states],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return dest


def _print_config_error(err: ConfigError) -> int:
    print("invalid configuration:", file=sys.stderr)
    for v in err.violations:
        print(f"  - {v}", file=sys.stderr)
    return 2


def cmd_run(args) -> int:
    try:
        config = _load_config(args)
    except ConfigError as err:
        return _print_config_error(err)
    results = run_suites(config.suites, seed=config.seed,
                         replicas=config.replicas, threads=args.threads)
    reports = [r for name in config.suites for r in results[name]]
    _write_reports(reports, config, config.output_dir)
    if config.flow is not None:
        n_paths = config.replicas if config.replicas is not None else 1000
        dest = _write_paths(config, config.output_dir, n_paths)
        print(f"wrote {n_paths} paths to {dest}")
    n_pass = sum(r.passed for r in reports)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}")
    print(f"{n_pass}/{len(reports)} checks passed; reports in {config.output_dir}")
    return 0 if n_pass == len(reports) else 1


def cmd_list_suites(args) -> int:
    for name, description, identity in list_suites():
        print(f"{name}: {description}")
        print(f"    checks: {identity}")
        if args.verbose:
            suite = SUITES[name]
            print(f"    defaults: seed={DEFAULT_SEED} replicas={suite.default_replicas} "
                  f"stream_base={suite.stream_base}")
    if args.verbose:
        print(f"global defaults: seed={DEFAULT_SEED} output_dir={_DEFAULT_OUT} "
              f"threads={os.cpu_count() or 1} rng={RNG_ALGORITHM}")
    return 0


def cmd_simulate(args) -> int:
    try:
        config = _load_config(args)
    except ConfigError as err:
        return _print_config_error(err)
    if config.flow is None:
        return _print_config_error(ConfigError(["simulate requires a [flow] section and a grid"]))
    n_paths = config.replicas if config.replicas is not None else 1000
    dest = _write_paths(config, config.output_dir, n_paths)
    print(f"wrote {n_paths} paths to {dest}")
    return 0


def cmd_exit_limit(args) -> int:
    try:
        config = _load_config(args)
    except ConfigError as err:
        return _print_config_error(err)
    ts = tuple(float(t) for t in args.t)
    if not ts or any(not 0.0 < t < 1.0 for t in ts) or any(
        b <= a for a, b in zip(ts, ts[1:])
    ):
        return _print_config_error(
            ConfigError([f"--t values must be strictly increasing in (0, 1), got {list(ts)}"])
        )
    replicas = config.replicas if config.replicas is not None else 20_000
    reports = exit_limit_sweep(rho_mass=args.rho, ts=ts, seed=config.seed,
                               replicas=replicas, threads=args.threads)
    _write_reports(reports, config, config.output_dir)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ks={r.statistic:.5f}  "
              f"allowed={r.threshold:.5f}")
    return 0 if all(r.passed for r in reports) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyaflow",
        description="Simulate monotone couplings of Cox and Polya point processes "
        "and run their distributional verification suites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--seed", type=int, help="seed override (beats POLYAFLOW_SEED and config)")
        p.add_argument("--replicas", type=int, help="replica count override")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads (default: available parallelism)")

    p_run = sub.add_parser("run", help="run verification suites and write reports")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list-suites", help="list registered suites")
    p_list.add_argument("--verbose", action="store_true", help="show all defaults")
    p_list.set_defaults(func=cmd_list_suites)

    p_sim = sub.add_parser("simulate", help="write simulated paths only")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_exit = sub.add_parser("exit-limit", help="KS distance to the Gamma limit per time")
    common(p_exit)
    p_exit.add_argument("--rho", type=float, default=2.0, help="cell mass of the base measure")
    p_exit.add_argument("--t", type=float, action="append",
                        default=None, help="grid time, repeatable (default 0.9 0.99 0.999)")
    p_exit.set_defaults(func=cmd_exit_limit)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "t", None) is None and args.command == "exit-limit":
        args.t = [0.9, 0.99, 0.999]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
