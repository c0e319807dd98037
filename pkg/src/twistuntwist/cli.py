"""Command-line front end: sweeps, minimisations, optimality checks and figure data.

Configs are flat ``key = value`` text files; ``#`` starts a comment. Grid axes
are written ``axis.<param> = lo, hi, steps`` and fixed objective arguments
``param.<name> = value``. Every output carries the resolved config and its
SHA-256 in its header, so identical configs give byte-identical files.

Exit codes: 0 success, 2 config error, 3 numerical non-convergence,
4 failed acceptance check (``verify`` only).
"""

from __future__ import annotations

import argparse
import hashlib
import inspect
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_forms as cf
from . import optimize, spinwave
from .errors import DegenerateProtocolError, DomainError, TruncationError
from .tables import SweepTable, to_csv_text, to_json_text

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_VERIFY = 0, 2, 3, 4

COMMON_KEYS = {"command", "seed", "format", "out"}
COMMAND_KEYS = {
    "sweep": {"objective"},
    "optimize": {"objective", "start", "xatol", "max_evaluations", "grid_steps"},
    "verify": {"target", "schedule"},
    "figure": {"target", "n", "k_max", "chi_lo", "chi_hi", "steps"},
}
PREFIX_KEYS = {"sweep": ("axis.", "param."), "optimize": ("axis.", "param.")}
VERIFY_TARGETS = tuple(optimize.DEFAULT_SCHEDULES)
FIGURE_TARGETS = ("fig2", "fig3")
FIGURE_DEFAULTS = {
    "fig2": {"n": 1000, "chi_lo": 1e-4, "chi_hi": 0.2, "steps": 2000},
    "fig3": {"n": 16, "k_max": 5, "chi_lo": 0.01, "chi_hi": 3.0, "steps": 300},
}


class ConfigError(ValueError):
    """Invalid config; ``field`` names the offending key."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def canonical_text(self) -> str:
        """Sorted ``key = value`` lines; the hashed form of the config."""
        items = {"command": self.command, **self.values}
        return "".join(f"{k} = {items[k]}\n" for k in sorted(items))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    def header(self) -> dict:
        meta = {"command": self.command}
        for line in self.canonical_text().splitlines():
            key, _, value = line.partition(" = ")
            if key != "command":
                meta[f"config.{key}"] = value
        meta["config_sha256"] = self.sha256()
        return meta


# ---------------------------------------------------------------------------
# parsing and validation


def parse_config_text(text) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        if key in out:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        out[key] = value
    return out


def _number(key, text):
    try:
        value = int(text)
    except ValueError:
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(key, f"not a number: {text!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return value


def _integer(key, text, minimum=None):
    value = _number(key, text)
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError(key, f"must be an integer, got {text!r}")
        value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {value}")
    return value


def _number_list(key, text):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(key, "empty list")
    return [_number(key, p) for p in parts]


def _check_integer_axis(key, lo, hi, steps):
    if float(lo).is_integer() and float(hi).is_integer() and ((hi - lo) / (steps - 1)).is_integer():
        return
    raise ConfigError(key, "integer parameter needs integral endpoints and an integral step")


def _grid_from(values, command):
    objective = values.get("objective")
    if objective is None:
        raise ConfigError("objective", "required")
    if objective not in optimize.OBJECTIVES:
        raise ConfigError("objective", f"unknown objective {objective!r}")
    params = optimize.objective_parameters(objective)
    axes, fixed = [], {}
    for key in sorted(values):
        if key.startswith("axis."):
            name = key[5:]
            if name not in params:
                raise ConfigError(key, f"{objective} has no parameter {name!r}; takes {params}")
            nums = _number_list(key, values[key])
            if len(nums) != 3:
                raise ConfigError(key, "expected 'lo, hi, steps'")
            lo, hi = float(nums[0]), float(nums[1])
            steps = _integer(key, str(nums[2]), minimum=2)
            if name in optimize.INTEGER_PARAMS:
                _check_integer_axis(key, lo, hi, steps)
            try:
                axes.append(optimize.Axis(name, lo, hi, steps))
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        elif key.startswith("param."):
            name = key[6:]
            if name not in params:
                raise ConfigError(key, f"{objective} has no parameter {name!r}; takes {params}")
            if name in optimize.INTEGER_PARAMS:
                fixed[name] = _integer(key, values[key])
            else:
                fixed[name] = float(_number(key, values[key]))
    if not axes:
        raise ConfigError("axis", "at least one axis.<name> entry is required")
    if command == "optimize" and len(axes) > 2:
        raise ConfigError("axis", "optimize takes one or two axes")
    if command == "optimize" and any(a.name in optimize.INTEGER_PARAMS for a in axes):
        raise ConfigError("axis", "optimize axes must be continuous parameters")
    sig = _required_parameters(objective)
    missing = [p for p in sig if p not in fixed and p not in {a.name for a in axes}]
    if missing:
        raise ConfigError(f"param.{missing[0]}", "required by the objective")
    for name, value in fixed.items():
        _check_domain(f"param.{name}", name, value)
    for axis in axes:
        _check_domain(f"axis.{axis.name}", axis.name, axis.lo)
    try:
        return optimize.ScanGrid(tuple(axes), objective, fixed)
    except ValueError as exc:
        raise ConfigError("axis", str(exc)) from None


def _required_parameters(objective):
    sig = inspect.signature(optimize.OBJECTIVES[objective])
    return [p.name for p in sig.parameters.values() if p.default is inspect.Parameter.empty]


_MINIMA = {"n": 3, "k": 1, "layers": 1, "cutoff": 2}


def _check_domain(key, name, value):
    if name in _MINIMA and value < _MINIMA[name]:
        raise ConfigError(key, f"must be >= {_MINIMA[name]}, got {value}")


def validate(command, values: dict, target=None) -> RunConfig:
    """Check keys and types for ``command`` and return the resolved config."""
    if command not in COMMAND_KEYS:
        raise ConfigError("command", f"unknown command {command!r}")
    if "command" in values and values["command"] != command:
        raise ConfigError("command", f"config is for {values['command']!r}, invoked as {command!r}")
    allowed = COMMON_KEYS | COMMAND_KEYS[command]
    prefixes = PREFIX_KEYS.get(command, ())
    for key in sorted(values):
        if key not in allowed and not key.startswith(prefixes):
            raise ConfigError(key, f"unknown key for {command!r}")
    resolved = {k: v for k, v in values.items() if k != "command"}

    if command in ("verify", "figure"):
        choices = VERIFY_TARGETS if command == "verify" else FIGURE_TARGETS
        if target is not None and resolved.get("target", target) != target:
            raise ConfigError("target", f"config names {resolved['target']!r}, invoked with {target!r}")
        resolved["target"] = target if target is not None else resolved.get("target")
        if resolved["target"] not in choices:
            raise ConfigError("target", f"expected one of {list(choices)}, got {resolved['target']!r}")

    seed = _integer("seed", str(resolved.get("seed", 0)), minimum=0)
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
    resolved["seed"] = seed
    fmt = resolved.get("format", "json" if command == "verify" else "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"expected csv or json, got {fmt!r}")
    resolved["format"] = fmt

    if command in ("sweep", "optimize"):
        _grid_from(resolved, command)
    if command == "optimize":
        if "start" in resolved:
            _number_list("start", resolved["start"])
        if "xatol" in resolved and not float(_number("xatol", resolved["xatol"])) > 0:
            raise ConfigError("xatol", "must be positive")
        for key in ("max_evaluations", "grid_steps"):
            if key in resolved:
                _integer(key, resolved[key], minimum=2)
    if command == "verify" and "schedule" in resolved:
        sched = [_integer("schedule", str(v), minimum=3) for v in _number_list("schedule", resolved["schedule"])]
        if len(sched) < 3 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("schedule", "needs at least 3 strictly increasing sizes")
    if command == "figure":
        defaults = FIGURE_DEFAULTS[resolved["target"]]
        if "k_max" in resolved and resolved["target"] != "fig3":
            raise ConfigError("k_max", "only used by fig3")
        for key, default in defaults.items():
            resolved.setdefault(key, default)
        n = _integer("n", str(resolved["n"]), minimum=3)
        steps = _integer("steps", str(resolved["steps"]), minimum=2)
        lo, hi = float(_number("chi_lo", str(resolved["chi_lo"]))), float(_number("chi_hi", str(resolved["chi_hi"])))
        if not 0 < lo < hi:
            raise ConfigError("chi_lo", "need 0 < chi_lo < chi_hi")
        if resolved["target"] == "fig2" and hi >= math.pi / 2:
            raise ConfigError("chi_hi", "f_ratio is defined for chi_t < pi/2")
        if resolved["target"] == "fig3":
            k_max = _integer("k_max", str(resolved["k_max"]), minimum=1)
            if not k_max < n / 2:
                raise ConfigError("k_max", f"need k_max < N/2 = {n / 2}")
        resolved.update(n=n, steps=steps, chi_lo=lo, chi_hi=hi)
    resolved.pop("out", None)
    return RunConfig(command, resolved)


# ---------------------------------------------------------------------------
# commands


@dataclass
class Outcome:
    text: str
    status: int = EXIT_OK


def _render(table: SweepTable, config: RunConfig) -> str:
    table.meta = {**config.header(), **table.meta}
    return to_json_text(table) if config.get("format") == "json" else to_csv_text(table)


def _run_sweep(config, threads):
    grid = _grid_from(config.values, "sweep")
    table = optimize.scan(grid, threads=threads)
    table.meta["objective"] = grid.objective
    return Outcome(_render(table, config))


def _run_optimize(config, threads):
    grid = _grid_from(config.values, "optimize")
    objective = optimize.OBJECTIVES[grid.objective]
    names = [a.name for a in grid.axes]
    fixed = dict(grid.fixed)
    steps = int(config.get("grid_steps", max(a.steps for a in grid.axes)))
    if len(grid.axes) == 1:
        (axis,) = grid.axes
        x, value = optimize.minimize_1d(lambda v: objective(**fixed, **{axis.name: v}), axis.lo, axis.hi, grid_steps=steps)
        table = SweepTable([axis.name, "value", "converged"], [[x, value, 1]])
        return Outcome(_render(table, config))
    ax, ay = grid.axes
    bounds = ((ax.lo, ax.hi), (ay.lo, ay.hi))
    if "start" in config.values:
        start = tuple(float(v) for v in _number_list("start", config.get("start")))
        if len(start) != 2:
            raise ConfigError("start", "expected two values")
    else:
        start = ((ax.lo + ax.hi) / 2, (ay.lo + ay.hi) / 2)
    try:
        res = optimize.minimize_2d(
            lambda x, y: objective(**fixed, **{ax.name: x, ay.name: y}),
            start,
            bounds,
            grid_steps=steps,
            xatol=float(config.get("xatol", 1e-8)),
            max_evaluations=int(config.get("max_evaluations", 10_000)),
        )
    except ValueError as exc:
        raise ConfigError("start", str(exc)) from None
    table = SweepTable(
        names + ["value", "grid_value", "converged", "evaluations"],
        [[*res.argmin, res.value, res.grid_value, int(res.converged), res.evaluations]],
    )
    status = EXIT_OK if res.converged else EXIT_NONCONVERGENCE
    return Outcome(_render(table, config), status)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _run_verify(config, threads):
    schedule = None
    if "schedule" in config.values:
        schedule = [int(v) for v in _number_list("schedule", config.get("schedule"))]
    report = optimize.verify_theorems(config.get("target"), schedule, seed=config.get("seed"))
    status = EXIT_OK if report.passed else EXIT_VERIFY
    if config.get("format") == "json":
        payload = {"meta": {"tool": f"twistuntwist {__version__}", **config.header()}, **report.to_dict()}
        return Outcome(json.dumps(_jsonable(payload), indent=2) + "\n", status)
    table = SweepTable(["check", "passed"], [[k, int(v)] for k, v in report.checks.items()])
    return Outcome(_render(table, config), status)


def fig2_table(n=1000, chi_lo=1e-4, chi_hi=0.2, steps=2000) -> SweepTable:
    """``f_ratio`` against ``chi_t`` on a uniform grid."""
    chis = np.linspace(chi_lo, chi_hi, steps)
    table = SweepTable(["chi_t", "f"])
    for chi in chis:
        table.append([float(chi), float(cf.f_ratio(n, float(chi)))])
    table.meta["n"] = n
    return table


def fig3_table(n=16, k_max=5, chi_lo=0.01, chi_hi=3.0, steps=300) -> SweepTable:
    """Inverse normalised error of the spin-wave protocol for both generator kinds."""
    chis = np.linspace(chi_lo, chi_hi, steps)
    table = SweepTable(["chi_t", "k", "kind", "inverse_normalized_error"])
    for kind in spinwave.KINDS:
        for k in range(1, k_max + 1):
            for chi in chis:
                try:
                    rep = spinwave.spinwave_error(n, k, float(chi), kind)
                    value = spinwave.inverse_normalized_error(rep, n)
                except DegenerateProtocolError:
                    value = math.nan
                table.append([float(chi), k, kind, value])
    table.meta["n"] = n
    return table


def _run_figure(config, threads):
    v = config.values
    if v["target"] == "fig2":
        table = fig2_table(v["n"], v["chi_lo"], v["chi_hi"], v["steps"])
    else:
        table = fig3_table(v["n"], int(v["k_max"]), v["chi_lo"], v["chi_hi"], v["steps"])
    return Outcome(_render(table, config))


RUNNERS = {"sweep": _run_sweep, "optimize": _run_optimize, "verify": _run_verify, "figure": _run_figure}


def run(config: RunConfig, threads=1) -> Outcome:
    """Execute a validated config and return the rendered output with its exit status."""
    return RUNNERS[config.command](config, threads)


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")
    common.add_argument("--seed", type=int, help="seed for sampled checks (unsigned 64-bit)")

    parser = argparse.ArgumentParser(prog="twistuntwist", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="evaluate an objective on a grid")
    sub.add_parser("optimize", parents=[common], help="minimise an objective over one or two axes")
    p = sub.add_parser("verify", parents=[common], help="run an optimality witness")
    p.add_argument("target", choices=VERIFY_TARGETS)
    p = sub.add_parser("figure", parents=[common], help="emit figure data")
    p.add_argument("target", choices=FIGURE_TARGETS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = parse_config_text(args.config.read_text()) if args.config else {}
        for key in ("format", "seed"):
            if getattr(args, key) is not None:
                values[key] = str(getattr(args, key))
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        config = validate(args.command, values, getattr(args, "target", None))
    except OSError as exc:
        print(f"config error: --config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outcome = run(config, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateProtocolError, TruncationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    if args.out is None:
        sys.stdout.write(outcome.text)
    else:
        try:
            args.out.write_text(outcome.text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if outcome.status == EXIT_VERIFY:
        print(f"verify {config.get('target')}: acceptance check failed", file=sys.stderr)
    elif outcome.status == EXIT_NONCONVERGENCE:
        print("optimize: minimiser did not converge", file=sys.stderr)
    return outcome.status
