"""Batch front-end: run scenarios, compare methods and dump costmaps to files.

Exit codes: 0 completed run (goal or not), 2 malformed or missing scenario,
3 invalid parameters, 4 requested time outside the run.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import InvalidParameter, Params
from .mapio import save_map
from .sim import Metrics, ScenarioInvalid, load_scenario, run_scenario

log = logging.getLogger("bslnav")

EXIT_OK, EXIT_SCENARIO, EXIT_PARAMS, EXIT_TIME = 0, 2, 3, 4
METHODS = (1, 2, 3, 4)
CSV_HEADER = "t,x,y,theta,v,omega,clearance"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunReport:
    """Per-method metrics plus everything needed to reproduce them."""
    scenario: str
    params: dict
    methods: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        body = {"scenario": self.scenario, "version": self.version, "params": self.params,
                "methods": {str(m): _finite(s) for m, s in sorted(self.methods.items())}}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


def _finite(d: dict) -> dict:
    # JSON has no infinity; an unbounded clearance is written as null
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in d.items()}


def configure_logging() -> None:
    level = os.environ.get("BSLNAV_LOG", "error").strip().lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("bslnav: %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(levels.get(level, logging.ERROR))
    if level not in levels:
        log.error("unknown BSLNAV_LOG=%r, using 'error'", level)


def resolve_scenario(path) -> Path:
    """A file path, or the name of a bundled scenario such as ``s1``."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".scenario" else p.name + ".scenario"
    bundled = resources.files("bslnav") / "scenarios" / name
    if str(p.parent) in ("", ".") and bundled.is_file():
        return Path(str(bundled))
    return p


def parse_param_overrides(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise CliError(EXIT_PARAMS, f"--param expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _load(scenario_path, overrides: Optional[dict] = None, timeout: Optional[float] = None):
    try:
        scenario = load_scenario(resolve_scenario(scenario_path))
    except ScenarioInvalid as exc:
        raise CliError(EXIT_SCENARIO, str(exc)) from None
    try:
        params = Params().override(scenario.planner).override(overrides or {})
        if timeout is not None:
            params = params.override({"timeout": timeout})
    except InvalidParameter as exc:
        raise CliError(EXIT_PARAMS, str(exc)) from None
    return scenario, params


def _method(method) -> int:
    try:
        m = int(method)
    except (TypeError, ValueError):
        m = None
    if m not in METHODS:
        raise CliError(EXIT_PARAMS, f"method must be one of 1-4, got {method!r}")
    return m


def _run(scenario, method: int, params: Params, observer=None) -> Metrics:
    try:
        return run_scenario(scenario, method, params, observer)
    except ScenarioInvalid as exc:
        raise CliError(EXIT_SCENARIO, str(exc)) from None
    except InvalidParameter as exc:
        raise CliError(EXIT_PARAMS, str(exc)) from None


def trajectory_csv(metrics: Metrics) -> str:
    lines = [CSV_HEADER]
    lines += [",".join(f"{v:.6f}" for v in row) for row in metrics.trajectory]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run_into(scenario, method: int, params: Params, out: Path, dump: bool) -> Metrics:
    out.mkdir(parents=True, exist_ok=True)
    observer = None
    if dump:
        cdir = out / "costmaps"
        cdir.mkdir(exist_ok=True)

        def observer(cycle):
            save_map(cycle.master, cdir / f"cycle_{cycle.index:05d}.pgm")

    log.info("running %s with method %d", scenario.name, method)
    metrics = _run(scenario, method, params, observer)
    _write(out / "trajectory.csv", trajectory_csv(metrics))
    body = dict(metrics.summary(), method=method, scenario=scenario.name, version=__version__)
    _write(out / "metrics.json", json.dumps(_finite(body), indent=2, sort_keys=True) + "\n")
    log.info("method %d: %s after %.1f s", method, metrics.termination, metrics.elapsed)
    return metrics


def cmd_run(scenario_path, method, output_dir, overrides: Optional[dict] = None,
            timeout: Optional[float] = None, dump_costmaps: bool = False) -> int:
    try:
        m = _method(method)
        scenario, params = _load(scenario_path, overrides, timeout)
        _run_into(scenario, m, params, Path(output_dir), dump_costmaps)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    return EXIT_OK


def format_table(report: RunReport) -> str:
    rows = [f"{'Navigation Method':<20}{'Goal':<6}{'Time [sec]':>10}"]
    for m, s in sorted(report.methods.items()):
        mark = "○" if s["goal_reached"] and not s["collided"] else "×"
        time = f"{s['elapsed']:.1f}" if mark == "○" else "-"
        rows.append(f"{'Method ' + str(m):<20}{mark:<6}{time:>10}")
    return "\n".join(rows) + "\n"


def cmd_compare(scenario_path, output_dir, overrides: Optional[dict] = None,
                timeout: Optional[float] = None, dump_costmaps: bool = False) -> int:
    """All four methods into disjoint subdirectories, then the merged report."""
    out = Path(output_dir)
    try:
        scenario, params = _load(scenario_path, overrides, timeout)
        report = RunReport(scenario.name, params.as_dict())
        for m in METHODS:
            metrics = _run_into(scenario, m, params, out / f"method{m}", dump_costmaps)
            report.methods[m] = metrics.summary()
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    _write(out / "comparison.json", report.to_json())
    table = format_table(report)
    _write(out / "table.txt", table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_dump_costmap(scenario_path, method, t: float, output,
                     overrides: Optional[dict] = None, timeout: Optional[float] = None) -> int:
    """Master costmap of the control cycle nearest ``t`` as PGM plus sidecar."""
    try:
        m = _method(method)
        if not (isinstance(t, (int, float)) and math.isfinite(t) and t >= 0):
            raise CliError(EXIT_PARAMS, f"time must be a finite number >= 0, got {t!r}")
        scenario, params = _load(scenario_path, overrides, timeout)
        target = int(round(t / params.dt_ctrl))
        seen = {}

        def observer(cycle):
            seen["cycle"] = cycle
            return cycle.index >= target

        metrics = _run(scenario, m, params, observer)
        if metrics.termination != "stopped" and t > metrics.elapsed + 1e-9:
            raise CliError(EXIT_TIME, f"t={t} exceeds the run duration {metrics.elapsed:.1f} s")
        if "cycle" not in seen:
            raise CliError(EXIT_TIME, "the run ended before its first control cycle")
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    cycle = seen["cycle"]
    output = Path(output)
    if output.suffix != ".pgm":
        output = output.with_suffix(".pgm")
    output.parent.mkdir(parents=True, exist_ok=True)
    meta = save_map(cycle.master, output)
    with open(meta, "a", encoding="ascii", newline="\n") as fh:
        fh.write(f"scenario: {scenario.name}\nmethod: {m}\ncycle: {cycle.index}\n"
                 f"time: {cycle.state.t:.6f}\n")
    log.info("wrote %s (cycle %d, t=%.1f)", output, cycle.index, cycle.state.t)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bslnav", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario file or bundled name (s1, s2, open)")
        p.add_argument("--timeout", type=float, default=None, metavar="SECONDS")
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("run", help="run one method")
    common(p)
    p.add_argument("--method", default="4")
    p.add_argument("--out", default="out")
    p.add_argument("--dump-costmaps", action="store_true")

    p = sub.add_parser("compare", help="run all four methods and tabulate")
    common(p)
    p.add_argument("--out", default="out")
    p.add_argument("--dump-costmaps", action="store_true")

    p = sub.add_parser("dump-costmap", help="write the master costmap at time t")
    common(p)
    p.add_argument("--method", default="4")
    p.add_argument("--t", type=float, required=True, metavar="SECONDS")
    p.add_argument("--out", default="costmap.pgm")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        overrides = parse_param_overrides(args.param)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    if args.command == "run":
        return cmd_run(args.scenario, args.method, args.out, overrides, args.timeout,
                       args.dump_costmaps)
    if args.command == "compare":
        return cmd_compare(args.scenario, args.out, overrides, args.timeout, args.dump_costmaps)
    return cmd_dump_costmap(args.scenario, args.method, args.t, args.out, overrides,
                            args.timeout)


if __name__ == "__main__":
    sys.exit(main())
