"""Command line interface: ``phasefatigue run|sweep|landscape|check``.

Exit codes: 0 success, 1 invalid input (configuration, arguments, paths,
or a failed acceptance check), 2 the time integration diverged.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import io
import math
import os
from pathlib import Path
import sys

import numpy as np

from .config import SWEEP_AXES, RunConfig, SweepSpec, parse_config
from .energy import energy_landscape
from .errors import ConfigError, DivergenceError, InvalidArgument, PreconditionViolation
from .solver import COLUMNS, run

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2

SWEEP_COLUMNS = ("param_value", "phi_max_at_snapshot", "fatigue_probe_at_snapshot",
                 "time_phi_reaches_0.9")
FIELD_COLUMNS = ("t", "node", "x", "u", "v", "phi", "fatigue", "hist_H")


def fmt(value) -> str:
    """Shortest decimal text that round-trips to the same double."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def simulate(cfg: RunConfig, keep_fields: bool = False):
    """Run one configuration; returns ``(trajectory, final_state)``."""
    return run(cfg.params(), cfg.grid(), cfg.load(), cfg.controls(), cfg.initial_state(),
               thermal=cfg.is_thermal, probe_node=cfg.probe_node, keep_fields=keep_fields)


def _field_rows(fields, grid):
    x = grid.x
    for s in fields:
        extra = () if s.theta is None else (s.theta,)
        for i in range(grid.n_nodes):
            yield (s.t, i, x[i], s.u[i], s.v[i], s.phi[i], s.fatigue[i], s.hist_H[i]) + tuple(
                e[i] for e in extra)


def cmd_run(cfg: RunConfig, trajectory_path=None, fields_path=None) -> int:
    """Run ``cfg`` and write its trajectory (and optional field snapshots)."""
    trajectory_path = trajectory_path or cfg.trajectory_path
    fields_path = fields_path or cfg.fields_path
    try:
        traj, _ = simulate(cfg, keep_fields=fields_path is not None)
    except DivergenceError as exc:
        print(f"error: run diverged at t = {exc.time!r}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InvalidArgument, PreconditionViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        _write_csv(trajectory_path, COLUMNS, traj.rows)
        if fields_path is not None:
            header = FIELD_COLUMNS + (("theta",) if cfg.is_thermal else ())
            _write_csv(fields_path, header, _field_rows(traj.fields, cfg.grid()))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def value_at(times, values, t):
    """Sample value at ``t``: exact when ``t`` is a sample time, else linear."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    hit = np.nonzero(np.abs(times - t) <= 1e-12 * max(1.0, abs(t)))[0]
    if hit.size:
        return float(values[hit[0]])
    return float(np.interp(t, times, values))


def first_crossing(times, values, level):
    """Linearly interpolated first time ``values`` reaches ``level``, or None."""
    values = np.asarray(values, dtype=float)
    idx = np.nonzero(values >= level)[0]
    if idx.size == 0:
        return None
    k = int(idx[0])
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    v0, v1 = values[k - 1], values[k]
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))


def sweep_member(spec: SweepSpec, value: float):
    """Summary row for one axis value; returns ``(row, error)``."""
    try:
        cfg = spec.member(value)
        traj, _ = simulate(cfg)
    except DivergenceError as exc:
        return None, f"{spec.axis} = {value!r}: diverged at t = {exc.time!r}"
    except (ConfigError, InvalidArgument, PreconditionViolation) as exc:
        return None, f"{spec.axis} = {value!r}: {exc}"
    t = traj.times
    row = (value,
           value_at(t, traj.column("phi_max"), spec.snapshot_time),
           value_at(t, traj.column("fatigue_probe"), spec.snapshot_time),
           first_crossing(t, traj.column("phi_max"), 0.9))
    return row, None


def _sweep_task(args):
    return sweep_member(*args)


def sweep_rows(spec: SweepSpec, workers: int = 1):
    """All member rows sorted by parameter value, plus the error messages."""
    tasks = [(spec, float(v)) for v in spec.values]
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    rows = sorted((r for r, _ in results if r is not None), key=lambda r: r[0])
    errors = [e for _, e in results if e is not None]
    return rows, errors


def cmd_sweep(spec: SweepSpec, out=None, workers: int = 1) -> int:
    rows, errors = sweep_rows(spec, workers)
    if out is None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows([[fmt(v) for v in r] for r in rows])
        sys.stdout.write(buf.getvalue())
    else:
        try:
            _write_csv(out, SWEEP_COLUMNS, rows)
        except OSError as exc:
            print(f"error: cannot write output: {exc}", file=sys.stderr)
            return EXIT_INVALID
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    if any("diverged" in e for e in errors):
        return EXIT_DIVERGED
    return EXIT_INVALID if errors else EXIT_OK


def landscape_filename(fatigue: float) -> str:
    return f"landscape_fatigue_{fmt(fatigue)}.csv"


def cmd_landscape(F0: float, fatigues, samples: int, out_dir) -> int:
    """Write one (phi, energy_density) CSV per fatigue value into ``out_dir``."""
    try:
        curves = [(f, *energy_landscape(F0, f, samples)) for f in fatigues]
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        for f, phi, density in curves:
            _write_csv(Path(out_dir) / landscape_filename(f), ("phi", "energy_density"),
                       zip(phi, density))
    except OSError as exc:
        print(f"error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_check(only=None) -> int:
    from .acceptance import run_all

    results = run_all(only=only, stream=sys.stdout)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("expected a nonempty list of finite numbers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasefatigue",
                                     description="1D phase-field fatigue damage simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one configuration and write the trajectory CSV")
    p.add_argument("config")
    p.add_argument("--trajectory", help="override outputs.trajectory_path")
    p.add_argument("--fields", help="override outputs.fields_path")

    p = sub.add_parser("sweep", help="sweep one parameter and write a summary CSV")
    p.add_argument("config")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, type=_float_list)
    p.add_argument("--snapshot", required=True, type=float)
    p.add_argument("--out", help="summary CSV path (default: standard output)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("landscape", help="write homogeneous energy landscapes")
    p.add_argument("--f0", required=True, type=float)
    p.add_argument("--fatigue", required=True, type=_float_list)
    p.add_argument("--samples", required=True, type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("check", help="run the acceptance suite")
    p.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


def _load(path):
    try:
        return parse_config(path), None
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return None, EXIT_INVALID


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID

    if args.command == "run":
        cfg, code = _load(args.config)
        return code if cfg is None else cmd_run(cfg, args.trajectory, args.fields)
    if args.command == "sweep":
        cfg, code = _load(args.config)
        if cfg is None:
            return code
        try:
            spec = SweepSpec(cfg, args.axis, tuple(args.values), args.snapshot)
        except ConfigError as exc:
            for e in exc.errors:
                print(f"error: {e}", file=sys.stderr)
            return EXIT_INVALID
        return cmd_sweep(spec, args.out, args.workers)
    if args.command == "landscape":
        return cmd_landscape(args.f0, args.fatigue, args.samples, args.out)
    return cmd_check(args.only)


if __name__ == "__main__":
    sys.exit(main())
