"""Command-line front end: single solves, sweeps, and the verify battery."""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .channel import (ChannelParams, memoryless_environment,
                      nearest_neighbor_environment)
from .entropy import ApproxOrder
from .errors import GausscapError

_ORDERS = {"exact": ApproxOrder.EXACT, "zeroth": ApproxOrder.ZEROTH,
           "first": ApproxOrder.FIRST}


class ConfigError(Exception):
    pass


def _fmt(value):
    """Decimal rendering used everywhere: 12 significant digits, '.' decimal."""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def read_config_file(path):
    """Flat key=value lines, '#' comments."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, val = line.split("=", 1)
                values[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return values


def _parse_order(text):
    try:
        return _ORDERS[text.lower()]
    except KeyError:
        raise ConfigError(f"unknown order {text!r}; pick exact/zeroth/first")


def _solve_memoryless(p):
    import math
    from .memoryless import solve_one_use
    eta, n_env, s = p["eta"], p["N_env"], p["s"]
    sol = solve_one_use(eta, p["N"], n_env, s, _parse_order(p["order"]))
    # water level: averaged-output eigenvalue on a modulated quadrature
    e_q = (n_env + 0.5) * math.exp(s)
    x = eta * (sol.i_q + sol.c_q) + (1.0 - eta) * e_q
    if sol.c_q == 0.0 and sol.c_p > 0.0:
        e_p = (n_env + 0.5) * math.exp(-s)
        x = eta * (sol.i_p + sol.c_p) + (1.0 - eta) * e_p
    return {"capacity": sol.capacity, "stage": sol.stage, "r_opt": sol.r_opt,
            "x": x, "order": p["order"]}


def _solve_memory(p):
    from .memory import solve_asymptotic
    sol = solve_asymptotic(p["eta"], p["N"], p["N_env"], p["s"],
                           _parse_order(p["order"]),
                           quad_points=int(p["quad_points"]))
    return {"capacity": sol.capacity, "stage": sol.distribution.value,
            "tau": sol.tau, "x": sol.x, "order": p["order"]}


def _solve_finite(p):
    solver = {"memoryless": memoryless_environment,
              "nearest-neighbor": nearest_neighbor_environment}
    if p["env"] not in solver:
        raise ConfigError(f"unknown env model {p['env']!r}")
    n = int(p["n"])
    env = solver[p["env"]](p["N_env"], p["s"], n)
    from .kkt import solve_dynamic
    sol = solve_dynamic(ChannelParams(p["eta"], p["N"], n), env,
                        _parse_order(p["order"]))
    stages = ",".join(str(st.value) for st in sol.stages.stage)
    return {"capacity": sol.capacity_per_use, "stage": stages, "x": sol.x,
            "order": p["order"]}


_COMMANDS = {"memoryless": _solve_memoryless, "memory": _solve_memory,
             "finite": _solve_finite}

# row schema per command (stable column order for CSV)
_COLUMNS = {"memoryless": ("capacity", "stage", "r_opt", "x", "order"),
            "memory": ("capacity", "stage", "tau", "x", "order"),
            "finite": ("capacity", "stage", "x", "order")}


def _sweep_worker(args):
    command, params = args
    return _COMMANDS[command](params)


def _emit(rows, columns, fmt, out):
    if fmt == "json":
        payload = [{c: r[c] for c in columns} for r in rows]
        out.write(json.dumps(payload, indent=2, default=_fmt) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])


_DEFAULTS = {"eta": "0.5", "N": "1", "N_env": "0", "s": "0", "n": "1",
             "order": "exact", "quad_points": "256", "env": "memoryless"}
_REAL_KEYS = ("eta", "N", "N_env", "s")


def _gather(args, argnames):
    """Merge defaults, config file, and explicit flags (flags win)."""
    merged = dict(_DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in argnames:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            merged[key] = flag
    params = dict(merged)
    for key in _REAL_KEYS:
        try:
            params[key] = float(merged[key])
        except ValueError:
            raise ConfigError(f"parameter {key} is not a number: {merged[key]!r}")
    return params, merged


def _add_common(sub):
    sub.add_argument("--config", help="key=value config file; flags override")
    sub.add_argument("--eta", help="transmissivity in [0,1]")
    sub.add_argument("--N", help="mean input photons per mode")
    sub.add_argument("--N-env", dest="N_env", help="environment thermal photons")
    sub.add_argument("--s", help="environment squeezing parameter")
    sub.add_argument("--order", help="exact | zeroth | first")
    sub.add_argument("--quad-points", dest="quad_points",
                     help="quadrature panels for the asymptotic solver")
    sub.add_argument("--n", help="number of modes (finite command)")
    sub.add_argument("--env", help="memoryless | nearest-neighbor (finite)")
    sub.add_argument("--output", help="output path (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gausscap",
        description="Lower bounds on the classical capacity of lossy bosonic "
                    "Gaussian channels with memory.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("memoryless", "single solve, uncorrelated environment"),
            ("memory", "single solve, asymptotic correlated environment"),
            ("finite", "single solve, n-mode block"),
            ("sweep", "parameter sweep of one of the solve commands"),
            ("verify", "run the self-check battery")):
        sub = subs.add_parser(name, help=help_text)
        if name == "verify":
            sub.add_argument("--full", action="store_true",
                             help="full-size battery (slower)")
            continue
        _add_common(sub)
        if name == "sweep":
            sub.add_argument("--command", dest="sweep_command", required=True,
                             choices=("memoryless", "memory", "finite"))
            sub.add_argument("--axis", required=True,
                             help="swept parameter name (eta, N, N_env, s, n)")
            sub.add_argument("--start", required=True, type=float)
            sub.add_argument("--stop", required=True, type=float)
            sub.add_argument("--steps", required=True, type=int)
    return parser


def _run_single(args):
    params, _ = _gather(args, _DEFAULTS)
    row = _COMMANDS[args.command](params)
    return [row], _COLUMNS[args.command]


def _run_sweep(args):
    params, merged = _gather(args, _DEFAULTS)
    axis = args.axis
    if axis not in ("eta", "N", "N_env", "s", "n"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    if args.steps < 2:
        raise ConfigError("sweep needs steps >= 2")
    step = (args.stop - args.start) / (args.steps - 1)
    grid = [args.start + k * step for k in range(args.steps)]
    jobs = []
    for value in grid:
        point = dict(params)
        point[axis] = int(round(value)) if axis == "n" else value
        jobs.append((args.sweep_command, point))
    threads = os.environ.get("GAUSSCAP_THREADS")
    workers = max(1, int(threads)) if threads else (os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(job) for job in jobs]
    for value, row in zip(grid, rows):
        row[axis] = value
    columns = (axis,) + _COLUMNS[args.sweep_command]
    return rows, columns


def _run_verify(args):
    from .verify import run_battery
    results = run_battery(fast=not args.full, echo=print)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code else 2
    try:
        if args.command == "verify":
            return _run_verify(args)
        if args.command == "sweep":
            rows, columns = _run_sweep(args)
        else:
            rows, columns = _run_single(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GausscapError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w") as fh:
            _emit(rows, columns, args.format, fh)
    else:
        _emit(rows, columns, args.format, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
