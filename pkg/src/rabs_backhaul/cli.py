"""Command-line entry point: single runs and parameter sweeps.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 output failed the feasibility check, 5 instance too large for the exact
solver.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .baselines import dinkelbach_exact, greedy_solver
from .checks import FeasibilityError, assert_feasible, check_result
from .config import ConfigError, RunConfig, load_config
from .flow import OracleBudgetExceeded
from .lp_core import LpNumericalError
from .planner import SolverResult, dense_baseline, two_stage_solver
from .routes import count_routes
from .scenario import build_manhattan_map
from .traffic import generate_demand, read_demand_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4
EXIT_TOO_LARGE = 5

SWEEP_AXES = {"N": int, "H": int, "sigma": float}

log = logging.getLogger("rabs_backhaul")


def build_instance(cfg: RunConfig):
    graph = build_manhattan_map(cfg.scenario, cfg.channel)
    n_sites = graph.n_nodes - 1
    if cfg.demand_file:
        try:
            demand = read_demand_csv(cfg.demand_file, n_sites, cfg.traffic.epochs)
        except OSError as exc:
            raise ConfigError(f"traffic.demand_file: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"traffic.demand_file: {exc}") from None
    else:
        demand = generate_demand(n_sites, cfg.traffic)
    return graph, demand


def solve(cfg: RunConfig, graph=None, demand=None) -> SolverResult:
    if graph is None:
        graph, demand = build_instance(cfg)
    p = cfg.energy
    if cfg.solver == "two-stage":
        res = two_stage_solver(graph, demand, cfg.N, cfg.H, p, rounding_trials=cfg.rounding_trials,
                               seed=cfg.seed, lp_method=cfg.lp_method)
    elif cfg.solver == "greedy":
        res = greedy_solver(graph, demand, cfg.N, cfg.H, p, lp_method=cfg.lp_method)
    elif cfg.solver == "exact":
        res = dinkelbach_exact(graph, demand, cfg.N, cfg.H, p)
    else:
        res = dense_baseline(graph, demand, cfg.H, p, lp_method=cfg.lp_method)
    assert_feasible(check_result(res, graph, demand, cfg.H, p.epoch_duration, cfg.channel, p))
    return res


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_trace(res: SolverResult, path: Path) -> None:
    def w(fh):
        out = csv.writer(fh)
        out.writerow(["epoch", "iteration", "active_routes", "master_objective_bits", "pricing_violations"])
        for t, rows in enumerate(res.traces):
            for r in rows:
                out.writerow([t, r["iteration"], r["routes"], repr(r["objective"]), r["violations"]])
    _atomic_write(path, w)


def run(cfg: RunConfig, out_dir: Optional[Path] = None, trace: bool = False) -> SolverResult:
    """Solve one configuration and write ``result.json`` and ``plan.csv``
    (plus ``trace.csv`` with ``trace``) into ``out_dir``."""
    graph, demand = build_instance(cfg)
    res = solve(cfg, graph, demand)
    out = Path(out_dir or cfg.output_dir)
    doc = res.to_dict(demand, cfg.energy.epoch_duration)
    doc["config"] = cfg.to_dict()
    doc["graph"] = graph.summary()
    _atomic_write(out / "result.json", lambda fh: fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n"))
    _atomic_write(out / "plan.csv", lambda fh: _plan_rows(res, fh))
    if trace:
        write_trace(res, out / "trace.csv")
    return res


def _plan_rows(res: SolverResult, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["transition", "rabs_id", "from_site", "to_site", "flight_m", "flight_J"])
    for t, tr in enumerate(res.plan.transitions):
        for m in tr:
            w.writerow([t, m.rabs, m.origin, m.target, repr(m.distance), repr(m.energy)])


def sweep_point(cfg: RunConfig, axis: str, value) -> dict:
    if axis == "N":
        point = cfg.replace(N=value)
    elif axis == "H":
        point = cfg.replace(H=value)
    else:
        point = cfg.with_overrides(sigma=value)
    row = {"value": value, "served_fraction": "", "ee": "", "runtime": "", "status": "ok"}
    start = time.perf_counter()
    try:
        graph, demand = build_instance(point)
        res = solve(point, graph, demand)
        row["served_fraction"] = repr(res.served_fraction(demand, point.energy.epoch_duration))
        row["ee"] = repr(res.ee)
        if axis == "H":
            row["routes_total"] = count_routes(graph, value)
            row["routes_active"] = res.traces[0][-1]["routes"] if res.traces else ""
    except (LpNumericalError, OracleBudgetExceeded, FeasibilityError, ConfigError) as exc:
        row["status"] = f"{type(exc).__name__}: {exc}"
    row["runtime"] = f"{time.perf_counter() - start:.3f}"
    return row


def sweep(cfg: RunConfig, axis: str, values: list, out_dir: Path, jobs: int = 1) -> list:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {sorted(SWEEP_AXES)}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(sweep_point, [cfg] * len(values), [axis] * len(values), values))
    else:
        rows = [sweep_point(cfg, axis, v) for v in values]
    cols = ["value", "served_fraction", "ee", "runtime"]
    if axis == "H":
        cols += ["routes_total", "routes_active"]
    cols.append("status")

    def w(fh):
        out = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        out.writeheader()
        out.writerows(rows)
    _atomic_write(Path(out_dir) / f"sweep_{axis}.csv", w)
    return rows


def parse_sweep(spec: str) -> tuple:
    axis, sep, vals = spec.partition("=")
    axis = axis.strip()
    if not sep or axis not in SWEEP_AXES:
        raise ConfigError(f"--sweep: expected <axis>=<v1,v2,...> with axis in {sorted(SWEEP_AXES)}")
    try:
        values = [SWEEP_AXES[axis](v) for v in vals.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--sweep: bad value list {vals!r}") from None
    if not values:
        raise ConfigError("--sweep: empty value list")
    return axis, values


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rabs-plan", description="Plan RABS deployments, routes and relocations.")
    ap.add_argument("--config", type=Path, help="JSON run configuration")
    ap.add_argument("--solver", choices=["two-stage", "greedy", "exact", "dense"])
    ap.add_argument("--n", type=int, dest="N", help="number of RABSs")
    ap.add_argument("--hops", type=int, dest="H", help="hop limit")
    ap.add_argument("--epochs", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--rounding-trials", type=int)
    ap.add_argument("--sweep", help="axis=v1,v2,... with axis N, H or sigma")
    ap.add_argument("--trace", action="store_true", help="write the column-generation trace")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(N=args.N, H=args.H, epochs=args.epochs, seed=args.seed,
                                 rounding_trials=args.rounding_trials, solver=args.solver)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = args.out or Path(cfg.output_dir)
        if args.sweep:
            axis, values = parse_sweep(args.sweep)
            rows = sweep(cfg, axis, values, out, args.jobs)
            for r in rows:
                print(f"{axis}={r['value']}: served={r['served_fraction']} ee={r['ee']} {r['status']}")
            return EXIT_OK
        res = run(cfg, out, trace=args.trace)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleBudgetExceeded as exc:
        print(f"instance too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except FeasibilityError as exc:
        print(f"infeasible output: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except LpNumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{res.solver_name}: EE = {res.ee:.6g} bits/J, served {res.served_bits:.6g} bits "
          f"in {res.wall_time:.2f} s -> {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
