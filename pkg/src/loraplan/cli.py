"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 infeasible plan,
4 simulation gate failure.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import contextlib
import csv
import logging
import sys

import numpy as np

from . import planner, scenario as scen, sim
from .errors import ConvergenceError, DomainError, NumericError
from .model import CURVE_NAMES, N_RINGS, SpatialConfig, curves

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_GATE = 0, 2, 3, 4

PLAN_COLUMNS = ("ring", "l_m", "alpha", "rho", "p", "N_ring", "edge_C1",
                "result", "R_m", "N_total", "T_H1", "iterations")
HISTORY_COLUMNS = ("iteration", "t_h1", "R_m", "N_total", "feasible", "window")

log = logging.getLogger("loraplan")


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        # shortest round-trip form: never fewer digits than the value carries
        return repr(float(v))
    return "" if v is None else str(v)


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def write_csv(path, header, rows):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _grid(args, sc):
    if getattr(args, "grid", None):
        return scen.parse_grid(args.grid, "--grid")
    if sc.sim["grid"] is not None:
        return sc.sim["grid"]
    raise scen.ConfigError("sim.grid", "no distance grid; pass --grid min:max:step")


def _plan(sc, algorithm):
    req = sc.plan_request(algorithm)
    fn = planner.maximize_range if algorithm == "range" else planner.maximize_nodes
    return fn(req, sc.radio, sc.thresholds), req


def _network(sc):
    """Geometry, spatial config and external network for curve evaluation."""
    if sc.geometry_mode == "planned":
        res, req = _plan(sc, sc.default_algorithm())
        if not res.converged:
            raise NumericError("planned geometry is infeasible")
        spatial = SpatialConfig.from_intensities(res.alpha, res.duty)
        return res.geometry, spatial, req.external(res.radius)
    if sc.geometry is None:
        raise scen.ConfigError("lorawan", "equal_width geometry needs radius_m")
    if sc.duty is None:
        raise scen.ConfigError("lorawan", "give duty_cycle or message_period_s")
    return sc.geometry, sc.spatial(), sc.external


def _curve_rows(grid, an, emp=None):
    for k, d in enumerate(grid):
        row = [d, an["ring"][k]] + [an[c][k] for c in CURVE_NAMES]
        if emp is not None:
            row += [emp.freq[c][k] for c in CURVE_NAMES] + [emp.stderr[c][k] for c in CURVE_NAMES]
        yield row


def cmd_evaluate(args):
    sc = scen.load(args.scenario)
    grid = _grid(args, sc)
    geometry, spatial, external = _network(sc)
    _check_grid(grid, geometry)
    an = curves(grid, geometry, spatial, external, sc.thresholds, sc.radio)
    write_csv(args.out, ("distance_m", "ring") + CURVE_NAMES, _curve_rows(grid, an))
    return EXIT_OK


def _check_grid(grid, geometry):
    if grid.size == 0 or (grid <= 0).any() or (grid > geometry.radius).any():
        raise scen.ConfigError("grid", f"distances must lie in (0, {geometry.radius:.6g}] m")


def plan_rows(res):
    counts = res.ring_counts
    for i in range(N_RINGS):
        yield [i + 1, res.geometry.limits[i + 1], res.alpha[i], res.density[i], res.duty[i],
               counts[i], res.edge_reliability[i]] + [None] * 5
    yield ["summary"] + [None] * 6 + [res.result, res.radius, res.total, res.t_h1, res.iterations]


def _cmd_plan(args, algorithm):
    sc = scen.load(args.scenario)
    res, _ = _plan(sc, algorithm)
    write_csv(args.out, PLAN_COLUMNS, plan_rows(res))
    if args.history:
        write_csv(args.history, HISTORY_COLUMNS,
                  ([h[c] for c in HISTORY_COLUMNS] for h in res.history))
    if not res.converged:
        print(f"plan infeasible (result {res.result})", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_plan_range(args):
    return _cmd_plan(args, "range")


def cmd_plan_nodes(args):
    return _cmd_plan(args, "nodes")


def cmd_simulate(args):
    sc = scen.load(args.scenario)
    grid = _grid(args, sc)
    geometry, spatial, external = _network(sc)
    _check_grid(grid, geometry)
    gate = args.gate if args.gate is not None else sc.sim["gate"]
    an = curves(grid, geometry, spatial, external, sc.thresholds, sc.radio)
    cfg = sim.TrialConfig(geometry, spatial, external, sc.radio, sc.thresholds, grid,
                          trials=args.trials or sc.sim["trials"],
                          seed=sc.sim["seed"] if args.seed is None else args.seed,
                          fading=args.fading or sc.sim["fading"])
    emp = sim.estimate_curves(cfg, jobs=args.jobs)
    report = sim.compare_curves(an, emp)
    header = (("distance_m", "ring") + CURVE_NAMES + tuple(c + "_emp" for c in CURVE_NAMES)
              + tuple(c + "_se" for c in CURVE_NAMES))
    write_csv(args.out, header, _curve_rows(grid, an, emp))
    worst = max(report.max_abs, key=report.max_abs.get)
    ok = report.overall_max <= gate
    print(f"trials={cfg.trials} max|analytic-empirical|={report.overall_max:.6g} ({worst}) "
          f"beyond-3SE={report.total_flagged} gate={gate:g} {'PASS' if ok else 'FAIL'}",
          file=sys.stderr)
    return EXIT_OK if ok else EXIT_GATE


def parse_values(text):
    """``"a,b,c"`` or an inclusive ``"start:stop:step"`` range."""
    if ":" in text:
        return [float(v) for v in scen.parse_grid(text, "--values")]
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            out.append(tok)
    if not out:
        raise scen.ConfigError("--values", "empty value list")
    return out


SWEEP_COLUMNS = (("axis", "value", "algorithm", "result", "R_m", "N_total", "T_H1", "iterations")
                 + tuple(f"l{i}_m" for i in range(1, N_RINGS + 1))
                 + tuple(f"N{i}" for i in range(1, N_RINGS + 1)))


def _sweep_point(raw, axis, value, algorithm):
    sc = scen.from_dict(scen.with_field(raw, axis, value))
    try:
        res, _ = _plan(sc, algorithm)
    except (NumericError, ConvergenceError) as exc:
        log.warning("%s=%s: %s", axis, value, exc)
        return [axis, value, algorithm, planner.INFEASIBLE] + [None] * (4 + 2 * N_RINGS)
    return ([axis, value, algorithm, res.result, res.radius, res.total, res.t_h1, res.iterations]
            + list(res.geometry.outer) + list(res.ring_counts))


def cmd_sweep(args):
    sc = scen.load(args.scenario)
    algorithm = args.algorithm or sc.default_algorithm()
    values = parse_values(args.values)
    # validate the axis and every value before doing any work
    for v in values:
        scen.from_dict(scen.with_field(sc.raw, args.axis, v))
    n = len(values)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_point, [sc.raw] * n, [args.axis] * n, values,
                                 [algorithm] * n))
    else:
        rows = [_sweep_point(sc.raw, args.axis, v, algorithm) for v in values]
    write_csv(args.out, SWEEP_COLUMNS, rows)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="loraplan", description="LoRaWAN coverage model, planner and simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", required=True, help="YAML scenario file")
        sp.add_argument("--out", default=None, help="output CSV path (default: stdout)")
        sp.set_defaults(func=fn)
        return sp

    sp = add("evaluate", cmd_evaluate, "analytic H1, Q1, Q1*, Z1, C1 curves")
    sp.add_argument("--grid", help="distance grid min:max:step in metres")
    for name, fn, what in (("plan-range", cmd_plan_range, "maximise coverage radius"),
                           ("plan-nodes", cmd_plan_nodes, "maximise node count")):
        sp = add(name, fn, what)
        sp.add_argument("--history", help="write per-iteration history CSV here")
    sp = add("simulate", cmd_simulate, "Monte Carlo cross-check of the analytic curves")
    sp.add_argument("--grid", help="distance grid min:max:step in metres")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--gate", type=float, help="max allowed |analytic - empirical| (default 0.01)")
    sp.add_argument("--fading", choices=sim.FADING_MODES)
    sp.add_argument("--jobs", type=int, default=1)
    sp = add("sweep", cmd_sweep, "run a planner over one scenario field")
    sp.add_argument("--axis", required=True, help="section.key, e.g. plan.n_min")
    sp.add_argument("--values", required=True, help="comma list or start:stop:step")
    sp.add_argument("--algorithm", choices=("range", "nodes"))
    sp.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ConvergenceError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
