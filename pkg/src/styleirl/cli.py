"""Command-line surface tying the pipeline together.

Subcommands: demo, features, learn, reproduce, compare, plot-data.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import io as sio
from .config import ConfigError, ScenarioConfig, apply_assignments, load_scenario
from .features import (FEATURE_NAMES, compute_features, detect_trigger,
                       elliptical_index, scale)
from .learner import learn_from_trajectories, optimize_trajectory
from .smpc import run_closed_loop, scripted_tv_states
from .spline import SplineTrajectory, sample, states_to_control_points


def _load_config(args) -> ScenarioConfig:
    config = load_scenario(args.scenario) if args.scenario else ScenarioConfig()
    overrides = []
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        overrides.append((key.strip(), raw))
    apply_assignments(config, overrides)
    config.validate()
    return config


def _tv_trajectory(config: ScenarioConfig) -> SplineTrajectory:
    return states_to_control_points(scripted_tv_states(config), config.Ts)


def cmd_demo(args) -> int:
    config = _load_config(args)
    record = run_closed_loop(config)
    sio.export_trajectory(record, args.out)
    print(f"wrote {args.out}: {len(record.t)} samples, "
          f"statuses: {sorted(set(record.statuses))}")
    return 0


def cmd_features(args) -> int:
    config = _load_config(args)
    ev = sio.import_trajectory(args.demo)
    tv = _tv_trajectory(config)
    trig = detect_trigger(ev, tv, config.l_a, config.l_b, config.lam, config.T_rct)
    result = compute_features(ev, tv, config.lane_context(), trig)
    values = scale(result.values, config.scaling()) if args.scaled else result.values
    sio.export_features(values, args.out)
    if trig.triggered:
        print(f"triggered=true t_trg={trig.t_trg:g} window_end={trig.t_window_end:g}")
    else:
        print("triggered=false")
    return 0


def cmd_learn(args) -> int:
    config = _load_config(args)
    if args.features is not None:
        config.feature_set = args.features
    ev = sio.import_trajectory(args.demo)
    tv = _tv_trajectory(config)
    result = learn_from_trajectories(ev, tv, config)
    sio.export_weights(result.theta, args.out_theta)
    if args.out_history:
        sio.export_history(result.history, args.out_history)
    if args.out_reproduced and result.reproduced is not None:
        sio.export_trajectory(result.reproduced, args.out_reproduced)
    print(f"iterations={len(result.history)} best_epsilon={result.best_epsilon:.6g} "
          f"terminated_by_rule={result.terminated_by_rule}")
    return 0


def cmd_reproduce(args) -> int:
    config = _load_config(args)
    theta = sio.import_weights(args.theta)
    ev = sio.import_trajectory(args.demo)
    tv = _tv_trajectory(config)
    result = optimize_trajectory(theta, ev, tv, config.lane_context(), config)
    sio.export_trajectory(result.trajectory, args.out)
    print(f"objective={result.objective:.6g} inner_iterations={result.n_iterations}")
    return 0


def cmd_compare(args) -> int:
    a = sio.import_trajectory(args.a)
    b = sio.import_trajectory(args.b)
    window = tuple(args.x_window) if args.x_window else None
    fa = fb = None
    if args.scenario:
        config = _load_config(args)
        tv = _tv_trajectory(config)
        ctx = config.lane_context()
        sc = config.scaling()
        for traj, name in ((a, "fa"), (b, "fb")):
            trig = detect_trigger(traj, tv, config.l_a, config.l_b,
                                  config.lam, config.T_rct)
            vals = scale(compute_features(traj, tv, ctx, trig).values, sc)
            if name == "fa":
                fa = vals
            else:
                fb = vals
    m = sio.compare_trajectories(a, b, x_window=window, features_a=fa, features_b=fb)
    line = f"max_gap={m.max_gap:.6g} rmse={m.rmse:.6g}"
    if m.feature_l2 is not None:
        line += f" feature_l2={m.feature_l2:.6g}"
    print(line)
    return 0


def _write_csv(path, header, rows):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    finally:
        if path:
            out.close()


def cmd_plot_data(args) -> int:
    if args.series == "se":
        config = _load_config(args)
        ev = sio.import_trajectory(args.demo)
        tv = _tv_trajectory(config)
        pe = sample(ev, ev.knots, 0)
        pt = sample(tv, ev.knots, 0)
        se = elliptical_index(pe[:, 0] - pt[:, 0], pe[:, 1] - pt[:, 1],
                              config.l_a, config.l_b)
        rows = np.column_stack([ev.knots, pe[:, 0], se])
        _write_csv(args.out, ["t", "x", "se"], rows)
    elif args.series == "xy":
        a = sio.import_trajectory(args.demo)
        if args.other:
            b = sio.import_trajectory(args.other)
            rows = np.column_stack([a.knots, a.control_points[:, 0],
                                    a.control_points[:, 3], b.control_points[:, 0],
                                    b.control_points[:, 3]])
            _write_csv(args.out, ["t", "x_a", "y_a", "x_b", "y_b"], rows)
        else:
            rows = np.column_stack([a.knots, a.control_points[:, 0],
                                    a.control_points[:, 3]])
            _write_csv(args.out, ["t", "x", "y"], rows)
    elif args.series == "velacc":
        a = sio.import_trajectory(args.demo)
        v = sample(a, a.knots, 1)
        acc = sample(a, a.knots, 2)
        rows = np.column_stack([a.knots, v[:, 0], v[:, 1], acc[:, 0], acc[:, 1]])
        _write_csv(args.out, ["t", "vx", "vy", "ax", "ay"], rows)
    elif args.series == "eps":
        header, table = sio.read_history_table(args.history)
        i_it = header.index("iteration")
        i_eps = header.index("epsilon")
        rows = table[:, [i_it, i_eps]]
        _write_csv(args.out, ["iteration", "epsilon"], rows)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown series {args.series}")
    return 0


def _add_scenario_opts(p, required=True):
    p.add_argument("--scenario", required=required, help="scenario config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="styleirl",
                                     description="driving-style identification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo", help="generate the SMPC demonstration trajectory")
    _add_scenario_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("features", help="compute the feature vector of a trajectory")
    _add_scenario_opts(p)
    p.add_argument("--demo", required=True, help="trajectory CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--scaled", action="store_true", help="apply the scaling matrix")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("learn", help="identify the driving style weights")
    _add_scenario_opts(p)
    p.add_argument("--demo", required=True)
    p.add_argument("--features", type=int, choices=(6, 10), default=None)
    p.add_argument("--out-theta", required=True)
    p.add_argument("--out-history")
    p.add_argument("--out-reproduced")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("reproduce", help="optimize a trajectory under given weights")
    _add_scenario_opts(p)
    p.add_argument("--demo", required=True, help="initialization trajectory CSV")
    p.add_argument("--theta", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("compare", help="lateral gap metrics between two trajectories")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--x-window", nargs=2, type=float, metavar=("X0", "X1"))
    _add_scenario_opts(p, required=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot-data", help="emit CSV series for plotting")
    p.add_argument("--series", required=True, choices=("se", "xy", "velacc", "eps"))
    p.add_argument("--demo", help="trajectory CSV (se, xy, velacc)")
    p.add_argument("--other", help="second trajectory CSV (xy)")
    p.add_argument("--history", help="history CSV (eps)")
    p.add_argument("--out", help="output path (default stdout)")
    _add_scenario_opts(p, required=False)
    p.set_defaults(func=cmd_plot_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, sio.FileFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
