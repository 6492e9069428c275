"""Command line front end: sim run | calibrate | torquemap | serve | params."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import calibration
from .actuation import TorqueMap, torque_map_table
from .robot import RobotParams
from .scenario import load_scenario, shipped_scenario_names
from .simloop import Simulation, rows_to_csv


def _cmd_run(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc.seed = args.seed
    tmap = TorqueMap.from_polynomial() if args.torque_mode == "poly" else TorqueMap.anchors()
    sim = Simulation(sc, torque_map=tmap)
    outcome = sim.run()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(rows_to_csv(outcome.rows))
    if args.frame_log:
        with open(args.frame_log, "w") as fh:
            fh.write("\n".join(outcome.frame_log) + "\n")
    print(
        f"{sc.name}: {outcome.result.value} at t={outcome.t_end_s:.3f} s, "
        f"s={outcome.rows[-1].s_m:.3f} m"
    )
    return outcome.result.exit_code


def _cmd_calibrate(args: argparse.Namespace) -> int:
    tmap = TorqueMap.from_polynomial() if args.torque_mode == "poly" else TorqueMap.anchors()
    samples = calibration.simulate_rig(tmap.torque_nm, seed=args.seed)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(calibration.samples_to_csv(samples))
    report = calibration.fit_quartic(samples)
    text = calibration.fit_report_text(report)
    if args.fit:
        with open(args.fit, "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def _cmd_torquemap(args: argparse.Namespace) -> int:
    tmap = TorqueMap.from_polynomial() if args.mode == "poly" else TorqueMap.anchors()
    if args.csv:
        lines = ["duty_pct,torque_Nm"]
        lines += [f"{d:.1f},{t:.6f}" for d, t in torque_map_table(tmap)]
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            print(text, end="")
    else:
        print(
            f"mode={tmap.mode} tau_sat={tmap.tau_sat_nm:.4f} Nm "
            f"sat_onset={tmap.sat_onset_duty_pct:.1f}%"
        )
        for duty in (10.0, 25.0, 50.0, 70.0):
            print(f"  map({duty:.0f}%) = {tmap.torque_nm(duty):.4f} Nm")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .gateway import GatewayServer

    sc = load_scenario(args.scenario)
    try:
        server = GatewayServer(sc, host=args.host, port=args.port, realtime=args.realtime)
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    print(f"gateway on ws://{args.host}:{server.port}/ scenario={sc.name}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def _cmd_params(args: argparse.Namespace) -> int:
    if args.show:
        for f in dataclasses.fields(RobotParams):
            print(f"{f.name} = {getattr(RobotParams(), f.name)}")
        print(f"shipped scenarios: {', '.join(shipped_scenario_names())}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario to its terminal condition")
    p.add_argument("--scenario", required=True, help="file path or shipped name")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="telemetry CSV path")
    p.add_argument("--frame-log", help="bus frame hex log path")
    p.add_argument("--torque-mode", choices=("anchors", "poly"), default="anchors")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("calibrate", help="simulate the bench sweep and fit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="sample CSV path")
    p.add_argument("--fit", help="fit report path")
    p.add_argument("--torque-mode", choices=("anchors", "poly"), default="anchors")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("torquemap", help="dump the duty->torque table")
    p.add_argument("--mode", choices=("anchors", "poly"), default="anchors")
    p.add_argument("--csv", action="store_true", help="0.2%% resolution table")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_torquemap)

    p = sub.add_parser("serve", help="serve a live mission to operator consoles")
    p.add_argument("--scenario", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--realtime", action="store_true", help="pace to wall clock")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("params", help="show robot parameters")
    p.add_argument("--show", action="store_true", default=True)
    p.set_defaults(func=_cmd_params)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
