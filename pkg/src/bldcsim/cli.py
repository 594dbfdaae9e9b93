"""Command-line entry point: ``sim run | fets rank | fets runtime | lut build``.

Exit codes: 0 success, 1 invalid input (arguments, config, data files),
2 runtime failure (simulation did not complete, I/O error).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from .config import ConfigError, parse_config
from .engine import SimulationError, run_scenario
from .inverter import load_fet_db
from .plot import PLOTTABLE, emit_plot
from .powerloss import (BatterySpec, FetConstraints, MissionProfile, loss_breakdown,
                        rank_fets, runtime_estimate)
from .sensing import build_delay_lut
from .trace import write_trace

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _battery(text: str) -> BatterySpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected V,Ah,fraction")
    try:
        v, ah, frac = (float(p) for p in parts)
        return BatterySpec(v, ah, frac)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sim", description="Sensorless BLDC drive simulator and FET selection.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario from a config file")
    run.add_argument("config", type=Path)
    run.add_argument("--trace", type=Path, metavar="OUT.csv")
    run.add_argument("--plot", nargs=2, metavar=("COLUMNS", "OUT.svg"),
                     help="comma-separated trace columns and the SVG path")
    run.add_argument("--json", action="store_true", help="print the summary as JSON")

    fets = sub.add_parser("fets", help="MOSFET database tools")
    fsub = fets.add_subparsers(dest="fets_command", required=True, parser_class=_Parser)
    for name, helptext in (("rank", "rank feasible parts by total inverter loss"),
                           ("runtime", "battery runtime per part")):
        q = fsub.add_parser(name, help=helptext)
        q.add_argument("db", type=Path)
        q.add_argument("--current", type=float, default=MissionProfile.i_rms, help="A rms")
        q.add_argument("--vbus", type=float, default=MissionProfile.v_bus)
        q.add_argument("--fsw", type=float, default=MissionProfile.f_sw)
        q.add_argument("--vgate", type=float, default=FetConstraints.vgate_available)
        if name == "runtime":
            q.add_argument("--battery", type=_battery, required=True, metavar="V,Ah,FRAC")
            q.add_argument("--load", type=float, required=True, metavar="W")

    lut = sub.add_parser("lut", help="phase-delay table tools")
    lsub = lut.add_subparsers(dest="lut_command", required=True, parser_class=_Parser)
    build = lsub.add_parser("build", help="tabulate the filter delay")
    build.add_argument("--cutoff", type=float, required=True, metavar="HZ")
    build.add_argument("--fmin", type=float, required=True, metavar="HZ")
    build.add_argument("--fmax", type=float, required=True, metavar="HZ")
    build.add_argument("-n", type=int, required=True)
    build.add_argument("-o", type=Path, metavar="LUT.csv")
    return p


def _cmd_run(args) -> int:
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INVALID
    cfg = parse_config(text)
    columns = None
    if args.plot:
        columns = [c.strip() for c in args.plot[0].split(",") if c.strip()]
        bad = [c for c in columns if c not in PLOTTABLE]
        if bad or not columns:
            raise UsageError(f"unknown trace column(s): {', '.join(bad) or '(none)'}")
    trace, summary = run_scenario(cfg)
    if args.trace:
        write_trace(trace, args.trace)
    if columns:
        emit_plot(trace, columns, args.plot[1])
    if args.json:
        print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    else:
        print(summary.to_text())
    return EXIT_OK


def _profile(args, p_load: Optional[float] = None) -> Tuple[MissionProfile, FetConstraints]:
    kwargs = dict(i_rms=args.current, v_bus=args.vbus, f_sw=args.fsw)
    if p_load is not None:
        kwargs["p_load"] = p_load
    return (MissionProfile(**kwargs),
            FetConstraints(v_bus_min_rating=args.vbus, vgate_available=args.vgate))


def _cmd_fets(args) -> int:
    try:
        fets = load_fet_db(args.db)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.fets_command == "rank":
        profile, cons = _profile(args)
        print(f"{'rank':>4}  {'part':<20} {'cond W':>9} {'sw W':>9} {'gate W':>9} "
              f"{'total W':>9} {'cost':>9}")
        for k, (fet, total) in enumerate(rank_fets(fets, profile, cons), start=1):
            b = loss_breakdown(fet, profile)
            print(f"{k:>4}  {fet.part_no:<20} {b.conduction:>9.4f} {b.transition:>9.4f} "
                  f"{b.gate:>9.4f} {total:>9.4f} {fet.cost:>9.2f}")
        return EXIT_OK
    profile, cons = _profile(args, p_load=args.load)
    ranked = rank_fets(fets, profile, cons)
    print(f"usable energy {args.battery.usable_energy_wh:.4g} Wh, load {args.load:g} W")
    print(f"{'part':<20} {'loss W':>9} {'runtime min':>12}")
    for fet, total in ranked:
        print(f"{fet.part_no:<20} {total:>9.4f} "
              f"{runtime_estimate(args.battery, profile, fet):>12.3f}")
    return EXIT_OK


def _cmd_lut(args) -> int:
    lut = build_delay_lut(args.cutoff, args.fmin, args.fmax, args.n)
    if args.o:
        lut.to_csv(args.o)
    else:
        sys.stdout.write(lut.to_csv())
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "fets":
            return _cmd_fets(args)
        return _cmd_lut(args)
    except (UsageError, ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
