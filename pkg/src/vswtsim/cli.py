"""Command-line front end.

Subcommands: ``curves cp-vw | cp-lambda | pmech-omega``, ``optimum``,
``simulate``, ``validate-config``.  Exit codes: 0 success, 2 usage or config
error, 3 numeric or I/O failure.  Output is CSV (comma separated, '.'
decimal, 9 significant digits, LF endings) with leading ``#`` metadata lines;
``--plot-script`` additionally writes a gnuplot script next to the CSV.

The environment variable ``VSWT_CONFIG`` names a default config file used
when ``--config`` is not given.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .curves import (
    CurveTable,
    find_optimum,
    sweep_cp_vs_lambda,
    sweep_cp_vs_wind,
    sweep_pmech_vs_omega,
)
from .engine import EngineNumericsError, InitConvergenceError, Trajectory, simulate
from .params import ConfigError, Scenario, TurbineParams, load_config, validate

__all__ = ["main", "run", "write_csv", "emit_plot_script", "format_csv"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def format_csv(columns, rows, meta: dict) -> str:
    """Render metadata lines, header, and data rows as CSV text."""
    lines = [f"# generator: vswtsim {__version__}"]
    for key in sorted(meta):
        lines.append(f"# {key}: {meta[key]}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def write_csv(obj, sink) -> None:
    """Write a CurveTable or Trajectory to a file path or text stream."""
    if isinstance(obj, Trajectory):
        text = format_csv(obj.columns, obj.data, obj.meta)
    elif isinstance(obj, CurveTable):
        text = format_csv(obj.columns, obj.data, obj.meta)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


_AXIS_LABELS = {
    "cp-vw": ("v_w (m/s)", "Cp"),
    "cp-lambda": ("λ", "Cp"),
    "pmech-omega": ("Ω (pu)", "P_mech (pu)"),
    "trajectory": ("t (s)", "signal"),
}


def emit_plot_script(csv_path: str, kind: str, columns=None) -> str:
    """Standalone gnuplot script rendering the CSV; regeneration is
    byte-stable for identical inputs."""
    if kind not in _AXIS_LABELS:
        raise ValueError(f"unknown plot kind {kind!r}")
    xlabel, ylabel = _AXIS_LABELS[kind]
    lines = [
        "#!/usr/bin/env gnuplot",
        f"# render {csv_path}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set grid",
    ]
    if columns and len(columns) > 1:
        plots = ", ".join(
            f"'{csv_path}' using 1:{i + 2} with lines title '{name}'"
            for i, name in enumerate(columns[1:])
        )
        lines.append(f"plot {plots}")
    else:
        lines.append(f"plot '{csv_path}' using 1:2 with lines")
    lines.append("pause -1 'press enter to close'")
    return "\n".join(lines) + "\n"


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vswtsim",
        description="Variable-speed wind turbine curves and dynamic simulation",
    )
    ap.add_argument("--version", action="version", version=f"vswtsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(sp, needs_out=True):
        sp.add_argument("--config", help="config file (default: $VSWT_CONFIG or built-in defaults)")
        if needs_out:
            sp.add_argument("--out", required=True, help="output CSV path")
            sp.add_argument("--plot-script", action="store_true",
                            help="also write a gnuplot script next to the CSV")

    curves = sub.add_parser("curves", help="static characteristic sweeps")
    csub = curves.add_subparsers(dest="curve_kind", required=True)

    sp = csub.add_parser("cp-vw", help="Cp versus wind speed at fixed rotor speed")
    add_common(sp)
    sp.add_argument("--betas", type=_float_list, default=[0.0, 9.0, 18.0, 27.0])
    sp.add_argument("--vmin", type=float, default=4.0)
    sp.add_argument("--vmax", type=float, default=25.0)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--omega", type=float, default=1.2, help="fixed rotor speed, pu")

    sp = csub.add_parser("cp-lambda", help="Cp versus tip speed ratio")
    add_common(sp)
    sp.add_argument("--betas", type=_float_list, default=[0.0, 9.0, 18.0, 27.0])
    sp.add_argument("--lmin", type=float, default=2.0)
    sp.add_argument("--lmax", type=float, default=13.0)
    sp.add_argument("--step", type=float, default=0.01)

    sp = csub.add_parser("pmech-omega", help="mechanical power versus rotor speed")
    add_common(sp)
    sp.add_argument("--mode", choices=["wind-sweep", "beta-sweep"], default="wind-sweep")
    sp.add_argument("--winds", type=_float_list, default=None,
                    help="wind speeds for wind-sweep (m/s)")
    sp.add_argument("--betas", type=_float_list, default=None,
                    help="pitch angles for beta-sweep (deg)")
    sp.add_argument("--vfixed", type=float, default=12.0)
    sp.add_argument("--betafixed", type=float, default=0.0)
    sp.add_argument("--omin", type=float, default=0.0)
    sp.add_argument("--omax", type=float, default=1.2)
    sp.add_argument("--step", type=float, default=0.001)

    sp = sub.add_parser("optimum", help="optimum tip speed ratio per pitch angle")
    add_common(sp)
    sp.add_argument("--betas", type=_float_list, default=[0.0])
    sp.add_argument("--lmin", type=float, default=2.0)
    sp.add_argument("--lmax", type=float, default=13.0)

    sp = sub.add_parser("simulate", help="closed-loop time-domain run")
    add_common(sp)
    sp.add_argument("--model", choices=["one-mass", "two-mass"], default=None)
    sp.add_argument("--duration", type=float, default=None, help="seconds")
    sp.add_argument("--dt", type=float, default=None, help="integrator step, s")
    sp.add_argument("--wind", help="profile override, 't0:v0, t1:v1, ...'")
    sp.add_argument("--out-interval", type=float, default=0.01,
                    help="recording interval, s (use the dt value for raw recording)")

    sp = sub.add_parser("validate-config", help="check a config file and report violations")
    add_common(sp, needs_out=False)
    return ap


def _load(config_path):
    if config_path is None:
        config_path = os.environ.get("VSWT_CONFIG") or None
    if config_path is None:
        return TurbineParams(), Scenario()
    with open(config_path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def _emit(args, table, kind):
    write_csv(table, args.out)
    if getattr(args, "plot_script", False):
        script = emit_plot_script(args.out, kind, table.columns)
        path = os.path.splitext(args.out)[0] + ".gp"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(script)


def run(argv=None) -> int:
    """Parse arguments and execute; returns the process exit code."""
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    try:
        params, scenario = _load(getattr(args, "config", None))
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "validate-config":
            bad = validate(params)
            if bad:
                for name, msg in bad:
                    print(f"violation: {msg}", file=sys.stderr)
                return EXIT_USAGE
            print("config ok")
            return EXIT_OK

        if args.command == "curves":
            if args.curve_kind == "cp-vw":
                table = sweep_cp_vs_wind(args.betas, args.vmin, args.vmax,
                                         args.step, params, omega_fixed=args.omega)
                _emit(args, table, "cp-vw")
            elif args.curve_kind == "cp-lambda":
                table = sweep_cp_vs_lambda(args.betas, args.lmin, args.lmax,
                                           args.step, params)
                _emit(args, table, "cp-lambda")
            else:
                table = sweep_pmech_vs_omega(
                    args.mode, params, step=args.step,
                    omega_min=args.omin, omega_max=args.omax,
                    winds=args.winds, betas=args.betas,
                    v_fixed=args.vfixed, beta_fixed=args.betafixed,
                )
                _emit(args, table, "pmech-omega")
            return EXIT_OK

        if args.command == "optimum":
            import numpy as np
            betas = list(args.betas)
            lam = []
            cp = []
            for b in betas:
                l, c = find_optimum(b, params, args.lmin, args.lmax)
                lam.append(l)
                cp.append(c)
            table = CurveTable("beta", np.array(betas),
                               (("lambda_opt", np.array(lam)),
                                ("cp_opt", np.array(cp))),
                               {"kind": "optimum"})
            _emit(args, table, "cp-lambda")
            return EXIT_OK

        if args.command == "simulate":
            overrides = {}
            if args.model is not None:
                overrides["model"] = args.model
            if args.duration is not None:
                overrides["duration"] = args.duration
            if args.dt is not None:
                overrides["dt"] = args.dt
            if args.wind is not None:
                from .params import _parse_profile
                overrides["wind_profile"] = _parse_profile(0, args.wind)
            if overrides:
                from dataclasses import replace
                scenario = replace(scenario, **overrides)
            traj = simulate(scenario, params, output_interval=args.out_interval)
            _emit(args, traj, "trajectory")
            return EXIT_OK
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (EngineNumericsError, InitConvergenceError, ArithmeticError, OSError) as e:
        print(f"numeric/io failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC

    print("error: no command executed", file=sys.stderr)
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
