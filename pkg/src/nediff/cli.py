"""Command line driver.

Subcommands: run, sweep, preset, compare, render.  Exit code 0 on success,
1 on validation or usage errors, 2 on numerical failures.  All runs are
deterministic; --seedless is accepted for interface stability and is a
no-op.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gridio
from .analysis import momentum_density, rel_l2, run_sweep
from .config import parse_config, parse_sweep_config
from .errors import (AnalysisError, ConfigurationError, DomainError,
                     NumericalError, StateError, UnsupportedPathError)
from .presets import PRESET_NAMES, build_preset
from .render import render_heatmap
from .scenario import resolve_output_root, run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="nediff", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p, engine=True):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--seedless", action="store_true",
                       help="reserved; runs are always deterministic")
        if engine:
            p.add_argument("--engine", default=None,
                           choices=("analytic", "numeric", "both"))

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--snapshot-stride", type=int, default=None)
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep config")
    p_sweep.add_argument("config")
    common(p_sweep)

    p_preset = sub.add_parser("preset", help="run a built-in preset")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--snapshot-stride", type=int, default=None)
    common(p_preset)

    p_cmp = sub.add_parser("compare", help="L2/max metrics between two grid dumps")
    p_cmp.add_argument("grid_a")
    p_cmp.add_argument("grid_b")

    p_render = sub.add_parser("render", help="render a grid dump as a PGM heatmap")
    p_render.add_argument("grid")
    p_render.add_argument("--out", default=None, help="output image path")
    p_render.add_argument("--colormap", default="linear", choices=("linear", "log"))
    p_render.add_argument("--clip", type=float, default=1e-6)
    p_render.add_argument("--momentum", action="store_true",
                          help="render the momentum-space density")
    return parser


def _out_dir(args, default_name: str) -> Path:
    out = args.out if args.out is not None else default_name
    return resolve_output_root(out)


def _apply_overrides(cfg, args):
    if getattr(args, "engine", None):
        cfg = replace(cfg, engine=args.engine)
    stride = getattr(args, "snapshot_stride", None)
    if stride is not None and cfg.numeric is not None:
        cfg = replace(cfg, numeric=replace(cfg.numeric, snapshot_stride=stride))
    return cfg


def _cmd_run(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    cfg = _apply_overrides(parse_config(text), args)
    outdir = _out_dir(args, Path(args.config).stem + ".out")
    result = run_scenario(cfg, outdir=outdir)
    print(f"wrote artifacts to {outdir}")
    if result.rel_l2_densities is not None:
        print(f"relative L2 (numeric vs analytic densities): "
              f"{result.rel_l2_densities:.6g}")
    return EXIT_OK


def _run_sweep_spec(spec, outdir: Path, threads: int) -> int:
    result = run_sweep(spec.template, spec.axis, spec.values,
                       engine=spec.engine, threads=threads)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "sweep.csv"
    result.write_csv(path)
    with open(outdir / "template.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(spec.template.serialize())
    print(f"wrote {path}")
    try:
        at = result.ground_state_minimum()
        print(f"ground-state population minimum at {spec.axis} = {at:g}")
    except AnalysisError:
        pass
    failures = [p for p in result.points if p.error]
    for p in failures:
        print(f"point {p.parameter:g} failed: {p.error}", file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    spec = parse_sweep_config(text)
    if getattr(args, "engine", None):
        spec = replace(spec, engine=args.engine)
    outdir = _out_dir(args, Path(args.config).stem + ".out")
    return _run_sweep_spec(spec, outdir, args.threads)


def _cmd_preset(args) -> int:
    run = build_preset(args.name)
    outdir = _out_dir(args, args.name + ".out")
    if run.sweep is not None:
        spec = run.sweep
        if getattr(args, "engine", None):
            spec = replace(spec, engine=args.engine)
        return _run_sweep_spec(spec, outdir, args.threads)
    cfg = _apply_overrides(run.scenario, args)
    result = run_scenario(cfg, outdir=outdir)
    print(f"wrote artifacts to {outdir}")
    if result.rel_l2_densities is not None:
        print(f"relative L2 (numeric vs analytic densities): "
              f"{result.rel_l2_densities:.6g}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    psi_a = gridio.read_grid(args.grid_a)
    psi_b = gridio.read_grid(args.grid_b)
    if psi_a.amplitudes.shape != psi_b.amplitudes.shape:
        raise ConfigurationError("grids have different shapes")
    rho_a = momentum_density(psi_a).values
    rho_b = momentum_density(psi_b).values
    print(f"relative_l2_momentum_density = {rel_l2(rho_a, rho_b):.9g}")
    print(f"max_abs_momentum_density_diff = {float(np.max(np.abs(rho_a - rho_b))):.9g}")
    diff = np.abs(psi_a.amplitudes - psi_b.amplitudes)
    print(f"max_abs_field_diff = {float(diff.max()):.9g}")
    return EXIT_OK


def _cmd_render(args) -> int:
    psi = gridio.read_grid(args.grid)
    if args.momentum:
        target = momentum_density(psi)
    else:
        target = psi.density()
    out = args.out if args.out is not None else args.grid + ".pgm"
    path = render_heatmap(target, resolve_output_root(out),
                          colormap=args.colormap, clip=args.clip)
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "preset": _cmd_preset,
    "compare": _cmd_compare,
    "render": _cmd_render,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_VALIDATION
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_VALIDATION
    except (ConfigurationError, DomainError, StateError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, AnalysisError, UnsupportedPathError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
