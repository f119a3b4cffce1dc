"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import (ExperimentSpec, emit_beampattern, emit_crb_sweep, run_experiment,
                      summarize)
from .model import FP_MODES, InvalidConfigError, SystemConfig, load_scene, sample_scene
from .solver import Scheme, solve


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maisac", description="Movable-antenna ISAC beamforming experiments")
    p.add_argument("--config", type=Path, help="JSON system configuration")
    p.add_argument("--scheme", action="append", help="scheme name (repeatable); default SPGA_FP, DGA_FP, FP_FPA")
    p.add_argument("--sweep", choices=["snr", "xmax", "weight"])
    p.add_argument("--values", type=float, nargs="+", help="explicit sweep values")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("results.csv"))
    p.add_argument("--mode", choices=FP_MODES)
    p.add_argument("--emit", choices=["results", "beampattern", "crb"], default="results")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scene", type=Path, help="scene JSON for --emit beampattern/crb")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(path, mode=None) -> SystemConfig:
    d = {}
    if path is not None:
        with open(path) as fh:
            d = json.load(fh)
        if not isinstance(d, dict):
            raise InvalidConfigError("config must be a JSON object")
    if mode is not None:
        d["fp_mode"] = mode
    return SystemConfig.from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.mode)
        schemes = [Scheme.parse(s) for s in (args.scheme or ["SPGA_FP", "DGA_FP", "FP_FPA"])]
        if args.emit == "results":
            spec = ExperimentSpec(cfg, schemes, args.sweep, args.values, args.trials,
                                  args.seed, args.out, args.workers)
        elif args.trials < 1:
            raise ValueError("--trials must be >= 1")
    except (InvalidConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.emit == "results":
            rows = run_experiment(spec)
            _print_summary(summarize(rows), args.out)
        else:
            scene = load_scene(args.scene) if args.scene else sample_scene(cfg, args.seed)
            res = solve(scene, cfg, schemes[0], seed=args.seed)
            if args.emit == "beampattern":
                bp = emit_beampattern(args.out, res.x_final, res.F_final, cfg)
                print(f"{schemes[0].value}: beampattern peak {bp.max():.4g} at "
                      f"{0.5 * int(np.argmax(bp)):.1f} deg -> {args.out}")
            else:
                crb = emit_crb_sweep(args.out, scene, res.x_final, res.F_final, cfg)
                print(f"{schemes[0].value}: CRB over {crb.size} angles "
                      f"({int(np.isnan(crb).sum())} singular) -> {args.out}")
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


def _print_summary(summary, out):
    print(f"{'sweep':>8} {'scheme':>9} {'objective':>10} {'sum-rate':>9} {'MI':>7} {'fail':>5}")
    for s in summary:
        sv = "-" if s["sweep_value"] == "" else f"{s['sweep_value']:g}"
        print(f"{sv:>8} {s['scheme']:>9} {s['objective_bits_mean']:10.4f} "
              f"{s['sum_rate_bits_mean']:9.4f} {s['mi_bits_mean']:7.4f} {s['n_failed']:5d}")
    print(f"rows -> {out}")


if __name__ == "__main__":
    sys.exit(main())
