"""Monte Carlo experiment driver, sweeps and CSV persistence.

Every trial index owns one scene (drawn with ``seed = base_seed + trial``),
shared by all schemes and sweep points, so comparisons are paired.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import Scene, SystemConfig, sample_scene
from .sensing_analysis import SingularFIMError, beampattern, crb_theta, fim
from .solver import Scheme, solve

log = logging.getLogger(__name__)

SWEEP_AXES = ("snr", "xmax", "weight")
DEFAULT_SWEEPS = {
    "snr": [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
    "xmax": [6.0, 9.0, 12.0, 15.0, 18.0, 21.0],
    "weight": [0.0, 0.25, 0.5, 0.75, 1.0],
}
RESULT_COLUMNS = ["sweep_value", "scheme", "trial", "seed", "objective_bits", "sum_rate_bits",
                  "mi_bits", "scnr_db", "iters", "wall_ms", "status"]
SUMMARY_METRICS = ["objective_bits", "sum_rate_bits", "mi_bits", "scnr_db", "iters"]


@dataclass
class ExperimentSpec:
    """``sweep`` is one of ``snr`` (dB), ``xmax`` (wavelengths), ``weight`` (comm
    weight) or None. ``sweep_values=None`` picks the default list for the axis."""

    config: SystemConfig = field(default_factory=SystemConfig)
    schemes: Sequence = ("SPGA_FP", "DGA_FP", "FP_FPA")
    sweep: Optional[str] = None
    sweep_values: Optional[Sequence[float]] = None
    n_trials: int = 200
    base_seed: int = 0
    out: Optional[Path] = None
    workers: int = 1

    def __post_init__(self):
        self.schemes = tuple(Scheme.parse(s) for s in self.schemes)
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.sweep is not None and self.sweep not in SWEEP_AXES:
            raise ValueError(f"sweep must be one of {SWEEP_AXES} or None")
        if self.sweep is not None and self.sweep_values is None:
            self.sweep_values = DEFAULT_SWEEPS[self.sweep]
        if self.sweep is not None and len(self.sweep_values) == 0:
            raise ValueError("sweep list must be non-empty")

    def points(self) -> list:
        if self.sweep is None:
            return [None]
        return [float(v) for v in self.sweep_values]


def config_at(cfg: SystemConfig, sweep: Optional[str], value) -> SystemConfig:
    """Config for one sweep point."""
    if sweep is None:
        return cfg
    if sweep == "snr":
        return cfg.with_updates(tx_power=10 ** (value / 10) * cfg.noise_sense)
    if sweep == "xmax":
        return cfg.with_updates(region_max=cfg.region_min + value * cfg.wavelength)
    if sweep == "weight":
        return cfg.with_updates(weight_comm=value, weight_sense=1.0 - value)
    raise ValueError(f"unknown sweep axis {sweep!r}")


def _run_one(task) -> dict:
    cfg, scheme, scene, seed, sweep_value, trial = task
    row = {"sweep_value": "" if sweep_value is None else sweep_value, "scheme": scheme.value,
           "trial": trial, "seed": seed}
    t0 = time.perf_counter()
    try:
        res = solve(scene, cfg, scheme, seed=seed)
        m = res.metrics
        row.update(objective_bits=m.objective_bits, sum_rate_bits=m.sum_rate_bits,
                   mi_bits=m.mi_bits, scnr_db=m.scnr_db, iters=res.iterations_used,
                   status="flagged" if res.flagged else "ok")
    except Exception as exc:  # recorded, never dropped
        log.error("trial %d (%s, sweep=%s) failed: %s", trial, scheme.value, sweep_value, exc)
        row.update(objective_bits=math.nan, sum_rate_bits=math.nan, mi_bits=math.nan,
                   scnr_db=math.nan, iters=0, status=f"failed: {type(exc).__name__}")
    row["wall_ms"] = (time.perf_counter() - t0) * 1e3
    return row


def _tasks(spec: ExperimentSpec):
    scenes = [sample_scene(spec.config, spec.base_seed + t) for t in range(spec.n_trials)]
    for v in spec.points():
        cfg = config_at(spec.config, spec.sweep, v)
        for scheme in spec.schemes:
            for t, scene in enumerate(scenes):
                yield cfg, scheme, scene, spec.base_seed + t, v, t


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run every (sweep point, scheme, trial); rows come back in that order.

    Writes ``spec.out`` and a ``*_summary.csv`` companion when ``out`` is set.
    """
    tasks = list(_tasks(spec))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * spec.workers))))
    else:
        rows = [_run_one(t) for t in tasks]
    if spec.out is not None:
        out = Path(spec.out)
        write_rows(out, rows)
        write_rows(summary_path(out), summarize(rows), columns=None)
    return rows


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_summary.csv")


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and std (ddof=1) per (sweep_value, scheme) over successful trials."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["sweep_value"], r["scheme"]), []).append(r)
    out = []
    for (v, s), rs in groups.items():
        ok = [r for r in rs if not str(r["status"]).startswith("failed")]
        agg = {"sweep_value": v, "scheme": s, "n_trials": len(rs), "n_failed": len(rs) - len(ok)}
        for m in SUMMARY_METRICS:
            vals = np.array([r[m] for r in ok], dtype=float)
            agg[f"{m}_mean"] = float(vals.mean()) if vals.size else math.nan
            agg[f"{m}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out.append(agg)
    return out


def write_rows(path, rows: list[dict], columns: Optional[list] = RESULT_COLUMNS):
    path = Path(path)
    if columns is None:
        columns = list(rows[0]) if rows else []
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=columns)
            w.writeheader()
            for i, r in enumerate(rows):
                try:
                    w.writerow(r)
                except (OSError, ValueError) as exc:
                    raise OSError(f"writing row {i} ({r.get('scheme')}, trial {r.get('trial')}) "
                                  f"to {path}: {exc}") from exc
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def angle_grid_deg(start=0.0, stop=180.0, step=0.5) -> np.ndarray:
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def emit_beampattern(path, x, F, cfg: SystemConfig, grid_deg=None) -> np.ndarray:
    """CSV of (theta_deg, beampattern); returns the values."""
    grid_deg = angle_grid_deg() if grid_deg is None else np.asarray(grid_deg, dtype=float)
    bp = beampattern(x, F, np.radians(grid_deg), cfg.wavelength)
    _write_xy(path, grid_deg, bp, "beampattern")
    return bp


def crb_sweep(scene: Scene, x, F, cfg: SystemConfig, grid_deg=None) -> np.ndarray:
    """Angle CRB with the target moved over the grid; NaN where the FIM is singular."""
    grid_deg = angle_grid_deg() if grid_deg is None else np.asarray(grid_deg, dtype=float)
    out = np.empty(grid_deg.size)
    for i, th in enumerate(np.radians(grid_deg)):
        try:
            out[i] = crb_theta(fim(scene.with_target(th), x, F, cfg))
        except SingularFIMError:
            out[i] = math.nan
    return out


def emit_crb_sweep(path, scene: Scene, x, F, cfg: SystemConfig, grid_deg=None) -> np.ndarray:
    grid_deg = angle_grid_deg() if grid_deg is None else np.asarray(grid_deg, dtype=float)
    crb = crb_sweep(scene, x, F, cfg, grid_deg)
    _write_xy(path, grid_deg, crb, "crb_rad2")
    return crb


def _write_xy(path, xs, ys, name):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_deg", name])
        for a, b in zip(xs, ys):
            w.writerow([repr(float(a)), repr(float(b))])
