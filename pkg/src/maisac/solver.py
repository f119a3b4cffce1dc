"""Alternating optimization over beamformer, positions and FP auxiliaries."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .beamform_opt import assemble_quadratic, solve_sp1
from .fp_core import surrogate_eval, true_objective_nats, update_aux
from .metrics import MetricsReport, objective
from .model import Scene, SystemConfig, channel_matrix, steering_vector, ula_positions
from .position_opt import solve_sp2

log = logging.getLogger(__name__)


class Scheme(enum.Enum):
    SPGA_FP = "SPGA_FP"
    DGA_FP = "DGA_FP"
    FP_FPA = "FP_FPA"
    SPGA_RBF = "SPGA_RBF"
    DGA_RBF = "DGA_RBF"
    RBF_FPA = "RBF_FPA"

    @classmethod
    def parse(cls, name: "str | Scheme") -> "Scheme":
        if isinstance(name, Scheme):
            return name
        key = str(name).strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown scheme {name!r}; choose from {[s.value for s in cls]}") from None

    @property
    def optimizes_f(self) -> bool:
        return not self.value.endswith("RBF") and self is not Scheme.RBF_FPA

    @property
    def position_method(self) -> str | None:
        if self.value.startswith("SPGA"):
            return "spga"
        if self.value.startswith("DGA"):
            return "dga"
        return None


@dataclass
class SolveResult:
    F_final: np.ndarray
    x_final: np.ndarray
    objective_trace_nats: list = field(default_factory=list)
    surrogate_trace_nats: list = field(default_factory=list)
    metrics: MetricsReport | None = None
    iterations_used: int = 0
    converged: bool = False
    flagged: bool = False
    wall_time: float = 0.0


def random_beamformer(cfg: SystemConfig, seed) -> np.ndarray:
    """i.i.d. CN(0, 1) entries rescaled to trace(F^H F) = P0."""
    rng = np.random.default_rng(seed)
    shape = (cfg.n_antennas, cfg.n_users + 1)
    F = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return F * np.sqrt(cfg.tx_power / np.sum(np.abs(F) ** 2))


def matched_beamformer(scene: Scene, x, cfg: SystemConfig) -> np.ndarray:
    """Columns along h_k for users and along a_s for the sensing stream, total power P0."""
    H = channel_matrix(scene, x, cfg.wavelength)
    a_s = steering_vector(x, scene.target_angle, cfg.wavelength)
    F = np.column_stack([H, a_s])
    norms = np.linalg.norm(F, axis=0)
    F = F / np.where(norms > 0, norms, 1.0)
    return F * np.sqrt(cfg.tx_power / max(np.sum(np.abs(F) ** 2), 1e-300))


def solve(scene: Scene, cfg: SystemConfig, scheme="SPGA_FP", seed=0, x_init=None, F_init=None) -> SolveResult:
    """Run the alternating optimization for one scene under one scheme.

    ``seed`` only drives the random beamformer (RBF schemes and
    ``f_init="random"``).
    """
    scene.check(cfg)
    scheme = Scheme.parse(scheme)
    t0 = time.perf_counter()
    x = ula_positions(cfg) if x_init is None else np.asarray(x_init, dtype=float).copy()
    if F_init is not None:
        F = np.asarray(F_init)
    elif not scheme.optimizes_f or cfg.f_init == "random":
        F = random_beamformer(cfg, seed)
    else:
        F = matched_beamformer(scene, x, cfg)
    aux = update_aux(scene, x, F, None, cfg)

    res = SolveResult(F, x)
    res.surrogate_trace_nats.append(surrogate_eval(scene, x, F, aux, cfg).value_nats)
    res.objective_trace_nats.append(true_objective_nats(scene, x, F, cfg))

    if scheme is Scheme.RBF_FPA:
        res.converged = True
    else:
        for it in range(cfg.max_outer_iters):
            if scheme.optimizes_f:
                F, _ = solve_sp1(assemble_quadratic(scene, x, aux, cfg), cfg.tx_power,
                                 cfg.bisect_rel_tol * cfg.tx_power)
            if scheme.position_method is not None:
                sp2 = solve_sp2(scene, x, F, aux, cfg, scheme.position_method,
                                guard=cfg.monotone_guard == "surrogate")
                if sp2.flagged:
                    res.flagged = True
                if cfg.monotone_guard == "lookahead" and not np.array_equal(sp2.x, x):
                    F, x, aux = _lookahead(scene, cfg, scheme, F, x, aux, sp2.x)
                else:
                    x = sp2.x
            aux = update_aux(scene, x, F, aux, cfg)
            res.surrogate_trace_nats.append(surrogate_eval(scene, x, F, aux, cfg).value_nats)
            res.objective_trace_nats.append(true_objective_nats(scene, x, F, cfg))
            res.iterations_used = it + 1
            if res.flagged:
                log.warning("sub-problem failure, stopping at iteration %d", it + 1)
                break
            gain = res.surrogate_trace_nats[-1] - res.surrogate_trace_nats[-2]
            if abs(gain) < cfg.outer_tol:
                res.converged = True
                break

    res.F_final, res.x_final = F, x
    res.metrics = objective(scene, x, F, cfg)
    res.wall_time = time.perf_counter() - t0
    return res


def _lookahead(scene, cfg, scheme, F, x_old, aux, x_new):
    """Accept moved antennas only if, once F is re-fitted to them, the true
    objective beats keeping the old positions with the current F."""
    keep = update_aux(scene, x_old, F, aux, cfg)
    keep_val = true_objective_nats(scene, x_old, F, cfg)
    aux_new = update_aux(scene, x_new, F, aux, cfg)
    F_new = F
    val = true_objective_nats(scene, x_new, F_new, cfg)
    if scheme.optimizes_f:
        for _ in range(cfg.lookahead_iters):
            F_new, _ = solve_sp1(assemble_quadratic(scene, x_new, aux_new, cfg), cfg.tx_power,
                                 cfg.bisect_rel_tol * cfg.tx_power)
            aux_new = update_aux(scene, x_new, F_new, aux_new, cfg)
            prev, val = val, true_objective_nats(scene, x_new, F_new, cfg)
            if val > keep_val + cfg.outer_tol or val - prev < cfg.outer_tol:
                break
    if val > keep_val:
        return F_new, x_new, aux_new
    return F, x_old, keep
