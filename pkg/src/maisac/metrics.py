"""True (untransformed) performance metrics: SINR, rates, SCNR, sensing MI."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Scene, SystemConfig, channel_matrix, steering_matrix, steering_vector


@dataclass(frozen=True)
class MetricsReport:
    sinr: np.ndarray
    rate_bits: np.ndarray
    scnr: float
    mi_bits: float
    objective_bits: float
    objective_nats: float

    @property
    def sum_rate_bits(self) -> float:
        return float(np.sum(self.rate_bits))

    @property
    def scnr_db(self) -> float:
        return 10 * math.log10(self.scnr) if self.scnr > 0 else -math.inf


def sinr_all(scene: Scene, x, F: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """SINR of every user, shape (K,)."""
    H = channel_matrix(scene, x, cfg.wavelength)
    G = np.abs(H.conj().T @ F) ** 2  # |h_k^H f_j|^2, shape (K, K+1)
    signal = np.diag(G[:, : scene.n_users])
    return signal / (G.sum(axis=1) - signal + cfg.noise_user_vec)


def sinr(scene: Scene, x, F: np.ndarray, k: int, cfg: SystemConfig) -> float:
    return float(sinr_all(scene, x, F, cfg)[k])


def sensing_powers(scene: Scene, x, F: np.ndarray, cfg: SystemConfig) -> tuple[float, float]:
    """(target echo power ||alpha_s a_s^H F||^2, clutter echo power summed over clutters)."""
    a_s = steering_vector(x, scene.target_angle, cfg.wavelength)
    target = abs(scene.target_coeff) ** 2 * float(np.sum(np.abs(a_s.conj() @ F) ** 2))
    clutter = 0.0
    if scene.n_clutters:
        Ac = steering_matrix(x, scene.clutter_angles, cfg.wavelength)
        rows = np.abs(Ac.conj().T @ F) ** 2  # (C, K+1)
        clutter = float(np.sum(np.abs(scene.clutter_coeffs) ** 2 * rows.sum(axis=1)))
    return target, clutter


def scnr(scene: Scene, x, F: np.ndarray, cfg: SystemConfig) -> float:
    target, clutter = sensing_powers(scene, x, F, cfg)
    return target / (clutter + cfg.noise_sense)


def sensing_mi_bits(scnr_value: float) -> float:
    return math.log2(1.0 + scnr_value)


def objective(scene: Scene, x, F: np.ndarray, cfg: SystemConfig) -> MetricsReport:
    """Weighted sum of user rates and sensing MI."""
    s = sinr_all(scene, x, F, cfg)
    rates = np.log2(1.0 + s)
    sc = scnr(scene, x, F, cfg)
    mi = sensing_mi_bits(sc)
    obj = cfg.weight_comm * float(rates.sum()) + cfg.weight_sense * mi
    return MetricsReport(sinr=s, rate_bits=rates, scnr=sc, mi_bits=mi,
                         objective_bits=obj, objective_nats=obj * math.log(2))
