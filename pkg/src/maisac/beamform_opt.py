"""Beamformer update: closed-form KKT solution with bisection on the power multiplier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fp_core import AuxiliaryState, mu_constant
from .model import Scene, SystemConfig, channel_matrix, steering_matrix, steering_vector


@dataclass(frozen=True)
class QuadraticForm:
    """Surrogate as sum_k (2 Re{phi_k^H f_k} - f_k^H Lambda f_k) + B.

    ``Lambda`` is shared by all streams; ``phi`` stores phi_k as columns (N, K+1).
    """

    Lambda: np.ndarray
    phi: np.ndarray
    B: float

    def value(self, F: np.ndarray) -> float:
        lin = 2 * np.real(np.sum(self.phi.conj() * F))
        quad = np.real(np.sum(F.conj() * (self.Lambda @ F)))
        return float(lin - quad + self.B)


def assemble_quadratic(scene: Scene, x, aux: AuxiliaryState, cfg: SystemConfig) -> QuadraticForm:
    wc, ws = cfg.weight_comm, cfg.weight_sense
    K = scene.n_users
    H = channel_matrix(scene, x, cfg.wavelength)
    a_s = steering_vector(x, scene.target_angle, cfg.wavelength)
    Ac = steering_matrix(x, scene.clutter_angles, cfg.wavelength)
    sq = np.sqrt(1.0 + aux.mu)
    xs2 = float(np.sum(np.abs(aux.xi_s) ** 2))

    Ht = H * aux.xi_c  # [xi_1 h_1, ..., xi_K h_K]
    radar = (Ac * np.abs(scene.clutter_coeffs) ** 2) @ Ac.conj().T
    radar = radar + abs(scene.target_coeff) ** 2 * np.outer(a_s, a_s.conj())
    Lam = wc * (Ht @ Ht.conj().T) + ws * xs2 * radar
    Lam = (Lam + Lam.conj().T) / 2

    # sensing part for every stream, communication part for the first K
    phi = ws * sq[K] * np.outer(a_s, (scene.target_coeff * aux.xi_s).conj())
    phi[:, :K] += wc * sq[:K] * aux.xi_c.conj() * H

    B = (mu_constant(aux, cfg)
         - wc * float(np.sum(np.abs(aux.xi_c) ** 2 * cfg.noise_user_vec))
         - ws * xs2 * cfg.noise_sense)
    return QuadraticForm(Lam, phi, B)


class _EigSolver:
    """(Lambda + lam I)^+ phi for many lam from one eigendecomposition."""

    def __init__(self, qf: QuadraticForm):
        d, U = np.linalg.eigh(qf.Lambda)
        scale = max(float(np.max(np.abs(d))) if d.size else 0.0, 1e-300)
        self.d = np.where(d > 1e-13 * scale, d, 0.0)
        self.U = U
        self.c = U.conj().T @ qf.phi  # phi in the eigenbasis

    def _inv(self, lam: float) -> np.ndarray:
        s = self.d + lam
        with np.errstate(divide="ignore"):
            inv = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
        return inv

    def power(self, lam: float) -> float:
        return float(np.sum(np.abs(self.c) ** 2 * self._inv(lam)[:, None] ** 2))

    def solve(self, lam: float) -> np.ndarray:
        return self.U @ (self._inv(lam)[:, None] * self.c)


def solve_f_given_lambda(qf: QuadraticForm, lam: float) -> np.ndarray:
    """f_k = (Lambda + lam I)^+ phi_k for every stream."""
    if lam < 0:
        raise ValueError("dual variable must be non-negative")
    return _EigSolver(qf).solve(lam)


def solve_sp1(qf: QuadraticForm, P0: float, eps: float | None = None, max_iter: int = 200):
    """Maximize the quadratic surrogate subject to ||F||_F^2 <= P0.

    Returns ``(F, lam)``. ``eps`` is the tolerance on |trace(F^H F) - P0|
    (default ``1e-8 * P0``).
    """
    if P0 <= 0:
        raise ValueError("power budget must be positive")
    eps = 1e-8 * P0 if eps is None else eps
    es = _EigSolver(qf)
    if es.power(0.0) <= P0:
        return es.solve(0.0), 0.0

    lo, hi = 0.0, 1.0
    while es.power(hi) - P0 > 0:
        lo, hi = hi, 2 * hi
    lam = hi
    for _ in range(max_iter):
        lam = 0.5 * (lo + hi)
        h = es.power(lam) - P0
        if abs(h) <= eps:
            break
        if h > 0:
            lo = lam
        else:
            hi = lam
    else:
        # bracket collapsed to floating resolution; take the feasible end
        lam = hi
    return es.solve(lam), lam
