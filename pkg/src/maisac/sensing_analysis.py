"""Sensing diagnostics: transmit beampattern and the angle CRB from the Fisher information."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Scene, SystemConfig, steering_matrix, steering_vector

SINGULAR_COND = 1e12


class SingularFIMError(np.linalg.LinAlgError):
    """The Fisher matrix is (numerically) singular, so the angle is unobservable."""


def beampattern(x, F, theta_grid, wavelength: float = 0.1) -> np.ndarray:
    """BP(theta) = ||a(theta)^H F||^2 on every grid angle (radians)."""
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta_grid.size == 0:
        raise ValueError("empty angle grid")
    A = steering_matrix(x, theta_grid, wavelength)
    return np.sum(np.abs(A.conj().T @ F) ** 2, axis=1)


def steering_derivative(x, theta, wavelength: float) -> np.ndarray:
    """d a(theta) / d theta, element n: -j k x_n sin(theta) exp(j k x_n cos(theta))."""
    x = np.asarray(x, dtype=float)
    k = 2 * np.pi / wavelength
    return -1j * k * x * np.sin(theta) * np.exp(1j * k * x * np.cos(theta))


@dataclass(frozen=True)
class FisherMatrix:
    """FIM over [theta_s, Re alpha_s, Im alpha_s]."""

    J: np.ndarray
    noise_eff: float
    T: int


def effective_noise(scene: Scene, x, F, cfg: SystemConfig) -> float:
    """Sensing noise plus clutter echoes, treated as white Gaussian noise."""
    Ac = steering_matrix(x, scene.clutter_angles, cfg.wavelength)
    clutter = np.sum(np.abs(scene.clutter_coeffs) ** 2 * np.sum(np.abs(Ac.conj().T @ F) ** 2, axis=1))
    return float(clutter + cfg.noise_sense)


def fim(scene: Scene, x, F, cfg: SystemConfig) -> FisherMatrix:
    T = cfg.n_sense_symbols
    if T < 1:
        raise ValueError("need at least one sensing symbol")
    a = steering_vector(x, scene.target_angle, cfg.wavelength)
    da = steering_derivative(x, scene.target_angle, cfg.wavelength)
    alpha = scene.target_coeff
    s2 = effective_noise(scene, x, F, cfg)
    c = 2 * T / s2

    Fa, Fda = F.conj().T @ a, F.conj().T @ da  # F^H a, F^H a_dot
    aa = float(np.real(np.vdot(Fa, Fa)))
    dd = float(np.real(np.vdot(Fda, Fda)))
    da_a = np.vdot(Fda, Fa)  # a_dot^H F F^H a
    a_cross = np.conj(alpha) if cfg.fim_conjugate else alpha

    J = np.zeros((3, 3))
    J[0, 0] = c * abs(alpha) ** 2 * dd
    J[1, 1] = J[2, 2] = c * aa
    J[0, 1] = J[1, 0] = c * np.real(a_cross * da_a)
    J[0, 2] = J[2, 0] = c * np.real(-1j * a_cross * da_a)
    return FisherMatrix(J, s2, T)


def crb_theta(f: FisherMatrix) -> float:
    """[J^-1]_{theta, theta} in rad^2; raises SingularFIMError for an unobservable angle."""
    J = f.J
    if not np.all(np.isfinite(J)) or np.linalg.cond(J) > SINGULAR_COND:
        raise SingularFIMError("Fisher matrix is singular or ill-conditioned")
    return float(np.linalg.inv(J)[0, 0])


def scaled_identity_beamformer(cfg: SystemConfig) -> np.ndarray:
    """Semi-unitary F = sqrt(P0 / min(N, K+1)) I_{N x (K+1)}, total power P0."""
    N, M = cfg.n_antennas, cfg.n_users + 1
    return np.sqrt(cfg.tx_power / min(N, M)) * np.eye(N, M, dtype=complex)
