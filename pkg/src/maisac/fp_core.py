"""Fractional-programming surrogate of the weighted rate + sensing-MI objective.

The surrogate replaces every ``ln(1 + ratio)`` by its Lagrangian-dual /
quadratic-transform lower bound with auxiliaries ``mu`` (dual), ``xi_c`` and
``xi_s`` (quadratic transform). Everything here is in nats.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .model import Scene, SystemConfig, channel_matrix, steering_matrix, steering_vector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuxiliaryState:
    """``mu`` has K+1 entries (last one sensing), ``xi_c`` K, ``xi_s`` K+1.

    ``clamped`` records that some ``mu`` update saw a negative R and was
    pinned to 0.
    """

    mu: np.ndarray
    xi_c: np.ndarray
    xi_s: np.ndarray
    clamped: bool = False

    @classmethod
    def zeros(cls, n_users: int) -> "AuxiliaryState":
        return cls(np.zeros(n_users + 1), np.zeros(n_users, complex), np.zeros(n_users + 1, complex))


@dataclass(frozen=True)
class SurrogateValue:
    value_nats: float
    comm_terms: np.ndarray  # per user: 2 sqrt(1+mu) Re{...} - |xi|^2 (...)
    sensing_term: float
    constant: float  # the mu-only part: sum of w (ln(1+mu) - mu)


@dataclass(frozen=True)
class Products:
    """Inner products the surrogate depends on.

    ``G[k, j] = h_k^H f_j``; ``t[j] = a_s^H f_j``; ``Cl[c, j] = a_c^H f_j``.
    """

    G: np.ndarray
    t: np.ndarray
    Cl: np.ndarray


def products(scene: Scene, x, F: np.ndarray, cfg: SystemConfig) -> Products:
    H = channel_matrix(scene, x, cfg.wavelength)
    a_s = steering_vector(x, scene.target_angle, cfg.wavelength)
    Ac = steering_matrix(x, scene.clutter_angles, cfg.wavelength)
    return Products(H.conj().T @ F, a_s.conj() @ F, Ac.conj().T @ F)


def interference_plus_noise(G, cfg: SystemConfig) -> np.ndarray:
    """Full denominator sum_j |h_k^H f_j|^2 + sigma_k^2 (all K+1 streams)."""
    return np.sum(np.abs(G) ** 2, axis=-1) + cfg.noise_user_vec


def radar_power(t, Cl, scene: Scene) -> np.ndarray:
    """I_R: clutter echo power plus target echo power."""
    clutter = np.sum(np.abs(scene.clutter_coeffs) ** 2 * np.sum(np.abs(Cl) ** 2, axis=-1), axis=-1)
    return clutter + abs(scene.target_coeff) ** 2 * np.sum(np.abs(t) ** 2, axis=-1)


def mu_constant(aux: AuxiliaryState, cfg: SystemConfig) -> float:
    mu = aux.mu
    per = np.log1p(mu) - mu
    return float(cfg.weight_comm * per[:-1].sum() + cfg.weight_sense * per[-1])


def surrogate_terms(G, t, Cl, scene: Scene, aux: AuxiliaryState, cfg: SystemConfig):
    """Communication terms (..., K) and sensing term (...) for batched products."""
    K = aux.xi_c.size
    sq = np.sqrt(1.0 + aux.mu)
    signal = np.diagonal(G[..., :K], axis1=-2, axis2=-1)
    comm = (2 * sq[:K] * np.real(aux.xi_c * signal)
            - np.abs(aux.xi_c) ** 2 * interference_plus_noise(G, cfg))
    lin = np.real(scene.target_coeff * (t @ aux.xi_s))
    sense = (2 * sq[K] * lin
             - np.sum(np.abs(aux.xi_s) ** 2) * (radar_power(t, Cl, scene) + cfg.noise_sense))
    return comm, sense


def surrogate_from_products(G, t, Cl, scene: Scene, aux: AuxiliaryState, cfg: SystemConfig):
    comm, sense = surrogate_terms(G, t, Cl, scene, aux, cfg)
    return mu_constant(aux, cfg) + cfg.weight_comm * comm.sum(axis=-1) + cfg.weight_sense * sense


def surrogate_eval(scene: Scene, x, F: np.ndarray, aux: AuxiliaryState, cfg: SystemConfig) -> SurrogateValue:
    p = products(scene, x, F, cfg)
    comm, sense = surrogate_terms(p.G, p.t, p.Cl, scene, aux, cfg)
    const = mu_constant(aux, cfg)
    value = const + cfg.weight_comm * float(comm.sum()) + cfg.weight_sense * float(sense)
    return SurrogateValue(float(value), comm, float(sense), const)


def update_mu(R):
    """Stationary point of ln(1+mu) - mu + 2 sqrt(1+mu) R in mu, clamped at 0.

    Scalar in, float out; array in, array out.
    """
    R = np.asarray(R, dtype=float)
    mu = (R ** 2 + R * np.sqrt(R ** 2 + 4.0)) / 2.0
    mu = np.where(R < 0, 0.0, mu)
    return float(mu) if mu.ndim == 0 else mu


def linear_terms(G, t, scene: Scene, aux: AuxiliaryState) -> np.ndarray:
    """R_k = Re{xi_k^c h_k^H f_k} for users and Re{alpha_s a_s^H F xi^s} for sensing."""
    K = aux.xi_c.size
    R_c = np.real(aux.xi_c * np.diag(G[:, :K]))
    R_s = np.real(scene.target_coeff * (t @ aux.xi_s))
    return np.append(R_c, R_s)


def _xi_from_products(p: Products, scene: Scene, mu: np.ndarray, cfg: SystemConfig, mode: str):
    K = scene.n_users
    xi_c = np.diag(p.G[:, :K]).conj() / interference_plus_noise(p.G, cfg)
    xi_s = scene.target_coeff.conjugate() * p.t.conj() / (radar_power(p.t, p.Cl, scene) + cfg.noise_sense)
    if mode == "standard-fp":
        sq = np.sqrt(1.0 + mu)
        xi_c, xi_s = sq[:K] * xi_c, sq[K] * xi_s
    elif mode != "paper-literal":
        raise ValueError(f"unknown FP mode {mode!r}")
    return xi_c, xi_s


def update_xi(scene: Scene, x, F, aux: AuxiliaryState, cfg: SystemConfig, mode: str | None = None) -> AuxiliaryState:
    """Quadratic-transform auxiliaries for fixed (F, x, mu).

    ``standard-fp`` returns the exact maximizer (scaled by sqrt(1+mu));
    ``paper-literal`` returns the unscaled ratios.
    """
    mode = mode or cfg.fp_mode
    p = products(scene, x, F, cfg)
    xi_c, xi_s = _xi_from_products(p, scene, aux.mu, cfg, mode)
    return replace(aux, xi_c=xi_c, xi_s=xi_s)


def ratios_from_products(p: Products, scene: Scene, cfg: SystemConfig) -> np.ndarray:
    """[SINR_1..SINR_K, SCNR] computed from inner products."""
    K = scene.n_users
    sig = np.abs(np.diag(p.G[:, :K])) ** 2
    sinr = sig / (interference_plus_noise(p.G, cfg) - sig)
    target = abs(scene.target_coeff) ** 2 * np.sum(np.abs(p.t) ** 2)
    scnr = target / (radar_power(p.t, p.Cl, scene) - target + cfg.noise_sense)
    return np.append(sinr, scnr)


def update_aux(scene: Scene, x, F, aux: AuxiliaryState | None, cfg: SystemConfig, mode: str | None = None) -> AuxiliaryState:
    """xi update followed by the closed-form mu update.

    In ``standard-fp`` mode xi is scaled with sqrt(1 + gamma), gamma being the
    current SINR/SCNR; the subsequent mu update then lands exactly on
    mu = gamma, so the pair is the joint maximizer over all auxiliaries and the
    surrogate equals the true objective (in nats). ``paper-literal`` applies the
    unscaled xi and the same mu formula, with no such guarantee.
    """
    mode = mode or cfg.fp_mode
    p = products(scene, x, F, cfg)
    if aux is None:
        aux = AuxiliaryState.zeros(scene.n_users)
    gamma = ratios_from_products(p, scene, cfg)
    xi_c, xi_s = _xi_from_products(p, scene, gamma, cfg, mode)
    aux = AuxiliaryState(aux.mu, xi_c, xi_s)
    R = linear_terms(p.G, p.t, scene, aux)
    clamped = bool(np.any(R < 0))
    if clamped:
        log.debug("negative R in mu update, clamped: %s", R)
    return AuxiliaryState(update_mu(R), xi_c, xi_s, clamped)


def true_objective_nats(scene: Scene, x, F, cfg: SystemConfig) -> float:
    g = ratios_from_products(products(scene, x, F, cfg), scene, cfg)
    return float(cfg.weight_comm * np.log1p(g[:-1]).sum() + cfg.weight_sense * np.log1p(g[-1]))
