"""Antenna position update: grid search, per-antenna gradient ascent and feasibility
projection (SPGA), plus the constraint-rejecting direct gradient ascent (DGA)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fp_core import AuxiliaryState, products, surrogate_from_products
from .model import InvalidConfigError, Scene, SystemConfig, is_feasible, region_fits, step_up

log = logging.getLogger(__name__)


class NonFiniteGradient(FloatingPointError):
    pass


def _gradient_families(ns, x, F, G, t, Cl, scene: Scene, aux: AuxiliaryState, cfg: SystemConfig):
    """d(surrogate)/dx_n for the antenna indices ``ns``.

    Sums the five term families: desired-signal terms (F1), interference
    terms over all K+1 streams (F2), target linear term (F3), clutter (F4) and
    target (F5) quadratic terms, with F4/F5 written through FF^H.
    """
    kappa = cfg.wavenumber
    K, Lp = scene.n_users, scene.n_paths
    wc, ws = cfg.weight_comm, cfg.weight_sense
    sq = np.sqrt(1.0 + aux.mu)
    xn = np.asarray(x, dtype=float)[ns]
    Fn = F[ns]  # (M, K+1)
    row_pow = np.sum(np.abs(Fn) ** 2, axis=1)

    cos_u = np.cos(scene.user_angles)
    E = np.exp(1j * kappa * xn[:, None, None] * cos_u[None])  # (M, K, Lp)
    dH = np.sqrt(F.shape[0] / Lp) * np.einsum("mkl,kl->mk", E, 1j * kappa * cos_u * scene.user_gains)
    dHc = dH.conj()

    dF1 = 2 * np.real(aux.xi_c * dHc * Fn[:, :K])  # (M, K)
    dF2 = 2 * np.real(G.conj()[None] * dHc[:, :, None] * Fn[:, None, :])  # (M, K, K+1)

    cs = np.cos(scene.target_angle)
    a_sn = np.exp(1j * kappa * xn * cs)
    xibar = Fn @ aux.xi_s
    dF3 = 2 * np.real(-1j * kappa * cs * scene.target_coeff * a_sn.conj() * xibar)
    # sum over m != n of conj(a_m) [FF^H]_{m,n}
    r_s = Fn.conj() @ t - a_sn.conj() * row_pow
    dF5 = abs(scene.target_coeff) ** 2 * 2 * np.real(1j * kappa * cs * a_sn * r_s)

    cc = np.cos(scene.clutter_angles)
    a_cn = np.exp(1j * kappa * xn[:, None] * cc[None])  # (M, C)
    r_c = Fn.conj() @ Cl.T - a_cn.conj() * row_pow[:, None]
    dF4 = np.abs(scene.clutter_coeffs) ** 2 * 2 * np.real(1j * kappa * cc * a_cn * r_c)

    xs2 = np.sum(np.abs(aux.xi_s) ** 2)
    return (wc * (dF1 @ sq[:K])
            - wc * (dF2.sum(axis=2) @ np.abs(aux.xi_c) ** 2)
            + ws * sq[K] * dF3
            - ws * xs2 * (dF4.sum(axis=1) + dF5))


def surrogate_grad(scene: Scene, x, F, aux: AuxiliaryState, cfg: SystemConfig) -> np.ndarray:
    """Gradient of the surrogate w.r.t. all antenna positions (nats per meter)."""
    p = products(scene, x, F, cfg)
    return _gradient_families(np.arange(len(x)), x, F, p.G, p.t, p.Cl, scene, aux, cfg)


def surrogate_grad_x(scene: Scene, x, F, aux: AuxiliaryState, cfg: SystemConfig, n: int) -> float:
    """Partial derivative of the surrogate w.r.t. the position of antenna ``n`` (0-based)."""
    if not 0 <= n < len(x):
        raise IndexError(f"antenna index {n} out of range")
    p = products(scene, x, F, cfg)
    return float(_gradient_families(np.array([n]), x, F, p.G, p.t, p.Cl, scene, aux, cfg)[0])


class CoordinateSurrogate:
    """Surrogate as a function of one antenna coordinate, others held fixed.

    Keeps the inner products for the current positions and updates them
    incrementally when an antenna moves, so a batch of candidate positions
    for one antenna costs O(batch * K^2).
    """

    def __init__(self, scene: Scene, x, F, aux: AuxiliaryState, cfg: SystemConfig):
        self.scene, self.F, self.aux, self.cfg = scene, np.asarray(F), aux, cfg
        self.x = np.array(x, dtype=float)
        self._kappa = cfg.wavenumber
        self._cos_u = np.cos(scene.user_angles)
        self._gain = np.sqrt(self.x.size / scene.n_paths) * scene.user_gains
        self._cos_s = np.cos(scene.target_angle)
        self._cos_c = np.cos(scene.clutter_angles)
        self.refresh()

    def refresh(self):
        p = products(self.scene, self.x, self.F, self.cfg)
        self.G, self.t, self.Cl = p.G, p.t, p.Cl
        self._value = float(surrogate_from_products(self.G, self.t, self.Cl, self.scene, self.aux, self.cfg))

    @property
    def value(self) -> float:
        return self._value

    def _contrib(self, n, pos):
        """Contributions of antenna n placed at ``pos`` (array) to G, t, Cl."""
        pos = np.asarray(pos, dtype=float)
        k = self._kappa
        h = np.einsum("mkl,kl->mk", np.exp(1j * k * pos[:, None, None] * self._cos_u[None]), self._gain)
        a_s = np.exp(1j * k * pos * self._cos_s)
        a_c = np.exp(1j * k * pos[:, None] * self._cos_c[None])
        fn = self.F[n]
        return (h.conj()[:, :, None] * fn, a_s.conj()[:, None] * fn, a_c.conj()[:, :, None] * fn)

    def values(self, n: int, candidates) -> np.ndarray:
        cand = np.atleast_1d(np.asarray(candidates, dtype=float))
        g0, t0, c0 = self._contrib(n, [self.x[n]])
        g1, t1, c1 = self._contrib(n, cand)
        G = self.G - g0 + g1
        t = self.t - t0 + t1
        Cl = self.Cl - c0 + c1
        return surrogate_from_products(G, t, Cl, self.scene, self.aux, self.cfg)

    def move(self, n: int, pos: float, value: float | None = None):
        g0, t0, c0 = self._contrib(n, [self.x[n]])
        g1, t1, c1 = self._contrib(n, [pos])
        self.G = self.G - g0[0] + g1[0]
        self.t = self.t - t0[0] + t1[0]
        self.Cl = self.Cl - c0[0] + c1[0]
        self.x[n] = pos
        if value is None:
            value = float(surrogate_from_products(self.G, self.t, self.Cl, self.scene, self.aux, self.cfg))
        self._value = float(value)

    def grad(self, n: int) -> float:
        g = _gradient_families(np.array([n]), self.x, self.F, self.G, self.t, self.Cl,
                               self.scene, self.aux, self.cfg)[0]
        if not np.isfinite(g):
            raise NonFiniteGradient(f"non-finite gradient for antenna {n}")
        return float(g)


def search_grid(cfg: SystemConfig) -> np.ndarray:
    span = cfg.region_max - cfg.region_min
    n_pts = max(int(round(cfg.ga.grid_points_per_wavelength * span / cfg.wavelength)) + 1, 2)
    return np.linspace(cfg.region_min, cfg.region_max, n_pts)


def grid_search_init(scene: Scene, F, aux: AuxiliaryState, cfg: SystemConfig, x_current,
                     grid: np.ndarray | None = None, respect_spacing: bool = False) -> np.ndarray:
    """Sweep each antenna (in index order) over the grid, others fixed, keeping the best.

    Constraints are ignored here. The current coordinate is always a
    candidate and wins ties, so the surrogate never decreases.
    """
    grid = search_grid(cfg) if grid is None else np.asarray(grid, dtype=float)
    ev = CoordinateSurrogate(scene, x_current, F, aux, cfg)
    for n in range(ev.x.size):
        cand = np.append(ev.x[n], grid)
        vals = ev.values(n, cand)
        if respect_spacing:
            ok = _candidate_ok(ev.x, n, cand, cfg)
            ok[0] = True
            vals = np.where(ok, vals, -np.inf)
        best = int(np.argmax(vals))
        if vals[best] > vals[0]:
            ev.move(n, cand[best], vals[best])
    return ev.x.copy()


@dataclass
class AscentResult:
    x: np.ndarray
    trace: list = field(default_factory=list)  # surrogate after every accepted antenna step
    rounds: int = 0
    flagged: bool = False


def _candidate_ok(x, n, cand, cfg: SystemConfig) -> np.ndarray:
    others = np.delete(x, n)
    ok = (cand >= cfg.region_min) & (cand <= cfg.region_max)
    if others.size:
        ok &= np.all(np.abs(cand[:, None] - others[None]) >= cfg.min_spacing, axis=1)
    return ok


def ga_inner_loop(scene: Scene, x0, F, aux: AuxiliaryState, cfg: SystemConfig,
                  respect_constraints: bool = False) -> AscentResult:
    """Alternating per-antenna gradient ascent with backtracking.

    Each visit tries x_n + s * sign(grad), s = step_init * backtrack^i for
    i = 0..max_halvings, and accepts the first strictly improving trial
    (i.e. the update x_n + kappa * grad with kappa = s / |grad|). Rounds over
    all antennas repeat until a round gains less than ``inner_tol``.

    With ``respect_constraints`` (direct GA) the first improving trial is
    rejected if it violates the region or spacing constraints.
    """
    ga = cfg.ga
    x0 = np.array(x0, dtype=float)
    ev = CoordinateSurrogate(scene, x0, F, aux, cfg)
    steps = cfg.step_init * ga.backtrack_factor ** np.arange(ga.max_halvings + 1)
    res = AscentResult(x0.copy(), [ev.value])
    try:
        for it in range(ga.max_inner_iters):
            start = ev.value
            ev.refresh()
            for n in range(ev.x.size):
                g = ev.grad(n)
                if g == 0.0:
                    continue
                cand = ev.x[n] + np.sign(g) * steps
                vals = ev.values(n, cand)
                better = np.flatnonzero(vals > ev.value)
                if better.size == 0:
                    continue
                i = better[0]
                if respect_constraints and not _candidate_ok(ev.x, n, cand[i:i + 1], cfg)[0]:
                    continue
                ev.move(n, cand[i], vals[i])
                res.trace.append(ev.value)
            res.rounds = it + 1
            if ev.value - start < ga.inner_tol:
                break
    except NonFiniteGradient as exc:
        log.warning("position ascent aborted: %s", exc)
        return AscentResult(x0, [res.trace[0]], res.rounds, True)
    res.x = ev.x.copy()
    return res


def project_positions(x, cfg: SystemConfig) -> np.ndarray:
    """Map positions onto the feasible set, preserving the order of the antennas.

    Sort, apply the sequential clamp from the lowest to the highest element,
    then undo the sort. Feasible inputs are returned unchanged.
    """
    N, D0, lo, hi = cfg.n_antennas, cfg.min_spacing, cfg.region_min, cfg.region_max
    if not region_fits(lo, hi, N, D0):
        raise InvalidConfigError("region cannot hold N antennas at the minimum spacing")
    x = np.array(x, dtype=float)
    if x.size != N:
        raise ValueError(f"expected {N} positions, got {x.size}")
    if is_feasible(x, cfg):
        return x
    perm = np.argsort(x, kind="stable")
    s = x[perm]
    s[0] = max(lo, min(s[0], hi - (N - 1) * D0))
    for n in range(1, N):
        s[n] = max(step_up(s[n - 1], D0), min(s[n], hi - (N - 1 - n) * D0))
    if s[-1] > hi:
        # rounding pushed the top element past X_max: pull the chain back down
        s[-1] = hi
        for n in range(N - 2, -1, -1):
            if s[n + 1] - s[n] >= D0:
                break
            s[n] = s[n + 1] - D0
            while s[n + 1] - s[n] < D0:
                s[n] = np.nextafter(s[n], -np.inf)
    out = np.empty_like(s)
    out[perm] = s
    return out


@dataclass
class Sp2Result:
    x: np.ndarray
    surrogate: float
    start_surrogate: float
    ascent: AscentResult | None = None
    flagged: bool = False
    guarded: bool = False  # proposal rejected because it lowered the surrogate


def solve_sp2(scene: Scene, x_prev, F, aux: AuxiliaryState, cfg: SystemConfig,
              method: str | None = None, guard: bool = False) -> Sp2Result:
    """Position update. ``method`` is ``"spga"`` or ``"dga"`` (default from ``cfg.ga.dga_mode``)."""
    method = method or ("dga" if cfg.ga.dga_mode else "spga")
    x_prev = np.asarray(x_prev, dtype=float)
    start = float(surrogate_from_products(*_prods(scene, x_prev, F, cfg), scene, aux, cfg))
    if method == "dga":
        if not is_feasible(x_prev, cfg):
            x_prev = project_positions(x_prev, cfg)
        asc = ga_inner_loop(scene, x_prev, F, aux, cfg, respect_constraints=True)
        x = asc.x
    elif method == "spga":
        x_init = grid_search_init(scene, F, aux, cfg, x_prev, respect_spacing=cfg.ga.grid_respects_spacing)
        asc = ga_inner_loop(scene, x_init, F, aux, cfg)
        x = project_positions(asc.x, cfg)
    else:
        raise ValueError(f"unknown position method {method!r}")
    val = float(surrogate_from_products(*_prods(scene, x, F, cfg), scene, aux, cfg))
    res = Sp2Result(x, val, start, asc, asc.flagged)
    if guard and val < start and is_feasible(x_prev, cfg):
        res.x, res.surrogate, res.guarded = x_prev.copy(), start, True
    return res


def _prods(scene, x, F, cfg):
    p = products(scene, x, F, cfg)
    return p.G, p.t, p.Cl
