"""Problem data: configuration, channel scenes, steering vectors and user channels.

Units inside this module are SI and radians. Degrees, dB and wavelength
multiples only appear at the JSON boundary (``SystemConfig.from_dict``,
``scene_to_dict``/``scene_from_dict``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

import numpy as np


class InvalidConfigError(ValueError):
    """Raised for inconsistent or physically meaningless parameters."""


def step_up(lo: float, step: float) -> float:
    """Smallest float v >= lo + step with v - lo >= step exactly."""
    v = lo + step
    while v - lo < step:
        v = float(np.nextafter(v, np.inf))
    return v


def region_fits(lo: float, hi: float, n: int, spacing: float) -> bool:
    """True if n points spaced >= ``spacing`` fit in [lo, hi] in floating point."""
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return False
    s = float(lo)
    for _ in range(n - 1):
        s = step_up(s, spacing)
    return s <= hi


@dataclass(frozen=True)
class GaConfig:
    """Antenna position search/ascent parameters.

    ``step_init`` is the first trial displacement (meters) of every antenna
    visit; ``None`` means ``wavelength / 100``.
    """

    grid_points_per_wavelength: int = 10
    step_init: Optional[float] = None
    backtrack_factor: float = 0.5
    max_halvings: int = 30
    max_inner_iters: int = 50
    inner_tol: float = 1e-6
    dga_mode: bool = False
    grid_respects_spacing: bool = False

    def __post_init__(self):
        if self.grid_points_per_wavelength < 1:
            raise InvalidConfigError("grid_points_per_wavelength must be >= 1")
        if self.step_init is not None and self.step_init <= 0:
            raise InvalidConfigError("step_init must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise InvalidConfigError("backtrack_factor must lie in (0, 1)")
        if self.max_halvings < 0 or self.max_inner_iters < 1 or self.inner_tol <= 0:
            raise InvalidConfigError("invalid GA iteration limits")


FP_MODES = ("standard-fp", "paper-literal")


@dataclass(frozen=True)
class SystemConfig:
    n_antennas: int = 4
    n_users: int = 4
    n_clutters: int = 3
    n_paths: int = 13
    tx_power: float = 1.0
    wavelength: float = 0.1
    noise_user: float | tuple[float, ...] = 1.0
    noise_sense: float = 1.0
    weight_comm: float = 0.5
    weight_sense: float = 0.5
    region_min: float = 0.0
    region_max: float = 1.0
    min_spacing: float = 0.05
    n_sense_symbols: int = 1
    # None draws the target angle uniformly on [0, pi] per scene.
    target_angle: Optional[float] = math.pi / 3
    # Optional fixed clutter angles (radians); None draws them per scene.
    clutter_angles: Optional[tuple[float, ...]] = None
    # solver knobs
    outer_tol: float = 1e-4
    max_outer_iters: int = 200
    bisect_rel_tol: float = 1e-8
    fp_mode: str = "standard-fp"
    f_init: str = "matched"
    # "lookahead", "surrogate" or "off"
    monotone_guard: str = "lookahead"
    lookahead_iters: int = 20
    fim_conjugate: bool = False
    ga: GaConfig = field(default_factory=GaConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if min(self.n_antennas, self.n_users, self.n_paths, self.n_sense_symbols) < 1:
            raise InvalidConfigError("N, K, Lp and T must be positive integers")
        if self.n_clutters < 0:
            raise InvalidConfigError("number of clutters must be non-negative")
        positives = [self.tx_power, self.wavelength, self.noise_sense, self.min_spacing]
        positives += list(np.atleast_1d(self.noise_user))
        if not all(np.isfinite(v) and v > 0 for v in positives):
            raise InvalidConfigError("powers, wavelength and min spacing must be > 0")
        if np.ndim(self.noise_user) and len(self.noise_user) != self.n_users:
            raise InvalidConfigError("noise_user needs one entry per user")
        for w in (self.weight_comm, self.weight_sense):
            if not 0.0 <= w <= 1.0:
                raise InvalidConfigError("weights must lie in [0, 1]")
        if abs(self.weight_comm + self.weight_sense - 1.0) > 1e-12:
            raise InvalidConfigError("weight_comm + weight_sense must equal 1")
        if not region_fits(self.region_min, self.region_max, self.n_antennas, self.min_spacing):
            raise InvalidConfigError(
                "region too small: X_max - X_min < (N - 1) * D0, no feasible placement"
            )
        if self.target_angle is not None and not 0.0 <= self.target_angle <= math.pi:
            raise InvalidConfigError("target angle must lie in [0, pi]")
        if self.clutter_angles is not None:
            if len(self.clutter_angles) != self.n_clutters:
                raise InvalidConfigError("clutter_angles needs one entry per clutter")
            if any(not 0.0 <= a <= math.pi for a in self.clutter_angles):
                raise InvalidConfigError("clutter angles must lie in [0, pi]")
        if self.fp_mode not in FP_MODES:
            raise InvalidConfigError(f"fp_mode must be one of {FP_MODES}")
        if self.f_init not in ("matched", "random"):
            raise InvalidConfigError("f_init must be 'matched' or 'random'")
        if self.outer_tol <= 0 or self.max_outer_iters < 1 or self.bisect_rel_tol <= 0:
            raise InvalidConfigError("invalid solver tolerances")

    @property
    def noise_user_vec(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.noise_user, dtype=float), (self.n_users,))

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def step_init(self) -> float:
        return self.ga.step_init if self.ga.step_init is not None else self.wavelength / 100

    @property
    def snr_db(self) -> float:
        # SNR = P0 / sigma^2 with the sensing noise as reference
        return 10 * math.log10(self.tx_power / self.noise_sense)

    def with_updates(self, **kw) -> "SystemConfig":
        """Copy with fields replaced; ``weight_comm`` alone also sets the sensing weight."""
        if "weight_comm" in kw and "weight_sense" not in kw:
            kw["weight_sense"] = 1.0 - kw["weight_comm"]
        ga_kw = kw.pop("ga", None)
        if isinstance(ga_kw, Mapping):
            kw["ga"] = replace(self.ga, **ga_kw)
        elif ga_kw is not None:
            kw["ga"] = ga_kw
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SystemConfig":
        """Build from a JSON-style mapping (degrees, dB, wavelength multiples).

        Recognized boundary keys: ``snr_db`` (sets ``tx_power = SNR * noise``),
        ``region_min_wl``/``region_max_wl``/``min_spacing_wl`` (in wavelengths),
        ``target_angle_deg`` (null for random), ``clutter_angles_deg``, ``noise``
        (sets both noise powers). Plain field names are taken as internal units.
        """
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        boundary = {"snr_db", "region_min_wl", "region_max_wl", "min_spacing_wl",
                    "target_angle_deg", "clutter_angles_deg", "noise"}
        unknown = set(d) - known - boundary
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        wl = float(d.get("wavelength", cls.wavelength))
        kw: dict[str, Any] = {k: v for k, v in d.items() if k in known and k != "ga"}
        if "noise" in d:
            kw.setdefault("noise_user", float(d["noise"]))
            kw.setdefault("noise_sense", float(d["noise"]))
        if isinstance(kw.get("noise_user"), list):
            kw["noise_user"] = tuple(float(v) for v in kw["noise_user"])
        if "snr_db" in d:
            kw["tx_power"] = 10 ** (float(d["snr_db"]) / 10) * float(kw.get("noise_sense", 1.0))
        for key in ("region_min", "region_max", "min_spacing"):
            if f"{key}_wl" in d:
                kw[key] = float(d[f"{key}_wl"]) * wl
        kw.setdefault("region_max", 10 * wl)
        kw.setdefault("min_spacing", wl / 2)
        if "target_angle_deg" in d:
            t = d["target_angle_deg"]
            kw["target_angle"] = None if t is None else math.radians(float(t))
        if "clutter_angles_deg" in d and d["clutter_angles_deg"] is not None:
            kw["clutter_angles"] = tuple(math.radians(float(a)) for a in d["clutter_angles_deg"])
        if "weight_comm" in kw and "weight_sense" not in kw:
            kw["weight_sense"] = 1.0 - float(kw["weight_comm"])
        elif "weight_sense" in kw and "weight_comm" not in kw:
            kw["weight_comm"] = 1.0 - float(kw["weight_sense"])
        if "ga" in d:
            kw["ga"] = GaConfig(**d["ga"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise InvalidConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise_user"] = list(np.atleast_1d(self.noise_user).tolist()) if np.ndim(self.noise_user) else self.noise_user
        if self.clutter_angles is not None:
            d["clutter_angles"] = list(self.clutter_angles)
        return d


def paper_config(**overrides) -> SystemConfig:
    """Default simulation setup (K=4, C=3, Lp=13, lambda=0.1 m, D0=lambda/2, unit
    noise, X in [0, 10 lambda], target at 60 degrees, SNR 0 dB, N=4) with overrides."""
    return SystemConfig().with_updates(**overrides)


@dataclass(frozen=True, eq=False)
class Scene:
    """One channel realization.

    ``user_angles``/``user_gains`` have shape (K, Lp); clutter arrays shape (C,).
    """

    user_angles: np.ndarray
    user_gains: np.ndarray
    target_angle: float
    target_coeff: complex
    clutter_angles: np.ndarray
    clutter_coeffs: np.ndarray

    def __post_init__(self):
        ua = np.array(self.user_angles, dtype=float, ndmin=2)
        ug = np.array(self.user_gains, dtype=complex, ndmin=2)
        ca = np.array(self.clutter_angles, dtype=float).reshape(-1)
        cc = np.array(self.clutter_coeffs, dtype=complex).reshape(-1)
        if ua.shape != ug.shape:
            raise InvalidConfigError("user angles and gains must have shape (K, Lp)")
        if ca.shape != cc.shape:
            raise InvalidConfigError("clutter angles and coefficients must match")
        for arr in (ua, ca, np.array([self.target_angle])):
            if arr.size and (np.any(arr < 0) or np.any(arr > np.pi)):
                raise InvalidConfigError("angles must lie in [0, pi]")
        for arr in (ua, ug, ca, cc):
            arr.setflags(write=False)
        object.__setattr__(self, "user_angles", ua)
        object.__setattr__(self, "user_gains", ug)
        object.__setattr__(self, "clutter_angles", ca)
        object.__setattr__(self, "clutter_coeffs", cc)
        object.__setattr__(self, "target_angle", float(self.target_angle))
        object.__setattr__(self, "target_coeff", complex(self.target_coeff))

    @property
    def n_users(self) -> int:
        return self.user_angles.shape[0]

    @property
    def n_paths(self) -> int:
        return self.user_angles.shape[1]

    @property
    def n_clutters(self) -> int:
        return self.clutter_angles.size

    def check(self, cfg: SystemConfig):
        if (self.n_users, self.n_paths, self.n_clutters) != (cfg.n_users, cfg.n_paths, cfg.n_clutters):
            raise InvalidConfigError(
                f"scene shape (K={self.n_users}, Lp={self.n_paths}, C={self.n_clutters}) "
                f"does not match config (K={cfg.n_users}, Lp={cfg.n_paths}, C={cfg.n_clutters})"
            )

    def with_target(self, angle: float) -> "Scene":
        return replace(self, target_angle=angle)

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return (np.array_equal(self.user_angles, other.user_angles)
                and np.array_equal(self.user_gains, other.user_gains)
                and self.target_angle == other.target_angle
                and self.target_coeff == other.target_coeff
                and np.array_equal(self.clutter_angles, other.clutter_angles)
                and np.array_equal(self.clutter_coeffs, other.clutter_coeffs))


def _cn(rng: np.random.Generator, size) -> np.ndarray:
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def sample_scene(cfg: SystemConfig, seed) -> Scene:
    """Draw a scene: angles uniform on [0, pi], all gains i.i.d. CN(0, 1)."""
    rng = np.random.default_rng(seed)
    K, Lp, C = cfg.n_users, cfg.n_paths, cfg.n_clutters
    user_angles = rng.uniform(0.0, np.pi, (K, Lp))
    user_gains = _cn(rng, (K, Lp))
    target_angle = rng.uniform(0.0, np.pi) if cfg.target_angle is None else cfg.target_angle
    target_coeff = _cn(rng, ())
    clutter_angles = rng.uniform(0.0, np.pi, C)
    if cfg.clutter_angles is not None:
        clutter_angles = np.asarray(cfg.clutter_angles, dtype=float)
    clutter_coeffs = _cn(rng, C)
    return Scene(user_angles, user_gains, target_angle, complex(target_coeff),
                 clutter_angles, clutter_coeffs)


def steering_vector(x, theta, wavelength: float) -> np.ndarray:
    """Field response exp(j 2pi/lambda x_n cos(theta)) for each position in ``x``."""
    if not wavelength > 0:
        raise InvalidConfigError("wavelength must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(1j * (2 * np.pi / wavelength) * x * np.cos(theta))


def steering_matrix(x, thetas, wavelength: float) -> np.ndarray:
    """Columns are steering vectors for each angle: shape (len(x), len(thetas))."""
    if not wavelength > 0:
        raise InvalidConfigError("wavelength must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(1j * (2 * np.pi / wavelength) * np.outer(x, np.cos(np.asarray(thetas, dtype=float))))


def channel_matrix(scene: Scene, x, wavelength: float) -> np.ndarray:
    """All user channels as columns, shape (N, K)."""
    x = np.asarray(x, dtype=float)
    N, Lp = x.size, scene.n_paths
    phase = np.exp(1j * (2 * np.pi / wavelength) * x[:, None, None] * np.cos(scene.user_angles)[None])
    return np.sqrt(N / Lp) * np.einsum("nkl,kl->nk", phase, scene.user_gains)


def user_channel(scene: Scene, k: int, x, wavelength: float) -> np.ndarray:
    """Channel h_k of user ``k`` (0-based) for positions ``x``."""
    if not 0 <= k < scene.n_users:
        raise IndexError(f"user index {k} out of range for K={scene.n_users}")
    x = np.asarray(x, dtype=float)
    A = steering_matrix(x, scene.user_angles[k], wavelength)
    return np.sqrt(x.size / scene.n_paths) * (A @ scene.user_gains[k])


def ula_positions(cfg: SystemConfig) -> np.ndarray:
    """Half-wavelength uniform linear array starting at X_min.

    Built element by element so every gap is at least lambda/2 exactly
    (``X_min + n * lambda/2`` can fall an ulp short).
    """
    x = [float(cfg.region_min)]
    for _ in range(cfg.n_antennas - 1):
        x.append(step_up(x[-1], cfg.wavelength / 2))
    return np.array(x)


def is_feasible(x, cfg: SystemConfig) -> bool:
    """Exact check of the region and minimum-spacing constraints."""
    s = np.sort(np.asarray(x, dtype=float))
    if s.size != cfg.n_antennas or not np.all(np.isfinite(s)):
        return False
    if s[0] < cfg.region_min or s[-1] > cfg.region_max:
        return False
    return bool(np.all(np.diff(s) >= cfg.min_spacing))


# -- JSON ----------------------------------------------------------------------

def _pairs(z) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(z, dtype=complex).reshape(-1)]


def _complex(p: Sequence) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]


def scene_to_dict(scene: Scene) -> dict:
    """JSON-ready form: angles in degrees, complex numbers as [re, im]."""
    return {
        "users": [
            {"angles_deg": np.degrees(scene.user_angles[k]).tolist(),
             "gains": _pairs(scene.user_gains[k])}
            for k in range(scene.n_users)
        ],
        "target": {"angle_deg": math.degrees(scene.target_angle),
                   "coeff": _pairs(scene.target_coeff)[0]},
        "clutter": [
            {"angle_deg": math.degrees(a), "coeff": _pairs(c)[0]}
            for a, c in zip(scene.clutter_angles, scene.clutter_coeffs)
        ],
    }


def scene_from_dict(d: Mapping[str, Any]) -> Scene:
    users = d["users"]
    ua = np.radians([u["angles_deg"] for u in users])
    ug = np.array([_complex(u["gains"]) for u in users])
    clutter = d.get("clutter", [])
    ca = np.radians([c["angle_deg"] for c in clutter]) if clutter else np.zeros(0)
    cc = np.array([_complex(c["coeff"])[0] for c in clutter]) if clutter else np.zeros(0, complex)
    # degrees round-trip can overshoot [0, pi] by an ulp
    ua, ca = np.clip(ua, 0.0, np.pi), np.clip(ca, 0.0, np.pi)
    t = d["target"]
    return Scene(ua, ug, min(max(math.radians(t["angle_deg"]), 0.0), math.pi),
                 complex(*t["coeff"]), ca, cc)


def save_scene(scene: Scene, path):
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))
