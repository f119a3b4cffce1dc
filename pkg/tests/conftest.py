import numpy as np
import pytest

from maisac.model import SystemConfig, is_feasible, paper_config, sample_scene


def small_config(N=4, K=2, C=2, Lp=3, **kw):
    kw.setdefault("region_max", max(1.0, N * 0.05))
    return SystemConfig(n_antennas=N, n_users=K, n_clutters=C, n_paths=Lp, **kw)


def random_positions(cfg, rng):
    """Feasible sorted positions drawn by rejection."""
    for _ in range(10000):
        x = np.sort(rng.uniform(cfg.region_min, cfg.region_max, cfg.n_antennas))
        if is_feasible(x, cfg):
            return x
    raise RuntimeError("could not sample feasible positions")


def random_F(cfg, rng, power=None):
    shape = (cfg.n_antennas, cfg.n_users + 1)
    F = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    P = cfg.tx_power if power is None else power
    return F * np.sqrt(P / np.sum(np.abs(F) ** 2))


def random_instance(seed, **kw):
    """(cfg, scene, x, F) on a small random problem."""
    rng = np.random.default_rng(seed)
    cfg = small_config(**kw)
    return cfg, sample_scene(cfg, seed), random_positions(cfg, rng), random_F(cfg, rng)


@pytest.fixture
def default_cfg():
    return paper_config()


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
