import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maisac.fp_core import (AuxiliaryState, linear_terms, products, surrogate_eval,
                            true_objective_nats, update_aux, update_mu, update_xi)
from maisac.model import Scene, SystemConfig

from conftest import random_instance
from oracles import surrogate as oracle_surrogate


def random_aux(cfg, rng):
    K = cfg.n_users
    return AuxiliaryState(rng.uniform(0, 3, K + 1),
                          rng.standard_normal(K) + 1j * rng.standard_normal(K),
                          rng.standard_normal(K + 1) + 1j * rng.standard_normal(K + 1))


def oracle_value(scene, x, F, aux, cfg):
    return oracle_surrogate(scene, x, F, aux.mu, aux.xi_c, aux.xi_s, cfg.wavelength,
                            cfg.weight_comm, cfg.weight_sense, 1.0, cfg.noise_sense)


def test_zero_aux_gives_zero():
    cfg, scene, x, F = random_instance(0)
    assert surrogate_eval(scene, x, F, AuxiliaryState.zeros(cfg.n_users), cfg).value_nats == 0.0


@pytest.mark.parametrize("seed", range(6))
def test_surrogate_matches_oracle(seed):
    cfg, scene, x, F = random_instance(seed, K=3, C=2)
    aux = random_aux(cfg, np.random.default_rng(seed))
    got = surrogate_eval(scene, x, F, aux, cfg).value_nats
    assert got == pytest.approx(oracle_value(scene, x, F, aux, cfg), rel=1e-12, abs=1e-12)


class TestUpdateMu:
    def test_values(self):
        assert update_mu(0.0) == 0.0
        assert update_mu(2.0) == pytest.approx(2 + 2 * math.sqrt(2), rel=1e-12)

    def test_negative_clamped(self):
        assert update_mu(-0.5) == 0.0
        np.testing.assert_array_equal(update_mu(np.array([-1.0, 0.0])), [0.0, 0.0])

    @given(st.floats(1e-3, 50))
    def test_stationary(self, R):
        f = lambda m: math.log1p(m) - m + 2 * math.sqrt(1 + m) * R
        mu, h = update_mu(R), 1e-5
        assert (f(mu + h) - f(mu - h)) / (2 * h) == pytest.approx(0.0, abs=1e-8 * max(1, mu))

    @given(st.floats(0, 100), st.floats(0, 100))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert update_mu(lo) <= update_mu(hi)


class TestUpdateXi:
    def test_zero_beamformer(self):
        cfg, scene, x, F = random_instance(1)
        aux = update_xi(scene, x, np.zeros_like(F), random_aux(cfg, np.random.default_rng(0)), cfg)
        assert np.all(aux.xi_c == 0) and np.all(aux.xi_s == 0)

    def test_half(self):
        cfg = SystemConfig(n_antennas=1, n_users=1, n_clutters=0, n_paths=1)
        scene = Scene([[math.pi / 2]], [[1.0]], math.pi / 3, 1.0, [], [])
        F = np.array([[1.0, 0.0]], complex)
        aux = update_xi(scene, [0.0], F, AuxiliaryState.zeros(1), cfg, mode="paper-literal")
        assert aux.xi_c[0] == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(4))
    def test_standard_is_stationary(self, seed):
        cfg, scene, x, F = random_instance(seed, K=2, C=2)
        aux = update_xi(scene, x, F, random_aux(cfg, np.random.default_rng(seed)), cfg)
        f0 = surrogate_eval(scene, x, F, aux, cfg).value_nats
        h = 1e-6
        for name in ("xi_c", "xi_s"):
            v = getattr(aux, name)
            for i in range(v.size):
                for d in (h, 1j * h):
                    vp, vm = v.copy(), v.copy()
                    vp[i] += d
                    vm[i] -= d
                    fp = surrogate_eval(scene, x, F, AuxiliaryState(aux.mu, **{**_xi(aux), name: vp}), cfg).value_nats
                    fm = surrogate_eval(scene, x, F, AuxiliaryState(aux.mu, **{**_xi(aux), name: vm}), cfg).value_nats
                    assert (fp - fm) / (2 * h) == pytest.approx(0.0, abs=1e-7 * max(1, abs(f0)))

    def test_paper_literal_formula(self):
        cfg, scene, x, F = random_instance(5)
        p = products(scene, x, F, cfg)
        aux = update_xi(scene, x, F, AuxiliaryState.zeros(cfg.n_users), cfg, mode="paper-literal")
        k = 1
        den = np.sum(np.abs(p.G[k]) ** 2) + 1.0
        assert aux.xi_c[k] == pytest.approx(np.conj(p.G[k, k]) / den, rel=1e-13)


def _xi(aux):
    return {"xi_c": aux.xi_c, "xi_s": aux.xi_s}


@given(st.integers(0, 10000))
@settings(max_examples=40, deadline=None)
def test_tightness(seed):
    cfg, scene, x, F = random_instance(seed, K=3, C=2)
    aux = update_aux(scene, x, F, random_aux(cfg, np.random.default_rng(seed)), cfg)
    s = surrogate_eval(scene, x, F, aux, cfg).value_nats
    assert s == pytest.approx(true_objective_nats(scene, x, F, cfg), abs=1e-9)


@given(st.integers(0, 10000))
@settings(max_examples=40, deadline=None)
def test_coordinate_updates_ascend(seed):
    cfg, scene, x, F = random_instance(seed)
    aux = random_aux(cfg, np.random.default_rng(seed))
    v0 = surrogate_eval(scene, x, F, aux, cfg).value_nats
    aux = update_xi(scene, x, F, aux, cfg)
    v1 = surrogate_eval(scene, x, F, aux, cfg).value_nats
    p = products(scene, x, F, cfg)
    aux = AuxiliaryState(update_mu(linear_terms(p.G, p.t, scene, aux)), aux.xi_c, aux.xi_s)
    v2 = surrogate_eval(scene, x, F, aux, cfg).value_nats
    assert v1 >= v0 - 1e-10 and v2 >= v1 - 1e-10
    assert v2 <= true_objective_nats(scene, x, F, cfg) + 1e-9  # lower bound


def test_mu_nonnegative_and_finite():
    cfg, scene, x, F = random_instance(9)
    aux = update_aux(scene, x, -F, random_aux(cfg, np.random.default_rng(1)), cfg, mode="paper-literal")
    assert np.all(aux.mu >= 0) and np.all(np.isfinite(aux.mu))
