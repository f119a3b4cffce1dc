import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maisac.model import (InvalidConfigError, Scene, SystemConfig, channel_matrix, is_feasible,
                          load_scene, sample_scene, save_scene, scene_from_dict,
                          scene_to_dict, steering_vector, ula_positions, user_channel)

from oracles import channel as oracle_channel

LAM = 0.1


def one_path_scene(theta, rho=1.0, K=1):
    return Scene(np.full((K, 1), theta), np.full((K, 1), rho, complex), math.pi / 3, 1.0,
                 np.zeros(0), np.zeros(0, complex))


class TestSteeringVector:
    def test_zero_coordinate(self):
        np.testing.assert_array_equal(steering_vector([0.0], 1.234, LAM), [1 + 0j])

    def test_broadside(self):
        np.testing.assert_allclose(steering_vector([0, LAM / 2], math.pi / 2, LAM), [1, 1], atol=1e-15)

    def test_endfire_half_wavelength(self):
        np.testing.assert_allclose(steering_vector([0, LAM / 2], 0.0, LAM), [1, -1], atol=1e-15)

    def test_bad_wavelength(self):
        with pytest.raises(InvalidConfigError):
            steering_vector([0.0], 0.1, 0.0)

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.floats(0, math.pi))
    def test_unit_modulus(self, x, theta):
        np.testing.assert_allclose(np.abs(steering_vector(x, theta, LAM)), 1.0, atol=1e-14)


class TestUserChannel:
    def test_single_element(self):
        np.testing.assert_allclose(user_channel(one_path_scene(0.7), 0, [0.0], LAM), [1 + 0j])

    def test_two_elements_broadside(self):
        h = user_channel(one_path_scene(math.pi / 2), 0, [0, LAM / 2], LAM)
        np.testing.assert_allclose(h, [math.sqrt(2)] * 2, atol=1e-14)

    def test_matches_triple_loop(self):
        cfg = SystemConfig(n_antennas=4, n_users=3, n_paths=3, n_clutters=1)
        scene = sample_scene(cfg, 7)
        x = np.array([0.0, 0.07, 0.21, 0.5])
        for k in range(3):
            ref = oracle_channel(scene.user_angles[k], scene.user_gains[k], x, LAM)
            got = user_channel(scene, k, x, LAM)
            assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)
            np.testing.assert_allclose(channel_matrix(scene, x, LAM)[:, k], ref, rtol=1e-12)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            user_channel(one_path_scene(0.3), 1, [0.0], LAM)

    @given(st.floats(0, math.pi), st.floats(-1, 1))
    def test_single_path_translation(self, theta, delta):
        # one path: translating the array only rotates the channel by a common phase
        scene = one_path_scene(theta, rho=0.6 - 0.8j)
        x = np.array([0.0, 0.05, 0.13])
        h0 = user_channel(scene, 0, x, LAM)
        h1 = user_channel(scene, 0, x + delta, LAM)
        assert abs(np.vdot(h1, h0)) == pytest.approx(np.linalg.norm(h0) ** 2, rel=1e-10)


class TestSampleScene:
    def test_deterministic(self, default_cfg):
        assert sample_scene(default_cfg, 3) == sample_scene(default_cfg, 3)
        assert sample_scene(default_cfg, 3) != sample_scene(default_cfg, 4)

    def test_gain_moment(self):
        cfg = SystemConfig(n_users=1, n_paths=100000, n_clutters=0)
        rho = sample_scene(cfg, 0).user_gains
        assert np.mean(np.abs(rho) ** 2) == pytest.approx(1.0, abs=0.02)
        assert abs(np.mean(rho)) < 0.02

    def test_fixed_target_sixty_degrees(self):
        cfg = SystemConfig.from_dict({"target_angle_deg": 60})
        assert sample_scene(cfg, 1).target_angle == math.pi / 3

    def test_random_target_and_shapes(self, default_cfg):
        cfg = default_cfg.with_updates(target_angle=None)
        s = sample_scene(cfg, 5)
        assert 0 <= s.target_angle <= math.pi
        assert s.user_angles.shape == (4, 13) and s.clutter_angles.shape == (3,)
        assert np.all((s.user_angles >= 0) & (s.user_angles <= math.pi))

    def test_immutable(self, default_cfg):
        s = sample_scene(default_cfg, 0)
        with pytest.raises(ValueError):
            s.user_gains[0, 0] = 0


class TestConfig:
    def test_paper_defaults(self, default_cfg):
        c = default_cfg
        assert (c.n_antennas, c.n_users, c.n_clutters, c.n_paths) == (4, 4, 3, 13)
        assert c.min_spacing == pytest.approx(c.wavelength / 2)
        assert c.region_max == pytest.approx(10 * c.wavelength)
        assert c.snr_db == pytest.approx(0.0)

    @pytest.mark.parametrize("kw", [
        {"weight_comm": 0.7, "weight_sense": 0.7},
        {"region_max": 0.1},
        {"tx_power": 0.0},
        {"min_spacing": -1.0},
        {"n_antennas": 0},
        {"target_angle": 4.0},
    ])
    def test_invalid(self, kw):
        with pytest.raises(InvalidConfigError):
            SystemConfig(**kw)

    def test_from_dict_boundary_units(self):
        c = SystemConfig.from_dict({"snr_db": 10, "region_max_wl": 6, "clutter_angles_deg": [30, 150],
                                    "n_clutters": 2, "weight_comm": 0.25})
        assert c.tx_power == pytest.approx(10.0)
        assert c.region_max == pytest.approx(0.6)
        assert c.clutter_angles == pytest.approx((math.pi / 6, 5 * math.pi / 6))
        assert c.weight_sense == pytest.approx(0.75)

    def test_unknown_key(self):
        with pytest.raises(InvalidConfigError):
            SystemConfig.from_dict({"antennas": 4})

    def test_with_updates_weight(self, default_cfg):
        assert default_cfg.with_updates(weight_comm=1.0).weight_sense == 0.0


class TestFeasibility:
    def test_ula(self, default_cfg):
        x = ula_positions(default_cfg)
        assert is_feasible(x, default_cfg)
        np.testing.assert_allclose(np.diff(x), default_cfg.wavelength / 2)

    def test_violations(self, default_cfg):
        assert not is_feasible([0, 0.04, 0.2, 0.3], default_cfg)
        assert not is_feasible([-0.01, 0.1, 0.2, 0.3], default_cfg)
        assert not is_feasible([0, 0.1, 0.2], default_cfg)


def test_scene_json_roundtrip(tmp_path, default_cfg):
    scene = sample_scene(default_cfg, 11)
    d = json.loads(json.dumps(scene_to_dict(scene)))
    back = scene_from_dict(d)
    np.testing.assert_allclose(back.user_angles, scene.user_angles, rtol=1e-13)
    np.testing.assert_array_equal(back.user_gains, scene.user_gains)
    assert back.target_angle == pytest.approx(scene.target_angle, rel=1e-14)
    save_scene(scene, tmp_path / "s.json")
    assert load_scene(tmp_path / "s.json").target_coeff == scene.target_coeff


def test_ula_exactly_feasible_for_many_elements():
    for N in range(1, 20):
        cfg = SystemConfig(n_antennas=N)
        x = ula_positions(cfg)
        assert is_feasible(x, cfg)
        np.testing.assert_allclose(np.diff(x), cfg.wavelength / 2, rtol=1e-12)
