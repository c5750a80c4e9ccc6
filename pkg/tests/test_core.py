"""Domain types, presets, grid mapping, and config serialization."""

import math

import numpy as np
import pytest

from radsim import (
    GridPoint,
    RadarConfig,
    ReflectionPoint,
    ValidationError,
    grid_to_point,
    load_config,
    make_preset,
    map_point_to_grid,
    save_config,
    signed_bin,
    snap_point_to_grid,
)
from radsim.core import FileFormatError


class TestRadarConfig:
    def test_counts_must_be_at_least_two(self):
        with pytest.raises(ValidationError):
            RadarConfig(1, 32, 32, 3.9e-3, 0.5, 1e-4, 1.0)
        with pytest.raises(ValidationError):
            RadarConfig(64, 0, 32, 3.9e-3, 0.5, 1e-4, 1.0)

    def test_positive_physical_parameters(self):
        with pytest.raises(ValidationError):
            RadarConfig(64, 32, 32, -1.0, 0.5, 1e-4, 1.0)
        with pytest.raises(ValidationError):
            RadarConfig(64, 32, 32, 3.9e-3, 0.0, 1e-4, 1.0)
        with pytest.raises(ValidationError):
            RadarConfig(64, 32, 32, 3.9e-3, 0.5, 1e-4, -0.5)

    def test_derived_quantities(self, desk_cfg):
        assert desk_cfg.dims == (64, 32, 32)
        assert desk_cfg.n_cells == 64 * 32 * 32
        assert desk_cfg.unambiguous_range == pytest.approx(32.0)
        span = desk_cfg.carrier_wavelength / (2 * desk_cfg.pulse_repetition_interval)
        assert desk_cfg.unambiguous_velocity_span == pytest.approx(span)


class TestPresets:
    def test_desk_small_dims(self):
        assert make_preset("desk-small").dims == (64, 32, 32)

    def test_raddet_range_resolution(self, raddet_cfg):
        assert raddet_cfg.range_resolution == 0.28

    def test_raddet_unambiguous_range(self, raddet_cfg):
        assert raddet_cfg.unambiguous_range == pytest.approx(256 * 0.28)  # ~71.68 m

    def test_raddet_azimuth_count_minimal(self, raddet_cfg):
        limit = math.radians(3.9)
        n = raddet_cfg.n_azimuth
        assert 2.0 / n <= limit
        assert 2.0 / (n - 1) > limit

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            make_preset("no-such-radar")


class TestMapPointToGrid:
    def test_origin_maps_to_dc_bins(self, desk_cfg):
        g = map_point_to_grid(ReflectionPoint(0.0, 0.0, 0.0, 1 + 0j), desk_cfg)
        assert (g.k_range, g.k_doppler, g.k_azimuth) == (0.0, 0.0, 0.0)

    def test_linear_range_mapping(self, desk_cfg):
        p = ReflectionPoint(10 * desk_cfg.range_resolution, 0.0, 0.0, 1 + 0j)
        assert map_point_to_grid(p, desk_cfg).k_range == pytest.approx(10.0, abs=1e-12)

    def test_raddet_25m_fractional_bin(self, raddet_cfg):
        g = map_point_to_grid(ReflectionPoint(25.0, 0.0, 0.0, 1 + 0j), raddet_cfg)
        assert g.k_range == pytest.approx(25.0 / 0.28, abs=1e-9)  # 89.2857...

    def test_amplitude_carried_through(self, desk_cfg):
        amp = 0.3 - 1.7j
        g = map_point_to_grid(ReflectionPoint(5.0, 1.0, 0.2, amp), desk_cfg)
        assert g.amplitude == amp

    def test_out_of_range_rejected(self, desk_cfg):
        with pytest.raises(ValidationError):
            map_point_to_grid(ReflectionPoint(-0.1, 0.0, 0.0, 1 + 0j), desk_cfg)
        with pytest.raises(ValidationError):
            map_point_to_grid(
                ReflectionPoint(desk_cfg.unambiguous_range, 0.0, 0.0, 1 + 0j), desk_cfg
            )
        with pytest.raises(ValidationError):
            map_point_to_grid(
                ReflectionPoint(1.0, desk_cfg.max_radial_velocity, 0.0, 1 + 0j), desk_cfg
            )
        with pytest.raises(ValidationError):
            map_point_to_grid(ReflectionPoint(1.0, 0.0, math.pi / 2, 1 + 0j), desk_cfg)
        with pytest.raises(ValidationError):
            map_point_to_grid(ReflectionPoint(float("nan"), 0.0, 0.0, 1 + 0j), desk_cfg)

    def test_azimuth_zero_maps_to_zero_for_any_config(self):
        for preset in ("desk-small", "raddet-ti"):
            cfg = make_preset(preset)
            g = map_point_to_grid(ReflectionPoint(3.0, 0.5, 0.0, 1 + 0j), cfg)
            assert g.k_azimuth == 0.0

    def test_injective_within_unambiguous_spans(self, desk_cfg):
        rng = np.random.default_rng(3)
        seen = set()
        for _ in range(200):
            p = ReflectionPoint(
                float(rng.uniform(0, desk_cfg.unambiguous_range * 0.999)),
                float(rng.uniform(-0.99, 0.99) * desk_cfg.max_radial_velocity),
                float(rng.uniform(-1.5, 1.5)),
                1 + 0j,
            )
            g = map_point_to_grid(p, desk_cfg)
            key = (round(g.k_range, 9), round(g.k_doppler, 9), round(g.k_azimuth, 9))
            assert key not in seen
            seen.add(key)

    def test_doppler_periodicity(self, desk_cfg):
        # one full ambiguity increment wraps k_doppler back onto itself
        increment = desk_cfg.unambiguous_velocity_span
        v0 = 1.234
        base = map_point_to_grid(ReflectionPoint(5.0, v0, 0.0, 1 + 0j), desk_cfg)
        doppler_hz = 2.0 * (v0 + increment) / desk_cfg.carrier_wavelength
        k_wrapped = (
            doppler_hz * desk_cfg.n_doppler * desk_cfg.pulse_repetition_interval
        ) % desk_cfg.n_doppler
        assert k_wrapped == pytest.approx(base.k_doppler, abs=1e-9)


class TestGridInverse:
    def test_round_trip(self, desk_cfg):
        rng = np.random.default_rng(11)
        for _ in range(50):
            g = GridPoint(
                float(rng.uniform(0, desk_cfg.n_range)),
                float(rng.uniform(0, desk_cfg.n_doppler)),
                float(rng.uniform(0, desk_cfg.n_azimuth)),
                complex(rng.normal(), rng.normal()),
            )
            if g.k_doppler == desk_cfg.n_doppler / 2 or g.k_azimuth == desk_cfg.n_azimuth / 2:
                continue
            back = map_point_to_grid(grid_to_point(g, desk_cfg), desk_cfg)
            assert back.k_range == pytest.approx(g.k_range, abs=1e-9)
            assert back.k_doppler == pytest.approx(g.k_doppler % desk_cfg.n_doppler, abs=1e-9)
            assert back.k_azimuth == pytest.approx(g.k_azimuth % desk_cfg.n_azimuth, abs=1e-9)

    def test_snap_lands_on_integer_bins(self, desk_cfg):
        p = ReflectionPoint(10.26, 2.13, 0.41, 2 - 1j)
        g = map_point_to_grid(snap_point_to_grid(p, desk_cfg), desk_cfg)
        assert g.k_range == pytest.approx(round(g.k_range), abs=1e-9)
        assert g.k_doppler % desk_cfg.n_doppler == pytest.approx(
            round(g.k_doppler) % desk_cfg.n_doppler, abs=1e-9
        )
        assert g.k_azimuth % desk_cfg.n_azimuth == pytest.approx(
            round(g.k_azimuth) % desk_cfg.n_azimuth, abs=1e-9
        )

    def test_signed_bin(self):
        assert signed_bin(0.0, 32) == 0.0
        assert signed_bin(31.0, 32) == -1.0
        assert signed_bin(16.0, 32) == -16.0


class TestConfigFile:
    def test_round_trip(self, tmp_path, raddet_cfg):
        path = tmp_path / "radar.yaml"
        save_config(raddet_cfg, path)
        assert load_config(path) == raddet_cfg

    def test_exact_field_names(self, tmp_path, desk_cfg):
        path = tmp_path / "radar.yaml"
        save_config(desk_cfg, path)
        text = path.read_text()
        for field in (
            "n_range",
            "n_doppler",
            "n_azimuth",
            "carrier_wavelength",
            "range_resolution",
            "pulse_repetition_interval",
            "noise_variance",
            "rng_seed",
        ):
            assert f"{field}:" in text

    def test_missing_and_extra_keys_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("n_range: 64\n")
        with pytest.raises(FileFormatError):
            load_config(path)
        save_config(make_preset("desk-small"), path)
        path.write_text(path.read_text() + "surprise: 1\n")
        with pytest.raises(FileFormatError):
            load_config(path)
