"""Shared fixtures and independent oracles for the test suite."""

import math

import numpy as np
import pytest

from radsim import GridPoint, RadarConfig, grid_to_point, make_preset


@pytest.fixture
def desk_cfg():
    return make_preset("desk-small")


@pytest.fixture
def raddet_cfg():
    return make_preset("raddet-ti")


@pytest.fixture
def tiny_cfg():
    # small enough for literal triple-loop oracles
    return RadarConfig(
        n_range=8,
        n_doppler=4,
        n_azimuth=4,
        carrier_wavelength=3.9e-3,
        range_resolution=0.5,
        pulse_repetition_interval=1e-4,
        noise_variance=1.0,
        rng_seed=0,
    )


def on_grid_points(rng, cfg, n, amplitude=None):
    """Random points that sit exactly on integer bins.

    The fold bins n_doppler/2 and n_azimuth/2 map to the open edges of
    the physical intervals, so they are remapped to zero.
    """
    points = []
    for _ in range(n):
        k_r = int(rng.integers(0, cfg.n_range))
        k_d = int(rng.integers(0, cfg.n_doppler))
        k_a = int(rng.integers(0, cfg.n_azimuth))
        if k_d == cfg.n_doppler // 2:
            k_d = 0
        if k_a == cfg.n_azimuth // 2:
            k_a = 0
        if amplitude is None:
            amp = complex(np.exp(2j * math.pi * rng.uniform()))
        else:
            amp = amplitude
        points.append(grid_to_point(GridPoint(float(k_r), float(k_d), float(k_a), amp), cfg))
    return points


def direct_unitary_transform(cells):
    """Separable direct evaluation of the unitary +j transform, one DFT
    matrix product per axis; independent of numpy's FFT machinery."""
    out = np.asarray(cells, dtype=np.complex128)
    for axis in range(out.ndim):
        n = out.shape[axis]
        basis = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / math.sqrt(n)
        moved = np.moveaxis(out, axis, 0)
        out = np.moveaxis(np.tensordot(basis, moved, axes=(1, 0)), 0, axis)
    return out


def rel_error(a, b):
    denom = np.linalg.norm(b)
    if denom == 0:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - b) / denom)
