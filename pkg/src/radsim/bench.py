"""Benchmark harness comparing the two pipelines on identical scenes.

The theoretical speedup of the sparse pipeline is the ratio of tensor
cell count to kernel cell count; the harness reports it alongside the
measured wall-clock ratio (medians over repeated runs, warm-up excluded)
so claims are auditable against the counts.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .conventional import simulate_conventional
from .core import GridPoint, RadarConfig, ReflectionPoint, ValidationError, grid_to_point
from .fastsim import simulate_fast
from .psf import analytic_psf, truncate_psf


@dataclass(frozen=True)
class ComplexityReport:
    """Cell counts and timings for one pipeline comparison."""

    n_s: int  # tensor cell count
    n_p: int  # reflection points
    n_f: int  # kernel cell count
    n_r: int  # received samples per frame (= n_s under the unitary model)
    theoretical_ratio: float
    measured_conventional_s: float
    measured_fast_s: float
    measured_ratio: float
    repetitions: int
    window: str
    energy_fraction: float

    def __post_init__(self):
        if min(self.n_s, self.n_p, self.n_f, self.n_r) <= 0:
            raise ValidationError("all counts must be > 0")

    def as_dict(self) -> dict:
        return {
            "n_s": self.n_s,
            "n_p": self.n_p,
            "n_f": self.n_f,
            "n_r": self.n_r,
            "theoretical_ratio": self.theoretical_ratio,
            "measured_conventional_s": self.measured_conventional_s,
            "measured_fast_s": self.measured_fast_s,
            "measured_ratio": self.measured_ratio,
            "repetitions": self.repetitions,
            "window": self.window,
            "energy_fraction": self.energy_fraction,
        }


def random_points(cfg: RadarConfig, n_points: int, seed: int) -> list[ReflectionPoint]:
    """Unit-magnitude random-phase scatterers spread over the grid spans."""
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(n_points):
        g = GridPoint(
            float(rng.uniform(0.05, 0.95) * cfg.n_range),
            float(rng.uniform(0.0, cfg.n_doppler)),
            float(rng.uniform(0.0, cfg.n_azimuth)),
            complex(np.exp(2j * math.pi * rng.uniform())),
        )
        points.append(grid_to_point(g, cfg))
    return points


def _median_time(fn, repetitions: int) -> float:
    fn()  # warm-up, excluded
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def run_benchmark(
    cfg: RadarConfig,
    n_points: int,
    repetitions: int,
    energy_fraction: float = 0.99,
    window: str = "gauss",
    seed: int | None = None,
) -> ComplexityReport:
    """Time both pipelines on one random scene and report the ratios.

    Kernel derivation and truncation happen once, outside the timed
    region (calibration is a one-time cost in practice). Both pipelines
    run noiseless and single-threaded for a fair comparison.
    """
    if repetitions < 3:
        raise ValidationError("repetitions must be >= 3")
    if n_points < 1:
        raise ValidationError("n_points must be >= 1")
    points = random_points(cfg, n_points, cfg.rng_seed if seed is None else seed)
    psf = analytic_psf(cfg, window)
    if energy_fraction < 1.0:
        psf = truncate_psf(psf, energy_fraction)

    conventional_s = _median_time(
        lambda: simulate_conventional(points, cfg, add_noise=False, window=window),
        repetitions,
    )
    fast_s = _median_time(
        lambda: simulate_fast(points, psf, cfg, add_noise=False), repetitions
    )
    return ComplexityReport(
        n_s=cfg.n_cells,
        n_p=n_points,
        n_f=psf.n_cells,
        n_r=cfg.n_cells,
        theoretical_ratio=cfg.n_cells / psf.n_cells,
        measured_conventional_s=conventional_s,
        measured_fast_s=fast_s,
        measured_ratio=conventional_s / fast_s if fast_s > 0 else math.inf,
        repetitions=repetitions,
        window=window,
        energy_fraction=energy_fraction,
    )
