"""Domain types, radar presets, and physical-to-grid coordinate mapping.

Both simulation pipelines (received-signal synthesis and sparse kernel
superposition) share these types. Every tensor dimension is phase
periodic under the complex-exponential signal model, so fractional bin
indices wrap modulo the grid size. Positive radial velocity means a
receding target and drifts toward positive Doppler bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
import yaml

SPEED_OF_LIGHT = 299792458.0  # m/s

PRESET_NAMES = ("raddet-ti", "desk-small")

# field names of the on-disk radar config document, in file order
CONFIG_FIELDS = (
    "n_range",
    "n_doppler",
    "n_azimuth",
    "carrier_wavelength",
    "range_resolution",
    "pulse_repetition_interval",
    "noise_variance",
    "rng_seed",
)


class RadsimError(Exception):
    """Base class for all radsim errors."""


class ValidationError(RadsimError, ValueError):
    """A config, point, tensor, or argument violates its invariants."""


class CalibrationError(RadsimError):
    """Kernel or noise measurement failed (e.g. no distinct peak)."""


class SceneInfeasibleError(RadsimError):
    """Scene objects could not be placed without overlap."""


class FileFormatError(RadsimError):
    """A binary or text artifact does not match its documented format."""


@dataclass(frozen=True)
class RadarConfig:
    """Full parametric description of the simulated radar.

    Attributes:
        n_range: range bins (fast-time samples per frame), >= 2
        n_doppler: Doppler bins (pulses per frame), >= 2
        n_azimuth: azimuth bins (virtual elements of a half-wavelength
            uniform linear array), >= 2
        carrier_wavelength: meters
        range_resolution: meters per range bin
        pulse_repetition_interval: seconds between pulses
        noise_variance: per-cell complex-noise variance, tensor units
        rng_seed: seed for every stochastic operation under this config
    """

    n_range: int
    n_doppler: int
    n_azimuth: int
    carrier_wavelength: float
    range_resolution: float
    pulse_repetition_interval: float
    noise_variance: float
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("n_range", "n_doppler", "n_azimuth"):
            count = getattr(self, name)
            if not isinstance(count, (int, np.integer)) or count < 2:
                raise ValidationError(f"{name} must be an integer >= 2, got {count!r}")
        for name in ("carrier_wavelength", "range_resolution", "pulse_repetition_interval"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
        if not math.isfinite(self.noise_variance) or self.noise_variance < 0.0:
            raise ValidationError(f"noise_variance must be >= 0, got {self.noise_variance!r}")
        if not isinstance(self.rng_seed, (int, np.integer)) or self.rng_seed < 0:
            raise ValidationError(f"rng_seed must be a non-negative integer, got {self.rng_seed!r}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.n_range, self.n_doppler, self.n_azimuth)

    @property
    def n_cells(self) -> int:
        return self.n_range * self.n_doppler * self.n_azimuth

    @property
    def unambiguous_range(self) -> float:
        """Largest representable range in meters (one grid period)."""
        return self.n_range * self.range_resolution

    @property
    def unambiguous_velocity_span(self) -> float:
        """Total width of the representable radial-velocity interval, m/s."""
        return self.carrier_wavelength / (2.0 * self.pulse_repetition_interval)

    @property
    def max_radial_velocity(self) -> float:
        """Velocity magnitude limit; valid velocities lie in (-v, +v)."""
        return 0.5 * self.unambiguous_velocity_span

    @property
    def azimuth_beamwidth_rad(self) -> float:
        """Rayleigh beamwidth of the rectangular-taper array, radians."""
        return 2.0 / self.n_azimuth


@dataclass(frozen=True)
class ReflectionPoint:
    """One scatterer: physical coordinates plus a complex reflection amplitude."""

    range_m: float
    radial_velocity_mps: float
    azimuth_rad: float
    amplitude: complex

    def validate(self, cfg: RadarConfig) -> None:
        """Raise ValidationError unless the point lies inside cfg's unambiguous spans."""
        for name in ("range_m", "radial_velocity_mps", "azimuth_rad"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite, got {getattr(self, name)!r}")
        amp = complex(self.amplitude)
        if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
            raise ValidationError(f"amplitude must be finite, got {self.amplitude!r}")
        if not 0.0 <= self.range_m < cfg.unambiguous_range:
            raise ValidationError(
                f"range_m {self.range_m} outside [0, {cfg.unambiguous_range})"
            )
        v_max = cfg.max_radial_velocity
        if not -v_max < self.radial_velocity_mps < v_max:
            raise ValidationError(
                f"radial_velocity_mps {self.radial_velocity_mps} outside (-{v_max}, {v_max})"
            )
        if not -math.pi / 2 < self.azimuth_rad < math.pi / 2:
            raise ValidationError(f"azimuth_rad {self.azimuth_rad} outside (-pi/2, pi/2)")


@dataclass(frozen=True)
class GridPoint:
    """A scatterer mapped onto fractional tensor bins (taken modulo the grid)."""

    k_range: float
    k_doppler: float
    k_azimuth: float
    amplitude: complex

    @property
    def k(self) -> tuple[float, float, float]:
        return (self.k_range, self.k_doppler, self.k_azimuth)


class TensorKind(IntEnum):
    """Distinguishes the received-signal cube from the match-filtered cube."""

    RAW_SIGNAL = 0
    FILTERED = 1


@dataclass(frozen=True)
class RadarTensor:
    """Dense complex 3D array over (range, Doppler, azimuth) bins.

    The cells array is complex128, row-major over (range, doppler, azimuth).
    Treated as immutable once built, except that kernel superposition
    accumulates into a freshly created tensor's cells in place.
    """

    cells: np.ndarray
    kind: TensorKind

    def __post_init__(self):
        if self.cells.ndim != 3:
            raise ValidationError(f"tensor cells must be 3D, got shape {self.cells.shape}")
        if not np.iscomplexobj(self.cells):
            raise ValidationError("tensor cells must be complex valued")
        if not np.all(np.isfinite(self.cells)):
            raise ValidationError("tensor cells must all be finite")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.cells.shape

    @property
    def n_cells(self) -> int:
        return int(self.cells.size)

    def matches(self, cfg: RadarConfig) -> bool:
        return self.dims == cfg.dims


def make_preset(name: str) -> RadarConfig:
    """Return one of the named radar configurations.

    raddet-ti models a 77 GHz automotive prototype with 0.28 m range bins
    and the smallest half-wavelength array whose Rayleigh beamwidth is at
    most 3.9 degrees (30 elements). Grid depths of 256 range and 64
    Doppler bins are defaults chosen for a ~71.7 m unambiguous range.
    desk-small is a (64, 32, 32) grid for fast tests.

    Both presets default to noise variance 9.0 (sigma 3.0 in tensor
    units), which keeps the tail a 99%-energy kernel truncation discards
    below the noise floor for unit scatterers.
    """
    if name == "raddet-ti":
        n_azimuth = math.ceil(2.0 / math.radians(3.9))  # = 30
        return RadarConfig(
            n_range=256,
            n_doppler=64,
            n_azimuth=n_azimuth,
            carrier_wavelength=SPEED_OF_LIGHT / 77.0e9,
            range_resolution=0.28,
            pulse_repetition_interval=1.0e-4,
            noise_variance=9.0,
            rng_seed=0,
        )
    if name == "desk-small":
        return RadarConfig(
            n_range=64,
            n_doppler=32,
            n_azimuth=32,
            carrier_wavelength=SPEED_OF_LIGHT / 77.0e9,
            range_resolution=0.5,
            pulse_repetition_interval=1.0e-4,
            noise_variance=9.0,
            rng_seed=0,
        )
    raise ValidationError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def map_point_to_grid(p: ReflectionPoint, cfg: RadarConfig) -> GridPoint:
    """Map physical coordinates to fractional bin indices.

    Range maps linearly through the range resolution; velocity maps
    through the Doppler frequency 2*v/wavelength sampled once per pulse;
    azimuth maps through the half-wavelength array phase gradient
    (n_azimuth/2) * sin(azimuth). Doppler and azimuth wrap modulo the
    grid. Amplitude is carried through unchanged.
    """
    p.validate(cfg)
    k_range = (p.range_m / cfg.range_resolution) % cfg.n_range
    doppler_hz = 2.0 * p.radial_velocity_mps / cfg.carrier_wavelength
    k_doppler = (doppler_hz * cfg.n_doppler * cfg.pulse_repetition_interval) % cfg.n_doppler
    k_azimuth = (0.5 * cfg.n_azimuth * math.sin(p.azimuth_rad)) % cfg.n_azimuth
    return GridPoint(k_range, k_doppler, k_azimuth, complex(p.amplitude))


def signed_bin(k: float, n: int) -> float:
    """Wrap a bin index into the signed interval [-n/2, n/2)."""
    return (k + n / 2.0) % n - n / 2.0


def grid_to_point(g: GridPoint, cfg: RadarConfig) -> ReflectionPoint:
    """Invert the grid mapping back to physical coordinates.

    Doppler and azimuth indices are interpreted in their signed wrap
    (the half of the axis nearest zero), matching the unambiguous spans
    enforced by ReflectionPoint validation.
    """
    range_m = g.k_range * cfg.range_resolution
    k_d = signed_bin(g.k_doppler, cfg.n_doppler)
    velocity = k_d * cfg.carrier_wavelength / (2.0 * cfg.n_doppler * cfg.pulse_repetition_interval)
    k_a = signed_bin(g.k_azimuth, cfg.n_azimuth)
    sin_az = 2.0 * k_a / cfg.n_azimuth
    if not -1.0 <= sin_az <= 1.0:
        raise ValidationError(f"azimuth bin {g.k_azimuth} has no physical angle")
    return ReflectionPoint(range_m, velocity, math.asin(sin_az), complex(g.amplitude))


def snap_point_to_grid(p: ReflectionPoint, cfg: RadarConfig) -> ReflectionPoint:
    """Move a point to the physical position of its nearest integer bins."""
    g = map_point_to_grid(p, cfg)
    snapped = GridPoint(
        float(round(g.k_range)) % cfg.n_range,
        float(round(g.k_doppler)) % cfg.n_doppler,
        float(round(g.k_azimuth)) % cfg.n_azimuth,
        g.amplitude,
    )
    return grid_to_point(snapped, cfg)


def complex_gaussian(shape, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian samples with E|z|^2 = variance."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def save_config(cfg: RadarConfig, path) -> None:
    """Write the config as a key-value YAML document with exactly the
    RadarConfig field names."""
    doc = {name: getattr(cfg, name) for name in CONFIG_FIELDS}
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


def load_config(path) -> RadarConfig:
    """Read a config document written by save_config; unknown or missing
    keys are rejected."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise FileFormatError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise FileFormatError(f"config file {path} must hold a key-value mapping")
    missing = [name for name in CONFIG_FIELDS if name not in doc]
    extra = [name for name in doc if name not in CONFIG_FIELDS]
    if missing or extra:
        raise FileFormatError(
            f"config file {path} has missing keys {missing} / unknown keys {extra}"
        )
    return RadarConfig(
        n_range=int(doc["n_range"]),
        n_doppler=int(doc["n_doppler"]),
        n_azimuth=int(doc["n_azimuth"]),
        carrier_wavelength=float(doc["carrier_wavelength"]),
        range_resolution=float(doc["range_resolution"]),
        pulse_repetition_interval=float(doc["pulse_repetition_interval"]),
        noise_variance=float(doc["noise_variance"]),
        rng_seed=int(doc["rng_seed"]),
    )
