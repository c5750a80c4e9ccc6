"""Point-response kernel derivation, truncation, and noise calibration.

The kernel (the filtered response of an isolated unit scatterer) can be
computed analytically from a config or measured by averaging tensors of a
stationary calibration target. Truncating it to a retained-energy
fraction is what makes the sparse superposition pipeline fast.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conventional import dimension_window, match_filter, synthesize_from_grid
from .core import (
    CalibrationError,
    FileFormatError,
    GridPoint,
    RadarConfig,
    RadarTensor,
    TensorKind,
    ValidationError,
)

SOURCE_ANALYTIC = "analytic"
SOURCE_MEASURED = "measured"

CALIBRATION_MAGIC = b"RSRCAL1"

# peak must exceed the median cell magnitude by this factor for a
# calibration scene to count as having a distinct target
PEAK_TO_MEDIAN_MIN = 10.0


@dataclass(frozen=True)
class Psf:
    """3D complex point-response kernel over a centered window.

    center_offset is the zero-shift cell: superposing the kernel onto a
    target cell aligns center_offset with that cell. Window dimensions
    are odd except where a window spans its entire (possibly even) grid
    dimension. retained_energy_fraction records how much of the full
    kernel's energy the window holds.
    """

    cells: np.ndarray
    center_offset: tuple[int, int, int]
    retained_energy_fraction: float
    source: str

    def __post_init__(self):
        if self.cells.ndim != 3 or not np.iscomplexobj(self.cells):
            raise ValidationError("kernel cells must be a complex 3D array")
        if not np.all(np.isfinite(self.cells)):
            raise ValidationError("kernel cells must all be finite")
        if not 0.0 < self.retained_energy_fraction <= 1.0 + 1e-12:
            raise ValidationError(
                f"retained_energy_fraction must be in (0, 1], got {self.retained_energy_fraction}"
            )
        if self.source not in (SOURCE_ANALYTIC, SOURCE_MEASURED):
            raise ValidationError(f"unknown kernel source {self.source!r}")
        for c, w in zip(self.center_offset, self.cells.shape):
            if not 0 <= c < w:
                raise ValidationError(f"center_offset {self.center_offset} outside window")
        peak = np.abs(self.cells[self.center_offset])
        if peak < np.max(np.abs(self.cells)) * (1.0 - 1e-9):
            raise ValidationError("kernel peak magnitude is not at center_offset")

    @property
    def window_dims(self) -> tuple[int, int, int]:
        return self.cells.shape

    @property
    def n_cells(self) -> int:
        return int(self.cells.size)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.cells) ** 2))


@dataclass(frozen=True)
class CalibrationBundle:
    """A measured kernel together with the radar's per-cell noise variance."""

    psf: Psf
    noise_variance: float
    frames_averaged: int = 1

    def __post_init__(self):
        if self.noise_variance < 0.0:
            raise ValidationError("noise_variance must be >= 0")
        if self.frames_averaged < 1:
            raise ValidationError("frames_averaged must be >= 1")


def analytic_psf(cfg: RadarConfig, window: str = "rect", offset=(0.0, 0.0, 0.0)) -> Psf:
    """Full-grid kernel: the filtered response of a unit point at the grid
    origin, circularly rolled so the peak sits at dims//2 per dimension.

    With the rectangular taper this is a separable product of periodic
    sinc kernels, which for an exactly on-grid point collapses to a
    single cell of magnitude sqrt(n_cells). `offset` evaluates the same
    kernel for a point at fractional bins (diagnostics for off-grid
    spread); each component should stay within half a bin.
    """
    raw = synthesize_from_grid([GridPoint(*offset, amplitude=1.0 + 0.0j)], cfg)
    filtered = match_filter(RadarTensor(raw, TensorKind.RAW_SIGNAL), cfg, window)
    center = tuple(d // 2 for d in cfg.dims)
    centered = np.roll(filtered.cells, center, axis=(0, 1, 2))
    return Psf(centered, center, 1.0, SOURCE_ANALYTIC)


def _window_indices(dim: int, center: int, halfwidth: int) -> np.ndarray:
    """Centered window indices, wrapped; the whole axis once it is covered."""
    if 2 * halfwidth + 1 >= dim:
        return np.arange(dim)
    return (np.arange(center - halfwidth, center + halfwidth + 1)) % dim


def _box_energy(power: np.ndarray, center, halfwidths) -> float:
    idx = [_window_indices(d, c, h) for d, c, h in zip(power.shape, center, halfwidths)]
    return float(power[np.ix_(*idx)].sum())


def _grow_greedy(power: np.ndarray, center, stop) -> tuple[list[int], float]:
    """Grow a centered box one dimension at a time, always taking the
    dimension whose expansion adds the most energy, until stop(retained,
    halfwidths) or the box covers the grid. Returns halfwidths and
    retained energy."""
    dims = power.shape
    halfwidths = [0, 0, 0]
    retained = _box_energy(power, center, halfwidths)
    while not stop(retained, halfwidths):
        gains = []
        for axis in range(3):
            if 2 * halfwidths[axis] + 1 >= dims[axis]:
                continue
            grown = list(halfwidths)
            grown[axis] += 1
            gains.append((_box_energy(power, center, grown) - retained, axis))
        if not gains:
            break
        gain, axis = max(gains, key=lambda g: (g[0], -g[1]))
        halfwidths[axis] += 1
        retained += gain
    return halfwidths, retained


def _extract_window(full: Psf, halfwidths, retained: float, total: float) -> Psf:
    dims = full.cells.shape
    center = full.center_offset
    idx = [_window_indices(d, c, h) for d, c, h in zip(dims, center, halfwidths)]
    cells = full.cells[np.ix_(*idx)].copy()
    new_center = tuple(
        c if 2 * h + 1 >= d else h for d, c, h in zip(dims, center, halfwidths)
    )
    fraction = min(retained / total, 1.0)
    return Psf(cells, new_center, fraction, full.source)


def truncate_psf(full: Psf, energy_fraction: float) -> Psf:
    """Smallest centered box retaining at least the requested energy share.

    The box grows greedily one dimension at a time from the peak cell, so
    a higher fraction can only extend the same growth path (the window is
    monotone in the fraction). The achieved fraction is recorded.
    """
    if not 0.0 < energy_fraction <= 1.0:
        raise ValidationError(f"energy_fraction must be in (0, 1], got {energy_fraction}")
    power = np.abs(full.cells) ** 2
    total = float(power.sum())
    if total <= 0.0:
        raise ValidationError("cannot truncate a zero-energy kernel")
    if energy_fraction == 1.0:
        halfwidths = [d // 2 for d in power.shape]  # whole grid
        return _extract_window(full, halfwidths, total, total)
    target = energy_fraction * total * (1.0 - 1e-12)
    halfwidths, retained = _grow_greedy(
        power, full.center_offset, lambda kept, _: kept >= target
    )
    return _extract_window(full, halfwidths, retained, total)


def truncate_psf_to_noise_floor(full: Psf, noise_variance: float, margin: float = 1.0) -> Psf:
    """Alternative truncation: grow until every excluded cell's power is at
    most margin * noise_variance (same units as the kernel cells). Useful
    for measured kernels whose faint tails sit below the noise anyway."""
    if noise_variance < 0.0 or margin <= 0.0:
        raise ValidationError("noise_variance must be >= 0 and margin > 0")
    power = np.abs(full.cells) ** 2
    total = float(power.sum())
    if total <= 0.0:
        raise ValidationError("cannot truncate a zero-energy kernel")
    threshold = margin * noise_variance

    def stop(_retained, halfwidths):
        idx = [
            _window_indices(d, c, h)
            for d, c, h in zip(power.shape, full.center_offset, halfwidths)
        ]
        mask = np.ones(power.shape, dtype=bool)
        mask[np.ix_(*idx)] = False
        return not np.any(power[mask] > threshold)

    halfwidths, retained = _grow_greedy(power, full.center_offset, stop)
    return _extract_window(full, halfwidths, retained, total)


def measure_psf(
    frames,
    cfg: RadarConfig,
    energy_fraction: float = 0.99,
    coherent: bool = True,
) -> Psf:
    """Estimate the kernel from repeated tensors of a lone stationary target.

    Frames are averaged (complex by default, magnitude with
    coherent=False for phase-incoherent recordings), the global magnitude
    peak located, a centered window extracted at the requested energy
    fraction, and the result normalized to unit peak magnitude.

    Raises CalibrationError when no distinct peak exists (peak-to-median
    magnitude ratio below 10).
    """
    frames = list(frames)
    if not frames:
        raise ValidationError("measure_psf needs at least one frame")
    for f in frames:
        if f.kind is not TensorKind.FILTERED:
            raise ValidationError("measure_psf expects Filtered tensors")
        if not f.matches(cfg):
            raise ValidationError(f"frame dims {f.dims} do not match config dims {cfg.dims}")
    stack = np.stack([f.cells for f in frames])
    if coherent:
        averaged = stack.mean(axis=0)
    else:
        averaged = np.abs(stack).mean(axis=0).astype(np.complex128)
    magnitude = np.abs(averaged)
    peak_idx = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
    peak = float(magnitude[peak_idx])
    median = float(np.median(magnitude))
    if peak <= 0.0 or (median > 0.0 and peak / median < PEAK_TO_MEDIAN_MIN):
        raise CalibrationError(
            f"no distinct calibration peak (peak/median = {peak / median if median else 0.0:.2f})"
        )
    center = tuple(d // 2 for d in cfg.dims)
    shift = tuple(c - p for c, p in zip(center, peak_idx))
    centered = np.roll(averaged, shift, axis=(0, 1, 2))
    full = Psf(centered, center, 1.0, SOURCE_MEASURED)
    trunc = truncate_psf(full, energy_fraction)
    return Psf(
        trunc.cells / peak,
        trunc.center_offset,
        trunc.retained_energy_fraction,
        SOURCE_MEASURED,
    )


def kernel_gain_for(cfg: RadarConfig, psf: Psf, window: str = "rect") -> complex:
    """Scale factor aligning a peak-normalized measured kernel with the
    absolute filter gain of this config, matched on a single unit point."""
    reference = analytic_psf(cfg, window)
    ref_peak = reference.cells[reference.center_offset]
    return complex(ref_peak / psf.cells[psf.center_offset])


def estimate_noise_variance(frame: RadarTensor, region=None) -> float:
    """Mean |cell|^2 over an object-free region of a filtered tensor.

    `region` is three (start, stop) index ranges, interpreted modulo the
    grid (start may exceed stop to wrap). With region=None the
    lowest-energy quarter of the tensor is selected automatically at the
    granularity of coarse blocks, so a sparse scene's response cells are
    excluded without the downward bias that per-cell selection would
    introduce.
    """
    if frame.kind is not TensorKind.FILTERED:
        raise ValidationError("estimate_noise_variance expects a Filtered tensor")
    power = np.abs(frame.cells) ** 2
    if region is None or region == "auto":
        return _auto_region_variance(power)
    if len(region) != 3:
        raise ValidationError("region must give one (start, stop) pair per dimension")
    idx = []
    for (start, stop), dim in zip(region, frame.dims):
        start, stop = int(start), int(stop)
        if stop == start:
            raise ValidationError(f"empty region range ({start}, {stop})")
        width = stop - start if stop > start else stop - start + dim
        if width <= 0 or width > dim:
            raise ValidationError(f"empty or oversized region range ({start}, {stop})")
        idx.append(np.arange(start, start + width) % dim)
    selected = power[np.ix_(*idx)]
    return float(selected.mean())


def _auto_region_variance(power: np.ndarray) -> float:
    splits = [min(4, d) for d in power.shape]
    blocks = []
    for i0 in range(splits[0]):
        for i1 in range(splits[1]):
            for i2 in range(splits[2]):
                sl = tuple(
                    slice(i * d // s, (i + 1) * d // s)
                    for i, d, s in zip((i0, i1, i2), power.shape, splits)
                )
                block = power[sl]
                if block.size:
                    blocks.append(block.reshape(-1))
    blocks.sort(key=lambda b: float(b.mean()))
    n_keep = max(1, -(-len(blocks) // 4))  # ceil of one quarter
    kept = np.concatenate(blocks[:n_keep])
    return float(kept.mean())


def main_lobe_width_bins(n: int, window: str = "rect", db_down: float = 3.0) -> float:
    """Two-sided width, in bins, where the per-dimension tapered response
    first falls db_down below its peak (evaluated on a fine offset grid)."""
    taper = dimension_window(n, window)
    samples = np.arange(n)
    offsets = np.linspace(0.0, n / 2.0, n * 64, endpoint=False)
    response = np.abs(np.exp(-2j * np.pi * np.outer(offsets, samples) / n) @ taper)
    level = response[0] * 10.0 ** (-db_down / 20.0)
    below = np.nonzero(response < level)[0]
    if below.size == 0:
        return float(n)
    return 2.0 * float(offsets[below[0]])


def save_calibration(bundle: CalibrationBundle, path) -> None:
    """Binary layout: magic "RSRCAL1", little-endian u32 window dims triple,
    u32 center offset triple, f64 noise variance, f64 retained energy
    fraction, then interleaved f32 (re, im) cells in row-major order."""
    psf = bundle.psf
    header = CALIBRATION_MAGIC + struct.pack(
        "<3I3Idd",
        *psf.window_dims,
        *psf.center_offset,
        bundle.noise_variance,
        psf.retained_energy_fraction,
    )
    flat = np.empty(psf.cells.size * 2, dtype="<f4")
    flat[0::2] = psf.cells.real.reshape(-1)
    flat[1::2] = psf.cells.imag.reshape(-1)
    Path(path).write_bytes(header + flat.tobytes())


def load_calibration(path) -> CalibrationBundle:
    blob = Path(path).read_bytes()
    if not blob.startswith(CALIBRATION_MAGIC):
        raise FileFormatError(f"{path} is not a calibration bundle")
    head = struct.Struct("<3I3Idd")
    try:
        fields = head.unpack_from(blob, len(CALIBRATION_MAGIC))
    except struct.error as exc:
        raise FileFormatError(f"{path} is truncated") from exc
    dims = fields[0:3]
    center = fields[3:6]
    noise_variance, fraction = fields[6], fields[7]
    n = dims[0] * dims[1] * dims[2]
    body = blob[len(CALIBRATION_MAGIC) + head.size :]
    if len(body) != n * 8:
        raise FileFormatError(f"{path} cell payload has {len(body)} bytes, expected {n * 8}")
    flat = np.frombuffer(body, dtype="<f4")
    cells = (flat[0::2] + 1j * flat[1::2]).astype(np.complex128).reshape(dims)
    psf = Psf(cells, tuple(int(c) for c in center), float(fraction), SOURCE_MEASURED)
    return CalibrationBundle(psf, float(noise_variance), frames_averaged=1)
