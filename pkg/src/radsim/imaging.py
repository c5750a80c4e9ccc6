"""Tensor-to-image conversion, rendering, and the tensor/image/annotation
file formats.

Images are real, linear-magnitude arrays of shape (n_range, n_azimuth)
obtained by taking the maximum magnitude along the Doppler axis. Azimuth
columns follow raw tensor bin order; center_azimuth re-orders them so
boresight sits in the middle for display and annotation overlay.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    FileFormatError,
    RadarConfig,
    RadarTensor,
    TensorKind,
    ValidationError,
)
from .scene import AnnotatedScene

TENSOR_MAGIC = b"RSRTEN1"


def tensor_to_image(t: RadarTensor) -> np.ndarray:
    """Collapse Doppler by maximum magnitude: image[r, a] = max_d |t[r, d, a]|.

    np.max scans Doppler in index order, so equal maxima resolve to the
    lower Doppler index deterministically.
    """
    if t.kind is not TensorKind.FILTERED:
        raise ValidationError("tensor_to_image expects a Filtered tensor")
    return np.max(np.abs(t.cells), axis=1)


def to_decibels(img: np.ndarray, floor_db: float) -> np.ndarray:
    """20*log10 of the linear image, floored at floor_db."""
    eps = 10.0 ** (floor_db / 20.0)
    return 20.0 * np.log10(np.maximum(img, eps))


def center_azimuth(img: np.ndarray) -> np.ndarray:
    """Reorder azimuth columns so boresight (bin 0) is the middle column;
    column index becomes signed azimuth bin + n_azimuth//2."""
    return np.roll(img, img.shape[1] // 2, axis=1)


def polar_to_cartesian(img: np.ndarray, cfg: RadarConfig, pixel_m: float) -> np.ndarray:
    """Nearest-neighbor resample of a (range, azimuth-bin) image onto an
    x-y grid of pixel_m resolution.

    Output rows are y (boresight distance, radar at row 0), columns are x
    (cross-range, centered). Pixels outside the field of view or beyond
    the unambiguous range are zero.
    """
    if pixel_m <= 0.0:
        raise ValidationError("pixel_m must be > 0")
    if img.shape != (cfg.n_range, cfg.n_azimuth):
        raise ValidationError(f"image shape {img.shape} does not match config {cfg.dims}")
    r_max = cfg.unambiguous_range
    half = int(math.floor(r_max / pixel_m))
    x = (np.arange(2 * half + 1) - half) * pixel_m
    y = np.arange(half + 1) * pixel_m
    xx, yy = np.meshgrid(x, y)
    rr = np.hypot(xx, yy)
    theta = np.arctan2(xx, yy)  # x = R sin(theta), y = R cos(theta)
    r_bin = np.rint(rr / cfg.range_resolution).astype(int)
    a_bin = np.rint(0.5 * cfg.n_azimuth * np.sin(theta)).astype(int) % cfg.n_azimuth
    valid = (r_bin >= 0) & (r_bin < cfg.n_range) & (np.abs(theta) < math.pi / 2)
    out = np.zeros(xx.shape, dtype=img.dtype)
    out[valid] = img[r_bin[valid], a_bin[valid]]
    return out


def save_tensor(t: RadarTensor, path) -> None:
    """Binary layout: magic "RSRTEN1", little-endian u32 dims triple, one
    kind byte, then interleaved f32 (re, im) cells in row-major order."""
    header = TENSOR_MAGIC + struct.pack("<3IB", *t.dims, int(t.kind))
    flat = np.empty(t.n_cells * 2, dtype="<f4")
    flat[0::2] = t.cells.real.reshape(-1)
    flat[1::2] = t.cells.imag.reshape(-1)
    Path(path).write_bytes(header + flat.tobytes())


def load_tensor(path) -> RadarTensor:
    blob = Path(path).read_bytes()
    if not blob.startswith(TENSOR_MAGIC):
        raise FileFormatError(f"{path} is not a radar tensor file")
    head = struct.Struct("<3IB")
    try:
        n_r, n_d, n_a, kind = head.unpack_from(blob, len(TENSOR_MAGIC))
    except struct.error as exc:
        raise FileFormatError(f"{path} is truncated") from exc
    try:
        kind = TensorKind(kind)
    except ValueError as exc:
        raise FileFormatError(f"{path} has unknown tensor kind {kind}") from exc
    n = n_r * n_d * n_a
    body = blob[len(TENSOR_MAGIC) + head.size :]
    if len(body) != n * 8:
        raise FileFormatError(f"{path} cell payload has {len(body)} bytes, expected {n * 8}")
    flat = np.frombuffer(body, dtype="<f4")
    cells = (flat[0::2] + 1j * flat[1::2]).astype(np.complex128).reshape((n_r, n_d, n_a))
    return RadarTensor(cells, kind)


def save_image_png(img_db: np.ndarray, path, floor_db: float, notes: dict | None = None) -> float:
    """Write a 16-bit grayscale PNG of a dB image plus a text sidecar.

    Values are affine-mapped floor_db..peak_db onto 0..65535; the sidecar
    (path + ".meta") records the mapping so pixel codes convert back to
    dB. Returns the peak dB used.
    """
    peak_db = float(np.max(img_db)) if img_db.size else floor_db
    span = peak_db - floor_db
    if span <= 0.0:
        span = 1.0
    codes = np.clip((img_db - floor_db) / span, 0.0, 1.0) * 65535.0
    arr = np.rint(codes).astype(np.uint16)
    Image.fromarray(arr).save(str(path), format="PNG")
    lines = [
        f"png: {Path(path).name}",
        f"floor_db: {floor_db!r}",
        f"peak_db: {peak_db!r}",
        "mapping: value_db = floor_db + code * (peak_db - floor_db) / 65535",
    ]
    for key, value in (notes or {}).items():
        lines.append(f"{key}: {value}")
    Path(str(path) + ".meta").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return peak_db


def save_annotations(scene: AnnotatedScene, cfg: RadarConfig, path) -> None:
    """Per-frame JSON document: object class and box in bins and in
    physical units. Azimuth bin bounds are signed (clipped to the
    physical field of view when converting to radians)."""

    def az_rad(a_bin: int) -> float:
        return math.asin(max(-1.0, min(1.0, 2.0 * a_bin / cfg.n_azimuth)))

    doc = {
        "seed": scene.seed,
        "n_objects": len(scene.objects),
        "objects": [
            {
                "class": obj.class_label,
                "box_bins": {"r0": box.r0, "r1": box.r1, "a0": box.a0, "a1": box.a1},
                "box_physical": {
                    "range_min_m": box.r0 * cfg.range_resolution,
                    "range_max_m": box.r1 * cfg.range_resolution,
                    "azimuth_min_rad": az_rad(box.a0),
                    "azimuth_max_rad": az_rad(box.a1),
                },
            }
            for obj, box in zip(scene.objects, scene.boxes)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def load_annotations(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "objects" not in doc or "seed" not in doc:
        raise FileFormatError(f"{path} is not an annotation document")
    return doc
