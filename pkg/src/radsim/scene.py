"""Parametric annotated scenes: objects, scatterers, and bin-space boxes.

A scene is a set of non-overlapping objects in range-azimuth, each carrying
reflection points and a 2D bounding box in (range bin, signed azimuth bin)
coordinates. Amplitudes follow the radar equation: object power set by a
per-class radar cross section prior with inverse-fourth-power range
falloff, split evenly over the object's scatterers, with uniform random
phase per point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import (
    RadarConfig,
    ReflectionPoint,
    SceneInfeasibleError,
    ValidationError,
    map_point_to_grid,
    signed_bin,
)

CLASS_LABELS = ("car", "pole", "clutter")

# RCS priors in dBsm and their per-object jitter; material and orientation
# effects are collapsed into these class-level distributions
CLASS_RCS_DBSM = {"car": 10.0, "pole": 0.0, "clutter": -10.0}
CLASS_RCS_JITTER_DB = {"car": 2.0, "pole": 1.0, "clutter": 3.0}

REFERENCE_RANGE_M = 25.0

# objects are placed within this azimuth cone
AZIMUTH_FOV_RAD = math.radians(70.0)

_MAX_PLACEMENT_TRIES = 200


@dataclass(frozen=True)
class SceneSpec:
    """Generation parameters for one scene."""

    n_cars: int = 0
    n_poles: int = 0
    clutter_density: float = 0.0  # expected clutter point count (Poisson mean)
    range_span: tuple[float, float] = (4.0, 28.0)  # meters
    velocity_span: tuple[float, float] = (-5.0, 5.0)  # m/s, cars only
    seed: int = 0

    def validate(self, cfg: RadarConfig) -> None:
        lo, hi = self.range_span
        if not 0.0 < lo < hi < cfg.unambiguous_range:
            raise ValidationError(
                f"range_span {self.range_span} outside (0, {cfg.unambiguous_range})"
            )
        v_lo, v_hi = self.velocity_span
        v_max = cfg.max_radial_velocity
        if not -v_max < v_lo <= v_hi < v_max:
            raise ValidationError(
                f"velocity_span {self.velocity_span} outside (-{v_max}, {v_max})"
            )
        if self.n_cars < 0 or self.n_poles < 0 or self.clutter_density < 0:
            raise ValidationError("object counts and clutter_density must be >= 0")


@dataclass(frozen=True)
class SceneObject:
    """One scene object and its sampled scatterers."""

    class_label: str
    center: tuple[float, float]  # (range_m, azimuth_rad)
    extent: tuple[float, float]  # (depth_m, cross_m)
    radial_velocity_mps: float
    rcs_dbsm: float
    points: tuple[ReflectionPoint, ...]


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive bin bounds; azimuth bins are signed (negative left of
    boresight), convertible to raw tensor bins modulo n_azimuth."""

    r0: int
    r1: int
    a0: int
    a1: int

    def contains(self, r_bin: int, a_bin_signed: int) -> bool:
        return self.r0 <= r_bin <= self.r1 and self.a0 <= a_bin_signed <= self.a1


@dataclass(frozen=True)
class AnnotatedScene:
    objects: tuple[SceneObject, ...]
    boxes: tuple[BoundingBox, ...]
    seed: int

    def all_points(self) -> list[ReflectionPoint]:
        return [p for obj in self.objects for p in obj.points]


def object_cells(obj: SceneObject, cfg: RadarConfig) -> list[tuple[int, int]]:
    """Nearest (range bin, signed azimuth bin) cells of an object's points."""
    cells = []
    for p in obj.points:
        g = map_point_to_grid(p, cfg)
        r_bin = int(round(g.k_range)) % cfg.n_range
        a_bin = int(round(signed_bin(g.k_azimuth, cfg.n_azimuth)))
        cells.append((r_bin, a_bin))
    return cells


def _box_for(obj: SceneObject, cfg: RadarConfig) -> BoundingBox:
    cells = object_cells(obj, cfg)
    r_bins = [c[0] for c in cells]
    a_bins = [c[1] for c in cells]
    return BoundingBox(
        r0=min(r_bins) - 1,
        r1=max(r_bins) + 1,
        a0=min(a_bins) - 1,
        a1=max(a_bins) + 1,
    )


def _footprint(center, extent, pad: float = 0.5):
    """(range, azimuth) interval footprint used for the overlap test."""
    r, az = center
    depth, cross = extent
    half_az = math.atan2(cross / 2.0 + pad, max(r, 1e-6))
    return (r - depth / 2.0 - pad, r + depth / 2.0 + pad, az - half_az, az + half_az)


def _overlaps(f1, f2) -> bool:
    return f1[0] <= f2[1] and f2[0] <= f1[1] and f1[2] <= f2[3] and f2[2] <= f1[3]


def _sample_car_points(rng, center, extent, velocity):
    """Scatterers along the radar-facing edge, with small inward jitter."""
    r, az = center
    depth, cross = extent
    n_pts = int(rng.integers(5, 10))
    edge_range = r - depth / 2.0
    lateral = np.linspace(-cross / 2.0, cross / 2.0, n_pts)
    lateral = np.clip(lateral + rng.uniform(-0.05, 0.05, n_pts) * cross, -cross / 2.0, cross / 2.0)
    points = []
    for lat in lateral:
        pr = edge_range + float(rng.uniform(0.0, 0.15 * depth))
        paz = az + math.atan2(float(lat), pr)
        points.append(ReflectionPoint(pr, velocity, paz, 1.0 + 0.0j))
    return points


def generate_scene(spec: SceneSpec, cfg: RadarConfig) -> AnnotatedScene:
    """Seeded, reproducible scene with non-overlapping object footprints.

    Cars get several scatterers on their radar-facing edge, poles exactly
    one, clutter a Poisson-distributed number of isolated points.
    Amplitudes are placeholders (1+0j) until assign_amplitudes runs.

    Raises SceneInfeasibleError when objects cannot be placed without
    overlap within a bounded number of retries.
    """
    spec.validate(cfg)
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.range_span
    objects: list[SceneObject] = []
    footprints = []

    def place(class_label: str, extent, velocity: float):
        for _ in range(_MAX_PLACEMENT_TRIES):
            depth = extent[0]
            r = float(rng.uniform(lo + depth / 2.0 + 0.3, hi - depth / 2.0 - 0.3))
            az = float(rng.uniform(-AZIMUTH_FOV_RAD, AZIMUTH_FOV_RAD))
            fp = _footprint((r, az), extent)
            if any(_overlaps(fp, other) for other in footprints):
                continue
            footprints.append(fp)
            return (r, az)
        raise SceneInfeasibleError(
            f"could not place {class_label} after {_MAX_PLACEMENT_TRIES} tries"
        )

    def points_in_domain(points) -> bool:
        return all(
            0.0 < p.range_m < cfg.unambiguous_range
            and -math.pi / 2 < p.azimuth_rad < math.pi / 2
            for p in points
        )

    for _ in range(spec.n_cars):
        extent = (float(rng.uniform(3.8, 5.0)), float(rng.uniform(1.6, 2.0)))
        velocity = float(rng.uniform(*spec.velocity_span))
        for _ in range(_MAX_PLACEMENT_TRIES):
            center = place("car", extent, velocity)
            points = _sample_car_points(rng, center, extent, velocity)
            if points_in_domain(points):
                break
            # edge scatterers of a wide car can leave the field of view at
            # very short range; drop the footprint and try again
            footprints.pop()
        else:
            raise SceneInfeasibleError("could not place a car with all points in view")
        rcs = CLASS_RCS_DBSM["car"] + float(rng.normal(0.0, CLASS_RCS_JITTER_DB["car"]))
        objects.append(SceneObject("car", center, extent, velocity, rcs, tuple(points)))

    for _ in range(spec.n_poles):
        extent = (0.2, 0.2)
        center = place("pole", extent, 0.0)
        rcs = CLASS_RCS_DBSM["pole"] + float(rng.normal(0.0, CLASS_RCS_JITTER_DB["pole"]))
        point = ReflectionPoint(center[0], 0.0, center[1], 1.0 + 0.0j)
        objects.append(SceneObject("pole", center, extent, 0.0, rcs, (point,)))

    n_clutter = int(rng.poisson(spec.clutter_density)) if spec.clutter_density > 0 else 0
    for _ in range(n_clutter):
        extent = (0.3, 0.3)
        center = place("clutter", extent, 0.0)
        rcs = CLASS_RCS_DBSM["clutter"] + float(
            rng.normal(0.0, CLASS_RCS_JITTER_DB["clutter"])
        )
        point = ReflectionPoint(center[0], 0.0, center[1], 1.0 + 0.0j)
        objects.append(SceneObject("clutter", center, extent, 0.0, rcs, (point,)))

    boxes = tuple(_box_for(obj, cfg) for obj in objects)
    return AnnotatedScene(tuple(objects), boxes, spec.seed)


def assign_amplitudes(
    scene: AnnotatedScene, cfg: RadarConfig, reference_range_m: float = REFERENCE_RANGE_M
) -> AnnotatedScene:
    """Set each point's complex amplitude from its object's RCS and range.

    Per point, |amplitude| = sqrt(10^(rcs_dbsm/10) / n_points) *
    (reference_range / object_range)^2, which encodes the inverse-fourth-
    power received-power falloff as inverse-square amplitude falloff and
    keeps total object power independent of scatterer count. Phases are
    uniform random, seeded from the scene seed.
    """
    rng = np.random.default_rng([scene.seed, 0x5EED])
    new_objects = []
    for obj in scene.objects:
        obj_range = obj.center[0]
        if obj_range <= 0.0:
            raise ValidationError("object range must be > 0 to assign amplitudes")
        magnitude = math.sqrt(10.0 ** (obj.rcs_dbsm / 10.0) / len(obj.points))
        magnitude *= (reference_range_m / obj_range) ** 2
        new_points = []
        for p in obj.points:
            phase = float(rng.uniform(0.0, 2.0 * math.pi))
            amp = magnitude * complex(math.cos(phase), math.sin(phase))
            new_points.append(replace(p, amplitude=amp))
        new_objects.append(replace(obj, points=tuple(new_points)))
    return AnnotatedScene(tuple(new_objects), scene.boxes, scene.seed)


def save_scene(scene: AnnotatedScene, path) -> None:
    """Human-readable JSON document listing objects, points, boxes, seed."""
    doc = {
        "seed": scene.seed,
        "objects": [
            {
                "class": obj.class_label,
                "center_range_m": obj.center[0],
                "center_azimuth_rad": obj.center[1],
                "depth_m": obj.extent[0],
                "cross_m": obj.extent[1],
                "radial_velocity_mps": obj.radial_velocity_mps,
                "rcs_dbsm": obj.rcs_dbsm,
                "points": [
                    {
                        "range_m": p.range_m,
                        "radial_velocity_mps": p.radial_velocity_mps,
                        "azimuth_rad": p.azimuth_rad,
                        "amplitude_re": complex(p.amplitude).real,
                        "amplitude_im": complex(p.amplitude).imag,
                    }
                    for p in obj.points
                ],
                "box_bins": {"r0": box.r0, "r1": box.r1, "a0": box.a0, "a1": box.a1},
            }
            for obj, box in zip(scene.objects, scene.boxes)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def load_scene(path) -> AnnotatedScene:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    objects = []
    boxes = []
    for entry in doc["objects"]:
        points = tuple(
            ReflectionPoint(
                q["range_m"],
                q["radial_velocity_mps"],
                q["azimuth_rad"],
                complex(q["amplitude_re"], q["amplitude_im"]),
            )
            for q in entry["points"]
        )
        objects.append(
            SceneObject(
                entry["class"],
                (entry["center_range_m"], entry["center_azimuth_rad"]),
                (entry["depth_m"], entry["cross_m"]),
                entry["radial_velocity_mps"],
                entry["rcs_dbsm"],
                points,
            )
        )
        bb = entry["box_bins"]
        boxes.append(BoundingBox(bb["r0"], bb["r1"], bb["a0"], bb["a1"]))
    return AnnotatedScene(tuple(objects), tuple(boxes), doc["seed"])
