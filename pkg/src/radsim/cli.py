"""Command-line front end: simulate, calibrate, bench, render, equivalence.

Config precedence is CLI flags over config file over preset defaults; the
RADSIM_SEED environment variable overrides the config seed but not an
explicit --seed flag. All writes go through a temp-file rename so no
partially written frame artifact is ever left behind.
"""

from __future__ import annotations

import argparse
import glob
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .conventional import WINDOW_KINDS, simulate_conventional
from .core import (
    PRESET_NAMES,
    RadarConfig,
    RadsimError,
    ValidationError,
    load_config,
    make_preset,
)
from .fastsim import PLACEMENTS, equivalence_report, relative_frobenius, simulate_fast
from .imaging import (
    center_azimuth,
    load_tensor,
    polar_to_cartesian,
    save_annotations,
    save_image_png,
    save_tensor,
    tensor_to_image,
    to_decibels,
)
from .psf import (
    CalibrationBundle,
    Psf,
    analytic_psf,
    estimate_noise_variance,
    kernel_gain_for,
    load_calibration,
    measure_psf,
    save_calibration,
    truncate_psf,
)
from .scene import SceneSpec, assign_amplitudes, generate_scene, save_scene

DEFAULT_FLOOR_DB = -120.0


def _atomic_write(path: Path, writer) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _resolve_config(args) -> RadarConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        cfg = make_preset(args.preset)
    else:
        raise ValidationError("one of --preset or --config is required")
    seed = getattr(args, "seed", None)
    if seed is None:
        env = os.environ.get("RADSIM_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ValidationError(f"RADSIM_SEED must be an integer, got {env!r}")
    if seed is not None:
        cfg = replace(cfg, rng_seed=seed)
    return cfg


def _scene_spec(args, cfg: RadarConfig, seed: int) -> SceneSpec:
    if args.scene:
        doc = json.loads(Path(args.scene).read_text(encoding="utf-8"))
        spec = SceneSpec(
            n_cars=int(doc.get("n_cars", 0)),
            n_poles=int(doc.get("n_poles", 0)),
            clutter_density=float(doc.get("clutter_density", 0.0)),
            range_span=tuple(doc.get("range_span", _default_range_span(cfg))),
            velocity_span=tuple(doc.get("velocity_span", _default_velocity_span(cfg))),
            seed=int(doc.get("seed", seed)),
        )
    else:
        spec = SceneSpec(
            n_cars=args.cars,
            n_poles=args.poles,
            clutter_density=args.clutter,
            range_span=tuple(args.range_span) if args.range_span else _default_range_span(cfg),
            velocity_span=(
                tuple(args.velocity_span) if args.velocity_span else _default_velocity_span(cfg)
            ),
            seed=seed,
        )
    spec.validate(cfg)
    return spec


def _default_range_span(cfg: RadarConfig) -> tuple[float, float]:
    return (0.12 * cfg.unambiguous_range, 0.88 * cfg.unambiguous_range)


def _default_velocity_span(cfg: RadarConfig) -> tuple[float, float]:
    v = 0.5 * cfg.max_radial_velocity
    return (-v, v)


def _fast_kernel(args, cfg: RadarConfig) -> tuple[Psf, RadarConfig]:
    """Kernel for the fast pipeline: measured bundle if given, else the
    analytic kernel truncated to the requested energy fraction."""
    if getattr(args, "psf", None):
        bundle = load_calibration(args.psf)
        gain = kernel_gain_for(cfg, bundle.psf, args.window)
        psf = Psf(
            bundle.psf.cells * gain,
            bundle.psf.center_offset,
            bundle.psf.retained_energy_fraction,
            bundle.psf.source,
        )
        cfg = replace(cfg, noise_variance=bundle.noise_variance * abs(gain) ** 2)
        return psf, cfg
    full = analytic_psf(cfg, args.window)
    if args.energy < 1.0:
        return truncate_psf(full, args.energy), cfg
    return full, cfg


def _write_frame_outputs(out_dir: Path, tag: str, tensor) -> None:
    _atomic_write(out_dir / f"{tag}.rsrten", lambda p: save_tensor(tensor, p))
    img_db = to_decibels(center_azimuth(tensor_to_image(tensor)), DEFAULT_FLOOR_DB)
    notes = {"azimuth_order": "centered (column = signed azimuth bin + n_azimuth//2)"}

    def write_png(p: Path):
        save_image_png(img_db, p, DEFAULT_FLOOR_DB, notes)
        os.replace(str(p) + ".meta", str(out_dir / f"{tag}.png.meta"))

    _atomic_write(out_dir / f"{tag}.png", write_png)


def cmd_simulate(args) -> int:
    if args.frames < 1:
        raise ValidationError("--frames must be >= 1")
    cfg = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = cfg.rng_seed
    psf = None
    if args.pipeline in ("fast", "both"):
        psf, cfg = _fast_kernel(args, cfg)

    for i in range(args.frames):
        frame_seed = base_seed + i
        frame_cfg = replace(cfg, rng_seed=frame_seed)
        spec = _scene_spec(args, frame_cfg, frame_seed)
        scene = assign_amplitudes(generate_scene(spec, frame_cfg), frame_cfg)
        points = scene.all_points()
        prefix = f"frame_{i:04d}"

        # compute the whole frame before writing anything, so a failure
        # never leaves a partially emitted frame behind
        tensors = {}
        if args.pipeline in ("conventional", "both"):
            tensors["conventional"] = simulate_conventional(
                points, frame_cfg, args.noise, args.window
            )
        if args.pipeline in ("fast", "both"):
            tensors["fast"] = simulate_fast(points, psf, frame_cfg, args.noise, args.placement)
        report = None
        if args.pipeline == "both":
            report = equivalence_report(points, frame_cfg, args.energy, args.window)

        _atomic_write(out_dir / f"{prefix}_scene.json", lambda p: save_scene(scene, p))
        _atomic_write(
            out_dir / f"{prefix}_annotations.json",
            lambda p: save_annotations(scene, frame_cfg, p),
        )
        for tag, tensor in tensors.items():
            _write_frame_outputs(out_dir, f"{prefix}_{tag}", tensor)
        if report is not None:
            _atomic_write(
                out_dir / f"{prefix}_equivalence.json",
                lambda p: p.write_text(
                    json.dumps(report.as_dict(), indent=2, sort_keys=True), encoding="utf-8"
                ),
            )
    print(f"wrote {args.frames} frame(s) to {out_dir}")
    return 0


def cmd_calibrate(args) -> int:
    paths = sorted(glob.glob(args.frames))
    if not paths:
        raise ValidationError(f"no tensor files match {args.frames!r}")
    frames = [load_tensor(p) for p in paths]
    dims = frames[0].dims
    cfg = _resolve_config(args) if (args.preset or args.config) else None
    if cfg is not None and cfg.dims != dims:
        raise ValidationError(f"config dims {cfg.dims} do not match frames {dims}")
    if cfg is None:
        # only grid geometry matters for measurement; other values are inert
        cfg = RadarConfig(*dims, 1.0, 1.0, 1.0, 0.0, 0)
    psf = measure_psf(frames, cfg, args.energy, coherent=not args.magnitude_average)

    # noise taken from each frame separately over a box on the far side of
    # the grid from the calibration target
    avg = np.mean([f.cells for f in frames], axis=0)
    peak = np.unravel_index(int(np.argmax(np.abs(avg))), dims)
    region = []
    for c, d in zip(peak, dims):
        width = max(d // 3, 1)
        start = (c + d // 2 - width // 2) % d
        region.append((start, start + width))
    noise = float(np.mean([estimate_noise_variance(f, region) for f in frames]))

    bundle = CalibrationBundle(psf, noise, frames_averaged=len(frames))
    _atomic_write(Path(args.out), lambda p: save_calibration(bundle, p))

    # level of the discarded tail relative to the kernel peak, for the record
    mask = np.ones(dims, dtype=bool)
    idx = [
        (np.arange(c - w // 2, c - w // 2 + w)) % d
        for c, w, d in zip(peak, psf.window_dims, dims)
    ]
    mask[np.ix_(*idx)] = False
    peak_mag = float(np.abs(avg[peak]))
    tail = float(np.max(np.abs(avg[mask]))) if mask.any() else 0.0
    tail_db = 20.0 * math.log10(tail / peak_mag) if tail > 0 else -math.inf
    print(
        f"kernel window {psf.window_dims}, retained energy "
        f"{psf.retained_energy_fraction:.6f}, truncated tail {tail_db:.1f} dB "
        f"below peak, noise variance {noise:.6g}, "
        f"{len(frames)} frame(s) -> {args.out}"
    )
    return 0


def cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    report = bench_mod.run_benchmark(
        cfg,
        n_points=args.points,
        repetitions=args.reps,
        energy_fraction=args.energy,
        window=args.window,
        seed=args.seed,
    )
    print(
        f"tensor cells {report.n_s}, kernel cells {report.n_f}, points {report.n_p}\n"
        f"theoretical ratio {report.theoretical_ratio:.1f}\n"
        f"conventional median {report.measured_conventional_s:.4f} s, "
        f"fast median {report.measured_fast_s:.6f} s, "
        f"measured ratio {report.measured_ratio:.1f}"
    )
    if args.out:
        _atomic_write(
            Path(args.out),
            lambda p: p.write_text(
                json.dumps(report.as_dict(), indent=2, sort_keys=True), encoding="utf-8"
            ),
        )
    return 0


def cmd_render(args) -> int:
    tensor = load_tensor(args.tensor)
    img = tensor_to_image(tensor)
    out = Path(args.out)
    notes = {"azimuth_order": "centered (column = signed azimuth bin + n_azimuth//2)"}
    img_db = to_decibels(center_azimuth(img), args.floor_db)

    def write_png(p: Path):
        save_image_png(img_db, p, args.floor_db, notes)
        os.replace(str(p) + ".meta", str(out) + ".meta")

    _atomic_write(out, write_png)
    if args.cartesian is not None:
        cfg = _resolve_config(args)
        if (cfg.n_range, cfg.n_azimuth) != img.shape:
            raise ValidationError("config dims do not match the tensor image")
        cart = to_decibels(polar_to_cartesian(img, cfg, args.cartesian), args.floor_db)
        cart_path = out.with_name(out.stem + "_cartesian" + out.suffix)

        def write_cart(p: Path):
            save_image_png(cart[::-1], p, args.floor_db, {"orientation": "radar at bottom row"})
            os.replace(str(p) + ".meta", str(cart_path) + ".meta")

        _atomic_write(cart_path, write_cart)
    print(f"rendered {args.tensor} -> {out}")
    return 0


def cmd_equivalence(args) -> int:
    a = load_tensor(args.tensor_a)
    b = load_tensor(args.tensor_b)
    if a.dims != b.dims:
        raise ValidationError(f"tensor dims differ: {a.dims} vs {b.dims}")
    deviation = np.abs(a.cells - b.cells)
    report = {
        "relative_frobenius": relative_frobenius(a.cells, b.cells),
        "max_abs_deviation": float(deviation.max()) if deviation.size else 0.0,
        "norm_a": float(np.linalg.norm(a.cells)),
        "norm_b": float(np.linalg.norm(b.cells)),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _atomic_write(Path(args.out), lambda p: p.write_text(text, encoding="utf-8"))
    return 0


def _add_config_args(parser):
    group = parser.add_argument_group("radar configuration")
    group.add_argument("--preset", choices=PRESET_NAMES, help="named radar preset")
    group.add_argument("--config", help="radar config YAML file")
    group.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate frames: tensors, images, annotations")
    _add_config_args(p)
    p.add_argument("--pipeline", choices=("fast", "conventional", "both"), default="fast")
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scene", help="scene spec JSON file")
    p.add_argument("--cars", type=int, default=2)
    p.add_argument("--poles", type=int, default=2)
    p.add_argument("--clutter", type=float, default=8.0)
    p.add_argument("--range-span", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--velocity-span", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--window", choices=WINDOW_KINDS, default="rect")
    p.add_argument("--energy", type=float, default=0.99, help="kernel energy fraction")
    p.add_argument("--placement", choices=PLACEMENTS, default="nearest")
    p.add_argument("--psf", help="calibration bundle for the fast pipeline")
    p.add_argument("--noise", dest="noise", action="store_true", default=True)
    p.add_argument("--no-noise", dest="noise", action="store_false")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="measure kernel and noise from tensor files")
    _add_config_args(p)
    p.add_argument("--frames", required=True, help="glob of tensor files of a lone target")
    p.add_argument("--energy", type=float, default=0.99)
    p.add_argument("--magnitude-average", action="store_true", help="phase-incoherent averaging")
    p.add_argument("--out", required=True, help="calibration bundle path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bench", help="compare pipeline run times")
    _add_config_args(p)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--energy", type=float, default=0.99)
    p.add_argument("--window", choices=WINDOW_KINDS, default="gauss")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="tensor file to 16-bit PNG")
    _add_config_args(p)
    p.add_argument("--tensor", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--floor-db", type=float, default=DEFAULT_FLOOR_DB)
    p.add_argument(
        "--cartesian",
        type=float,
        default=None,
        metavar="PIXEL_M",
        help="also write a cartesian resampling at this pixel size (needs --preset/--config)",
    )
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("equivalence", help="relative distance between two tensor files")
    p.add_argument("tensor_a")
    p.add_argument("tensor_b")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_equivalence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RadsimError as exc:
        print(f"radsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
