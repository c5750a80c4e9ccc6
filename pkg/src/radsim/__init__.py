"""Synthetic automotive radar simulation.

Two pipelines produce the same range-Doppler-azimuth tensor: a reference
pipeline that synthesizes the received signal and applies a unitary 3D
match filter, and a fast pipeline that superposes the radar's point-
response kernel sparsely at each reflection point. Scenes, imaging, file
formats, and a benchmark harness round out the toolkit.
"""

from .bench import ComplexityReport, run_benchmark
from .conventional import (
    dimension_window,
    match_filter,
    simulate_conventional,
    synthesize_received,
)
from .core import (
    CalibrationError,
    FileFormatError,
    GridPoint,
    RadarConfig,
    RadarTensor,
    RadsimError,
    ReflectionPoint,
    SceneInfeasibleError,
    TensorKind,
    ValidationError,
    grid_to_point,
    load_config,
    make_preset,
    map_point_to_grid,
    save_config,
    signed_bin,
    snap_point_to_grid,
)
from .fastsim import (
    EquivalenceReport,
    equivalence_report,
    relative_frobenius,
    simulate_fast,
    superpose_shifted_psf,
)
from .imaging import (
    center_azimuth,
    load_annotations,
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
    main_lobe_width_bins,
    measure_psf,
    save_calibration,
    truncate_psf,
    truncate_psf_to_noise_floor,
)
from .scene import (
    AnnotatedScene,
    BoundingBox,
    SceneObject,
    SceneSpec,
    assign_amplitudes,
    generate_scene,
    load_scene,
    object_cells,
    save_scene,
)

__version__ = "0.1.0"
