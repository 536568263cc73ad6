"""CGPTs of homogeneous and coated 2D conductivity targets, transform-invariant
descriptors, electro-sensing simulation and dictionary classification."""

from .algebra import rotate_cgpt, scale_cgpt, transform_cgpt, transform_complex, translate_cgpt
from .cgpt import (
    CgptMatrix,
    ComplexCgpt,
    compute_cgpt,
    compute_cgpt_homogeneous,
    from_complex,
    solve_transmission,
    to_complex,
)
from .dictionary import Dictionary, build_dictionary, default_specs, match, run_identification_experiment
from .geometry import (
    ConductivityTarget,
    Curve,
    RigidMotion,
    ShapeKind,
    ShapeSpec,
    apply_motion,
    build_curve,
    build_target,
    curve_diameter,
)
from .invariants import DescriptorPair, descriptors_from_cgpt
from .kernels import BACKEND
from .reconstruction import build_acquisition, reconstruct_cgpt
from .sensing import AcquisitionConfig, MsrMatrix, add_noise, fish_poses, synthesize_msr

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "BACKEND",
    "CgptMatrix",
    "ComplexCgpt",
    "ConductivityTarget",
    "Curve",
    "DescriptorPair",
    "Dictionary",
    "MsrMatrix",
    "RigidMotion",
    "ShapeKind",
    "ShapeSpec",
    "add_noise",
    "apply_motion",
    "build_acquisition",
    "build_curve",
    "build_dictionary",
    "build_target",
    "compute_cgpt",
    "compute_cgpt_homogeneous",
    "curve_diameter",
    "default_specs",
    "descriptors_from_cgpt",
    "fish_poses",
    "from_complex",
    "match",
    "reconstruct_cgpt",
    "rotate_cgpt",
    "run_identification_experiment",
    "scale_cgpt",
    "solve_transmission",
    "synthesize_msr",
    "to_complex",
    "transform_cgpt",
    "transform_complex",
    "translate_cgpt",
]
