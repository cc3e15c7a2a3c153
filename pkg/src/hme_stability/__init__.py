"""Linear stability and Yong's first stability condition for hyperbolic moment equations."""

from .collision_models import CollisionModel, qbar_bgk, qbar_binary, qbar_esbgk, qbar_shakhov
from .exceptions import (
    DegeneratePencilError,
    HMEError,
    NumericalError,
    ParameterError,
    StateError,
    UnsupportedError,
)
from .hme_assembly import LinearizedSystem, MomentState, assemble_system, linearize
from .moment_basis import MomentBasis, MultiIndexSet, enumerate_indices, gauss_hermite, moment_basis
from .ohme_projection import build_projection, ohme_linearize, run_ohme_checks, run_system_checks
from .stability_analysis import lemma_property_harness, space_dispersion_1d, space_sweep, time_dispersion, time_sweep
from .yong_conditions import YongReport, random_states, yong_report

__version__ = "0.1.0"

__all__ = [
    "CollisionModel",
    "DegeneratePencilError",
    "HMEError",
    "LinearizedSystem",
    "MomentBasis",
    "MomentState",
    "MultiIndexSet",
    "NumericalError",
    "ParameterError",
    "StateError",
    "UnsupportedError",
    "YongReport",
    "assemble_system",
    "build_projection",
    "enumerate_indices",
    "gauss_hermite",
    "lemma_property_harness",
    "linearize",
    "moment_basis",
    "ohme_linearize",
    "qbar_bgk",
    "qbar_binary",
    "qbar_esbgk",
    "qbar_shakhov",
    "random_states",
    "run_ohme_checks",
    "run_system_checks",
    "space_dispersion_1d",
    "space_sweep",
    "time_dispersion",
    "time_sweep",
    "yong_report",
]
