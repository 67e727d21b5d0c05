"""Acoustic radiation impedance of clamped rectangular and circular membranes."""

from .impedance import (
    ImpedanceCurve,
    NormalizedImpedance,
    Normalization,
    SweepSpec,
    circular_impedance,
    radiation_impedance,
    rect1d_impedance,
    rect2d_impedance,
    sweep,
)
from .oracle import (
    MediumParams,
    MeshTooLarge,
    PanelMesh,
    PreconditionError,
    bruteforce_impedance,
    build_mesh,
    monopole_asymptote,
    piston_impedance,
)
from .profiles import (
    GridError,
    ProfileModel,
    SampledGrid,
    are,
    eval_profile,
    load_grid,
    model_for,
    vrms_ratio,
)
from .quadrature import (
    IntegrationError,
    QuadratureResult,
    Tolerance,
    integrate_adaptive,
    integrate_inner_disk,
    integrate_outer_tail,
)
from .radiator import RadiatorKind, RadiatorSpec
from .spectra import (
    DomainError,
    ShapeKind,
    shape_spectrum_circ,
    shape_spectrum_poly,
    shape_spectrum_sinc,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "GridError",
    "ImpedanceCurve",
    "IntegrationError",
    "MediumParams",
    "MeshTooLarge",
    "NormalizedImpedance",
    "Normalization",
    "PanelMesh",
    "PreconditionError",
    "ProfileModel",
    "QuadratureResult",
    "RadiatorKind",
    "RadiatorSpec",
    "SampledGrid",
    "ShapeKind",
    "SweepSpec",
    "Tolerance",
    "are",
    "bruteforce_impedance",
    "build_mesh",
    "circular_impedance",
    "eval_profile",
    "integrate_adaptive",
    "integrate_inner_disk",
    "integrate_outer_tail",
    "load_grid",
    "model_for",
    "monopole_asymptote",
    "piston_impedance",
    "radiation_impedance",
    "rect1d_impedance",
    "rect2d_impedance",
    "shape_spectrum_circ",
    "shape_spectrum_poly",
    "shape_spectrum_sinc",
    "sweep",
    "vrms_ratio",
]
