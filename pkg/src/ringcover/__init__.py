"""Deterministic multi-layer ring barrier coverage simulator."""

__version__ = "0.1.0"

from .geometry import (
    TWO_PI,
    LayerCurve,
    ang_diff,
    ang_dist,
    ccw_gap,
    phase_of,
    wrap_phase,
)
from .models import (
    DensityModel,
    SensingModel,
    gaussian_model,
    linear_phase_density,
    segment_mass,
    table_density,
    uniform_density,
)

__all__ = [
    "TWO_PI",
    "LayerCurve",
    "ang_diff",
    "ang_dist",
    "ccw_gap",
    "phase_of",
    "wrap_phase",
    "SensingModel",
    "DensityModel",
    "gaussian_model",
    "uniform_density",
    "linear_phase_density",
    "table_density",
    "segment_mass",
]
