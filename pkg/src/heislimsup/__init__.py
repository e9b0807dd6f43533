"""Geometry, covers, energies and limsup simulations for rectangles in the Heisenberg group."""

__version__ = "0.1.0"

from .group import (  # noqa: E402
    DomainError,
    HeisPoint,
    HeisRect,
    Radii,
    dist,
    gauge_norm,
    inv,
    mul,
)
from .svf import PowerLawSeq, dimension_threshold, phi, phi_exponent  # noqa: E402

__all__ = [
    "__version__",
    "DomainError",
    "HeisPoint",
    "HeisRect",
    "Radii",
    "PowerLawSeq",
    "dimension_threshold",
    "dist",
    "gauge_norm",
    "inv",
    "mul",
    "phi",
    "phi_exponent",
]
