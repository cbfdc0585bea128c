"""
Enclosure numerics package.

This package handles:
- Special functions (Ĵ_m, Mittag-Leffler E_{1/n} and its partial sums)
- Vekua transforms and the modified functions E_α^k
- Herglotz densities built from truncated Mittag-Leffler series
- Far-field simulation (analytic disc, method of fundamental solutions)
- Indicator traces and visible-part scans
"""

from .errors import EnclosureError, InputError, exit_code_for
from .models import ConeSpec, DensitySpec, ObstacleCurve, PlanePoint, Scene

# Expose common entry points for easier imports
from .forward import FarFieldMatrix, farfield_matrix
from .herglotz import density_for, herglotz_closed_form
from .indicator import indicator_trace, indicator_value, visible_scan

__all__ = [
    "ConeSpec",
    "DensitySpec",
    "EnclosureError",
    "FarFieldMatrix",
    "InputError",
    "ObstacleCurve",
    "PlanePoint",
    "Scene",
    "density_for",
    "exit_code_for",
    "farfield_matrix",
    "herglotz_closed_form",
    "indicator_trace",
    "indicator_value",
    "visible_scan",
]
