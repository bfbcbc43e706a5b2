"""GPS multipath detection from dual-polarized C/N0 measurements.

Pipeline: parse/merge dual-channel observations, annotate satellite
elevations from a YUMA almanac, calibrate an elevation-dependent
channel-difference threshold in a clean environment, classify observations
elsewhere, and validate against ground-truth multipath labels from an
image-method ray tracer over extruded building scenes.
"""

from . import detector, evaluation, obs, raytrace, satgeo
from .kernels import NUMBA_ENABLED

__version__ = "0.1.0"

__all__ = [
    "detector",
    "evaluation",
    "obs",
    "raytrace",
    "satgeo",
    "NUMBA_ENABLED",
    "__version__",
]
