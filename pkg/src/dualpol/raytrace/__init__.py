from .scene import Building, Face, Scene, dump_scene, load_scene
from .trace import (
    Condition,
    Handedness,
    MultipathLabel,
    PropagationPath,
    direction_from_angles,
    label_condition,
    los_visible,
    trace_paths,
)

__all__ = [
    "Building",
    "Condition",
    "Face",
    "Handedness",
    "MultipathLabel",
    "PropagationPath",
    "Scene",
    "direction_from_angles",
    "dump_scene",
    "label_condition",
    "load_scene",
    "los_visible",
    "trace_paths",
]
