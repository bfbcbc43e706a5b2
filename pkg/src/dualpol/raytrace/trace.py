"""Plane-wave image-method ray tracing over a building scene.

The satellite is modeled at infinity along a unit direction, so every
incoming ray shares that direction and reflection directions depend only
on the face sequence, not the reflection point.  For a candidate face
sequence the reflection points are back-solved from the receiver by
intersecting the known reflected directions with each face plane, then
checked for polygon containment and segment occlusion.

Path length is the excess length relative to the line-of-sight wavefront
through the receiver (0 for the direct path), which stays finite under the
plane-wave model and preserves the reflection detour inequality.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .. import kernels
from ..errors import ValidationError
from .scene import Scene

GRAZING_TOL = 1e-9      # |dot(dir, normal)| below this discards the reflection
EDGE_TOL = 1e-6         # occlusion hits must be inside the polygon by this
CONTAIN_TOL = 1e-6      # reflection vertices may sit this far outside an edge
END_TOL = 1e-6          # occlusion ignores hits this close to segment ends
DEDUP_DECIMALS = 7

DEFAULT_RX_HEIGHT_M = 1.5


class Handedness(enum.Enum):
    RHCP = "RHCP"
    LHCP = "LHCP"


class Condition(enum.Enum):
    LOS_ONLY = "LOS_ONLY"
    LOS_PLUS_NLOS = "LOS_PLUS_NLOS"
    NLOS_ONLY = "NLOS_ONLY"
    BLOCKED = "BLOCKED"


@dataclass(frozen=True)
class PropagationPath:
    """One traced path; vertices run receiver-first toward the satellite."""

    order: int
    vertices: Tuple[Tuple[float, float, float], ...]
    sat_dir: Tuple[float, float, float]
    length_m: float
    handedness: Handedness
    faces: Tuple[int, ...] = ()
    prn: int = 0

    def key(self):
        return (
            self.order,
            tuple(
                tuple(round(c, DEDUP_DECIMALS) for c in v) for v in self.vertices
            ),
        )


@dataclass(frozen=True)
class MultipathLabel:
    prn: int
    label: Condition
    n_los: int
    n_nlos: int


def direction_from_angles(elevation_deg: float, azimuth_deg: float) -> np.ndarray:
    """ENU unit vector toward a satellite at the given look angles."""
    el = math.radians(elevation_deg)
    az = math.radians(azimuth_deg)
    return np.array(
        [math.cos(el) * math.sin(az), math.cos(el) * math.cos(az), math.sin(el)]
    )


def _blocked(scene: Scene, origin, direction, t_max=-1.0, skip1=-1, skip2=-1) -> bool:
    verts, offsets, normals, dvals, infinite = scene.packed()
    return bool(
        kernels.ray_blocked(
            verts,
            offsets,
            normals,
            dvals,
            infinite,
            np.asarray(origin, dtype=float),
            np.asarray(direction, dtype=float),
            float(t_max),
            skip1,
            skip2,
            EDGE_TOL,
            END_TOL,
        )
    )


def los_visible(scene: Scene, rx, sat_dir) -> bool:
    """True when the ray from the receiver toward the satellite is clear."""
    sat_dir = np.asarray(sat_dir, dtype=float)
    return not _blocked(scene, rx, sat_dir)


def _reflect(direction: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return direction - 2.0 * float(direction @ normal) * normal


def _face_contains(scene: Scene, face_index: int, point: np.ndarray) -> bool:
    face = scene.faces[face_index]
    if face.infinite:
        return True
    verts, offsets, normals, _, _ = scene.packed()
    margin = kernels.polygon_margin(
        verts, offsets[face_index], offsets[face_index + 1],
        normals[face_index], np.asarray(point, dtype=float),
    )
    return margin >= -CONTAIN_TOL


def _solve_sequence(scene: Scene, rx: np.ndarray, sat_dir: np.ndarray,
                    seq: Sequence[int]) -> Optional[List[np.ndarray]]:
    """Reflection points for a face sequence (satellite-side first), or None."""
    directions = [-sat_dir]  # propagation direction before each reflection
    for fi in seq:
        normal = scene.faces[fi].normal
        incidence = float(directions[-1] @ normal)
        if incidence > -GRAZING_TOL:
            return None  # back side or grazing hit
        directions.append(_reflect(directions[-1], normal))
    # back-solve the points from the receiver
    points: List[np.ndarray] = []
    target = rx
    for depth in range(len(seq) - 1, -1, -1):
        fi = seq[depth]
        face = scene.faces[fi]
        out_dir = directions[depth + 1]
        denom = float(face.normal @ out_dir)
        if abs(denom) < GRAZING_TOL:
            return None
        t = (float(face.normal @ target) - face.d) / denom
        if t <= END_TOL:
            return None
        point = target - t * out_dir
        if not _face_contains(scene, fi, point):
            return None
        points.append(point)
        target = point
    points.reverse()  # satellite-side first, matching seq
    return points


def _sequence_occluded(scene: Scene, rx: np.ndarray, sat_dir: np.ndarray,
                       seq: Sequence[int], points: List[np.ndarray]) -> bool:
    # upstream ray from the first reflection point toward the satellite
    if _blocked(scene, points[0], sat_dir, skip1=seq[0]):
        return True
    for i in range(len(seq) - 1):
        delta = points[i + 1] - points[i]
        dist = float(np.linalg.norm(delta))
        if dist < END_TOL:
            return True
        if _blocked(scene, points[i], delta / dist, t_max=dist,
                    skip1=seq[i], skip2=seq[i + 1]):
            return True
    delta = rx - points[-1]
    dist = float(np.linalg.norm(delta))
    if dist < END_TOL:
        return True
    return _blocked(scene, points[-1], delta / dist, t_max=dist, skip1=seq[-1])


def _excess_length(rx: np.ndarray, sat_dir: np.ndarray,
                   points: List[np.ndarray]) -> float:
    """Path length relative to the LOS wavefront through the receiver."""
    length = -float(sat_dir @ (points[0] - rx))
    stations = points + [rx]
    for a, b in zip(stations, stations[1:]):
        length += float(np.linalg.norm(b - a))
    return length


def _make_path(rx, sat_dir, seq, points, prn) -> PropagationPath:
    order = len(seq)
    vertices = [tuple(float(c) for c in rx)]
    for p in reversed(points):  # receiver-first ordering
        vertices.append(tuple(float(c) for c in p))
    return PropagationPath(
        order=order,
        vertices=tuple(vertices),
        sat_dir=tuple(float(c) for c in sat_dir),
        length_m=_excess_length(np.asarray(rx, float), sat_dir, points)
        if points
        else 0.0,
        handedness=Handedness.RHCP if order % 2 == 0 else Handedness.LHCP,
        faces=tuple(seq),
        prn=prn,
    )


def trace_paths(scene: Scene, rx, sat_dir, max_order: int = 2,
                prn: int = 0) -> List[PropagationPath]:
    """All LOS and specular paths up to ``max_order`` reflections."""
    if max_order not in (0, 1, 2):
        raise ValidationError(f"max_order must be 0, 1 or 2, got {max_order}")
    rx = np.asarray(rx, dtype=float)
    sat_dir = np.asarray(sat_dir, dtype=float)
    norm = float(np.linalg.norm(sat_dir))
    if norm == 0.0:
        raise ValidationError("satellite direction must be nonzero")
    sat_dir = sat_dir / norm

    paths: List[PropagationPath] = []
    seen = set()

    def emit(seq, points):
        path = _make_path(rx, sat_dir, seq, points, prn)
        if path.key() not in seen:
            seen.add(path.key())
            paths.append(path)

    if los_visible(scene, rx, sat_dir):
        emit((), [])

    n_faces = len(scene.faces)
    sequences = []
    if max_order >= 1:
        sequences.extend((i,) for i in range(n_faces))
    if max_order >= 2:
        sequences.extend(
            (i, j) for i in range(n_faces) for j in range(n_faces) if i != j
        )
    for seq in sequences:
        points = _solve_sequence(scene, rx, sat_dir, seq)
        if points is None:
            continue
        if _sequence_occluded(scene, rx, sat_dir, seq, points):
            continue
        emit(seq, points)
    return paths


def label_condition(paths: Sequence[PropagationPath], prn: int = 0) -> MultipathLabel:
    """Condition label from the traced path set of one (prn, epoch)."""
    n_los = sum(1 for p in paths if p.order == 0)
    n_nlos = sum(1 for p in paths if p.order > 0)
    if n_los == 0 and n_nlos == 0:
        label = Condition.BLOCKED
    elif n_los >= 1 and n_nlos == 0:
        label = Condition.LOS_ONLY
    elif n_los >= 1:
        label = Condition.LOS_PLUS_NLOS
    else:
        label = Condition.NLOS_ONLY
    return MultipathLabel(prn=prn, label=label, n_los=min(n_los, 1), n_nlos=n_nlos)


# --- path report / labels JSON ---------------------------------------------

def paths_to_doc(paths: Sequence[PropagationPath]) -> list:
    return [
        {
            "order": p.order,
            "handedness": p.handedness.value,
            "length_m": p.length_m,
            "vertices": [list(v) for v in p.vertices],
        }
        for p in paths
    ]


def paths_from_doc(doc: list, sat_dir=(0.0, 0.0, 1.0), prn: int = 0) -> List[PropagationPath]:
    return [
        PropagationPath(
            order=int(p["order"]),
            vertices=tuple(tuple(v) for v in p["vertices"]),
            sat_dir=tuple(sat_dir),
            length_m=float(p["length_m"]),
            handedness=Handedness(p["handedness"]),
            prn=prn,
        )
        for p in doc
    ]


def dump_labels(entries: Sequence[dict]) -> str:
    """Serialize per-(epoch, prn) label entries produced by the trace step.

    Each entry holds epoch, prn, elevation_deg, azimuth_deg, label, n_los,
    n_nlos and the path report list.
    """
    return json.dumps({"entries": list(entries)}, indent=2) + "\n"


def load_labels(data) -> List[dict]:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return json.loads(data)["entries"]


def label_entry(epoch: int, prn: int, elevation_deg: float, azimuth_deg: float,
                paths: Sequence[PropagationPath]) -> dict:
    label = label_condition(paths, prn=prn)
    return {
        "epoch": epoch,
        "prn": prn,
        "elevation_deg": elevation_deg,
        "azimuth_deg": azimuth_deg,
        "label": label.label.value,
        "n_los": label.n_los,
        "n_nlos": label.n_nlos,
        "paths": paths_to_doc(paths),
    }
