"""Building scenes: JSON loading and extrusion to planar faces.

Scene JSON::

    {
      "origin": {"lat": ..., "lon": ...},
      "ground_plane": false,
      "buildings": [
        {"footprint": [[e, n], ...], "height_m": ...}
      ]
    }

Footprints are counter-clockwise convex polygons in local ENU meters.
Each building extrudes to one wall quad per edge plus a roof polygon;
normals point out of the prism.  The optional ground plane is the infinite
z = 0 plane.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..errors import GeometryError, ParseError, ValidationError


@dataclass(frozen=True)
class Building:
    footprint: np.ndarray  # (n, 2) ENU meters, counter-clockwise
    height_m: float


@dataclass(frozen=True)
class Face:
    """Planar convex polygon with outward unit normal (n . x = d)."""

    vertices: np.ndarray   # (k, 3), counter-clockwise seen from the normal side
    normal: np.ndarray     # (3,), unit
    d: float
    kind: str              # "wall" | "roof" | "ground"
    building: int = -1
    infinite: bool = False


@dataclass
class Scene:
    origin_lat: float
    origin_lon: float
    ground_plane: bool
    buildings: List[Building]
    faces: List[Face] = field(default_factory=list)

    # packed arrays for the occlusion kernel, built lazily
    _packed: Optional[tuple] = field(default=None, repr=False)

    def packed(self):
        if self._packed is None:
            self._packed = _pack_faces(self.faces)
        return self._packed


def _pack_faces(faces):
    if faces:
        verts = np.concatenate(
            [f.vertices if len(f.vertices) else np.zeros((1, 3)) for f in faces]
        )
    else:
        verts = np.zeros((0, 3))
    offsets = np.zeros(len(faces) + 1, dtype=np.int64)
    for i, f in enumerate(faces):
        offsets[i + 1] = offsets[i] + max(len(f.vertices), 1)
    normals = (
        np.array([f.normal for f in faces])
        if faces
        else np.zeros((0, 3))
    )
    dvals = np.array([f.d for f in faces]) if faces else np.zeros(0)
    infinite = np.array([f.infinite for f in faces], dtype=np.bool_)
    return verts, offsets, normals, dvals, infinite


def _signed_area(footprint: np.ndarray) -> float:
    x, y = footprint[:, 0], footprint[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 1e-12:
            return 1
        if v < -1e-12:
            return -1
        return 0

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    return o1 != o2 and o3 != o4


def _validate_footprint(footprint: np.ndarray, index: int) -> None:
    n = len(footprint)
    if n < 3:
        raise GeometryError(f"building {index}: footprint needs >= 3 vertices")
    if _signed_area(footprint) <= 0:
        raise GeometryError(
            f"building {index}: footprint must be counter-clockwise with "
            "positive area"
        )
    # self-intersection: any two non-adjacent edges crossing
    for i in range(n):
        a1, a2 = footprint[i], footprint[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = footprint[j], footprint[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                raise GeometryError(
                    f"building {index}: footprint edges {i} and {j} intersect"
                )
    # convexity: all cross products of consecutive edges non-negative
    for i in range(n):
        a = footprint[i]
        b = footprint[(i + 1) % n]
        c = footprint[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross < -1e-9:
            raise GeometryError(
                f"building {index}: footprint is not convex at vertex "
                f"{(i + 1) % n}; split concave buildings into convex parts"
            )


def extrude(footprint: np.ndarray, height: float, building: int) -> List[Face]:
    """Wall quads plus roof polygon for one convex CCW footprint."""
    faces = []
    n = len(footprint)
    for i in range(n):
        a2, b2 = footprint[i], footprint[(i + 1) % n]
        edge = b2 - a2
        length = float(np.hypot(edge[0], edge[1]))
        if length < 1e-12:
            raise GeometryError(
                f"building {building}: degenerate footprint edge {i}"
            )
        # CCW footprint puts the outward side to the right of the edge
        normal = np.array([edge[1] / length, -edge[0] / length, 0.0])
        verts = np.array(
            [
                [a2[0], a2[1], 0.0],
                [b2[0], b2[1], 0.0],
                [b2[0], b2[1], height],
                [a2[0], a2[1], height],
            ]
        )
        faces.append(
            Face(
                vertices=verts,
                normal=normal,
                d=float(normal @ verts[0]),
                kind="wall",
                building=building,
            )
        )
    roof = np.column_stack([footprint, np.full(n, height)])
    faces.append(
        Face(
            vertices=roof,
            normal=np.array([0.0, 0.0, 1.0]),
            d=height,
            kind="roof",
            building=building,
        )
    )
    return faces


def build_scene(origin_lat: float, origin_lon: float, buildings,
                ground_plane: bool = False) -> Scene:
    scene = Scene(
        origin_lat=origin_lat,
        origin_lon=origin_lon,
        ground_plane=ground_plane,
        buildings=list(buildings),
    )
    for idx, b in enumerate(scene.buildings):
        if b.height_m <= 0:
            raise ValidationError(
                f"building {idx}: height must be positive, got {b.height_m}"
            )
        _validate_footprint(b.footprint, idx)
        scene.faces.extend(extrude(b.footprint, b.height_m, idx))
    if ground_plane:
        scene.faces.append(
            Face(
                vertices=np.zeros((0, 3)),
                normal=np.array([0.0, 0.0, 1.0]),
                d=0.0,
                kind="ground",
                infinite=True,
            )
        )
    return scene


def load_scene(data) -> Scene:
    """Parse scene JSON and extrude every building."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"scene JSON: {exc}") from None
    try:
        origin = doc["origin"]
        buildings = [
            Building(
                footprint=np.asarray(b["footprint"], dtype=float),
                height_m=float(b["height_m"]),
            )
            for b in doc["buildings"]
        ]
        return build_scene(
            origin_lat=float(origin["lat"]),
            origin_lon=float(origin["lon"]),
            buildings=buildings,
            ground_plane=bool(doc.get("ground_plane", False)),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"scene JSON missing field: {exc}") from None


def dump_scene(scene: Scene) -> str:
    """Canonical scene JSON; inverse of :func:`load_scene`."""
    doc = {
        "origin": {"lat": scene.origin_lat, "lon": scene.origin_lon},
        "ground_plane": scene.ground_plane,
        "buildings": [
            {
                "footprint": [[float(e), float(n)] for e, n in b.footprint],
                "height_m": float(b.height_m),
            }
            for b in scene.buildings
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
