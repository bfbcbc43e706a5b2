"""Independent reference implementations used to cross-check the package.

Everything here deliberately avoids the production code paths: the Kepler
oracle bisects, the propagation oracle works with rotation matrices, the
look-angle oracle builds its ENU basis by finite differences, and the ray
oracle solves reflection points as a least-squares system with shapely
doing polygon containment.
"""

import math

import numpy as np
from shapely.geometry import Point, Polygon

from dualpol.satgeo import (
    GM_EARTH,
    OMEGA_EARTH,
    GeodeticPosition,
    geodetic_to_ecef,
)


def kepler_bisection(mean_anomaly, eccentricity, tol=1e-12):
    """Bisection on f(E) = E - e sin E - M over [M - e, M + e]."""
    lo = mean_anomaly - eccentricity
    hi = mean_anomaly + eccentricity

    def f(big_e):
        return big_e - eccentricity * math.sin(big_e) - mean_anomaly

    for _ in range(500):
        mid = 0.5 * (lo + hi)
        v = f(mid)
        if abs(v) <= tol:
            return mid
        if v > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rotation_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def propagate_matrix(entry, gps_seconds):
    """Textbook almanac propagation via explicit rotation matrices."""
    a = entry.sqrt_a**2
    toa_abs = entry.week * 604800 + entry.toa
    tk = gps_seconds - toa_abs
    tk -= round(tk / (1024 * 604800)) * (1024 * 604800)
    n = math.sqrt(GM_EARTH / a**3)
    m = entry.mean_anomaly + n * tk
    m = math.remainder(m, 2.0 * math.pi)
    big_e = kepler_bisection(m, entry.eccentricity)
    # perifocal position
    x_p = a * (math.cos(big_e) - entry.eccentricity)
    y_p = a * math.sqrt(1.0 - entry.eccentricity**2) * math.sin(big_e)
    vec = np.array([x_p, y_p, 0.0])
    omega = (
        entry.raan
        + (entry.raan_rate - OMEGA_EARTH) * tk
        - OMEGA_EARTH * entry.toa
    )
    rot = rotation_z(omega) @ rotation_x(entry.inclination) @ rotation_z(entry.arg_perigee)
    return rot @ vec


def look_angles_fd(sat_ecef, rx: GeodeticPosition, step_deg=1e-5, step_m=1.0):
    """Elevation/azimuth from a finite-difference ENU basis."""

    def ecef(lat, lon, h):
        return np.array(geodetic_to_ecef(GeodeticPosition(lat, lon, h)))

    east = (
        ecef(rx.lat, rx.lon + step_deg, rx.height)
        - ecef(rx.lat, rx.lon - step_deg, rx.height)
    )
    north = (
        ecef(rx.lat + step_deg, rx.lon, rx.height)
        - ecef(rx.lat - step_deg, rx.lon, rx.height)
    )
    up = (
        ecef(rx.lat, rx.lon, rx.height + step_m)
        - ecef(rx.lat, rx.lon, rx.height - step_m)
    )
    east /= np.linalg.norm(east)
    north /= np.linalg.norm(north)
    up /= np.linalg.norm(up)
    delta = np.asarray(sat_ecef, float) - ecef(rx.lat, rx.lon, rx.height)
    delta /= np.linalg.norm(delta)
    el = math.degrees(math.asin(np.clip(delta @ up, -1.0, 1.0)))
    az = math.degrees(math.atan2(delta @ east, delta @ north)) % 360.0
    return el, az


def streaming_means(values_by_bin):
    """Welford-style running mean per bin."""
    means = {}
    for key, values in values_by_bin.items():
        mean = 0.0
        for i, v in enumerate(values, start=1):
            mean += (v - mean) / i
        means[key] = mean
    return means


# --- brute-force ray tracer -------------------------------------------------

def _face_polygon_2d(face):
    """Project the face onto its dominant plane axis for shapely."""
    normal = np.asarray(face.normal, float)
    drop = int(np.argmax(np.abs(normal)))
    keep = [i for i in range(3) if i != drop]
    coords = [(v[keep[0]], v[keep[1]]) for v in np.asarray(face.vertices)]
    return Polygon(coords), keep


def _contains(face, point, tol=1e-6):
    if face.infinite:
        return True
    poly, keep = _face_polygon_2d(face)
    return poly.distance(Point(point[keep[0]], point[keep[1]])) <= tol


def _strictly_inside(face, point, tol=1e-6):
    if face.infinite:
        return True
    poly, keep = _face_polygon_2d(face)
    p = Point(point[keep[0]], point[keep[1]])
    return poly.contains(p) and poly.exterior.distance(p) > tol


def _segment_blocked(scene, a, b, skip, tol=1e-6):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    d = b - a
    length = np.linalg.norm(d)
    d = d / length
    for fi, face in enumerate(scene.faces):
        if fi in skip:
            continue
        denom = float(np.asarray(face.normal) @ d)
        if abs(denom) < 1e-12:
            continue
        t = (face.d - float(np.asarray(face.normal) @ a)) / denom
        if t <= tol or t >= length - tol:
            continue
        if _strictly_inside(face, a + t * d, tol):
            return True
    return False


def _ray_blocked(scene, a, direction, skip, tol=1e-6):
    a = np.asarray(a, float)
    d = np.asarray(direction, float)
    for fi, face in enumerate(scene.faces):
        if fi in skip:
            continue
        denom = float(np.asarray(face.normal) @ d)
        if abs(denom) < 1e-12:
            continue
        t = (face.d - float(np.asarray(face.normal) @ a)) / denom
        if t <= tol:
            continue
        if _strictly_inside(face, a + t * d, tol):
            return True
    return False


def _mirror(direction, normal):
    direction = np.asarray(direction, float)
    normal = np.asarray(normal, float)
    return direction - 2.0 * float(direction @ normal) * normal


def _solve_points_lstsq(scene, rx, sat_dir, seq):
    """Reflection points as the solution of a stacked linear system.

    Unknowns are the reflection points; equations say each lies on its
    plane and each leg is parallel to the known propagation direction.
    """
    rx = np.asarray(rx, float)
    k = len(seq)
    dirs = [-np.asarray(sat_dir, float)]
    for fi in seq:
        n = np.asarray(scene.faces[fi].normal, float)
        if float(dirs[-1] @ n) > -1e-9:
            return None
        dirs.append(_mirror(dirs[-1], n))

    rows = []
    rhs = []

    def cross_rows(direction):
        d = np.asarray(direction, float)
        return np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])

    size = 3 * k
    for i, fi in enumerate(seq):
        face = scene.faces[fi]
        row = np.zeros(size)
        row[3 * i : 3 * i + 3] = np.asarray(face.normal, float)
        rows.append(row)
        rhs.append(face.d)
    # leg i -> i+1 parallel to dirs[i+1]; last leg ends at rx
    for i in range(k):
        nxt = rx if i == k - 1 else None
        cm = cross_rows(dirs[i + 1])
        for r in range(3):
            row = np.zeros(size)
            row[3 * i : 3 * i + 3] = -cm[r]
            if nxt is None:
                row[3 * (i + 1) : 3 * (i + 1) + 3] = cm[r]
                rhs.append(0.0)
            else:
                rhs.append(-float(cm[r] @ rx))
            rows.append(row)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    points = [sol[3 * i : 3 * i + 3] for i in range(k)]
    # residual check: the system must be consistent
    resid = np.array(rows) @ sol - np.array(rhs)
    if np.max(np.abs(resid)) > 1e-6:
        return None
    # forward travel must be positive on every leg
    stations = points + [rx]
    for i in range(k):
        leg = stations[i + 1] - stations[i]
        if float(leg @ dirs[i + 1]) <= 1e-9:
            return None
        if np.linalg.norm(np.cross(leg, dirs[i + 1])) > 1e-6:
            return None
    return points, dirs


def brute_force_paths(scene, rx, sat_dir, max_order=2):
    """Enumerate every face sequence of length <= max_order independently.

    Returns a set of keys (order, rounded vertex tuple) comparable with
    PropagationPath.key().
    """
    rx = np.asarray(rx, float)
    sat_dir = np.asarray(sat_dir, float)
    sat_dir = sat_dir / np.linalg.norm(sat_dir)
    found = {}

    def key_of(points):
        verts = [tuple(round(c, 7) for c in rx)]
        for p in reversed(points):
            verts.append(tuple(round(float(c), 7) for c in p))
        return (len(points), tuple(verts))

    if not _ray_blocked(scene, rx, sat_dir, skip=set()):
        found[key_of([])] = []

    n = len(scene.faces)
    seqs = []
    if max_order >= 1:
        seqs += [(i,) for i in range(n)]
    if max_order >= 2:
        seqs += [(i, j) for i in range(n) for j in range(n) if i != j]
    for seq in seqs:
        solved = _solve_points_lstsq(scene, rx, sat_dir, seq)
        if solved is None:
            continue
        points, dirs = solved
        if not all(_contains(scene.faces[fi], p) for fi, p in zip(seq, points)):
            continue
        if _ray_blocked(scene, points[0], sat_dir, skip={seq[0]}):
            continue
        blocked = False
        for i in range(len(seq) - 1):
            if _segment_blocked(scene, points[i], points[i + 1],
                                skip={seq[i], seq[i + 1]}):
                blocked = True
                break
        if not blocked and _segment_blocked(scene, points[-1], rx, skip={seq[-1]}):
            blocked = True
        if blocked:
            continue
        found[key_of(points)] = points
    return set(found)
