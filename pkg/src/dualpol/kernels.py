"""Numba-compiled inner loops with a pure-Python/numpy fallback.

Set ``DUALPOL_DISABLE_NUMBA=1`` to skip JIT compilation; the same function
bodies then run uncompiled.  ``benchmarks/bench_kernels.py`` compares the
two paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

DISABLE_NUMBA = os.environ.get("DUALPOL_DISABLE_NUMBA", "0") == "1"

if not DISABLE_NUMBA:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep normally
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorate(func):
            return func

        return decorate


@njit(cache=True)
def solve_kepler_batch(mean_anomaly, eccentricity, tol, max_iter):
    """Eccentric anomaly for arrays of (M, e); Newton with bisection fallback.

    Returns (E, ok) where ok[i] is False if neither method converged.
    """
    n = mean_anomaly.shape[0]
    out = np.empty(n)
    ok = np.ones(n, dtype=np.bool_)
    for i in range(n):
        m = mean_anomaly[i]
        e = eccentricity[i]
        big_e = m
        converged = False
        for _ in range(max_iter):
            f = big_e - e * math.sin(big_e) - m
            if abs(f) <= tol:
                converged = True
                break
            big_e -= f / (1.0 - e * math.cos(big_e))
        if not converged:
            # f is monotone in E for e < 1, so bisection on [m-e, m+e] is safe
            lo = m - e
            hi = m + e
            for _ in range(200):
                big_e = 0.5 * (lo + hi)
                f = big_e - e * math.sin(big_e) - m
                if abs(f) <= tol:
                    converged = True
                    break
                if f > 0.0:
                    hi = big_e
                else:
                    lo = big_e
        out[i] = big_e
        ok[i] = converged
    return out, ok


@njit(cache=True)
def ray_blocked(
    verts,
    offsets,
    normals,
    dvals,
    infinite,
    origin,
    direction,
    t_max,
    skip1,
    skip2,
    edge_tol,
    end_tol,
):
    """True if the ray origin + t*direction hits any face.

    ``t_max < 0`` means an infinite ray; otherwise intersections are only
    counted for t in (end_tol, t_max - end_tol).  Faces ``skip1``/``skip2``
    are ignored (self-occlusion at reflection vertices).  A hit must land
    inside the face polygon by more than ``edge_tol``; rays running in the
    face plane (grazing) never block.
    """
    n_faces = offsets.shape[0] - 1
    for fi in range(n_faces):
        if fi == skip1 or fi == skip2:
            continue
        nx = normals[fi, 0]
        ny = normals[fi, 1]
        nz = normals[fi, 2]
        denom = nx * direction[0] + ny * direction[1] + nz * direction[2]
        if abs(denom) < 1e-12:
            continue
        num = dvals[fi] - (nx * origin[0] + ny * origin[1] + nz * origin[2])
        t = num / denom
        if t <= end_tol:
            continue
        if t_max >= 0.0 and t >= t_max - end_tol:
            continue
        px = origin[0] + t * direction[0]
        py = origin[1] + t * direction[1]
        pz = origin[2] + t * direction[2]
        if infinite[fi]:
            return True
        # signed distance from each edge, positive toward the interior
        lo = offsets[fi]
        hi = offsets[fi + 1]
        margin = 1e30
        for vi in range(lo, hi):
            vj = vi + 1 if vi + 1 < hi else lo
            ax = verts[vi, 0]
            ay = verts[vi, 1]
            az = verts[vi, 2]
            ex = verts[vj, 0] - ax
            ey = verts[vj, 1] - ay
            ez = verts[vj, 2] - az
            # (edge x (p - a)) . n gives inward-positive signed area
            rx = px - ax
            ry = py - ay
            rz = pz - az
            cx = ey * rz - ez * ry
            cy = ez * rx - ex * rz
            cz = ex * ry - ey * rx
            s = cx * nx + cy * ny + cz * nz
            elen = math.sqrt(ex * ex + ey * ey + ez * ez)
            if elen > 0.0:
                s = s / elen
            if s < margin:
                margin = s
        if margin > edge_tol:
            return True
    return False


@njit(cache=True)
def polygon_margin(verts, lo, hi, normal, point):
    """Minimum inward signed distance from the point to the polygon edges."""
    margin = 1e30
    for vi in range(lo, hi):
        vj = vi + 1 if vi + 1 < hi else lo
        ax = verts[vi, 0]
        ay = verts[vi, 1]
        az = verts[vi, 2]
        ex = verts[vj, 0] - ax
        ey = verts[vj, 1] - ay
        ez = verts[vj, 2] - az
        rx = point[0] - ax
        ry = point[1] - ay
        rz = point[2] - az
        cx = ey * rz - ez * ry
        cy = ez * rx - ex * rz
        cz = ex * ry - ey * rx
        s = cx * normal[0] + cy * normal[1] + cz * normal[2]
        elen = math.sqrt(ex * ex + ey * ey + ez * ez)
        if elen > 0.0:
            s = s / elen
        if s < margin:
            margin = s
    return margin
