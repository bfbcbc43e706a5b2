"""GPS almanac handling, Keplerian propagation, and receiver look angles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateGeometryError,
    KeplerConvergenceError,
    MissingAlmanacError,
    ParseError,
    ValidationError,
)
from .obs import ObservationRecord

# WGS-84 / GPS ICD constants
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
GM_EARTH = 3.986005e14          # m^3/s^2
OMEGA_EARTH = 7.2921151467e-5   # rad/s

GPS_UNIX_EPOCH = 315964800      # Unix seconds at 1980-01-06T00:00:00Z
SECONDS_PER_WEEK = 604800
DEFAULT_LEAP_SECONDS = 18.0

KEPLER_TOL = 1e-12
KEPLER_MAX_ITER = 50


@dataclass(frozen=True)
class AlmanacEntry:
    """Keplerian elements of one satellite from a YUMA almanac."""

    prn: int
    eccentricity: float
    toa: float                  # seconds of GPS week
    inclination: float          # rad
    raan_rate: float            # rad/s
    sqrt_a: float               # m^0.5
    raan: float                 # rad, at week epoch
    arg_perigee: float          # rad
    mean_anomaly: float         # rad, at toa
    week: int                   # 10-bit GPS week

    @property
    def semi_major_axis(self) -> float:
        return self.sqrt_a * self.sqrt_a


@dataclass(frozen=True)
class GeodeticPosition:
    """WGS-84 latitude/longitude in degrees, ellipsoidal height in meters."""

    lat: float
    lon: float
    height: float = 0.0

    def __post_init__(self):
        if abs(self.lat) > 90.0:
            raise ValidationError(f"latitude {self.lat} outside [-90, 90]")
        if abs(self.lon) > 180.0:
            raise ValidationError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class SatelliteState:
    prn: int
    epoch: float                # GPS seconds
    ecef: Tuple[float, float, float]
    elevation_deg: float
    azimuth_deg: float


def unix_to_gps(unix_seconds: float, leap_seconds: float = DEFAULT_LEAP_SECONDS) -> float:
    """Continuous GPS seconds since the GPS epoch for a Unix timestamp."""
    return unix_seconds - GPS_UNIX_EPOCH + leap_seconds


# --- YUMA parsing -----------------------------------------------------------

_YUMA_FIELDS = {
    "id": "prn",
    "eccentricity": "eccentricity",
    "timeofapplicability": "toa",
    "orbitalinclination": "inclination",
    "rateofrightascen": "raan_rate",
    "sqrta": "sqrt_a",
    "rightascenatweek": "raan",
    "argumentofperigee": "arg_perigee",
    "meananom": "mean_anomaly",
    "week": "week",
}


def _normalize_label(label: str) -> str:
    return "".join(c for c in label.lower() if c.isalnum())


def parse_yuma(text) -> List[AlmanacEntry]:
    """Parse YUMA almanac text into one entry per block."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    blocks: List[dict] = []
    current: Optional[dict] = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        if ":" not in line:
            raise ParseError(f"expected 'label: value' in YUMA block", line=lineno)
        label, _, value = line.partition(":")
        norm = _normalize_label(label)
        field = None
        for prefix, name in _YUMA_FIELDS.items():
            if norm.startswith(prefix):
                field = name
                break
        if field is None:
            if norm.startswith(("health", "af0", "af1")):
                continue
            raise ParseError(f"unrecognized YUMA label {label!r}", line=lineno)
        if field == "prn":
            current = {}
            blocks.append(current)
        if current is None:
            raise ParseError(
                f"field {label!r} appears before an ID line", line=lineno
            )
        try:
            current[field] = float(value)
        except ValueError:
            raise ParseError(
                f"non-numeric value {value.strip()!r} for {label!r}", line=lineno
            ) from None

    entries = []
    for i, block in enumerate(blocks, start=1):
        missing = [f for f in _YUMA_FIELDS.values() if f not in block]
        if missing:
            raise ParseError(f"block {i}: missing field(s) {missing}")
        entry = AlmanacEntry(
            prn=int(block["prn"]),
            eccentricity=block["eccentricity"],
            toa=block["toa"],
            inclination=block["inclination"],
            raan_rate=block["raan_rate"],
            sqrt_a=block["sqrt_a"],
            raan=block["raan"],
            arg_perigee=block["arg_perigee"],
            mean_anomaly=block["mean_anomaly"],
            week=int(block["week"]),
        )
        validate_entry(entry, block_index=i)
        entries.append(entry)
    return entries


def validate_entry(entry: AlmanacEntry, block_index: Optional[int] = None) -> None:
    where = f"block {block_index}: " if block_index is not None else ""
    if not 0.0 <= entry.eccentricity < 0.1:
        raise ValidationError(
            f"{where}eccentricity {entry.eccentricity} outside [0, 0.1)"
        )
    a = entry.semi_major_axis
    if not 20e6 < a < 33e6:
        raise ValidationError(
            f"{where}semi-major axis {a:.0f} m outside (20e6, 33e6)"
        )
    for name in ("inclination", "raan_rate", "raan", "arg_perigee", "mean_anomaly"):
        if not math.isfinite(getattr(entry, name)):
            raise ValidationError(f"{where}{name} is not finite")


# --- Kepler / propagation ---------------------------------------------------

def solve_kepler(mean_anomaly: float, eccentricity: float,
                 tol: float = KEPLER_TOL) -> float:
    """Eccentric anomaly E with |E - e sin E - M| <= tol.

    Newton iteration from E = M; e < 0.1 keeps it well-conditioned, and a
    bisection fallback on [M - e, M + e] guarantees the residual bound.
    """
    if not 0.0 <= eccentricity < 1.0:
        raise ValidationError(f"eccentricity {eccentricity} outside [0, 1)")
    if tol <= 0.0:
        raise ValidationError("tolerance must be positive")
    m = mean_anomaly
    e = eccentricity
    big_e = m
    for _ in range(KEPLER_MAX_ITER):
        f = big_e - e * math.sin(big_e) - m
        if abs(f) <= tol:
            return big_e
        big_e -= f / (1.0 - e * math.cos(big_e))
    lo, hi = m - e, m + e
    for _ in range(200):
        big_e = 0.5 * (lo + hi)
        f = big_e - e * math.sin(big_e) - m
        if abs(f) <= tol:
            return big_e
        if f > 0.0:
            hi = big_e
        else:
            lo = big_e
    raise KeplerConvergenceError(
        f"no convergence for M={mean_anomaly}, e={eccentricity}, tol={tol}"
    )


def _time_from_toa(entry: AlmanacEntry, gps_seconds: float) -> float:
    """Seconds from the almanac reference, resolving the 10-bit week."""
    toa_abs = entry.week * SECONDS_PER_WEEK + entry.toa
    span = 1024 * SECONDS_PER_WEEK
    tk = gps_seconds - toa_abs
    # choose the 1024-week cycle that puts the epoch closest to toa
    tk -= round(tk / span) * span
    return tk


def propagate(entry: AlmanacEntry, gps_seconds: float) -> Tuple[float, float, float]:
    """ECEF position (m) of the satellite at a GPS time (continuous seconds)."""
    a = entry.semi_major_axis
    e = entry.eccentricity
    tk = _time_from_toa(entry, gps_seconds)
    n = math.sqrt(GM_EARTH / (a * a * a))
    m = entry.mean_anomaly + n * tk
    big_e = solve_kepler(math.remainder(m, 2.0 * math.pi), e)
    sin_e, cos_e = math.sin(big_e), math.cos(big_e)
    nu = math.atan2(math.sqrt(1.0 - e * e) * sin_e, cos_e - e)
    u = nu + entry.arg_perigee
    r = a * (1.0 - e * cos_e)
    x_orb = r * math.cos(u)
    y_orb = r * math.sin(u)
    # longitude of ascending node in ECEF, Earth rotation removed
    omega = (
        entry.raan
        + (entry.raan_rate - OMEGA_EARTH) * tk
        - OMEGA_EARTH * entry.toa
    )
    cos_o, sin_o = math.cos(omega), math.sin(omega)
    cos_i, sin_i = math.cos(entry.inclination), math.sin(entry.inclination)
    x = x_orb * cos_o - y_orb * cos_i * sin_o
    y = x_orb * sin_o + y_orb * cos_i * cos_o
    z = y_orb * sin_i
    return (x, y, z)


# --- coordinate transforms --------------------------------------------------

def geodetic_to_ecef(pos: GeodeticPosition) -> Tuple[float, float, float]:
    """WGS-84 geodetic to ECEF, meters."""
    lat = math.radians(pos.lat)
    lon = math.radians(pos.lon)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + pos.height) * cos_lat * math.cos(lon)
    y = (n + pos.height) * cos_lat * math.sin(lon)
    z = (n * (1.0 - WGS84_E2) + pos.height) * sin_lat
    return (x, y, z)


def ecef_to_geodetic(ecef: Sequence[float]) -> GeodeticPosition:
    """Iterative inverse of :func:`geodetic_to_ecef`."""
    x, y, z = ecef
    lon = math.atan2(y, x)
    p = math.hypot(x, y)
    lat = math.atan2(z, p * (1.0 - WGS84_E2))
    for _ in range(20):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        lat = math.atan2(z + WGS84_E2 * n * sin_lat, p)
    sin_lat = math.sin(lat)
    cos_lat = math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    # stable at all latitudes, unlike p / cos(lat) - N
    height = p * cos_lat + z * sin_lat - n * (1.0 - WGS84_E2 * sin_lat * sin_lat)
    return GeodeticPosition(math.degrees(lat), math.degrees(lon), height)


def enu_basis(pos: GeodeticPosition) -> np.ndarray:
    """Rows are the local east, north, up unit vectors in ECEF."""
    lat = math.radians(pos.lat)
    lon = math.radians(pos.lon)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    east = np.array([-sin_lon, cos_lon, 0.0])
    north = np.array([-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat])
    up = np.array([cos_lat * cos_lon, cos_lat * sin_lon, sin_lat])
    return np.vstack([east, north, up])


def look_angles(sat_ecef: Sequence[float], rx: GeodeticPosition) -> Tuple[float, float]:
    """(elevation_deg, azimuth_deg) of a satellite seen from the receiver."""
    rx_ecef = np.asarray(geodetic_to_ecef(rx))
    delta = np.asarray(sat_ecef, dtype=float) - rx_ecef
    rng = float(np.linalg.norm(delta))
    if rng == 0.0:
        raise DegenerateGeometryError("satellite and receiver coincide")
    e, n, u = enu_basis(rx) @ delta
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, u / rng))))
    azimuth = math.degrees(math.atan2(e, n)) % 360.0
    return (elevation, azimuth)


def satellite_state(entry: AlmanacEntry, epoch_unix: float, rx: GeodeticPosition,
                    leap_seconds: float = DEFAULT_LEAP_SECONDS) -> SatelliteState:
    gps_t = unix_to_gps(epoch_unix, leap_seconds)
    ecef = propagate(entry, gps_t)
    el, az = look_angles(ecef, rx)
    return SatelliteState(entry.prn, gps_t, ecef, el, az)


def annotate_elevations(
    records: Iterable[ObservationRecord],
    almanac: Iterable[AlmanacEntry],
    rx: GeodeticPosition,
    leap_seconds: float = DEFAULT_LEAP_SECONDS,
) -> List[ObservationRecord]:
    """Fill each record's elevation from the propagated satellite position."""
    records = list(records)
    by_prn = {entry.prn: entry for entry in almanac}
    missing = {r.prn for r in records} - set(by_prn)
    if missing:
        raise MissingAlmanacError(missing)
    out = []
    cache = {}
    for rec in records:
        key = (rec.epoch, rec.prn)
        if key not in cache:
            state = satellite_state(by_prn[rec.prn], rec.epoch, rx, leap_seconds)
            cache[key] = state.elevation_deg
        out.append(rec.with_elevation(cache[key]))
    return out
