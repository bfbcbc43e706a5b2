"""Elevation-dependent dC/N0 threshold: calibration and classification.

Calibration groups clean-environment records into elevation bins and stores
the arithmetic mean of the channel difference per bin.  A record measured
elsewhere is declared multipath-contaminated when its difference falls
strictly below the interpolated threshold at its elevation.  Ties classify
CLEAN; queries outside the calibrated range clamp to the nearest end value
but are marked OUT_OF_RANGE and excluded from per-satellite aggregation.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import EmptyCalibrationError, InvalidCurveError, ValidationError
from .obs import ObservationRecord

log = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH_DEG = 1.0
DEFAULT_AGGREGATION_RATIO = 0.5

DECISION_CSV_HEADER = "epoch,prn,elevation_deg,diff_db,threshold_db,verdict"


class Verdict(enum.Enum):
    MULTIPATH = "MULTIPATH"
    CLEAN = "CLEAN"
    OUT_OF_RANGE = "OUT_OF_RANGE"


@dataclass(frozen=True)
class ThresholdCurve:
    """Per-elevation-bin mean channel difference; immutable once built."""

    bin_width_deg: float
    bins: Tuple[Tuple[float, float, int], ...]  # (center_deg, mean_db, count)
    valid_range: Tuple[float, float]

    def __post_init__(self):
        centers = [b[0] for b in self.bins]
        if centers != sorted(set(centers)):
            raise ValidationError("bin centers must be strictly ascending")
        if any(b[2] < 1 for b in self.bins):
            raise ValidationError("every stored bin needs at least one sample")

    def to_json(self) -> str:
        doc = {
            "bin_width_deg": self.bin_width_deg,
            "bins": [
                {"center_deg": c, "mean_db": m, "count": n}
                for c, m, n in self.bins
            ],
            "valid_range": list(self.valid_range),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text) -> "ThresholdCurve":
        if isinstance(text, (bytes, bytearray)):
            text = text.decode("utf-8")
        doc = json.loads(text)
        return cls(
            bin_width_deg=doc["bin_width_deg"],
            bins=tuple(
                (b["center_deg"], b["mean_db"], b["count"]) for b in doc["bins"]
            ),
            valid_range=tuple(doc["valid_range"]),
        )


@dataclass(frozen=True)
class Decision:
    epoch: int
    prn: int
    elevation_deg: float
    diff_db: float
    threshold_db: float
    verdict: Verdict


@dataclass(frozen=True)
class SatelliteVerdict:
    prn: int
    window: Tuple[int, int]
    n_multipath: int
    n_clean: int
    fraction_multipath: float
    flagged: bool


def calibrate(records: Iterable[ObservationRecord],
              bin_width_deg: float = DEFAULT_BIN_WIDTH_DEG) -> ThresholdCurve:
    """Bin clean-environment records by elevation and store per-bin means."""
    if bin_width_deg <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_width_deg}")
    sums: Dict[int, float] = {}
    counts: Dict[int, int] = {}
    for rec in records:
        if rec.elevation_deg is None:
            raise ValidationError(
                f"record ({rec.epoch}, {rec.prn}) has no elevation"
            )
        k = math.floor(rec.elevation_deg / bin_width_deg)
        sums[k] = sums.get(k, 0.0) + rec.diff_db
        counts[k] = counts.get(k, 0) + 1
    if not counts:
        raise EmptyCalibrationError("no records fell into any elevation bin")
    bins = tuple(
        ((k + 0.5) * bin_width_deg, sums[k] / counts[k], counts[k])
        for k in sorted(counts)
    )
    return ThresholdCurve(
        bin_width_deg=bin_width_deg,
        bins=bins,
        valid_range=(bins[0][0], bins[-1][0]),
    )


def threshold_at(curve: ThresholdCurve, elevation_deg: float) -> float:
    """Piecewise-linear threshold; clamps to end values outside the range."""
    if not curve.bins:
        raise InvalidCurveError("threshold curve has no bins")
    centers = np.array([b[0] for b in curve.bins])
    means = np.array([b[1] for b in curve.bins])
    return float(np.interp(elevation_deg, centers, means))


def in_valid_range(curve: ThresholdCurve, elevation_deg: float) -> bool:
    lo, hi = curve.valid_range
    return lo <= elevation_deg <= hi


def classify(record: ObservationRecord, curve: ThresholdCurve) -> Decision:
    """Compare one record's channel difference against the threshold."""
    if record.elevation_deg is None:
        raise ValidationError(
            f"record ({record.epoch}, {record.prn}) has no elevation"
        )
    threshold = threshold_at(curve, record.elevation_deg)
    diff = record.diff_db
    if not in_valid_range(curve, record.elevation_deg):
        verdict = Verdict.OUT_OF_RANGE
    elif diff < threshold:
        verdict = Verdict.MULTIPATH
    else:
        verdict = Verdict.CLEAN
    return Decision(
        epoch=record.epoch,
        prn=record.prn,
        elevation_deg=record.elevation_deg,
        diff_db=diff,
        threshold_db=threshold,
        verdict=verdict,
    )


def aggregate(decisions: Iterable[Decision],
              ratio: float = DEFAULT_AGGREGATION_RATIO) -> List[SatelliteVerdict]:
    """Per-satellite verdicts; flagged when the multipath fraction exceeds ratio."""
    if not 0.0 < ratio <= 1.0:
        raise ValidationError(f"aggregation ratio {ratio} outside (0, 1]")
    per_prn: Dict[int, List[Decision]] = {}
    for d in decisions:
        per_prn.setdefault(d.prn, []).append(d)
    out = []
    for prn in sorted(per_prn):
        group = per_prn[prn]
        in_range = [d for d in group if d.verdict is not Verdict.OUT_OF_RANGE]
        if not in_range:
            log.warning("PRN %d has no in-range decisions; omitted", prn)
            continue
        n_mp = sum(1 for d in in_range if d.verdict is Verdict.MULTIPATH)
        n_clean = len(in_range) - n_mp
        fraction = n_mp / len(in_range)
        out.append(
            SatelliteVerdict(
                prn=prn,
                window=(min(d.epoch for d in group), max(d.epoch for d in group)),
                n_multipath=n_mp,
                n_clean=n_clean,
                fraction_multipath=fraction,
                flagged=fraction > ratio,
            )
        )
    return out


def _fmt(value: float) -> str:
    return repr(float(value))


def decisions_to_csv(decisions: Iterable[Decision]) -> str:
    """Plot-ready CSV: elevation vs difference with the threshold overlay."""
    lines = [DECISION_CSV_HEADER]
    for d in decisions:
        lines.append(
            f"{d.epoch},{d.prn},{_fmt(d.elevation_deg)},{_fmt(d.diff_db)},"
            f"{_fmt(d.threshold_db)},{d.verdict.value}"
        )
    return "\n".join(lines) + "\n"


def decisions_from_csv(text) -> List[Decision]:
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0] != DECISION_CSV_HEADER:
        raise ValidationError(
            f"expected header {DECISION_CSV_HEADER!r}"
        )
    out = []
    for ln in lines[1:]:
        epoch, prn, el, diff, thr, verdict = ln.split(",")
        out.append(
            Decision(
                epoch=int(epoch),
                prn=int(prn),
                elevation_deg=float(el),
                diff_db=float(diff),
                threshold_db=float(thr),
                verdict=Verdict(verdict),
            )
        )
    return out
