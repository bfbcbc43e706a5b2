"""Synthetic dual-channel observations and detector scoring.

The synthesis model stands in for field data: the clean-sky channel
difference follows an elevation-dependent curve, multipath epochs are
shifted down by a fixed penalty, and noise is a fade process: most epochs
reproduce the curve exactly while a fraction ``FADE_PROBABILITY`` suffer
an exponentially distributed fade whose scale is set so the mixture's
standard deviation is close to ``noise_sigma_db``.  The fade-shaped
(left-skewed) distribution is what makes a mean-valued threshold a usable
detector: with symmetric noise roughly half of all clean epochs would sit
below the mean of their own calibration bin, and no per-decision false
alarm rate below ~40% would be reachable.  The mixture mean sits
``sigma * sqrt(p / 2)`` below the clean curve (about 0.3 dB at the default
sigma), which is exactly the margin that keeps non-faded clean epochs on
the CLEAN side of the calibrated threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .detector import Decision, Verdict
from .errors import JoinError, ValidationError
from .obs import CN0_MAX_DBHZ, CN0_MIN_DBHZ, ObservationRecord, quantize_cn0
from .raytrace.trace import Condition

FADE_PROBABILITY = 0.08

DEFAULT_CLEAN_RHCP_KNOTS = ((0.0, 38.0), (10.0, 40.0), (35.0, 48.0), (90.0, 50.0))
DEFAULT_CLEAN_DIFF_KNOTS = ((0.0, 6.0), (10.0, 6.0), (35.0, 14.0), (90.0, 14.0))

POSITIVE_CONDITIONS = frozenset({Condition.LOS_PLUS_NLOS, Condition.NLOS_ONLY})


@dataclass(frozen=True)
class SynthesisModel:
    """Generator parameters; fully determined by its fields and the seed."""

    clean_rhcp_knots: Tuple[Tuple[float, float], ...] = DEFAULT_CLEAN_RHCP_KNOTS
    clean_diff_knots: Tuple[Tuple[float, float], ...] = DEFAULT_CLEAN_DIFF_KNOTS
    multipath_diff_penalty_db: float = 8.0
    noise_sigma_db: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.multipath_diff_penalty_db <= 0:
            raise ValidationError("multipath penalty must be positive")
        if self.noise_sigma_db < 0:
            raise ValidationError("noise sigma must be non-negative")
        for knots in (self.clean_rhcp_knots, self.clean_diff_knots):
            els = [k[0] for k in knots]
            if els != sorted(els) or els[0] > 0.0 or els[-1] < 90.0:
                raise ValidationError("curve knots must cover [0, 90] degrees")

    def clean_rhcp_db(self, elevation_deg: float) -> float:
        knots = np.array(self.clean_rhcp_knots)
        return float(np.interp(elevation_deg, knots[:, 0], knots[:, 1]))

    def clean_diff_db(self, elevation_deg: float) -> float:
        knots = np.array(self.clean_diff_knots)
        return float(np.interp(elevation_deg, knots[:, 0], knots[:, 1]))


def fade_scale_db(sigma: float, p: float = FADE_PROBABILITY) -> float:
    """Exponential fade scale giving the mixture a ~``sigma`` spread."""
    return sigma / np.sqrt(2.0 * p)


def noise_mean_db(sigma: float, p: float = FADE_PROBABILITY) -> float:
    """Analytic mean of the fade mixture (non-positive)."""
    return -p * fade_scale_db(sigma, p)


def _draw_noise(rng: np.random.Generator, sigma: float, n: int) -> np.ndarray:
    """Fade mixture: zero for most epochs, -Exp(scale) with prob p.

    Standard deviation is sigma * sqrt(1 - p/2); the mean is
    :func:`noise_mean_db`, slightly below zero.
    """
    if sigma == 0.0:
        return np.zeros(n)
    p = FADE_PROBABILITY
    scale = fade_scale_db(sigma, p)
    fades = rng.random(n) < p
    noise = np.zeros(n)
    noise[fades] = -rng.exponential(scale, size=int(fades.sum()))
    return noise


def synthesize(labels: Sequence[Tuple[int, int, float, Condition]],
               model: SynthesisModel) -> List[ObservationRecord]:
    """Observation records for labeled (epoch, prn, elevation, condition) rows.

    BLOCKED epochs emit nothing; multipath epochs get the difference penalty.
    Both channels are quantized at 1 dB and clipped to the valid C/N0 range.
    """
    rng = np.random.default_rng(model.seed)
    rows = [
        (epoch, prn, el, cond)
        for epoch, prn, el, cond in labels
        if _condition(cond) is not Condition.BLOCKED
    ]
    n = len(rows)
    rhcp_noise = _draw_noise(rng, model.noise_sigma_db, n)
    diff_noise = _draw_noise(rng, model.noise_sigma_db, n)
    records = []
    for i, (epoch, prn, el, cond) in enumerate(rows):
        cond = _condition(cond)
        diff = model.clean_diff_db(el) + diff_noise[i]
        if cond in POSITIVE_CONDITIONS:
            diff -= model.multipath_diff_penalty_db
        rhcp = quantize_cn0(model.clean_rhcp_db(el) + rhcp_noise[i])
        rhcp = min(max(rhcp, CN0_MIN_DBHZ), CN0_MAX_DBHZ)
        lhcp = rhcp - quantize_cn0(diff)
        lhcp = min(max(lhcp, CN0_MIN_DBHZ), CN0_MAX_DBHZ)
        records.append(
            ObservationRecord(
                epoch=epoch,
                prn=prn,
                cn0_rhcp=rhcp,
                cn0_lhcp=lhcp,
                elevation_deg=el,
            )
        )
    return records


def _condition(cond) -> Condition:
    if isinstance(cond, Condition):
        return cond
    return Condition(cond)


@dataclass(frozen=True)
class EvalReport:
    true_positive: int
    false_positive: int
    true_negative: int
    false_negative: int
    n_out_of_range: int
    per_prn: Dict[int, Tuple[int, int, int, int]] = field(default_factory=dict)

    @property
    def detection_rate(self) -> Optional[float]:
        denom = self.true_positive + self.false_negative
        return self.true_positive / denom if denom else None

    @property
    def false_alarm_rate(self) -> Optional[float]:
        denom = self.false_positive + self.true_negative
        return self.false_positive / denom if denom else None

    def to_json(self) -> str:
        doc = {
            "confusion": {
                "true_positive": self.true_positive,
                "false_positive": self.false_positive,
                "true_negative": self.true_negative,
                "false_negative": self.false_negative,
            },
            "detection_rate": self.detection_rate,
            "false_alarm_rate": self.false_alarm_rate,
            "n_out_of_range": self.n_out_of_range,
            "per_prn": {
                str(prn): {
                    "true_positive": c[0],
                    "false_positive": c[1],
                    "true_negative": c[2],
                    "false_negative": c[3],
                }
                for prn, c in sorted(self.per_prn.items())
            },
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_text(self) -> str:
        def rate(v):
            return "undefined" if v is None else f"{v:.4f}"

        lines = [
            "            predicted MP   predicted clean",
            f"multipath   {self.true_positive:>12d}   {self.false_negative:>15d}",
            f"clean       {self.false_positive:>12d}   {self.true_negative:>15d}",
            f"detection rate:   {rate(self.detection_rate)}",
            f"false alarm rate: {rate(self.false_alarm_rate)}",
            f"out of range:     {self.n_out_of_range}",
        ]
        return "\n".join(lines) + "\n"


def score(decisions: Iterable[Decision],
          labels: Sequence[Tuple[int, int, float, Condition]]) -> EvalReport:
    """Confusion counts of decisions against ground-truth condition labels."""
    truth = {(epoch, prn): _condition(cond) for epoch, prn, _, cond in labels}
    decisions = list(decisions)
    missing = [
        (d.epoch, d.prn) for d in decisions if (d.epoch, d.prn) not in truth
    ]
    if missing:
        raise JoinError(missing)
    tp = fp = tn = fn = 0
    n_oor = 0
    per_prn: Dict[int, List[int]] = {}
    for d in decisions:
        if d.verdict is Verdict.OUT_OF_RANGE:
            n_oor += 1
            continue
        positive = truth[(d.epoch, d.prn)] in POSITIVE_CONDITIONS
        predicted = d.verdict is Verdict.MULTIPATH
        counts = per_prn.setdefault(d.prn, [0, 0, 0, 0])
        if positive and predicted:
            tp += 1
            counts[0] += 1
        elif not positive and predicted:
            fp += 1
            counts[1] += 1
        elif not positive and not predicted:
            tn += 1
            counts[2] += 1
        else:
            fn += 1
            counts[3] += 1
    return EvalReport(
        true_positive=tp,
        false_positive=fp,
        true_negative=tn,
        false_negative=fn,
        n_out_of_range=n_oor,
        per_prn={prn: tuple(c) for prn, c in per_prn.items()},
    )
