"""Dual-polarized observation files: parsing, merging, C/N0 differencing.

The merged CSV format carries one row per (epoch, prn) with both antenna
channels::

    epoch_unix_s,prn,cn0_rhcp_dbhz,cn0_lhcp_dbhz

An empty field means that channel was not tracked at that epoch; such rows
are dropped (the detector is defined on the channel difference, so a lone
channel is useless evidence).  Single-channel receiver logs use::

    epoch_unix_s,prn,channel,cn0_dbhz

with channel R (RHCP antenna) or L (LHCP antenna), and are joined on
(epoch, prn) by :func:`merge_channels`.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    DuplicateRecordError,
    FormatError,
    IncompleteRecordError,
    ParseError,
    ValidationError,
)

MERGED_HEADER = "epoch_unix_s,prn,cn0_rhcp_dbhz,cn0_lhcp_dbhz"
CHANNEL_HEADER = "epoch_unix_s,prn,channel,cn0_dbhz"

CN0_MIN_DBHZ = 0.0
CN0_MAX_DBHZ = 60.0
QUANT_STEP_DB = 1.0


@dataclass(frozen=True)
class ObservationRecord:
    """One epoch of dual-channel C/N0 for one satellite."""

    epoch: int
    prn: int
    cn0_rhcp: float
    cn0_lhcp: float
    elevation_deg: Optional[float] = None

    @property
    def key(self):
        return (self.epoch, self.prn)

    @property
    def diff_db(self) -> float:
        """RHCP minus LHCP C/N0 in dB."""
        return self.cn0_rhcp - self.cn0_lhcp

    def with_elevation(self, elevation_deg: float) -> "ObservationRecord":
        return replace(self, elevation_deg=elevation_deg)


@dataclass(frozen=True)
class ParseResult:
    records: tuple
    n_dropped: int

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def quantize_cn0(value: float, step: float = QUANT_STEP_DB) -> float:
    """Round to the nearest multiple of ``step``; halves round away from zero."""
    if step <= 0:
        raise ValidationError(f"quantization step must be positive, got {step}")
    return math.copysign(math.floor(abs(value) / step + 0.5), value) * step


def cn0_difference(record: ObservationRecord) -> float:
    """RHCP minus LHCP C/N0 of one record, in dB."""
    if record.cn0_rhcp is None or record.cn0_lhcp is None:
        raise IncompleteRecordError(
            f"record ({record.epoch}, {record.prn}) is missing a channel"
        )
    return record.cn0_rhcp - record.cn0_lhcp


def _validate_cn0(value: float, line: int, column: str) -> float:
    if not (CN0_MIN_DBHZ <= value <= CN0_MAX_DBHZ):
        raise ValidationError(
            f"line {line}: {column}={value} outside "
            f"[{CN0_MIN_DBHZ}, {CN0_MAX_DBHZ}] dB-Hz"
        )
    q = quantize_cn0(value)
    if abs(q - value) > 1e-9:
        raise ValidationError(
            f"line {line}: {column}={value} is not quantized at "
            f"{QUANT_STEP_DB} dB"
        )
    return q


def _parse_int(text: str, line: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"non-numeric {column} field {text!r}", line=line) from None


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric {column} field {text!r}", line=line) from None


def _decode(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    return data


def parse_observations(data) -> ParseResult:
    """Parse a merged observation CSV.

    Rows with an empty channel field are dropped and counted; everything
    else either parses into a valid record or raises.
    """
    text = _decode(data)
    lines = text.split("\n")
    if not lines or lines[0].strip() != MERGED_HEADER:
        raise FormatError(
            f"expected header {MERGED_HEADER!r}, got {lines[0].strip()!r}",
            line=1,
        )
    records = {}
    n_dropped = 0
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        fields = raw.split(",")
        if len(fields) != 4:
            raise FormatError(
                f"expected 4 fields, got {len(fields)}", line=lineno
            )
        if fields[2].strip() == "" or fields[3].strip() == "":
            n_dropped += 1
            continue
        epoch = _parse_int(fields[0], lineno, "epoch")
        prn = _parse_int(fields[1], lineno, "prn")
        if not 1 <= prn <= 32:
            raise ValidationError(f"line {lineno}: prn={prn} outside 1..32")
        rhcp = _validate_cn0(_parse_float(fields[2], lineno, "cn0_rhcp"), lineno, "cn0_rhcp")
        lhcp = _validate_cn0(_parse_float(fields[3], lineno, "cn0_lhcp"), lineno, "cn0_lhcp")
        key = (epoch, prn)
        if key in records:
            raise DuplicateRecordError(
                f"line {lineno}: duplicate (epoch, prn) = {key}"
            )
        records[key] = ObservationRecord(epoch, prn, rhcp, lhcp)
    ordered = tuple(records[k] for k in sorted(records))
    return ParseResult(records=ordered, n_dropped=n_dropped)


def _fmt_cn0(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def serialize_observations(records) -> str:
    """Canonical merged-CSV text for a record sequence (sorted by key)."""
    out = io.StringIO()
    out.write(MERGED_HEADER + "\n")
    for rec in sorted(records, key=lambda r: r.key):
        out.write(
            f"{rec.epoch},{rec.prn},{_fmt_cn0(rec.cn0_rhcp)},{_fmt_cn0(rec.cn0_lhcp)}\n"
        )
    return out.getvalue()


def _parse_single_channel(data, want_channel: str) -> dict:
    text = _decode(data)
    lines = text.split("\n")
    if not lines or lines[0].strip() != CHANNEL_HEADER:
        raise FormatError(
            f"expected header {CHANNEL_HEADER!r}, got {lines[0].strip()!r}",
            line=1,
        )
    values = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        fields = raw.split(",")
        if len(fields) != 4:
            raise FormatError(f"expected 4 fields, got {len(fields)}", line=lineno)
        epoch = _parse_int(fields[0], lineno, "epoch")
        prn = _parse_int(fields[1], lineno, "prn")
        channel = fields[2].strip()
        if channel not in ("R", "L"):
            raise ParseError(f"channel must be R or L, got {channel!r}", line=lineno)
        if channel != want_channel:
            continue
        cn0 = _validate_cn0(_parse_float(fields[3], lineno, "cn0"), lineno, "cn0")
        key = (epoch, prn)
        if key in values:
            raise DuplicateRecordError(
                f"line {lineno}: duplicate (epoch, prn) = {key} for channel {channel}"
            )
        values[key] = cn0
    return values


def merge_channels(rhcp_data, lhcp_data) -> ParseResult:
    """Join two single-channel logs on (epoch, prn).

    Keys present in only one log are dropped and counted, mirroring the
    merged-CSV drop policy.
    """
    rhcp = _parse_single_channel(rhcp_data, "R")
    lhcp = _parse_single_channel(lhcp_data, "L")
    common = sorted(set(rhcp) & set(lhcp))
    n_dropped = len(set(rhcp) ^ set(lhcp))
    records = tuple(
        ObservationRecord(epoch, prn, rhcp[(epoch, prn)], lhcp[(epoch, prn)])
        for epoch, prn in common
    )
    return ParseResult(records=records, n_dropped=n_dropped)
