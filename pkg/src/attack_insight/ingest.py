"""EVE JSON ingestion: line parsing, merging, participant partitioning.

Input is Suricata's line-delimited ``eve.json`` format, one object per line.
Parsing is strict about admission (bad timestamp or missing mandatory fields
reject the line) but lenient aggregation keeps going and counts everything,
so report totals always reconcile with input line counts.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from .errors import IngestIOError, ParseError
from .events import (
    EventKind,
    FlowStats,
    ParticipantStream,
    TelemetryEvent,
    TlsMeta,
    parse_timestamp,
)

logger = logging.getLogger(__name__)

# Recognized event types that carry no attacker behavior.
SKIP_EVENT_TYPES = {"stats"}

# Top-level EVE keys consumed into modeled fields.
_MODELED_KEYS = {
    "timestamp", "event_type", "src_ip", "dest_ip", "src_port", "dest_port",
    "proto", "alert", "flow", "tls",
}

# Payload bodies are never parsed or carried (encrypted-traffic setting).
_DROPPED_KEYS = {"payload", "payload_printable", "packet", "packet_info", "stream"}

_KIND_BY_TYPE = {
    "alert": EventKind.ALERT,
    "flow": EventKind.FLOW,
    "tls": EventKind.TLS,
    "dns": EventKind.DNS,
    "http": EventKind.HTTP,
}


class Skip:
    """Sentinel result for recognized-but-ignored lines (e.g. stats)."""

    def __repr__(self) -> str:  # pragma: no cover
        return "<Skip>"


SKIP = Skip()


class PartitionRule(str, Enum):
    BY_SRC_IP = "by_src_ip"
    BY_FILE_NAME = "by_file_name"
    SINGLE_STREAM = "single_stream"


@dataclass
class IngestReport:
    """Line accounting for one load_streams call."""

    files_read: int = 0
    lines_total: int = 0
    parsed: int = 0
    skipped: int = 0
    errored: int = 0
    errors: list[dict[str, Any]] = field(default_factory=list)
    unreadable_files: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "files_read": self.files_read,
            "lines_total": self.lines_total,
            "parsed": self.parsed,
            "skipped": self.skipped,
            "errored": self.errored,
            "errors": self.errors,
            "unreadable_files": self.unreadable_files,
        }


def parse_eve_line(line: str, line_no: int = 0, source: str = "") -> Union[TelemetryEvent, Skip]:
    """Parse one EVE line into a normalized event.

    Returns SKIP for recognized-but-ignored types; raises ParseError for
    invalid JSON, missing mandatory fields, or non-admissible values. Blank
    lines are SKIP (they carry no record).
    """
    if not line.strip():
        return SKIP
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_no, source) from exc
    if not isinstance(record, dict):
        raise ParseError("line is not a JSON object", line_no, source)

    event_type = record.get("event_type")
    if event_type is None:
        raise ParseError("missing mandatory field: event_type", line_no, source)
    if event_type in SKIP_EVENT_TYPES:
        return SKIP

    ts_raw = record.get("timestamp")
    if ts_raw is None:
        raise ParseError("missing mandatory field: timestamp", line_no, source)
    try:
        timestamp = parse_timestamp(str(ts_raw))
    except ValueError as exc:
        raise ParseError(f"unparseable timestamp {ts_raw!r}", line_no, source) from exc

    kind = _KIND_BY_TYPE.get(event_type, EventKind.OTHER)

    signature_id = signature_name = rule_category = severity = None
    if kind is EventKind.ALERT:
        alert = record.get("alert")
        if not isinstance(alert, dict):
            raise ParseError("alert event without alert object", line_no, source)
        signature_id = alert.get("signature_id")
        signature_name = alert.get("signature")
        if signature_id is None or signature_name is None:
            raise ParseError("alert missing signature_id/signature", line_no, source)
        signature_id = int(signature_id)
        rule_category = alert.get("category")
        severity = alert.get("severity")

    return TelemetryEvent(
        event_id=f"{source}:{line_no:06d}" if source else f"line:{line_no:06d}",
        timestamp=timestamp,
        event_kind=kind,
        src_ip=record.get("src_ip"),
        dst_ip=record.get("dest_ip"),
        src_port=_port(record.get("src_port"), line_no, source),
        dst_port=_port(record.get("dest_port"), line_no, source),
        proto=record.get("proto"),
        signature_id=signature_id,
        signature_name=signature_name,
        rule_category=rule_category,
        severity=severity,
        flow_stats=_flow_stats(record.get("flow"), line_no, source),
        tls_meta=_tls_meta(record.get("tls")),
        raw_extra=_raw_extra(record),
    )


def _port(value: Any, line_no: int, source: str) -> Optional[int]:
    if value is None:
        return None
    port = int(value)
    if not 0 <= port <= 65535:
        raise ParseError(f"port out of range: {port}", line_no, source)
    return port


def _flow_stats(flow: Any, line_no: int, source: str) -> Optional[FlowStats]:
    if not isinstance(flow, dict):
        return None
    counters = {}
    for eve_key, name in (
        ("pkts_toserver", "pkts_to_server"),
        ("pkts_toclient", "pkts_to_client"),
        ("bytes_toserver", "bytes_to_server"),
        ("bytes_toclient", "bytes_to_client"),
    ):
        value = flow.get(eve_key)
        if value is not None:
            value = int(value)
            if value < 0:
                raise ParseError(f"negative flow counter {eve_key}", line_no, source)
            counters[name] = value
    duration = None
    if flow.get("start") and flow.get("end"):
        try:
            duration = (parse_timestamp(flow["end"]) - parse_timestamp(flow["start"])).total_seconds()
        except ValueError:
            duration = None
    elif flow.get("age") is not None:
        duration = float(flow["age"])
    if duration is not None and duration < 0:
        raise ParseError("negative flow duration", line_no, source)
    if duration is None and not counters:
        return None
    return FlowStats(duration=duration, **counters)


def _tls_meta(tls: Any) -> Optional[TlsMeta]:
    if not isinstance(tls, dict):
        return None
    ja3 = tls.get("ja3")
    meta = TlsMeta(
        ja3_fingerprint=ja3.get("hash") if isinstance(ja3, dict) else None,
        sni=tls.get("sni"),
        cert_subject=tls.get("subject"),
    )
    if meta.to_dict():
        return meta
    return None


def _raw_extra(record: dict[str, Any]) -> dict[str, str]:
    extra: dict[str, str] = {}
    for key, value in record.items():
        if key in _MODELED_KEYS or key in _DROPPED_KEYS:
            continue
        extra[key] = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
    return extra


def load_streams(
    paths: Iterable[Union[str, Path]],
    partition: PartitionRule = PartitionRule.BY_SRC_IP,
    strict: bool = False,
) -> tuple[list[ParticipantStream], IngestReport]:
    """Parse, merge, stably sort, and partition events from EVE files.

    Lenient mode (default) records per-line and per-file failures in the
    report and keeps going; strict mode raises on the first one. Streams come
    back sorted by participant_id; events within each stream are sorted by
    (timestamp, event_id), a total stable order.
    """
    report = IngestReport()
    events: list[TelemetryEvent] = []
    by_file: dict[str, list[TelemetryEvent]] = {}

    for path in paths:
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            if strict:
                raise IngestIOError(f"cannot read {path}: {exc}") from exc
            logger.warning("skipping unreadable file %s: %s", path, exc)
            report.unreadable_files.append(str(path))
            continue
        report.files_read += 1
        file_events: list[TelemetryEvent] = []
        for line_no, line in enumerate(lines, start=1):
            report.lines_total += 1
            try:
                result = parse_eve_line(line, line_no=line_no, source=path.name)
            except ParseError as exc:
                if strict:
                    raise
                report.errored += 1
                report.errors.append(
                    {"source": path.name, "line_no": line_no, "cause": exc.cause}
                )
                continue
            if isinstance(result, Skip):
                report.skipped += 1
            else:
                report.parsed += 1
                file_events.append(result)
        events.extend(file_events)
        by_file[path.stem] = file_events

    events.sort(key=lambda e: e.sort_key)

    if partition is PartitionRule.SINGLE_STREAM:
        buckets = {"all": events} if events else {}
    elif partition is PartitionRule.BY_FILE_NAME:
        buckets = {stem: sorted(evs, key=lambda e: e.sort_key) for stem, evs in by_file.items() if evs}
    else:
        buckets = {}
        for event in events:
            buckets.setdefault(event.src_ip or "unknown", []).append(event)

    streams = [ParticipantStream(pid, evs) for pid, evs in sorted(buckets.items())]
    return streams, report


# --- stream files ----------------------------------------------------------


def safe_participant_filename(participant_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", participant_id) or "unknown"


def write_stream_file(stream: ParticipantStream, path: Union[str, Path]) -> None:
    """One TelemetryEvent JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for event in stream.events:
            fh.write(event.to_json() + "\n")


def read_stream_file(path: Union[str, Path], participant_id: str) -> ParticipantStream:
    events = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(TelemetryEvent.from_json(line))
    return ParticipantStream(participant_id, events)


def write_streams(streams: Iterable[ParticipantStream], out_dir: Union[str, Path]) -> dict[str, str]:
    """Write one stream file per participant; returns participant -> filename."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index: dict[str, str] = {}
    for stream in streams:
        name = safe_participant_filename(stream.participant_id) + ".jsonl"
        if name in index.values():
            raise IngestIOError(f"participant filename collision: {name}")
        write_stream_file(stream, out_dir / name)
        index[stream.participant_id] = name
    return index


def read_streams(stream_dir: Union[str, Path], index: dict[str, str]) -> list[ParticipantStream]:
    stream_dir = Path(stream_dir)
    return [
        read_stream_file(stream_dir / name, pid)
        for pid, name in sorted(index.items())
    ]
