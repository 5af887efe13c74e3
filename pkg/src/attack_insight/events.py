"""Normalized telemetry event model.

Every sensor line that survives parsing becomes a :class:`TelemetryEvent`;
streams of them, partitioned per participant, are what the rest of the
pipeline consumes. Events are immutable and JSON-round-trippable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional


class EventKind(str, Enum):
    ALERT = "alert"
    FLOW = "flow"
    TLS = "tls"
    DNS = "dns"
    HTTP = "http"
    OTHER = "other"


@dataclass(frozen=True)
class FlowStats:
    """Flow-level counters; all counters are >= 0."""

    duration: Optional[float] = None
    pkts_to_server: Optional[int] = None
    pkts_to_client: Optional[int] = None
    bytes_to_server: Optional[int] = None
    bytes_to_client: Optional[int] = None

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FlowStats":
        return cls(**{k: data.get(k) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class TlsMeta:
    ja3_fingerprint: Optional[str] = None
    sni: Optional[str] = None
    cert_subject: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TlsMeta":
        return cls(**{k: data.get(k) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class TelemetryEvent:
    """One normalized EVE record.

    ``timestamp`` is a UTC instant truncated to millisecond precision so
    serialization round-trips exactly. ``raw_extra`` carries unmodeled EVE
    fields as strings; payload bodies are never captured.
    """

    event_id: str
    timestamp: datetime
    event_kind: EventKind
    src_ip: Optional[str] = None
    dst_ip: Optional[str] = None
    src_port: Optional[int] = None
    dst_port: Optional[int] = None
    proto: Optional[str] = None
    signature_id: Optional[int] = None
    signature_name: Optional[str] = None
    rule_category: Optional[str] = None
    severity: Optional[int] = None
    flow_stats: Optional[FlowStats] = None
    tls_meta: Optional[TlsMeta] = None
    raw_extra: dict[str, str] = field(default_factory=dict)

    @property
    def sort_key(self) -> tuple[datetime, str]:
        """Total, stable order: timestamp first, event_id breaks ties."""
        return (self.timestamp, self.event_id)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "event_id": self.event_id,
            "timestamp": format_timestamp(self.timestamp),
            "event_kind": self.event_kind.value,
        }
        for name in ("src_ip", "dst_ip", "src_port", "dst_port", "proto",
                     "signature_id", "signature_name", "rule_category", "severity"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        if self.flow_stats is not None:
            d["flow_stats"] = self.flow_stats.to_dict()
        if self.tls_meta is not None:
            d["tls_meta"] = self.tls_meta.to_dict()
        if self.raw_extra:
            d["raw_extra"] = dict(sorted(self.raw_extra.items()))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TelemetryEvent":
        return cls(
            event_id=data["event_id"],
            timestamp=parse_timestamp(data["timestamp"]),
            event_kind=EventKind(data["event_kind"]),
            src_ip=data.get("src_ip"),
            dst_ip=data.get("dst_ip"),
            src_port=data.get("src_port"),
            dst_port=data.get("dst_port"),
            proto=data.get("proto"),
            signature_id=data.get("signature_id"),
            signature_name=data.get("signature_name"),
            rule_category=data.get("rule_category"),
            severity=data.get("severity"),
            flow_stats=FlowStats.from_dict(data["flow_stats"]) if "flow_stats" in data else None,
            tls_meta=TlsMeta.from_dict(data["tls_meta"]) if "tls_meta" in data else None,
            raw_extra=dict(data.get("raw_extra", {})),
        )

    @classmethod
    def from_json(cls, line: str) -> "TelemetryEvent":
        return cls.from_dict(json.loads(line))


@dataclass
class ParticipantStream:
    """Time-ordered events attributed to one participant."""

    participant_id: str
    events: list[TelemetryEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def filtered(self, kinds: Optional[set[EventKind]]) -> "ParticipantStream":
        """Copy restricted to the given kinds (None keeps everything)."""
        if kinds is None:
            return ParticipantStream(self.participant_id, list(self.events))
        return ParticipantStream(
            self.participant_id, [e for e in self.events if e.event_kind in kinds]
        )


def parse_timestamp(text: str) -> datetime:
    """Parse an EVE/ISO-8601 timestamp into a UTC datetime at ms precision.

    Accepts Suricata's ``+0200``-style offsets and a trailing ``Z``, both of
    which the Python 3.10 ``fromisoformat`` grammar rejects.

    Raises ValueError when the text is not a valid instant.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    else:
        # +HHMM / -HHMM offsets lack the colon fromisoformat expects
        tail = s[-5:]
        if len(s) >= 6 and tail[0] in "+-" and tail[1:].isdigit():
            s = s[:-2] + ":" + s[-2:]
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def format_timestamp(dt: datetime) -> str:
    """Canonical wire form: UTC, millisecond precision, ``Z`` suffix."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"
