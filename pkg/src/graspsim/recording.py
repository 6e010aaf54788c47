"""Telemetry records: binary logs with replay, and lossless CSV export.

Binary log layout (little endian throughout):

    header:  magic b"GTLG" | u16 version | u32 meta_len | meta JSON (sorted keys)
    record:  u8 topic_id | u64 timestamp_us | u32 payload_len | payload
    ...repeated; the run outcome is a normal record (topic 7), present once.

Payload encodings per topic id:

    1 /fingertips/raw         u8 finger | u8 kind | u16 n | n*u16 values
                              | u8 has_aux [| 4*u16 pac,pdc,tac,tdc]
    2 /fingertips/normalized  u8 finger | u8 kind | u16 n | n*f64
    3 /contact                3*u8
    4 /joints/actual          6*f64
    5 /joints/target          6*f64
    6 /imu                    f64 yaw_deg | f64 pitch_deg
    7 /run/outcome            u8 status | f64 slip_mm | f64 peak_load
                              | u16 note_len | utf-8 note

Replaying a log feeds the recorded raw frames back through a fresh
processing pipeline; the derived contact vectors and outcome must match
the recorded ones bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .bus import (
    TOPIC_CONTACT,
    TOPIC_IMU,
    TOPIC_JOINTS_ACTUAL,
    TOPIC_JOINTS_TARGET,
    TOPIC_NORMALIZED,
    TOPIC_OUTCOME,
    TOPIC_RAW,
    BusMessage,
    JointSample,
    TaggedFrame,
    TaggedNormalized,
)
from .contact import ContactVector
from .errors import ConfigurationError, LogFormatError
from .fingertips import FingertipFrame, FingertipKind
from .filtering import NormalizedFrame
from .plant import GraspOutcome, GraspStatus
from .shake import ImuSample

MAGIC = b"GTLG"
VERSION = 1

TOPIC_IDS = {
    TOPIC_RAW: 1,
    TOPIC_NORMALIZED: 2,
    TOPIC_CONTACT: 3,
    TOPIC_JOINTS_ACTUAL: 4,
    TOPIC_JOINTS_TARGET: 5,
    TOPIC_IMU: 6,
    TOPIC_OUTCOME: 7,
}
TOPIC_NAMES = {v: k for k, v in TOPIC_IDS.items()}

_KIND_CODES = {FingertipKind.BIOTAC_SP: 0, FingertipKind.WTS_FT: 1}
_KIND_FROM_CODE = {v: k for k, v in _KIND_CODES.items()}
_STATUS_CODES = {status: i for i, status in enumerate(GraspStatus)}
_STATUS_FROM_CODE = {i: status for status, i in _STATUS_CODES.items()}


def _encode_payload(topic: str, payload) -> bytes:
    if topic == TOPIC_RAW:
        frame = payload.frame
        out = struct.pack("<BBH", payload.finger, _KIND_CODES[frame.kind], len(frame.values))
        out += struct.pack(f"<{len(frame.values)}H", *frame.values)
        if frame.kind is FingertipKind.BIOTAC_SP:
            out += struct.pack("<B4H", 1, frame.pac, frame.pdc, frame.tac, frame.tdc)
        else:
            out += struct.pack("<B", 0)
        return out
    if topic == TOPIC_NORMALIZED:
        values = payload.frame.values
        out = struct.pack("<BBH", payload.finger, _KIND_CODES[payload.frame.kind], values.size)
        return out + values.astype("<f8").tobytes()
    if topic == TOPIC_CONTACT:
        return struct.pack("<3B", *(int(f) for f in payload.flags))
    if topic in (TOPIC_JOINTS_ACTUAL, TOPIC_JOINTS_TARGET):
        return struct.pack("<6d", *payload.positions)
    if topic == TOPIC_IMU:
        return struct.pack("<2d", payload.yaw_deg, payload.pitch_deg)
    if topic == TOPIC_OUTCOME:
        note = payload.annotation.encode("utf-8")
        return struct.pack("<BddH", _STATUS_CODES[payload.status], payload.slip_distance_mm,
                           payload.peak_load_factor, len(note)) + note
    raise ConfigurationError(f"no encoder for topic {topic}")


def _decode_payload(topic: str, timestamp_us: int, raw: bytes):
    if topic == TOPIC_RAW:
        finger, kind_code, n = struct.unpack_from("<BBH", raw, 0)
        values = struct.unpack_from(f"<{n}H", raw, 4)
        offset = 4 + 2 * n
        (has_aux,) = struct.unpack_from("<B", raw, offset)
        kind = _KIND_FROM_CODE[kind_code]
        if has_aux:
            pac, pdc, tac, tdc = struct.unpack_from("<4H", raw, offset + 1)
            frame = FingertipFrame(kind, timestamp_us, values, pac=pac, pdc=pdc, tac=tac, tdc=tdc)
        else:
            frame = FingertipFrame(kind, timestamp_us, values)
        return TaggedFrame(finger=finger, frame=frame)
    if topic == TOPIC_NORMALIZED:
        finger, kind_code, n = struct.unpack_from("<BBH", raw, 0)
        values = np.frombuffer(raw, dtype="<f8", count=n, offset=4)
        frame = NormalizedFrame(_KIND_FROM_CODE[kind_code], timestamp_us, values.copy())
        return TaggedNormalized(finger=finger, frame=frame)
    if topic == TOPIC_CONTACT:
        flags = struct.unpack("<3B", raw)
        return ContactVector(tuple(bool(f) for f in flags))
    if topic in (TOPIC_JOINTS_ACTUAL, TOPIC_JOINTS_TARGET):
        return JointSample(struct.unpack("<6d", raw))
    if topic == TOPIC_IMU:
        yaw, pitch = struct.unpack("<2d", raw)
        return ImuSample(timestamp_us=timestamp_us, yaw_deg=yaw, pitch_deg=pitch)
    if topic == TOPIC_OUTCOME:
        code, slip, peak, note_len = struct.unpack_from("<BddH", raw, 0)
        note = raw[19:19 + note_len].decode("utf-8")
        return GraspOutcome(_STATUS_FROM_CODE[code], slip, peak, note)
    raise ConfigurationError(f"no decoder for topic {topic}")


def write_log(path, meta: dict, messages) -> None:
    """Serialize a message stream; byte layout is documented in the module."""
    meta_blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<HI", VERSION, len(meta_blob)))
        handle.write(meta_blob)
        for message in messages:
            payload = _encode_payload(message.topic, message.payload)
            handle.write(struct.pack("<BQI", TOPIC_IDS[message.topic],
                                     message.timestamp_us, len(payload)))
            handle.write(payload)


def read_log(path):
    """Parse a log back into (meta, [BusMessage]); errors carry byte offsets."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if blob[:4] != MAGIC:
        raise LogFormatError("bad magic; not a telemetry log", offset=0)
    if len(blob) < 10:
        raise LogFormatError("truncated header", offset=len(blob))
    version, meta_len = struct.unpack_from("<HI", blob, 4)
    if version != VERSION:
        raise LogFormatError(f"unsupported log version {version}", offset=4)
    offset = 10
    if offset + meta_len > len(blob):
        raise LogFormatError("truncated metadata block", offset=offset)
    try:
        meta = json.loads(blob[offset:offset + meta_len])
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"corrupt metadata: {exc.msg}", offset=offset) from exc
    offset += meta_len

    messages = []
    while offset < len(blob):
        if offset + 13 > len(blob):
            raise LogFormatError("truncated record header", offset=offset)
        topic_id, timestamp_us, length = struct.unpack_from("<BQI", blob, offset)
        if topic_id not in TOPIC_NAMES:
            raise LogFormatError(f"unknown topic id {topic_id}", offset=offset)
        body_start = offset + 13
        if body_start + length > len(blob):
            raise LogFormatError("truncated record payload", offset=body_start)
        topic = TOPIC_NAMES[topic_id]
        try:
            payload = _decode_payload(topic, timestamp_us, blob[body_start:body_start + length])
        except (struct.error, ConfigurationError) as exc:
            raise LogFormatError(f"corrupt payload for {topic}: {exc}", offset=body_start) from exc
        messages.append(BusMessage(topic=topic, timestamp_us=timestamp_us, payload=payload))
        offset = body_start + length
    return meta, messages


# -- replay -------------------------------------------------------------------


def replay_streams(messages):
    """Split a recorded message list into per-topic streams."""
    streams: dict[str, list[BusMessage]] = {name: [] for name in TOPIC_IDS}
    for message in messages:
        streams[message.topic].append(message)
    return streams


def derive_contacts_from_raw(messages, config):
    """Re-run the conditioning pipeline over recorded raw frames.

    Returns the regenerated per-tick contact vectors, bit-identical to the
    recorded ones when the log and configuration are consistent.
    """
    from .contact import contact_vector as build_contact_vector

    raw = [m for m in messages if m.topic == TOPIC_RAW]
    if not raw:
        return []
    kind = raw[0].payload.frame.kind
    pipelines = {finger: config.pipeline(kind) for finger in range(3)}
    by_tick: dict[int, dict[int, FingertipFrame]] = {}
    for message in raw:
        by_tick.setdefault(message.timestamp_us, {})[message.payload.finger] = message.payload.frame
    contact_cfg = config.contact_config(kind)
    vectors = []
    for timestamp in sorted(by_tick):
        fingers = by_tick[timestamp]
        if sorted(fingers) != [0, 1, 2]:
            raise LogFormatError(f"incomplete frame triple at t={timestamp}", offset=0)
        normalized = [pipelines[f].process(fingers[f]) for f in range(3)]
        vectors.append(build_contact_vector(normalized, contact_cfg))
    return vectors


def rows_from_messages(messages) -> list:
    """Rebuild figure-grade tick rows from a recorded stream.

    Binary logs carry the full telemetry except the phase index and load
    factor, which ride only in CSV exports; reconstructed rows report
    those as 0 and 1.0 respectively.
    """
    streams = replay_streams(messages)
    by_tick: dict[int, dict] = {}
    for message in streams[TOPIC_NORMALIZED]:
        slot = by_tick.setdefault(message.timestamp_us, {"normalized": {}})
        slot["normalized"][message.payload.finger] = tuple(
            float(v) for v in message.payload.frame.values)
    for topic, key in ((TOPIC_JOINTS_ACTUAL, "actual"), (TOPIC_JOINTS_TARGET, "target")):
        for message in streams[topic]:
            if message.timestamp_us in by_tick:
                by_tick[message.timestamp_us][key] = message.payload.positions
    for message in streams[TOPIC_CONTACT]:
        if message.timestamp_us in by_tick:
            by_tick[message.timestamp_us]["contact"] = message.payload.flags
    for message in streams[TOPIC_IMU]:
        if message.timestamp_us in by_tick:
            by_tick[message.timestamp_us]["imu"] = message.payload
    rows = []
    for timestamp in sorted(by_tick):
        slot = by_tick[timestamp]
        if sorted(slot["normalized"]) != [0, 1, 2] or "actual" not in slot:
            continue
        imu = slot.get("imu")
        rows.append(TickRow(
            timestamp_us=timestamp,
            phase=0,
            joints_actual=slot["actual"],
            joints_target=slot.get("target", slot["actual"]),
            contact=slot.get("contact", (False, False, False)),
            normalized=tuple(slot["normalized"][f] for f in range(3)),
            yaw_deg=imu.yaw_deg if imu else 0.0,
            pitch_deg=imu.pitch_deg if imu else 0.0,
            load_factor=1.0,
        ))
    return rows


def verify_replay(path, config):
    """Replay a log and check contacts and outcome against the recording.

    Returns (meta, mismatch list); an empty list means the replay
    reproduced the recorded run exactly.
    """
    meta, messages = read_log(path)
    streams = replay_streams(messages)
    mismatches = []
    derived = derive_contacts_from_raw(messages, config)
    recorded = [m.payload for m in streams[TOPIC_CONTACT]]
    if len(derived) != len(recorded):
        mismatches.append(f"contact count: recorded {len(recorded)}, derived {len(derived)}")
    else:
        for i, (a, b) in enumerate(zip(recorded, derived)):
            if a != b:
                mismatches.append(f"contact vector differs at index {i}: {a.flags} vs {b.flags}")
                break
    outcomes = streams[TOPIC_OUTCOME]
    if len(outcomes) != 1:
        mismatches.append(f"expected exactly one outcome record, found {len(outcomes)}")
    return meta, mismatches


# -- tick rows and the per-run record ----------------------------------------


@dataclass(frozen=True)
class TickRow:
    timestamp_us: int
    phase: int
    joints_actual: tuple[float, ...]
    joints_target: tuple[float, ...]
    contact: tuple[bool, bool, bool]
    normalized: tuple[tuple[float, ...], ...]   # one tuple per finger
    yaw_deg: float
    pitch_deg: float
    load_factor: float


@dataclass
class ExperimentRecord:
    """Full telemetry of one assessment run."""

    run_id: str
    object_name: str
    kind: str
    added_mass_g: float
    seed: int
    config_digest: str
    rows: list = field(default_factory=list)
    outcome: GraspOutcome | None = None

    def __post_init__(self):
        stamps = [row.timestamp_us for row in self.rows]
        if stamps != sorted(stamps):
            raise ConfigurationError("record rows must be time ordered")

    def phase_trace(self) -> list[int]:
        trace = []
        for row in self.rows:
            if not trace or trace[-1] != row.phase:
                trace.append(row.phase)
        return trace

    def meta(self) -> dict:
        return {
            "run_id": self.run_id,
            "object": self.object_name,
            "kind": self.kind,
            "added_mass_g": self.added_mass_g,
            "seed": self.seed,
            "config_digest": self.config_digest,
        }


def record_to_csv(record: ExperimentRecord, path) -> None:
    """Lossless delimited export; floats are written with repr precision."""
    n_fingers = len(record.rows[0].normalized) if record.rows else 3
    n_channels = len(record.rows[0].normalized[0]) if record.rows else 0
    columns = (["timestamp_us", "phase"]
               + [f"joint_actual_{i}" for i in range(6)]
               + [f"joint_target_{i}" for i in range(6)]
               + ["contact_thumb", "contact_index", "contact_ring"]
               + [f"{name}_s{c:02d}" for name in ("thumb", "index", "ring")[:n_fingers]
                  for c in range(n_channels)]
               + ["yaw_deg", "pitch_deg", "load_factor"])
    with open(path, "w", encoding="utf-8") as handle:
        for key, value in sorted(record.meta().items()):
            handle.write(f"# {key}={value}\n")
        if record.outcome is not None:
            handle.write(f"# outcome={record.outcome.status.value}\n")
            handle.write(f"# slip_mm={record.outcome.slip_distance_mm!r}\n")
            handle.write(f"# peak_load_factor={record.outcome.peak_load_factor!r}\n")
            handle.write(f"# annotation={record.outcome.annotation}\n")
        handle.write(",".join(columns) + "\n")
        for row in record.rows:
            cells = [str(row.timestamp_us), str(row.phase)]
            cells += [repr(v) for v in row.joints_actual]
            cells += [repr(v) for v in row.joints_target]
            cells += [str(int(c)) for c in row.contact]
            for finger_values in row.normalized:
                cells += [repr(v) for v in finger_values]
            cells += [repr(row.yaw_deg), repr(row.pitch_deg), repr(row.load_factor)]
            handle.write(",".join(cells) + "\n")


def record_from_csv(path) -> ExperimentRecord:
    meta: dict[str, str] = {}
    rows: list[TickRow] = []
    header: list[str] | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                meta[key] = value
                continue
            if header is None:
                header = line.split(",")
                continue
            cells = line.split(",")
            n_channels = (len(cells) - 2 - 12 - 3 - 3) // 3
            pos = 0
            timestamp_us = int(cells[pos]); pos += 1
            phase = int(cells[pos]); pos += 1
            actual = tuple(float(c) for c in cells[pos:pos + 6]); pos += 6
            target = tuple(float(c) for c in cells[pos:pos + 6]); pos += 6
            contact = tuple(bool(int(c)) for c in cells[pos:pos + 3]); pos += 3
            normalized = []
            for _ in range(3):
                normalized.append(tuple(float(c) for c in cells[pos:pos + n_channels]))
                pos += n_channels
            yaw, pitch, lam = (float(c) for c in cells[pos:pos + 3])
            rows.append(TickRow(timestamp_us, phase, actual, target, contact,
                                tuple(normalized), yaw, pitch, lam))
    outcome = None
    if "outcome" in meta:
        outcome = GraspOutcome(GraspStatus(meta["outcome"]), float(meta["slip_mm"]),
                               float(meta["peak_load_factor"]), meta.get("annotation", ""))
    return ExperimentRecord(
        run_id=meta["run_id"],
        object_name=meta["object"],
        kind=meta["kind"],
        added_mass_g=float(meta["added_mass_g"]),
        seed=int(meta["seed"]),
        config_digest=meta["config_digest"],
        rows=rows,
        outcome=outcome,
    )
