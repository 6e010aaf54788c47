"""In-process pub/sub telemetry bus.

Topics are registered with a fixed payload type; publishing the wrong
type is a contract error. Subscribers receive every message published
after they subscribed, in publication order per topic (no replay of
earlier traffic). The bus is safe to share across threads; per-topic
FIFO order is preserved because publication appends under one lock.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Any

from .contact import ContactVector
from .errors import ConfigurationError, TopicTypeError
from .fingertips import FingertipFrame
from .filtering import NormalizedFrame
from .plant import GraspOutcome
from .shake import ImuSample


@dataclass(frozen=True)
class BusMessage:
    topic: str
    timestamp_us: int
    payload: Any


@dataclass(frozen=True)
class TaggedFrame:
    """A raw frame labelled with its finger index (0 thumb, 1 index, 2 ring)."""
    finger: int
    frame: FingertipFrame


@dataclass(frozen=True)
class TaggedNormalized:
    finger: int
    frame: NormalizedFrame


@dataclass(frozen=True)
class JointSample:
    """One 6-joint vector (actuals or targets)."""
    positions: tuple[float, ...]

    def __post_init__(self):
        if len(self.positions) != 6:
            raise ConfigurationError("joint sample needs 6 positions")


TOPIC_RAW = "/fingertips/raw"
TOPIC_NORMALIZED = "/fingertips/normalized"
TOPIC_CONTACT = "/contact"
TOPIC_JOINTS_ACTUAL = "/joints/actual"
TOPIC_JOINTS_TARGET = "/joints/target"
TOPIC_IMU = "/imu"
TOPIC_OUTCOME = "/run/outcome"

STANDARD_TOPICS = {
    TOPIC_RAW: TaggedFrame,
    TOPIC_NORMALIZED: TaggedNormalized,
    TOPIC_CONTACT: ContactVector,
    TOPIC_JOINTS_ACTUAL: JointSample,
    TOPIC_JOINTS_TARGET: JointSample,
    TOPIC_IMU: ImuSample,
    TOPIC_OUTCOME: GraspOutcome,
}


class Subscription:
    """Ordered message stream for one subscriber of one topic."""

    def __init__(self, topic: str):
        self.topic = topic
        self._queue: deque[BusMessage] = deque()

    def _push(self, message: BusMessage):
        self._queue.append(message)

    def pop(self) -> BusMessage | None:
        return self._queue.popleft() if self._queue else None

    def drain(self) -> list[BusMessage]:
        out = list(self._queue)
        self._queue.clear()
        return out

    def __len__(self) -> int:
        return len(self._queue)


class MessageBus:
    def __init__(self, topics: dict | None = None):
        self._types = dict(STANDARD_TOPICS if topics is None else topics)
        self._subscribers: dict[str, list[Subscription]] = {t: [] for t in self._types}
        self._lock = threading.Lock()

    def register(self, topic: str, payload_type: type):
        with self._lock:
            if topic in self._types:
                raise ConfigurationError(f"topic {topic} already registered")
            self._types[topic] = payload_type
            self._subscribers[topic] = []

    def topics(self) -> tuple[str, ...]:
        return tuple(self._types)

    def subscribe(self, topic: str) -> Subscription:
        with self._lock:
            if topic not in self._types:
                raise ConfigurationError(f"unknown topic {topic}")
            sub = Subscription(topic)
            self._subscribers[topic].append(sub)
            return sub

    def publish(self, topic: str, payload, timestamp_us: int):
        expected = self._types.get(topic)
        if expected is None:
            raise ConfigurationError(f"unknown topic {topic}")
        if not isinstance(payload, expected):
            raise TopicTypeError(
                f"topic {topic} carries {expected.__name__}, got {type(payload).__name__}")
        message = BusMessage(topic=topic, timestamp_us=timestamp_us, payload=payload)
        with self._lock:
            for sub in self._subscribers[topic]:
                sub._push(message)
        return message


class ContactSnapshot:
    """Whole-value holder for the latest contact vector.

    Single publisher, many readers; the vector is replaced as a unit so a
    reader can never observe a partially updated triple.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._value = ContactVector.none()

    def set(self, vector: ContactVector):
        if not isinstance(vector, ContactVector):
            raise TopicTypeError("contact snapshot holds ContactVector values")
        with self._lock:
            self._value = vector

    def get(self) -> ContactVector:
        with self._lock:
            return self._value
