"""In-process publish/subscribe bus carrying raw sensor data.

Each subscription owns a bounded FIFO.  ``publish`` blocks while any
subscriber queue of the topic is full, so a slow consumer throttles the
producer instead of growing memory.  Ordering is guaranteed per topic per
subscriber only.
"""

from __future__ import annotations

import enum
import threading
from collections import deque
from dataclasses import dataclass
from typing import Any, Generic, Iterator, TypeVar

from .geo import GeoPoint

DEFAULT_CAPACITY = 4096
PAYLOAD_VERSION = 1


class Topic(str, enum.Enum):
    WEATHER = "Weather"
    BTS_MEASUREMENT = "BtsMeasurement"
    GPS_TOURIST = "GpsTourist"
    GPS_ANIMAL = "GpsAnimal"
    CONTROL = "Control"


@dataclass(frozen=True, slots=True)
class WeatherReading:
    station_id: str
    wind: float
    visibility: float
    temperature: float
    rain: float


@dataclass(frozen=True, slots=True)
class BtsSignal:
    station_id: str
    phone_id: str
    rssi: float


@dataclass(frozen=True, slots=True)
class GpsFix:
    entity_id: str
    point: GeoPoint
    dangerous: bool = False


@dataclass(frozen=True, slots=True)
class ControlEvent:
    kind: str
    data: tuple[tuple[str, Any], ...] = ()

    def get(self, key: str, default: Any = None) -> Any:
        for k, v in self.data:
            if k == key:
                return v
        return default


PAYLOAD_TYPES = {
    Topic.WEATHER: WeatherReading,
    Topic.BTS_MEASUREMENT: BtsSignal,
    Topic.GPS_TOURIST: GpsFix,
    Topic.GPS_ANIMAL: GpsFix,
    Topic.CONTROL: ControlEvent,
}


@dataclass(frozen=True, slots=True)
class Message:
    topic: Topic
    timestamp: float
    sequence: int
    payload: Any


class BrokerClosed(RuntimeError):
    pass


T = TypeVar("T")


class Subscription(Generic[T]):
    """Bounded FIFO stream.  Iterating blocks until items arrive or close."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[T] = deque()
        self._cond = threading.Condition()
        self._closed = False

    def put(self, item: T, timeout: float | None = None) -> None:
        with self._cond:
            if not self._cond.wait_for(lambda: self._closed or len(self._items) < self.capacity, timeout):
                raise TimeoutError("subscriber queue full")
            if self._closed:
                raise BrokerClosed("subscription closed")
            self._items.append(item)
            self._cond.notify_all()

    def get(self, timeout: float | None = None) -> T:
        """Next item; raises ``BrokerClosed`` once closed and drained."""
        with self._cond:
            if not self._cond.wait_for(lambda: self._items or self._closed, timeout):
                raise TimeoutError("no message")
            if not self._items:
                raise BrokerClosed("subscription closed")
            item = self._items.popleft()
            self._cond.notify_all()
            return item

    def drain(self) -> list[T]:
        """Everything currently queued, without blocking."""
        with self._cond:
            items = list(self._items)
            self._items.clear()
            self._cond.notify_all()
            return items

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def __iter__(self) -> Iterator[T]:
        while True:
            try:
                yield self.get()
            except BrokerClosed:
                return


class Broker:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._topic_locks = {t: threading.Lock() for t in Topic}
        self._subs: dict[Topic, list[Subscription[Message]]] = {t: [] for t in Topic}
        self._seq = {t: 0 for t in Topic}
        self._closed = False
        self.published = {t: 0 for t in Topic}

    @property
    def closed(self) -> bool:
        return self._closed

    def subscribe(self, topic: Topic, capacity: int = DEFAULT_CAPACITY) -> Subscription[Message]:
        sub: Subscription[Message] = Subscription(capacity)
        with self._lock:
            if self._closed:
                raise BrokerClosed("broker closed")
            self._subs[Topic(topic)].append(sub)
        return sub

    def publish(self, topic: Topic, timestamp: float, payload: Any, timeout: float | None = None) -> Message:
        """Stamp and fan out one message; the stamped message is the ack."""
        topic = Topic(topic)
        expected = PAYLOAD_TYPES[topic]
        if not isinstance(payload, expected):
            raise TypeError(f"{topic.value} expects {expected.__name__}, got {type(payload).__name__}")
        # the topic lock keeps sequence order equal to enqueue order
        with self._topic_locks[topic]:
            with self._lock:
                if self._closed:
                    raise BrokerClosed("broker closed")
                self._seq[topic] += 1
                msg = Message(topic, float(timestamp), self._seq[topic], payload)
                subs = list(self._subs[topic])
            for sub in subs:
                sub.put(msg, timeout)
            self.published[topic] += 1
        return msg

    def close(self) -> None:
        with self._lock:
            self._closed = True
            subs = [s for group in self._subs.values() for s in group]
        for s in subs:
            s.close()
