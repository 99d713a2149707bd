import random
import threading
import time

import pytest

from rescuectx.broker import (
    Broker,
    BrokerClosed,
    ControlEvent,
    GpsFix,
    Subscription,
    Topic,
    WeatherReading,
)
from rescuectx.geo import GeoPoint


def reading(i):
    return WeatherReading(f"WS{i}", 1.0, 2000.0, 12.0, 0.0)


def test_fifo_and_fanout():
    b = Broker()
    s1, s2 = b.subscribe(Topic.WEATHER), b.subscribe(Topic.WEATHER)
    sent = [b.publish(Topic.WEATHER, i, reading(i)) for i in range(3)]
    assert s1.drain() == sent
    assert s2.drain() == sent
    assert [m.sequence for m in sent] == [1, 2, 3]


def test_no_replay_for_late_subscriber():
    b = Broker()
    b.publish(Topic.WEATHER, 0, reading(1))
    s = b.subscribe(Topic.WEATHER)
    m2 = b.publish(Topic.WEATHER, 1, reading(2))
    assert s.drain() == [m2]


def test_closed_broker_rejects_publish():
    b = Broker()
    b.close()
    with pytest.raises(BrokerClosed):
        b.publish(Topic.WEATHER, 0, reading(1))
    with pytest.raises(BrokerClosed):
        b.subscribe(Topic.WEATHER)


def test_payload_schema_is_checked():
    b = Broker()
    with pytest.raises(TypeError):
        b.publish(Topic.WEATHER, 0, GpsFix("x", GeoPoint(0, 0)))


def test_backpressure_blocks_until_consumed():
    b = Broker()
    s = b.subscribe(Topic.CONTROL, capacity=1)
    b.publish(Topic.CONTROL, 0, ControlEvent("a"))
    done = threading.Event()

    def second():
        b.publish(Topic.CONTROL, 1, ControlEvent("b"))
        done.set()

    th = threading.Thread(target=second)
    th.start()
    assert not done.wait(0.2)
    assert s.get().payload.kind == "a"
    assert done.wait(2.0)
    th.join()
    assert s.get().payload.kind == "b"


def test_put_timeout_when_full():
    s = Subscription(capacity=1)
    s.put(1)
    with pytest.raises(TimeoutError):
        s.put(2, timeout=0)


def test_interleaved_topics_keep_per_topic_order():
    rng = random.Random(5)
    b = Broker()
    subs = {t: b.subscribe(t, capacity=10_000) for t in (Topic.WEATHER, Topic.CONTROL)}
    expected = {t: [] for t in subs}
    for i in range(2000):
        t = rng.choice(list(subs))
        payload = reading(i) if t is Topic.WEATHER else ControlEvent(str(i))
        expected[t].append(b.publish(t, i, payload))
    for t, sub in subs.items():
        got = sub.drain()
        assert got == expected[t]
        seqs = [m.sequence for m in got]
        assert seqs == sorted(set(seqs))


def test_concurrent_publishers_exactly_once():
    b = Broker()
    sub = b.subscribe(Topic.CONTROL, capacity=16)
    received = []

    def consume():
        for m in sub:
            received.append(m)

    consumer = threading.Thread(target=consume)
    consumer.start()

    def produce(k):
        for i in range(300):
            b.publish(Topic.CONTROL, i, ControlEvent(f"{k}:{i}"))

    producers = [threading.Thread(target=produce, args=(k,)) for k in range(4)]
    for p in producers:
        p.start()
    for p in producers:
        p.join()
    deadline = time.time() + 5
    while len(received) < 1200 and time.time() < deadline:
        time.sleep(0.01)
    b.close()
    consumer.join()
    kinds = [m.payload.kind for m in received]
    assert len(kinds) == 1200 and len(set(kinds)) == 1200
    seqs = [m.sequence for m in received]
    assert seqs == list(range(1, 1201))
