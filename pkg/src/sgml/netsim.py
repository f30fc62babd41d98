"""Deterministic simulated Ethernet/IP fabric for device traffic.

The model is one flat L2 domain: per-host ARP caches, access switches, and
(for multi-substation models) a WAN switch. Latency is counted in kernel
ticks: the sum of link latencies along the path, plus one tick when the
path crosses the WAN switch. A frame sent at tick t with zero path latency
is delivered at t+1; a cold ARP cache costs one extra tick for the
request/reply exchange.

Forwarding honors MAC addresses as resolved through the sender's ARP
cache, and caches are overwritten by any later ARP reply. That is the
man-in-the-middle lever: after cache poisoning, frames for a victim IP
deliver to whichever host owns the poisoned MAC. The fabric itself never
alters payloads.

Publish/subscribe protocols (GOOSE link-local, R-GOOSE/R-SV routable) are
implemented as per-subscriber frame copies, each resolved through the
publisher's ARP cache so they stay poisonable like any unicast flow.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Callable

from sgml.model import CyberModel, Host

FRAME_LOG_VERSION = 1

BROADCAST_MAC = "ff-ff-ff-ff-ff-ff"


class Protocol(enum.Enum):
    MMS = "MMS"
    GOOSE = "GOOSE"
    R_GOOSE = "R_GOOSE"
    R_SV = "R_SV"


class Verb(enum.Enum):
    READ = "read"
    WRITE = "write"
    OPERATE = "operate"
    RESPONSE = "response"
    PUBLISH = "publish"
    SAMPLE = "sample"


_PUBLISH_VERBS = {Verb.PUBLISH, Verb.SAMPLE}
_PUBLISH_PROTOCOLS = {Protocol.GOOSE, Protocol.R_GOOSE, Protocol.R_SV}


@dataclass(frozen=True)
class Message:
    protocol: Protocol
    verb: Verb
    path: str
    value: object = None
    correlation_id: str | None = None
    ok: bool = True  # responses may signal rejection

    def __post_init__(self):
        if self.protocol in _PUBLISH_PROTOCOLS:
            if self.verb not in _PUBLISH_VERBS:
                raise ValueError(f"{self.protocol.value} carries publish/sample only")
            if self.correlation_id is not None:
                raise ValueError("publishes have no correlation id")
        else:
            if self.verb in _PUBLISH_VERBS:
                raise ValueError("MMS does not publish")
            if self.correlation_id is None:
                raise ValueError("MMS messages need a correlation id")


class FrameKind(enum.Enum):
    ARP_REQUEST = "arp_request"
    ARP_REPLY = "arp_reply"
    MESSAGE = "message"


@dataclass(frozen=True)
class ArpBody:
    claimed_ip: str
    claimed_mac: str


@dataclass(frozen=True)
class Frame:
    src_mac: str
    dst_mac: str
    src_ip: str
    dst_ip: str
    kind: FrameKind
    payload: Message | ArpBody | None
    seq: int
    send_tick: int
    sender: str  # host name, for deterministic ordering


@dataclass
class TapHandle:
    node: str
    predicate: Callable[[Frame], bool]
    captured: list[tuple[int, Frame]] = field(default_factory=list)

    def frames_at(self, tick: int) -> list[Frame]:
        return [f for t, f in self.captured if t == tick]


class UnreachableIpError(ValueError):
    pass


def match_filter(protocol: str | None = None, verb: str | None = None,
                 path: str | None = None, path_contains: str | None = None,
                 src_ip: str | None = None, dst_ip: str | None = None):
    """Declarative frame predicate used by taps and intercept rules."""
    def predicate(frame: Frame) -> bool:
        msg = frame.payload if isinstance(frame.payload, Message) else None
        if protocol is not None:
            if msg is None or msg.protocol.value != protocol:
                return False
        if verb is not None:
            if msg is None or msg.verb.value != verb:
                return False
        if path is not None and (msg is None or msg.path != path):
            return False
        if path_contains is not None and (msg is None or path_contains not in msg.path):
            return False
        if src_ip is not None and frame.src_ip != src_ip:
            return False
        if dst_ip is not None and frame.dst_ip != dst_ip:
            return False
        return True
    return predicate


class VirtualNetwork:
    """Owns queues, ARP caches, switches and the frame log for one model."""

    def __init__(self, cyber: CyberModel, on_event=None):
        self.cyber = cyber
        self.hosts: dict[str, Host] = {h.name: h for h in cyber.hosts}
        self.host_by_ip: dict[str, str] = {h.ip: h.name for h in cyber.hosts}
        self.host_by_mac: dict[str, str] = {h.mac.lower(): h.name for h in cyber.hosts}
        self.arp: dict[str, dict[str, tuple[str, int]]] = {h.name: {} for h in cyber.hosts}
        self._on_event = on_event or (lambda category, payload: None)

        self._queue: list[tuple[int, Frame]] = []  # (delivery tick, frame)
        self._awaiting_arp: list[tuple] = []  # (tick, host, ip, message, spoof)
        self._seq: dict[str, int] = {h.name: 0 for h in cyber.hosts}
        self._subscriptions: dict[tuple[str, Protocol], list[str]] = {}
        self._taps: list[TapHandle] = []
        self.counters: dict[str, dict[str, int]] = {}
        self.frame_log: list[dict] = []

        self._paths = self._compute_paths()

    # -- topology ------------------------------------------------------

    def _compute_paths(self):
        """Per host pair: (latency ticks, nodes on the path)."""
        adj: dict[str, list[tuple[str, int]]] = {}
        for link in self.cyber.links:
            adj.setdefault(link.endpoint_a, []).append((link.endpoint_b, link.latency_ticks))
            adj.setdefault(link.endpoint_b, []).append((link.endpoint_a, link.latency_ticks))
        for node in list(self.hosts) + [s.name for s in self.cyber.switches]:
            adj.setdefault(node, [])

        wan = self.cyber.wan_switch()
        wan_name = wan.name if wan else None
        paths: dict[tuple[str, str], tuple[int, frozenset]] = {}
        for start in self.hosts:
            # BFS with cumulative latency; trees by construction, so first visit wins
            best: dict[str, tuple[int, tuple[str, ...]]] = {start: (0, (start,))}
            frontier = [start]
            while frontier:
                frontier.sort()
                node = frontier.pop(0)
                lat, trail = best[node]
                for nxt, w in sorted(adj[node]):
                    if nxt not in best:
                        best[nxt] = (lat + w, trail + (nxt,))
                        frontier.append(nxt)
            for target in self.hosts:
                if target in best:
                    lat, trail = best[target]
                    if wan_name and wan_name in trail:
                        lat += 1
                    paths[(start, target)] = (lat, frozenset(trail))
        return paths

    def latency(self, a: str, b: str) -> int:
        return self._paths[(a, b)][0]

    def reachable(self, a: str, b: str) -> bool:
        return (a, b) in self._paths

    # -- sending -------------------------------------------------------

    def _next_seq(self, host: str) -> int:
        self._seq[host] += 1
        return self._seq[host]

    def _count(self, bucket: str, label: str, n: int = 1) -> None:
        slot = self.counters.setdefault(label, {"sent": 0, "delivered": 0, "dropped": 0})
        slot[bucket] += n

    def _label(self, frame: Frame) -> str:
        if isinstance(frame.payload, Message):
            return frame.payload.protocol.value
        return "ARP"

    def _enqueue(self, tick: int, frame: Frame, delivery_tick: int) -> None:
        self._count("sent", self._label(frame))
        self._queue.append((delivery_tick, frame))

    def send(self, from_host: str, to_ip: str, message: Message, tick: int,
             spoof: tuple[str, str] | None = None) -> None:
        """Queue a unicast message; runs the ARP exchange first on a cold cache.

        `spoof` = (src_ip, src_mac) stamps forged source addresses on the
        frame while ordering still follows the true sender; this is how a
        man-in-the-middle relays intercepted traffic transparently.
        """
        sender = self.hosts[from_host]
        src_ip, src_mac = spoof if spoof else (sender.ip, sender.mac)
        if to_ip not in self.host_by_ip:
            self._count("sent", message.protocol.value)
            self._count("dropped", message.protocol.value)
            self._on_event("alarm", {
                "what": "unreachable-ip", "host": from_host, "ip": to_ip})
            return
        cache = self.arp[from_host]
        if to_ip in cache:
            dst_mac = cache[to_ip][0]
            target = self.host_by_mac.get(dst_mac.lower(), self.host_by_ip[to_ip])
            lat = self.latency(from_host, target)
            frame = Frame(src_mac, dst_mac, src_ip, to_ip, FrameKind.MESSAGE,
                          message, self._next_seq(from_host), tick, from_host)
            self._enqueue(tick, frame, tick + 1 + lat)
            return

        # cold cache: request broadcast now, genuine owner replies next tick,
        # the data frame goes out once the reply has landed; further sends to
        # the same IP queue behind the one outstanding request
        already_pending = any(w[1] == from_host and w[2] == to_ip
                              for w in self._awaiting_arp)
        if not already_pending:
            owner_name = self.host_by_ip[to_ip]
            owner = self.hosts[owner_name]
            req = Frame(sender.mac, BROADCAST_MAC, sender.ip, to_ip, FrameKind.ARP_REQUEST,
                        ArpBody(to_ip, ""), self._next_seq(from_host), tick, from_host)
            self._enqueue(tick, req, tick + 1)
            reply = Frame(owner.mac, sender.mac, owner.ip, sender.ip, FrameKind.ARP_REPLY,
                          ArpBody(owner.ip, owner.mac), self._next_seq(owner_name), tick,
                          owner_name)
            self._enqueue(tick, reply, tick + 1)
        self._awaiting_arp.append((tick + 1, from_host, to_ip, message, spoof))

    def send_arp_reply(self, from_host: str, to_ip: str, claimed_ip: str,
                       claimed_mac: str, tick: int) -> None:
        """Emit a (possibly spoofed) ARP reply to one host."""
        sender = self.hosts[from_host]
        if to_ip not in self.host_by_ip:
            self._count("dropped", "ARP")
            return
        target_mac = self.hosts[self.host_by_ip[to_ip]].mac
        frame = Frame(sender.mac, target_mac, sender.ip, to_ip, FrameKind.ARP_REPLY,
                      ArpBody(claimed_ip, claimed_mac),
                      self._next_seq(from_host), tick, from_host)
        self._enqueue(tick, frame, tick + 1)

    def subscribe(self, subscriber: str, protocol: Protocol, publisher: str) -> None:
        key = (publisher, protocol)
        subs = self._subscriptions.setdefault(key, [])
        if subscriber not in subs:
            subs.append(subscriber)
            subs.sort()

    def publish(self, from_host: str, message: Message, tick: int) -> None:
        """Fan a publish out to subscribers, one poisonable copy each.

        GOOSE stays inside the publisher's subnetwork; the routable
        protocols cross the WAN.
        """
        sender = self.hosts[from_host]
        for subscriber in self._subscriptions.get((from_host, message.protocol), []):
            sub_host = self.hosts[subscriber]
            if message.protocol == Protocol.GOOSE and \
                    sub_host.subnetwork != sender.subnetwork:
                continue
            self.send(from_host, sub_host.ip, message, tick)

    # -- stepping ------------------------------------------------------

    def step(self, tick: int) -> list[tuple[str, Frame]]:
        """Deliver everything due this tick, in (sender, seq) order."""
        # bind deferred frames whose ARP reply lands this tick
        due_waiting = [w for w in self._awaiting_arp if w[0] == tick]
        self._awaiting_arp = [w for w in self._awaiting_arp if w[0] != tick]

        due = sorted((f for f in self._queue if f[0] == tick),
                     key=lambda pair: (pair[1].sender, pair[1].seq))
        self._queue = [f for f in self._queue if f[0] != tick]

        deliveries: list[tuple[str, Frame]] = []
        for _, frame in due:
            if frame.kind == FrameKind.ARP_REQUEST:
                for name in sorted(self.hosts):
                    if name != frame.sender:
                        self._record_delivery(tick, name, frame)
                self._count("delivered", "ARP")
                continue
            if frame.kind == FrameKind.ARP_REPLY:
                recipient = self.host_by_mac.get(frame.dst_mac.lower())
                if recipient is not None:
                    body = frame.payload
                    self.arp[recipient][body.claimed_ip] = (body.claimed_mac, tick)
                    self._record_delivery(tick, recipient, frame)
                    self._count("delivered", "ARP")
                continue
            recipient = self.host_by_mac.get(frame.dst_mac.lower())
            if recipient is None:
                self._count("dropped", self._label(frame))
                self._on_event("alarm", {"what": "unresolvable-mac",
                                         "mac": frame.dst_mac, "from": frame.sender})
                continue
            self._record_delivery(tick, recipient, frame)
            self._count("delivered", self._label(frame))
            deliveries.append((recipient, frame))

        # frames that waited for ARP go out now with the freshly learned MAC
        for _, from_host, to_ip, message, spoof in sorted(
                due_waiting, key=lambda w: (w[1], w[2])):
            self.send(from_host, to_ip, message, tick, spoof=spoof)
        return deliveries

    def _record_delivery(self, tick: int, recipient: str, frame: Frame) -> None:
        for tap in self._taps:
            on_path = tap.node == recipient or tap.node == frame.sender or \
                tap.node in self._path_nodes(frame.sender, recipient)
            if on_path and tap.predicate(frame):
                tap.captured.append((tick, frame))
        msg = frame.payload if isinstance(frame.payload, Message) else None
        self.frame_log.append({
            "tick": tick,
            "src": frame.sender,
            "dst": recipient,
            "kind": frame.kind.value,
            "protocol": msg.protocol.value if msg else "ARP",
            "verb": msg.verb.value if msg else frame.kind.value,
            "path": msg.path if msg else "",
            "value": msg.value if msg else None,
            "seq": frame.seq,
        })

    def _path_nodes(self, a: str, b: str) -> frozenset:
        entry = self._paths.get((a, b))
        return entry[1] if entry else frozenset()

    # -- taps and export -------------------------------------------------

    def install_tap(self, node: str, predicate=None) -> TapHandle:
        if node not in self.hosts and node not in {s.name for s in self.cyber.switches}:
            raise KeyError(f"unknown node {node!r}")
        tap = TapHandle(node, predicate or (lambda f: True))
        self._taps.append(tap)
        return tap

    def in_flight(self) -> int:
        return len(self._queue) + len(self._awaiting_arp)

    def export_frame_log(self) -> str:
        lines = [json.dumps({"format_version": FRAME_LOG_VERSION})]
        lines.extend(json.dumps(rec, sort_keys=True) for rec in self.frame_log)
        return "\n".join(lines) + "\n"
