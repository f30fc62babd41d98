"""Attack primitives and the declarative scenario script.

Two families from the case studies: false command injection (a protocol-
valid MMS operate emitted from a compromised or attacker-slot host) and
ARP-spoof man-in-the-middle with per-flow payload transforms. Attacks act
only through the simulated network; nothing here touches the physical
state store, so ground truth stays intact while views diverge.

Script files are JSON:

    {
      "attacker": "S1/IED9",
      "steps": [
        {"at": 10, "action": "arp_poison", "victim_a": "10.0.1.21",
                                           "victim_b": "10.0.1.20"},
        {"at": 12, "action": "intercept",
         "match": {"protocol": "MMS", "verb": "response", "path": "v_tb2"},
         "transform": {"scale": 0.5}},
        {"at": 30, "action": "inject_mms", "target": "10.0.1.12",
         "path": "XCBR1.Pos", "verb": "operate", "value": "open"},
        {"at": 80, "action": "restore_arp"},
        {"at": 80, "action": "stop_intercept"}
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from sgml.netsim import Frame, Message, Protocol, Verb, VirtualNetwork, match_filter

_ACTIONS = {"inject_mms", "arp_poison", "intercept", "stop_intercept", "restore_arp"}
_TRANSFORMS = {"scale", "offset", "replace", "drop"}


class AttackScriptError(ValueError):
    pass


@dataclass(frozen=True)
class AttackStep:
    at: int
    action: str
    params: dict

    @staticmethod
    def from_dict(raw: dict) -> "AttackStep":
        action = raw.get("action")
        if action not in _ACTIONS:
            raise AttackScriptError(f"unknown action {action!r}")
        at = raw.get("at")
        if not isinstance(at, int) or at < 0:
            raise AttackScriptError(f"step {action!r} needs a nonnegative integer 'at'")
        params = {k: v for k, v in raw.items() if k not in ("at", "action")}
        if action == "inject_mms":
            for key in ("target", "path", "verb", "value"):
                if key not in params:
                    raise AttackScriptError(f"inject_mms needs {key!r}")
            if params["verb"] not in ("operate", "write", "read"):
                raise AttackScriptError(f"inject_mms verb {params['verb']!r} not allowed")
        elif action == "arp_poison":
            for key in ("victim_a", "victim_b"):
                if key not in params:
                    raise AttackScriptError(f"arp_poison needs {key!r}")
        elif action == "intercept":
            transform = params.get("transform")
            if not isinstance(transform, dict) or \
                    not (set(transform) & _TRANSFORMS):
                raise AttackScriptError("intercept needs a transform of scale/offset/replace/drop")
        return AttackStep(at=at, action=action, params=params)


@dataclass(frozen=True)
class AttackScript:
    attacker: str
    steps: tuple[AttackStep, ...]

    @staticmethod
    def from_dict(raw: dict) -> "AttackScript":
        attacker = raw.get("attacker")
        if not attacker:
            raise AttackScriptError("script needs an attacker host")
        steps = tuple(AttackStep.from_dict(s) for s in raw.get("steps", []))
        last = -1
        poisoned = False
        for step in steps:
            if step.at < last:
                raise AttackScriptError("step ticks must be nondecreasing")
            last = step.at
            if step.action == "arp_poison":
                poisoned = True
            elif step.action == "restore_arp":
                poisoned = False
            elif step.action == "intercept" and not poisoned:
                raise AttackScriptError("intercept requires an active arp_poison")
        return AttackScript(attacker=attacker, steps=steps)

    @staticmethod
    def load(path: str) -> "AttackScript":
        with open(path, "r", encoding="utf-8") as fh:
            return AttackScript.from_dict(json.load(fh))


@dataclass
class InterceptRule:
    predicate: object
    transform: dict
    raw_match: dict


@dataclass
class AttackerRuntime:
    """Relay behavior of the attacker host plus its scripted actions."""

    host: str
    net: VirtualNetwork
    rules: list[InterceptRule] = field(default_factory=list)
    poisons: list[tuple[str, str]] = field(default_factory=list)
    inbox: list[Frame] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.host

    def deliver(self, frame: Frame) -> None:
        self.inbox.append(frame)

    # -- scripted actions ----------------------------------------------

    def execute(self, step: AttackStep, ctx) -> None:
        handler = getattr(self, f"_do_{step.action}")
        handler(step.params, ctx)

    def _do_inject_mms(self, params: dict, ctx) -> None:
        message = Message(Protocol.MMS, Verb(params["verb"]), params["path"],
                          params["value"], correlation_id=f"{self.host}!inj{ctx.tick}")
        ctx.send(params["target"], message)
        ctx.event("attack", {"what": "inject_mms", "attacker": self.host,
                             "target": params["target"], "path": params["path"],
                             "verb": params["verb"], "value": params["value"]})

    def _do_arp_poison(self, params: dict, ctx) -> None:
        a, b = params["victim_a"], params["victim_b"]
        host_a = self.net.host_by_ip.get(a)
        host_b = self.net.host_by_ip.get(b)
        if host_a is None or host_b is None:
            ctx.event("attack", {"what": "arp_poison-failed", "attacker": self.host,
                                 "reason": "unknown victim ip"})
            return
        if not (self.net.reachable(self.host, host_a) and self.net.reachable(self.host, host_b)):
            ctx.event("attack", {"what": "arp_poison-failed", "attacker": self.host,
                                 "reason": "no common switched path"})
            return
        my_mac = self.net.hosts[self.host].mac
        self.net.send_arp_reply(self.host, a, claimed_ip=b, claimed_mac=my_mac, tick=ctx.tick)
        self.net.send_arp_reply(self.host, b, claimed_ip=a, claimed_mac=my_mac, tick=ctx.tick)
        self.poisons.append((a, b))
        ctx.event("attack", {"what": "arp_poison", "attacker": self.host,
                             "victim_a": a, "victim_b": b})

    def _do_intercept(self, params: dict, ctx) -> None:
        match = params.get("match", {})
        self.rules.append(InterceptRule(match_filter(**match), params["transform"], match))
        ctx.event("attack", {"what": "intercept", "attacker": self.host,
                             "match": match, "transform": params["transform"]})

    def _do_stop_intercept(self, params: dict, ctx) -> None:
        self.rules.clear()
        ctx.event("attack", {"what": "stop_intercept", "attacker": self.host})

    def _do_restore_arp(self, params: dict, ctx) -> None:
        for a, b in self.poisons:
            host_a = self.net.host_by_ip.get(a)
            host_b = self.net.host_by_ip.get(b)
            if host_a is None or host_b is None:
                continue
            self.net.send_arp_reply(self.host, a, claimed_ip=b,
                                    claimed_mac=self.net.hosts[host_b].mac, tick=ctx.tick)
            self.net.send_arp_reply(self.host, b, claimed_ip=a,
                                    claimed_mac=self.net.hosts[host_a].mac, tick=ctx.tick)
        self.poisons.clear()
        ctx.event("attack", {"what": "restore_arp", "attacker": self.host})

    # -- relay ------------------------------------------------------------

    def _transform_value(self, transform: dict, message: Message, ctx):
        if "replace" in transform:
            return message.value, transform["replace"], True
        if "scale" in transform or "offset" in transform:
            if not isinstance(message.value, (int, float)) or isinstance(message.value, bool):
                ctx.event("attack", {"what": "transform-skipped", "attacker": self.host,
                                     "reason": "non-numeric value", "path": message.path})
                return message.value, message.value, False
            value = message.value
            if "scale" in transform:
                value = value * transform["scale"]
            if "offset" in transform:
                value = value + transform["offset"]
            return message.value, value, True
        return message.value, message.value, False

    def scan(self, ctx) -> None:
        inbox, self.inbox = self.inbox, []
        own_ip = self.net.hosts[self.host].ip
        for frame in inbox:
            if frame.dst_ip == own_ip or not isinstance(frame.payload, Message):
                continue  # traffic genuinely addressed here is just observed
            message = frame.payload
            rule = next((r for r in self.rules if r.predicate(frame)), None)
            if rule is not None:
                if rule.transform.get("drop"):
                    ctx.event("attack", {"what": "frame-dropped", "attacker": self.host,
                                         "path": message.path, "dst": frame.dst_ip})
                    continue
                original, new_value, changed = self._transform_value(rule.transform, message, ctx)
                if changed:
                    message = Message(message.protocol, message.verb, message.path,
                                      new_value, message.correlation_id, ok=message.ok)
                    ctx.event("attack", {"what": "frame-manipulated", "attacker": self.host,
                                         "path": message.path, "original": original,
                                         "value": new_value, "dst": frame.dst_ip})
            # relay onward with the original addresses so both victims keep
            # seeing an end-to-end conversation
            self.net.send(self.host, frame.dst_ip, message, ctx.tick,
                          spoof=(frame.src_ip, frame.src_mac))
