"""HTTP + server-push API over a running kernel.

Sessions are lightweight role tags (operator / attacker / observer), not an
authentication boundary: this is a training tool. Observers may read
everything including the ground-truth debug endpoint (that is the
instructor's view during deception exercises) but cannot change anything.
All mutation funnels through the kernel command queue; reads use the
immutable snapshot published at the end of each tick, so a response is
always internally consistent for one tick.

The tick stream is server-sent events with exactly one frame per tick per
subscriber, delivered in tick order.
"""

from __future__ import annotations

import asyncio
import json
import secrets

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import StreamingResponse

from sgml.kernel import Kernel
from sgml.model import BranchKind

API_VERSION = 1


def _topology_document(kernel: Kernel) -> dict:
    model = kernel.model
    sub = kernel.substation
    segments: dict[str, list[str]] = {}
    for bus in sub.buses:
        segments.setdefault(bus.voltage_level, []).append(bus.id)
    return {
        "format_version": API_VERSION,
        "physical": {
            "segments": [{"voltage_level": vl, "nominal_kv": next(
                v.nominal_kv for v in sub.voltage_levels if v.name == vl),
                "buses": buses} for vl, buses in sorted(segments.items())],
            "buses": [{"id": b.id, "voltage_level": b.voltage_level,
                       "nominal_kv": b.nominal_kv} for b in sub.buses],
            "branches": [{"id": b.id, "from": b.from_bus, "to": b.to_bus,
                          "kind": b.kind.value, "rating_a": b.rating_a}
                         for b in sub.branches],
            "switches": [{"id": s.id, "from": s.from_bus, "to": s.to_bus,
                          "kind": s.kind.value} for s in sub.switches],
            "loads": [{"id": l.id, "bus": l.bus} for l in sub.loads],
            "sources": [{"id": s.id, "bus": s.bus, "kind": s.kind.value}
                        for s in sub.sources],
            "tie_lines": [b.id for b in sub.branches if b.kind == BranchKind.TIE_LINE],
        },
        "cyber": {
            "subnetworks": [{"name": sn.name, "substation": sn.substation}
                            for sn in model.cyber.subnetworks],
            "hosts": [{"name": h.name, "role": h.role.value, "ip": h.ip,
                       "subnetwork": h.subnetwork} for h in model.cyber.hosts],
            "switches": [{"name": s.name, "subnetwork": s.subnetwork,
                          "wan": s.subnetwork == ""} for s in model.cyber.switches],
            "links": [{"a": l.endpoint_a, "b": l.endpoint_b,
                       "latency_ticks": l.latency_ticks} for l in model.cyber.links],
        },
    }


def create_app(kernel: Kernel) -> FastAPI:
    app = FastAPI(title="sgml-range", version="0.1.0")
    sessions: dict[str, str] = {}

    def role_of(x_session: str | None = Header(default=None)) -> str:
        if x_session is None:
            return "observer"
        role = sessions.get(x_session)
        if role is None:
            raise HTTPException(status_code=401, detail="unknown session")
        return role

    def require(role: str, *allowed: str) -> None:
        if role not in allowed:
            raise HTTPException(status_code=403,
                                detail=f"role {role!r} may not use this endpoint")

    @app.post("/api/session")
    def create_session(body: dict):
        role = body.get("role", "observer")
        if role not in ("operator", "attacker", "observer"):
            raise HTTPException(status_code=400, detail=f"unknown role {role!r}")
        session_id = secrets.token_hex(8)
        sessions[session_id] = role
        return {"session": session_id, "role": role}

    @app.get("/api/topology")
    def topology():
        return _topology_document(kernel)

    @app.get("/api/points")
    def points():
        return kernel.point_table()

    @app.get("/api/snapshot")
    def snapshot():
        snap = kernel.latest_snapshot
        if not snap:
            raise HTTPException(status_code=409, detail="no tick completed yet")
        return snap

    @app.get("/api/events")
    def events(since: int = 0):
        return {"events": kernel.events.entries(since_seq=since)}

    @app.get("/api/debug/ground-truth")
    def ground_truth():
        snap = kernel.latest_snapshot
        if not snap:
            raise HTTPException(status_code=409, detail="no tick completed yet")
        return {"tick": snap["tick"],
                "bus_voltage": snap["bus_voltage"],
                "branch_flow": snap["branch_flow"],
                "switch_state": snap["switch_state"]}

    @app.post("/api/control")
    def control(body: dict, role: str = Depends(role_of)):
        require(role, "operator")
        if "point" in body:
            command = {"type": "control", "point": body.get("point"),
                       "value": body.get("value")}
        elif "switch" in body:
            command = {"type": "breaker", "switch": body.get("switch"),
                       "action": body.get("action")}
        else:
            raise HTTPException(status_code=400, detail="need point or switch")
        accepted, detail = kernel.submit_command("hmi", command)
        if not accepted:
            raise HTTPException(status_code=404 if "unknown" in detail else 400,
                                detail=detail)
        return {"accepted": True, "detail": detail, "apply_tick": kernel.tick + 1}

    @app.post("/api/attack/step")
    def attack_step(body: dict, role: str = Depends(role_of)):
        require(role, "attacker")
        command = {"type": "attack_step", "attacker": body.get("attacker"),
                   "step": body.get("step", {})}
        accepted, detail = kernel.submit_command("attack", command)
        if not accepted:
            raise HTTPException(status_code=400, detail=detail)
        return {"accepted": True, "detail": detail, "apply_tick": kernel.tick + 1}

    @app.post("/api/sim/pause")
    def pause(role: str = Depends(role_of)):
        require(role, "operator")
        kernel.pause()
        return {"paused": True, "tick": kernel.tick}

    @app.post("/api/sim/resume")
    def resume(role: str = Depends(role_of)):
        require(role, "operator")
        kernel.resume()
        return {"paused": False, "tick": kernel.tick}

    @app.post("/api/sim/step")
    def step(role: str = Depends(role_of)):
        require(role, "operator")
        report = kernel.step_once()
        if report is None:
            raise HTTPException(status_code=409, detail="kernel is not paused")
        return {"tick": report.tick}

    @app.get("/api/stream")
    async def stream(streams: str = "ticks", limit: int = 0):
        """One frame per tick in tick order; limit=N closes after N frames."""
        wanted = set(streams.split(","))

        async def generate():
            last_tick = kernel.tick
            last_seq = kernel.events.count()
            emitted = 0
            while limit <= 0 or emitted < limit:
                if kernel.tick > last_tick:
                    last_tick += 1
                    frame: dict = {"tick": last_tick}
                    if "ticks" in wanted:
                        frame["snapshot"] = kernel.snapshot_at(last_tick) \
                            or {"tick": last_tick}
                    if "events" in wanted:
                        new = kernel.events.entries(since_seq=last_seq)
                        current = [e for e in new if e["tick"] <= last_tick]
                        if current:
                            last_seq = current[-1]["seq"]
                        frame["events"] = current
                    yield f"data: {json.dumps(frame)}\n\n"
                    emitted += 1
                else:
                    await asyncio.sleep(0.005)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/api/health")
    def health():
        return {"tick": kernel.tick, "paused": kernel.paused,
                "backend": _backend_name()}

    return app


def _backend_name() -> str:
    from sgml.powerflow import accel
    return accel.BACKEND
