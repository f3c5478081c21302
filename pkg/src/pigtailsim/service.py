"""Session-oriented HTTP + WebSocket service for the virtual rig.

Message schema (version 1):

- command envelope:  {"v": 1, "seq": <int>, "name": <str>, "params": {}}
- reply envelope:    {"v": 1, "seq": <int>, "ok": true, "result": {...}}
                 or  {"v": 1, "seq": <int>, "ok": false,
                      "error": {"type": <str>, "message": <str>}}
- stream frames:     {"v": 1, "type": "snapshot"|"spectrum"|"events",
                      "payload": {...}}

Domain errors (phase violations, estimator failures) come back as
ok=false replies with HTTP 200 so operators see them inline; protocol
errors use HTTP status codes: 404 unknown session, 400 malformed
command (bad name, bad sequence number, bad params).

Per session, commands execute strictly in submission order under a
lock, and sequence numbers must increase strictly.  The live stream is
read-only: it acquires monitoring spectra at a capped cadence and never
blocks command execution.
"""

from __future__ import annotations

import asyncio
import threading
import uuid
from dataclasses import asdict, replace

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from . import rig
from .budget import (
    EfficiencyBudget,
    Measured,
    compare_to_simulation,
    infer_coupling,
)
from .errors import PigtailSimError
from .modes import DeviceSpec, PillarSpec
from .photons import (
    HBT,
    HOM,
    SourceParams,
    TimeTags,
    analyze_stream,
    fit_saturation,
    g2_zero,
    histogram_coincidences,
    hom_visibility,
    simulate_stream,
    stability_stats,
)
from .spectra import Spectrum, estimate_gap, find_mode_dips

SCHEMA_VERSION = 1
STREAM_RATE_CAP_HZ = 10.0


class CommandEnvelope(BaseModel):
    v: int = SCHEMA_VERSION
    seq: int
    name: str
    params: dict = Field(default_factory=dict)


class CreateSessionRequest(BaseModel):
    seed: int = 0
    config: dict = Field(default_factory=dict)
    pillar: dict = Field(default_factory=dict)


class _Session:
    def __init__(self, session_id: str, state: rig.RigState):
        self.id = session_id
        self.state = state
        self.lock = threading.Lock()
        self.last_seq = 0
        self.created_at = state.sim_time_s


def _spectrum_payload(spectrum: Spectrum) -> dict:
    wl = spectrum.wavelengths_nm
    return {
        "axis": {
            "start_nm": float(wl[0]),
            "step_nm": float(spectrum.resolution_nm),
            "n": int(len(wl)),
        },
        "reflectivity": [round(float(v), 5) for v in spectrum.reflectivity],
        "normalization": spectrum.normalization,
    }


def _spectrum_readouts(state: rig.RigState, spectrum: Spectrum) -> dict:
    """Server-side estimates attached to each spectrum frame."""
    try:
        gap = estimate_gap(spectrum)
        gap_payload = {
            "gap_um": round(gap.gap_um, 4),
            "sigma_um": round(gap.sigma_um, 4),
            "method": gap.method,
        }
    except PigtailSimError as exc:
        gap_payload = {"error": type(exc).__name__, "message": str(exc)}
    dips = find_mode_dips(
        spectrum, state.device.pillar, state.expected_mode_wavelengths_nm()
    )
    return {
        "gap": gap_payload,
        "dips": [
            {
                "mode_order": d.mode_order,
                "contrast": round(d.contrast, 4),
                "center_wavelength_nm": round(d.center_wavelength_nm, 4),
                "found": d.found,
            }
            for d in dips
        ],
    }


def _snapshot(session: _Session) -> dict:
    state = session.state
    payload = {
        "session_id": session.id,
        "phase": state.phase,
        "stage_position_um": list(state.stage_position_um),
        "gap_um": round(state.gap_um, 4),
        "temperature_k": round(state.temperature_k, 3),
        "ferrule_locked": state.ferrule_locked,
        "sim_time_s": round(state.sim_time_s, 3),
        "n_events": len(state.event_log),
        "seq": session.last_seq,
    }
    # training reveal: the hidden residual becomes visible once secured
    if state.phase in (rig.SECURED, rig.COLD):
        payload["residual_offset_um"] = round(state.true_offset_um, 5)
    else:
        payload["residual_offset_um"] = None
    return payload


def create_app(device: DeviceSpec | None = None) -> FastAPI:
    app = FastAPI(title="pigtailsim rig service")
    base_device = device if device is not None else DeviceSpec()
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> _Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/v1/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            config = rig.RigConfig(**req.config)
            dev = base_device
            if req.pillar:
                dev = replace(base_device, pillar=PillarSpec(**req.pillar))
            state = rig.new_session(dev, config, req.seed)
        except (TypeError, PigtailSimError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session = _Session(uuid.uuid4().hex, state)
        with registry_lock:
            sessions[session.id] = session
        return {"v": SCHEMA_VERSION, "session_id": session.id,
                "snapshot": _snapshot(session)}

    @app.get("/v1/sessions/{session_id}/state")
    def session_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {"v": SCHEMA_VERSION, "snapshot": _snapshot(session)}

    @app.delete("/v1/sessions/{session_id}")
    def close_session(session_id: str):
        session = get_session(session_id)
        with registry_lock:
            sessions.pop(session_id, None)
        return {"v": SCHEMA_VERSION, "closed": session_id}

    def execute(session: _Session, name: str, params: dict) -> dict:
        state = session.state
        if name == "move-stage":
            session.state = rig.move_stage(
                state,
                float(params.get("dx_um", 0.0)),
                float(params.get("dy_um", 0.0)),
                float(params.get("dz_um", 0.0)),
            )
            return {"snapshot": _snapshot(session)}
        if name == "acquire-spectrum":
            session.state, spectrum = rig.acquire_spectrum(state)
            out = {"spectrum": _spectrum_payload(spectrum)}
            out.update(_spectrum_readouts(session.state, spectrum))
            return out
        if name == "vertical-landing":
            session.state = rig.vertical_landing(state)
            landed = [e for e in session.state.event_log if e.kind == "landed"][-1]
            return {"snapshot": _snapshot(session), "landing": landed.payload}
        if name == "auto-align":
            session.state, report = rig.auto_align(state)
            payload = asdict(report)
            payload["trajectory"] = [list(p) for p in report.trajectory]
            # keep the hidden residual hidden until secured
            if session.state.phase not in (rig.SECURED, rig.COLD):
                payload["residual_offset_um"] = None
            return {"snapshot": _snapshot(session), "report": payload}
        if name == "secure":
            session.state = rig.secure(state)
            return {"snapshot": _snapshot(session)}
        if name == "cooldown":
            session.state, series = rig.run_cooldown(
                state,
                params.get("target_temp_k"),
                int(params.get("n_steps", 30)),
            )
            steps = []
            for temp, spectrum in series:
                probe = replace(session.state, temperature_k=temp)
                readout = _spectrum_readouts(probe, spectrum)
                steps.append({"temperature_k": round(temp, 3), **readout})
            return {"snapshot": _snapshot(session), "steps": steps}
        if name == "thermal-cycle":
            session.state, report = rig.thermal_cycle(
                state, int(params.get("n_cycles", 9))
            )
            payload = asdict(report)
            payload["mode_wavelengths_nm"] = [
                list(r) for r in report.mode_wavelengths_nm
            ]
            payload["mode_contrasts"] = [list(r) for r in report.mode_contrasts]
            return {"snapshot": _snapshot(session), "report": payload}
        if name == "photon-run":
            source = SourceParams()
            n_pulses = int(params.get("n_pulses", 1_000_000))
            seed = int(params.get("seed", session.state.seed))
            power = params.get("excitation_power")
            power = float(power) if power is not None else None
            tags_hbt = simulate_stream(source, n_pulses, power, seed, HBT)
            tags_hom = simulate_stream(source, n_pulses, power, seed + 1, HOM)
            metrics = analyze_stream(
                source,
                histogram_coincidences(tags_hbt),
                histogram_coincidences(tags_hom),
                tags_hbt.detected_rate_hz(),
            )
            return {
                "g2_zero": [metrics.g2_zero.value, metrics.g2_zero.sigma],
                "v_hom": [metrics.v_hom.value, metrics.v_hom.sigma],
                "indistinguishability": [
                    metrics.indistinguishability.value,
                    metrics.indistinguishability.sigma,
                ],
                "detected_rate_hz": metrics.detected_rate_hz,
                "fibered_brightness": metrics.fibered_brightness,
            }
        raise HTTPException(status_code=400, detail=f"unknown command {name!r}")

    @app.post("/v1/sessions/{session_id}/command")
    def run_command(session_id: str, envelope: CommandEnvelope):
        session = get_session(session_id)
        if envelope.v != SCHEMA_VERSION:
            raise HTTPException(status_code=400, detail="unsupported schema version")
        with session.lock:
            if envelope.seq <= session.last_seq:
                raise HTTPException(
                    status_code=400,
                    detail=f"sequence number must exceed {session.last_seq}",
                )
            session.last_seq = envelope.seq
            try:
                result = execute(session, envelope.name, envelope.params)
            except PigtailSimError as exc:
                return {
                    "v": SCHEMA_VERSION,
                    "seq": envelope.seq,
                    "ok": False,
                    "error": {"type": type(exc).__name__, "message": str(exc)},
                }
        return {"v": SCHEMA_VERSION, "seq": envelope.seq, "ok": True, "result": result}

    @app.websocket("/v1/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        await websocket.accept()
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            await websocket.send_json(
                {"v": SCHEMA_VERSION, "type": "error",
                 "payload": {"type": "UnknownSessionError"}}
            )
            await websocket.close()
            return
        interval = 1.0 / STREAM_RATE_CAP_HZ
        last_event = 0
        try:
            await websocket.send_json(
                {"v": SCHEMA_VERSION, "type": "snapshot", "payload": _snapshot(session)}
            )
            while True:
                def monitor_tick():
                    with session.lock:
                        session.state, spectrum = rig.acquire_spectrum(session.state)
                        return (
                            _snapshot(session),
                            _spectrum_payload(spectrum),
                            _spectrum_readouts(session.state, spectrum),
                            list(session.state.event_log),
                        )

                snapshot, spectrum_payload, readouts, events = (
                    await asyncio.to_thread(monitor_tick)
                )
                await websocket.send_json(
                    {
                        "v": SCHEMA_VERSION,
                        "type": "spectrum",
                        "payload": {**spectrum_payload, **readouts},
                    }
                )
                await websocket.send_json(
                    {"v": SCHEMA_VERSION, "type": "snapshot", "payload": snapshot}
                )
                fresh = [
                    {"seq": e.seq, "time_s": e.time_s, "event": e.kind,
                     "payload": e.payload}
                    for e in events[last_event:]
                ]
                last_event = len(events)
                if fresh:
                    await websocket.send_json(
                        {"v": SCHEMA_VERSION, "type": "events", "payload": fresh}
                    )
                await asyncio.sleep(interval)
        except WebSocketDisconnect:
            return

    @app.post("/v1/analyze/saturation")
    def analyze_saturation(body: dict):
        points = body.get("points")
        if not points:
            raise HTTPException(status_code=400, detail="points required")
        try:
            fit = fit_saturation(points)
        except (PigtailSimError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "v": SCHEMA_VERSION,
            "r_inf_hz": fit.r_inf_hz,
            "p_sat": fit.p_sat,
            "residual": fit.residual,
            "well_constrained": fit.well_constrained,
        }

    @app.post("/v1/analyze/stability")
    def analyze_stability(body: dict):
        try:
            stats = stability_stats(body.get("times_s", []), body.get("values", []))
        except (PigtailSimError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "v": SCHEMA_VERSION,
            "mean": stats.mean,
            "relative_std": stats.relative_std,
            "drift_per_hour": stats.drift_per_hour,
            "n_samples": stats.n_samples,
        }

    @app.post("/v1/analyze/budget")
    def analyze_budget(body: dict):
        factors = body.get("factors", {})
        try:
            kwargs = {
                name: Measured(float(v[0]), float(v[1]))
                for name, v in factors.items()
            }
            budget = EfficiencyBudget(**kwargs)
            inferred, in_range = infer_coupling(budget)
        except (PigtailSimError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        simulated = body.get("simulated_coupling")
        result = {
            "v": SCHEMA_VERSION,
            "pillar_to_fiber": [inferred.value, inferred.sigma],
            "in_range": in_range,
        }
        if simulated is not None:
            report = compare_to_simulation(inferred, float(simulated))
            result["comparison"] = {
                "sigma_distance": report.sigma_distance,
                "verdict": report.verdict,
                "notes": list(report.notes),
            }
        return result

    def _tags_from_body(body: dict) -> TimeTags:
        channels = {
            int(ch): np.asarray(ts, dtype=np.int64)
            for ch, ts in body.get("channels", {}).items()
        }
        return TimeTags(
            channels,
            body.get("kind", HBT),
            float(body.get("rep_rate_hz", 79.21e6)),
            float(body.get("duration_ps", 0.0)),
        )

    @app.post("/v1/analyze/g2")
    def analyze_g2(body: dict):
        try:
            tags = _tags_from_body(body)
            hist = histogram_coincidences(tags)
            value = g2_zero(hist)
        except (PigtailSimError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"v": SCHEMA_VERSION, "g2_zero": [value.value, value.sigma]}

    @app.post("/v1/analyze/hom")
    def analyze_hom(body: dict):
        try:
            tags = _tags_from_body(body)
            hist = histogram_coincidences(tags)
            value = hom_visibility(hist)
        except (PigtailSimError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"v": SCHEMA_VERSION, "v_hom": [value.value, value.sigma]}

    return app


def serve(host: str = "127.0.0.1", port: int = 8123, device: DeviceSpec | None = None):
    """Run the rig service under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(device), host=host, port=port, log_level="warning")
