"""JSON-over-HTTP service exposing the analysis pipeline per session.

A session walks a one-way stage machine:

    loaded -> separated -> onsets_ready -> interpreted

Each stage's endpoint refuses to run before its inputs exist (409), and
re-running a stage invalidates everything downstream of it: a new
separation wipes onsets and trajectories, new onsets wipe that stream's
trajectory.  Every mutation bumps the session's revision counter, which
clients echo back to detect that a result they are holding went stale.

The service keeps sessions in memory; it is a desk tool, not a fleet
service.  A lock per session serializes its mutations while distinct
sessions proceed in parallel.
"""

from __future__ import annotations

import hashlib
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .audio_io import AudioBuffer, decode_wav, encode_wav, to_mono
from .errors import CorruptHeaderError, RhythmkitError, UnsupportedFormatError
from .onsets import OnsetConfig, OnsetList, detect_onsets
from .render import MidiRenderConfig, onsets_to_csv, to_midi
from .separate import SeparatedStream, isa_separate
from .spectral import StftConfig
from .tatum import PulseTrajectory, TatumConfig, trajectory

_STAGES = ("loaded", "separated", "onsets_ready", "interpreted")


@dataclass
class Session:
    session_id: str
    buffer: AudioBuffer
    stage: str = "loaded"
    revision: int = 0
    streams: list[SeparatedStream] = field(default_factory=list)
    onsets: dict[int, OnsetList] = field(default_factory=dict)
    trajectories: dict[int, PulseTrajectory] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def require_stage(self, minimum: str) -> None:
        if _STAGES.index(self.stage) < _STAGES.index(minimum):
            raise HTTPException(
                status_code=409,
                detail="session is at stage %r; %r required" % (self.stage, minimum),
            )


class SeparateRequest(BaseModel):
    components: int = 2
    window_length: int = 1024
    hop: int = 512
    window: str = "hamming"
    rotate_basis: str = "temporal"


class OnsetsRequest(BaseModel):
    decimation_factor: int = 20
    smoothing_window_ms: float = 200.0
    threshold: float = 0.3
    min_spacing_s: float = 0.05
    loudness_window_ms: float = 200.0
    normalize_rdf: bool = True


class TatumRequest(BaseModel):
    frame_s: float = 0.5
    decay: float = 0.8
    histogram_rate: float = 1000.0
    max_ioi_s: float = 1.0
    min_q_s: float = 0.05
    minima_tolerance: float = 0.15


def _checksum(buffer: AudioBuffer) -> str:
    return hashlib.sha1(buffer.samples.astype("<f4").tobytes()).hexdigest()


def _stream_summary(stream: SeparatedStream) -> dict:
    return {
        "index": stream.component_index,
        "duration_s": stream.audio.duration_s,
        "energy": float(np.sum(np.square(stream.audio.samples))),
        "checksum": _checksum(stream.audio),
    }


def _onsets_payload(onsets: OnsetList) -> dict:
    return {
        "times": [float(t) for t in onsets.times],
        "loudness": [float(x) for x in onsets.loudness],
    }


def _trajectory_payload(traj: PulseTrajectory) -> dict:
    return {
        "frame_times": [float(t) for t in traj.frame_times],
        "pulse_s": [None if np.isnan(p) else float(p) for p in traj.pulse_s],
    }


def create_app() -> FastAPI:
    app = FastAPI(title="rhythmkit")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session %r" % session_id)
        return session

    def get_stream(session: Session, index: int) -> SeparatedStream:
        session.require_stage("separated")
        if not 0 <= index < len(session.streams):
            raise HTTPException(
                status_code=404,
                detail="no stream %d; session has %d" % (index, len(session.streams)),
            )
        return session.streams[index]

    @app.post("/sessions")
    async def create_session(request: Request):
        data = await request.body()
        try:
            buffer = to_mono(decode_wav(data))
        except (CorruptHeaderError, UnsupportedFormatError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session = Session(session_id=uuid.uuid4().hex, buffer=buffer)
        with registry_lock:
            sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "stage": session.stage,
            "revision": session.revision,
            "sample_rate": buffer.sample_rate,
            "duration_s": buffer.duration_s,
        }

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        session = get_session(session_id)
        return {
            "session_id": session.session_id,
            "stage": session.stage,
            "revision": session.revision,
            "sample_rate": session.buffer.sample_rate,
            "duration_s": session.buffer.duration_s,
            "streams": [_stream_summary(s) for s in session.streams],
        }

    @app.post("/sessions/{session_id}/separate")
    def separate(session_id: str, body: SeparateRequest):
        session = get_session(session_id)
        with session.lock:
            try:
                config = StftConfig(
                    window_length=body.window_length, hop=body.hop, window=body.window
                )
                streams = isa_separate(
                    session.buffer,
                    components=body.components,
                    config=config,
                    rotate_basis=body.rotate_basis,
                )
            except (RhythmkitError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            session.streams = streams
            session.onsets = {}
            session.trajectories = {}
            session.stage = "separated"
            session.revision += 1
            return {
                "revision": session.revision,
                "stage": session.stage,
                "streams": [_stream_summary(s) for s in streams],
            }

    @app.get("/sessions/{session_id}/streams/{index}/waveform")
    def waveform(session_id: str, index: int, points: int = 800):
        session = get_session(session_id)
        stream = get_stream(session, index)
        if not 1 <= points <= 100_000:
            raise HTTPException(status_code=422, detail="points must be in 1..100000")
        x = stream.audio.mono
        edges = np.linspace(0, x.size, points + 1).astype(int)
        pairs = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                segment = x[a:b]
                pairs.append([float(segment.min()), float(segment.max())])
            else:
                value = float(x[min(a, x.size - 1)]) if x.size else 0.0
                pairs.append([value, value])
        return {
            "revision": session.revision,
            "checksum": _checksum(stream.audio),
            "sample_rate": stream.audio.sample_rate,
            "duration_s": stream.audio.duration_s,
            "points": pairs,
        }

    @app.post("/sessions/{session_id}/streams/{index}/onsets")
    def compute_onsets(session_id: str, index: int, body: OnsetsRequest):
        session = get_session(session_id)
        with session.lock:
            stream = get_stream(session, index)
            try:
                config = OnsetConfig(**body.model_dump())
                result = detect_onsets(stream.audio, config)
            except (RhythmkitError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            session.onsets[index] = result
            session.trajectories.pop(index, None)
            if session.stage == "separated":
                session.stage = "onsets_ready"
            session.revision += 1
            return {
                "revision": session.revision,
                "stage": session.stage,
                "checksum": _checksum(stream.audio),
                "onsets": _onsets_payload(result),
            }

    @app.get("/sessions/{session_id}/streams/{index}/onsets")
    def read_onsets(session_id: str, index: int):
        session = get_session(session_id)
        get_stream(session, index)
        if index not in session.onsets:
            raise HTTPException(
                status_code=409, detail="onsets not yet computed for stream %d" % index
            )
        return {
            "revision": session.revision,
            "onsets": _onsets_payload(session.onsets[index]),
        }

    @app.post("/sessions/{session_id}/streams/{index}/tatum")
    def compute_tatum(session_id: str, index: int, body: TatumRequest):
        session = get_session(session_id)
        with session.lock:
            get_stream(session, index)
            if index not in session.onsets:
                raise HTTPException(
                    status_code=409, detail="onsets required before pulse tracking"
                )
            try:
                config = TatumConfig(**body.model_dump())
                config.validate()
                result = trajectory(
                    session.onsets[index], session.buffer.duration_s, config
                )
            except (RhythmkitError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            session.trajectories[index] = result
            session.stage = "interpreted"
            session.revision += 1
            return {
                "revision": session.revision,
                "stage": session.stage,
                "trajectory": _trajectory_payload(result),
            }

    @app.get("/sessions/{session_id}/streams/{index}/trajectory")
    def read_trajectory(session_id: str, index: int):
        session = get_session(session_id)
        get_stream(session, index)
        if index not in session.trajectories:
            raise HTTPException(
                status_code=409, detail="trajectory not yet computed for stream %d" % index
            )
        return {
            "revision": session.revision,
            "trajectory": _trajectory_payload(session.trajectories[index]),
        }

    @app.get("/sessions/{session_id}/streams/{index}/export")
    def export(session_id: str, index: int, format: str = "wav"):
        session = get_session(session_id)
        stream = get_stream(session, index)
        if format == "wav":
            return Response(
                content=encode_wav(stream.audio, sample_format="float32"),
                media_type="audio/wav",
            )
        if format in ("midi", "csv"):
            if index not in session.onsets:
                raise HTTPException(
                    status_code=409, detail="onsets required before %s export" % format
                )
            if format == "midi":
                return Response(
                    content=to_midi(session.onsets[index], MidiRenderConfig()),
                    media_type="audio/midi",
                )
            return Response(
                content=onsets_to_csv(session.onsets[index]), media_type="text/csv"
            )
        raise HTTPException(status_code=422, detail="format must be wav, midi, or csv")

    return app
