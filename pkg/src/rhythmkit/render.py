"""Rendering of analysis results: standard MIDI files, click tracks, CSV.

The MIDI writer emits the smallest useful artifact: a type-0 file with
one track holding a tempo event and one note-on/note-off pair per
onset on the percussion channel.  Onset seconds convert to ticks as
round(time * tempo / 60 * ppq); loudness scales linearly into velocity
with a floor of 1, because a velocity of 0 is a note-off in disguise
and would silence the onset it was supposed to mark.

Everything here is deterministic byte for byte: equal inputs produce
equal files, which is what makes re-running a pipeline a no-op diff.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import ClippingWarning
from .onsets import OnsetList
from .tatum import PulseTrajectory


@dataclass(frozen=True)
class MidiRenderConfig:
    """Tick resolution, tempo, and the drum note onsets map onto."""

    ppq: int = 480
    tempo_bpm: float = 120.0
    note_number: int = 38  # general-MIDI acoustic snare
    note_length_ticks: int = 120
    channel: int = 9

    def validate(self) -> None:
        if self.ppq < 1 or self.tempo_bpm <= 0:
            raise ValueError("ppq and tempo_bpm must be positive")
        if not 0 <= self.note_number <= 127:
            raise ValueError("note_number must be a MIDI note, 0..127")
        if self.note_length_ticks < 1:
            raise ValueError("note_length_ticks must be positive")
        if not 0 <= self.channel <= 15:
            raise ValueError("channel must be 0..15")


def _variable_length(value: int) -> bytes:
    # MIDI variable-length quantity: 7 bits per byte, high bit marks "more"
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def _velocity(loudness: float, loudest: float) -> int:
    if loudest <= 0.0:
        return 1
    return int(min(max(round(127.0 * loudness / loudest), 1), 127))


def to_midi(onsets: OnsetList, config: MidiRenderConfig = MidiRenderConfig()) -> bytes:
    """Serialize onsets as a type-0 standard MIDI file."""
    config.validate()
    ticks_per_second = config.tempo_bpm / 60.0 * config.ppq
    loudest = float(onsets.loudness.max()) if len(onsets) else 0.0

    # (tick, order, message): note-offs sort ahead of note-ons at equal
    # ticks so a retrigger at the same instant never stacks notes
    events = []
    for t, loud in zip(onsets.times, onsets.loudness):
        tick = int(round(t * ticks_per_second))
        velocity = _velocity(float(loud), loudest)
        events.append((tick, 1, bytes([0x90 | config.channel, config.note_number, velocity])))
        events.append(
            (tick + config.note_length_ticks, 0, bytes([0x80 | config.channel, config.note_number, 64]))
        )
    events.sort(key=lambda e: (e[0], e[1]))

    microseconds_per_quarter = int(round(60_000_000 / config.tempo_bpm))
    track = bytearray()
    track += _variable_length(0)
    track += bytes([0xFF, 0x51, 0x03]) + microseconds_per_quarter.to_bytes(3, "big")
    cursor = 0
    for tick, _, message in events:
        track += _variable_length(tick - cursor)
        track += message
        cursor = tick
    track += _variable_length(0) + bytes([0xFF, 0x2F, 0x00])  # end of track

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, config.ppq)
    return header + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)


def default_click(sample_rate: int, frequency: float = 1500.0, length_ms: float = 12.0) -> np.ndarray:
    """A short decaying sine burst suitable for audible onset markers."""
    n = max(int(round(length_ms * sample_rate / 1000.0)), 1)
    t = np.arange(n) / sample_rate
    return np.sin(2.0 * np.pi * frequency * t) * np.exp(-t / (length_ms / 4000.0))


def render_clicks(
    onsets: OnsetList,
    click: np.ndarray,
    duration_s: float,
    sample_rate: int,
) -> AudioBuffer:
    """Place one loudness-scaled copy of the click at each onset.

    The output holds exactly duration_s * sample_rate samples; clicks
    running past the end are truncated.  Overlapping clicks add, and the
    sum is clipped to [-1, 1] with a warning rather than wrapped.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    out = np.zeros(int(round(duration_s * sample_rate)))
    shape = np.asarray(click, dtype=np.float64)
    loudest = float(onsets.loudness.max()) if len(onsets) else 0.0
    for t, loud in zip(onsets.times, onsets.loudness):
        start = int(round(t * sample_rate))
        if start >= out.size:
            continue
        gain = loud / loudest if loudest > 0.0 else 1.0
        stop = min(start + shape.size, out.size)
        out[start:stop] += shape[: stop - start] * gain
    peak = np.abs(out).max() if out.size else 0.0
    if peak > 1.0:
        warnings.warn(
            "click track peaks at %.3f; clipping to full scale" % peak,
            ClippingWarning,
            stacklevel=2,
        )
        np.clip(out, -1.0, 1.0, out=out)
    return AudioBuffer(samples=out, sample_rate=sample_rate)


def onsets_to_csv(onsets: OnsetList) -> str:
    """Onsets as "time_s,loudness" rows, six decimals, LF line endings."""
    lines = ["time_s,loudness"]
    for t, loud in zip(onsets.times, onsets.loudness):
        lines.append("%.6f,%.6f" % (t, loud))
    return "\n".join(lines) + "\n"


def trajectory_to_csv(traj: PulseTrajectory) -> str:
    """Trajectory as "frame_end_s,pulse_s" rows; absent estimates leave the field empty."""
    lines = ["frame_end_s,pulse_s"]
    for t, pulse in zip(traj.frame_times, traj.pulse_s):
        if np.isnan(pulse):
            lines.append("%.6f," % t)
        else:
            lines.append("%.6f,%.6f" % (t, pulse))
    return "\n".join(lines) + "\n"


def export_csv(result) -> str:
    """CSV for either an OnsetList or a PulseTrajectory."""
    if isinstance(result, OnsetList):
        return onsets_to_csv(result)
    if isinstance(result, PulseTrajectory):
        return trajectory_to_csv(result)
    raise TypeError("expected OnsetList or PulseTrajectory, got %r" % type(result).__name__)


def onsets_from_csv(text: str) -> OnsetList:
    """Parse the output of onsets_to_csv back into an OnsetList."""
    lines = [line for line in text.split("\n") if line.strip()]
    if not lines or lines[0] != "time_s,loudness":
        raise ValueError("not an onset CSV: missing 'time_s,loudness' header")
    times = []
    loudness = []
    for line in lines[1:]:
        t, _, loud = line.partition(",")
        times.append(float(t))
        loudness.append(float(loud))
    return OnsetList(times=np.asarray(times), loudness=np.asarray(loudness))
