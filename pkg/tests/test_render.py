"""Export tests.

The MIDI assertions go through parse_smf below, a from-scratch reader
written against the file-format description (VLQ deltas, running
status, meta events), so writer bugs cannot hide behind a shared
serializer.  The empty-onsets file is additionally frozen byte for
byte.
"""

import struct

import numpy as np
import pytest

from rhythmkit.errors import ClippingWarning
from rhythmkit.onsets import OnsetList
from rhythmkit.render import (
    MidiRenderConfig,
    default_click,
    export_csv,
    onsets_from_csv,
    onsets_to_csv,
    render_clicks,
    to_midi,
    trajectory_to_csv,
)
from rhythmkit.tatum import PulseTrajectory


def read_vlq(data, i):
    value = 0
    while True:
        byte = data[i]
        i += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, i


def read_track_events(chunk):
    events = []
    tick = 0
    i = 0
    status = None
    while i < len(chunk):
        delta, i = read_vlq(chunk, i)
        tick += delta
        if chunk[i] & 0x80:
            status = chunk[i]
            i += 1
        if status == 0xFF:
            meta_type = chunk[i]
            length, i = read_vlq(chunk, i + 1)
            events.append(("meta", tick, meta_type, chunk[i : i + length]))
            i += length
            if meta_type == 0x2F:
                break
        else:
            kind = status & 0xF0
            channel = status & 0x0F
            if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
                note, value = chunk[i], chunk[i + 1]
                i += 2
                if kind == 0x90 and value > 0:
                    events.append(("note_on", tick, channel, note, value))
                elif kind == 0x80 or kind == 0x90:
                    events.append(("note_off", tick, channel, note, value))
                else:
                    events.append(("other", tick, channel, note, value))
            else:  # program change / channel pressure carry one byte
                events.append(("other", tick, channel, chunk[i], None))
                i += 1
    return events


def parse_smf(data):
    assert data[:4] == b"MThd"
    header_length, fmt, track_count, division = struct.unpack(">IHHH", data[4:14])
    assert header_length == 6
    tracks = []
    pos = 14
    for _ in range(track_count):
        assert data[pos : pos + 4] == b"MTrk"
        (length,) = struct.unpack(">I", data[pos + 4 : pos + 8])
        tracks.append(read_track_events(data[pos + 8 : pos + 8 + length]))
        pos += 8 + length
    assert pos == len(data)
    return fmt, division, tracks


def notes_of(events, kind):
    return [e for e in events if e[0] == kind]


class TestMidi:
    def test_header_is_type0_single_track(self):
        fmt, division, tracks = parse_smf(to_midi(OnsetList(times=[0.5], loudness=[1.0])))
        assert fmt == 0
        assert division == 480
        assert len(tracks) == 1

    def test_tempo_event_leads_the_track(self):
        _, _, (events,) = parse_smf(to_midi(OnsetList(times=[0.5], loudness=[1.0])))
        kind, tick, meta_type, payload = events[0]
        assert (kind, tick, meta_type) == ("meta", 0, 0x51)
        assert int.from_bytes(payload, "big") == 500_000  # 120 bpm

    def test_tempo_rounding(self):
        cfg = MidiRenderConfig(tempo_bpm=90.0)
        _, _, (events,) = parse_smf(to_midi(OnsetList(times=[], loudness=[]), cfg))
        assert int.from_bytes(events[0][3], "big") == 666_667

    def test_onset_seconds_to_ticks(self):
        # 120 bpm at 480 ppq is 960 ticks per second
        onsets = OnsetList(times=[0.5, 1.0, 1.2505], loudness=[1.0, 1.0, 1.0])
        _, _, (events,) = parse_smf(to_midi(onsets))
        ons = notes_of(events, "note_on")
        assert [e[1] for e in ons] == [480, 960, 1200]

    def test_every_onset_gets_on_and_off(self):
        onsets = OnsetList(times=[0.1, 0.6, 1.1], loudness=[1.0, 2.0, 3.0])
        _, _, (events,) = parse_smf(to_midi(onsets))
        ons = notes_of(events, "note_on")
        offs = notes_of(events, "note_off")
        assert len(ons) == 3 and len(offs) == 3
        for on, off in zip(ons, offs):
            assert off[1] == on[1] + 120
            assert on[3] == off[3] == 38
            assert on[2] == off[2] == 9

    def test_velocity_scales_from_loudest(self):
        onsets = OnsetList(times=[0.1, 0.2, 0.3], loudness=[1.0, 2.0, 4.0])
        _, _, (events,) = parse_smf(to_midi(onsets))
        assert [e[4] for e in notes_of(events, "note_on")] == [32, 64, 127]

    def test_zero_loudness_floors_at_velocity_one(self):
        onsets = OnsetList(times=[0.1, 0.2], loudness=[0.0, 0.0])
        _, _, (events,) = parse_smf(to_midi(onsets))
        assert [e[4] for e in notes_of(events, "note_on")] == [1, 1]

    def test_off_sorts_before_on_at_equal_tick(self):
        # second onset lands exactly where the first note ends
        onsets = OnsetList(times=[0.0, 0.125], loudness=[1.0, 1.0])
        _, _, (events,) = parse_smf(to_midi(onsets))
        at_120 = [e for e in events if e[1] == 120 and e[0] != "meta"]
        assert [e[0] for e in at_120] == ["note_off", "note_on"]

    def test_end_of_track_closes_file(self):
        _, _, (events,) = parse_smf(to_midi(OnsetList(times=[0.5], loudness=[1.0])))
        assert events[-1][0] == "meta" and events[-1][2] == 0x2F

    def test_empty_onsets_frozen_bytes(self):
        expected = (
            b"MThd"
            + struct.pack(">IHHH", 6, 0, 1, 480)
            + b"MTrk"
            + struct.pack(">I", 11)
            + bytes([0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, 0x00, 0xFF, 0x2F, 0x00])
        )
        assert to_midi(OnsetList(times=[], loudness=[])) == expected

    def test_deterministic_bytes(self):
        onsets = OnsetList(times=[0.1, 0.7, 2.3], loudness=[0.5, 1.5, 1.0])
        assert to_midi(onsets) == to_midi(onsets)

    def test_long_delta_survives_vlq(self):
        onsets = OnsetList(times=[60.0], loudness=[1.0])  # 57600 ticks
        _, _, (events,) = parse_smf(to_midi(onsets))
        assert notes_of(events, "note_on")[0][1] == 57_600

    def test_custom_note_and_channel(self):
        cfg = MidiRenderConfig(note_number=42, channel=3)
        onsets = OnsetList(times=[0.25], loudness=[1.0])
        _, _, (events,) = parse_smf(to_midi(onsets, cfg))
        on = notes_of(events, "note_on")[0]
        assert on[2] == 3 and on[3] == 42

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MidiRenderConfig(note_number=200).validate()
        with pytest.raises(ValueError):
            MidiRenderConfig(tempo_bpm=0.0).validate()
        with pytest.raises(ValueError):
            MidiRenderConfig(channel=16).validate()


class TestClicks:
    def test_default_click_shape(self):
        click = default_click(22050)
        assert click.size == round(12.0 * 22050 / 1000.0)
        assert click[0] == 0.0
        assert np.max(np.abs(click)) <= 1.0

    def test_click_placed_at_onset_sample(self):
        onsets = OnsetList(times=[0.1], loudness=[2.0])
        out = render_clicks(onsets, np.array([1.0, 0.5]), 0.5, 100)
        assert out.frame_count == 50
        assert out.samples[0, 10] == 1.0
        assert out.samples[0, 11] == 0.5
        assert np.sum(out.samples != 0) == 2

    def test_loudness_scales_gain(self):
        onsets = OnsetList(times=[0.1, 0.3], loudness=[1.0, 2.0])
        out = render_clicks(onsets, np.array([0.8]), 0.5, 100)
        assert out.samples[0, 10] == pytest.approx(0.4)
        assert out.samples[0, 30] == pytest.approx(0.8)

    def test_click_truncated_at_end(self):
        onsets = OnsetList(times=[0.48], loudness=[1.0])
        out = render_clicks(onsets, np.ones(10), 0.5, 100)
        assert out.frame_count == 50
        assert np.sum(out.samples != 0) == 2  # samples 48, 49 only

    def test_onset_past_duration_ignored(self):
        onsets = OnsetList(times=[0.9], loudness=[1.0])
        out = render_clicks(onsets, np.ones(4), 0.5, 100)
        assert np.all(out.samples == 0)

    def test_overlap_clips_with_warning(self):
        onsets = OnsetList(times=[0.100, 0.101], loudness=[1.0, 1.0])
        with pytest.warns(ClippingWarning):
            out = render_clicks(onsets, np.full(5, 0.8), 0.5, 1000)
        assert np.max(np.abs(out.samples)) == 1.0

    def test_empty_onsets_render_silence(self):
        out = render_clicks(OnsetList(times=[], loudness=[]), np.ones(4), 0.25, 100)
        assert out.frame_count == 25
        assert np.all(out.samples == 0)


class TestCsv:
    def test_onsets_exact_text(self):
        onsets = OnsetList(times=[0.1, 0.25], loudness=[1.0, 0.5])
        assert (
            onsets_to_csv(onsets)
            == "time_s,loudness\n0.100000,1.000000\n0.250000,0.500000\n"
        )

    def test_trajectory_exact_text_with_gap(self):
        traj = PulseTrajectory(
            frame_times=np.array([0.5, 1.0]), pulse_s=np.array([np.nan, 0.25])
        )
        assert (
            trajectory_to_csv(traj)
            == "frame_end_s,pulse_s\n0.500000,\n1.000000,0.250000\n"
        )

    def test_round_trip_within_quantization(self):
        onsets = OnsetList(
            times=[0.1234567, 1.7654321], loudness=[0.333333333, 2.0]
        )
        back = onsets_from_csv(onsets_to_csv(onsets))
        assert np.max(np.abs(back.times - onsets.times)) < 5e-7
        assert np.max(np.abs(back.loudness - onsets.loudness)) < 5e-7

    def test_header_required(self):
        with pytest.raises(ValueError):
            onsets_from_csv("0.1,1.0\n")

    def test_empty_onsets_round_trip(self):
        back = onsets_from_csv(onsets_to_csv(OnsetList(times=[], loudness=[])))
        assert len(back) == 0

    def test_export_dispatch(self):
        onsets = OnsetList(times=[0.1], loudness=[1.0])
        traj = PulseTrajectory(frame_times=np.array([0.5]), pulse_s=np.array([0.25]))
        assert export_csv(onsets).startswith("time_s")
        assert export_csv(traj).startswith("frame_end_s")
        with pytest.raises(TypeError):
            export_csv([1, 2, 3])
