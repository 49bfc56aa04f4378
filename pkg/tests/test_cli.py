"""End-to-end command tests, run in-process through main().

A small two-band burst mix is analyzed once per module; tests that
mutate session files work on copies.
"""

import json
import shutil

import numpy as np
import pytest

from rhythmkit.audio_io import AudioBuffer, write_wav
from rhythmkit.cli import load_settings, main
from rhythmkit.render import onsets_from_csv


def two_band_mix(duration_s=4.4, rate=22050):
    # eight bursts per band starting past the detector's blind first window,
    # over a faint noise bed so the separated streams keep a live envelope
    # floor between events
    n = int(duration_s * rate)
    out = np.zeros(n)
    for carrier, offset in ((80.0, 0.35), (6000.0, 0.6)):
        start = offset
        while start < duration_s - 0.2:
            i0 = int(round(start * rate))
            length = min(int(0.12 * rate), n - i0)
            tt = np.arange(length) / rate
            out[i0 : i0 + length] += np.sin(2 * np.pi * carrier * tt) * np.exp(-tt / 0.02)
            start += 0.5
    bed = 0.01 * np.random.default_rng(7).standard_normal(n)
    return AudioBuffer(samples=0.4 * out + bed, sample_rate=rate)


@pytest.fixture(scope="module")
def wav_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("input") / "mix.wav"
    write_wav(two_band_mix(), path)
    return path


@pytest.fixture(scope="module")
def session_dir(tmp_path_factory, wav_path):
    out = tmp_path_factory.mktemp("session")
    assert main(["analyze", str(wav_path), "--out", str(out)]) == 0
    return out


def copy_session(session_dir, tmp_path):
    target = tmp_path / "session"
    shutil.copytree(session_dir, target)
    return target


def read_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestAnalyze:
    def test_writes_four_files_per_stream(self, session_dir):
        names = sorted(p.name for p in session_dir.iterdir())
        assert names == [
            "stream_0.mid",
            "stream_0.onsets.csv",
            "stream_0.pulse.csv",
            "stream_0.wav",
            "stream_1.mid",
            "stream_1.onsets.csv",
            "stream_1.pulse.csv",
            "stream_1.wav",
        ]

    def test_reruns_are_byte_identical(self, wav_path, session_dir, tmp_path):
        assert main(["analyze", str(wav_path), "--out", str(tmp_path / "again")]) == 0
        assert read_bytes(tmp_path / "again") == read_bytes(session_dir)

    def test_onsets_csv_holds_the_grid(self, session_dir):
        # one stream per band, each on a 0.5 s grid
        for i in (0, 1):
            text = (session_dir / ("stream_%d.onsets.csv" % i)).read_text()
            onsets = onsets_from_csv(text)
            assert len(onsets) == 8

    def test_component_count_flag(self, wav_path, tmp_path):
        out = tmp_path / "три"
        assert main(["analyze", str(wav_path), "--components", "3", "--out", str(out)]) == 0
        assert (out / "stream_2.wav").exists()

    def test_missing_input_fails_cleanly(self, tmp_path, capsys):
        code = main(["analyze", str(tmp_path / "absent.wav"), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_corrupt_input_fails_cleanly(self, tmp_path, capsys):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"not a wav at all")
        assert main(["analyze", str(bad), "--out", str(tmp_path / "o")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_failure_removes_partial_outputs(self, wav_path, tmp_path, capsys):
        # a smoothing window longer than any stream fails inside the loop,
        # after some files were already written; none may survive
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"onsets": {"smoothing_window_ms": 1e6}}))
        out = tmp_path / "partial"
        code = main(
            ["analyze", str(wav_path), "--out", str(out), "--config", str(config)]
        )
        assert code == 1
        assert list(out.glob("stream_*")) == []


class TestConfigResolution:
    def test_defaults_without_file(self):
        settings = load_settings(None)
        assert settings["components"] == 2
        assert settings["onsets"]["threshold"] == 0.3

    def test_file_overlays_defaults(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"onsets": {"threshold": 0.4}, "components": 3}))
        settings = load_settings(str(config))
        assert settings["components"] == 3
        assert settings["onsets"]["threshold"] == 0.4
        assert settings["onsets"]["min_spacing_s"] == 0.05  # untouched sibling

    def test_unknown_key_rejected(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"onsetts": {}}))
        with pytest.raises(ValueError):
            load_settings(str(config))

    def test_flag_beats_config_file(self, wav_path, tmp_path):
        # the config alone is invalid, so success proves the flag won
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"onsets": {"decimation_factor": 0}}))
        out = tmp_path / "flagged"
        code = main(
            [
                "analyze",
                str(wav_path),
                "--config",
                str(config),
                "--decimation",
                "20",
                "--out",
                str(out),
            ]
        )
        assert code == 0

    def test_invalid_config_value_fails_cleanly(self, wav_path, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"onsets": {"decimation_factor": 0}}))
        code = main(["analyze", str(wav_path), "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_out_dir_from_environment(self, wav_path, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("RHYTHMKIT_OUT", str(target))
        assert main(["analyze", str(wav_path)]) == 0
        assert (target / "stream_0.wav").exists()


class TestOnsetsCommand:
    def test_rewrites_onsets_leaves_audio_alone(self, session_dir, tmp_path):
        session = copy_session(session_dir, tmp_path)
        before = read_bytes(session)
        assert main(["onsets", str(session), "--min-spacing", "0.6"]) == 0
        after = read_bytes(session)
        for i in (0, 1):
            assert after["stream_%d.wav" % i] == before["stream_%d.wav" % i]
            assert after["stream_%d.onsets.csv" % i] != before["stream_%d.onsets.csv" % i]
        merged = onsets_from_csv((session / "stream_0.onsets.csv").read_text())
        assert len(merged) < 8

    def test_single_stream_selection(self, session_dir, tmp_path):
        session = copy_session(session_dir, tmp_path)
        before = read_bytes(session)
        assert main(["onsets", str(session), "--stream", "1", "--min-spacing", "0.6"]) == 0
        after = read_bytes(session)
        assert after["stream_0.onsets.csv"] == before["stream_0.onsets.csv"]
        assert after["stream_1.onsets.csv"] != before["stream_1.onsets.csv"]

    def test_empty_session_dir_fails(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["onsets", str(empty)]) == 1
        assert "run analyze first" in capsys.readouterr().err

    def test_unknown_stream_index_fails(self, session_dir, tmp_path, capsys):
        session = copy_session(session_dir, tmp_path)
        assert main(["onsets", str(session), "--stream", "7"]) == 1
        assert "run analyze first" in capsys.readouterr().err


class TestTatumCommand:
    def test_rewrites_pulse_from_csv(self, session_dir, tmp_path):
        session = copy_session(session_dir, tmp_path)
        assert main(["tatum", str(session), "--frame-s", "0.25"]) == 0
        text = (session / "stream_0.pulse.csv").read_text()
        rows = [line for line in text.splitlines() if line]
        assert len(rows) - 1 == 18  # 4.4 s at quarter-second frames

    def test_works_without_wav(self, session_dir, tmp_path):
        session = copy_session(session_dir, tmp_path)
        for i in (0, 1):
            (session / ("stream_%d.wav" % i)).unlink()
        assert main(["tatum", str(session)]) == 0

    def test_missing_onsets_fails(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["tatum", str(empty)]) == 1
        assert "run analyze first" in capsys.readouterr().err


class TestParser:
    def test_no_command_exits_with_usage(self):
        with pytest.raises(SystemExit):
            main([])

    def test_unknown_command_exits_with_usage(self):
        with pytest.raises(SystemExit):
            main(["bogus"])
