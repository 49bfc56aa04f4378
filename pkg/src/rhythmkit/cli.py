"""Command-line driver for the separation / onset / pulse pipeline.

Four subcommands cover the workflow:

    analyze  in.wav --components 2 --out session/
        full pipeline; leaves stream_<i>.wav, stream_<i>.onsets.csv,
        stream_<i>.pulse.csv and stream_<i>.mid in the output directory
    onsets   session/ --threshold 0.25 --min-spacing 0.04
        re-run onset detection on already-separated streams
    tatum    session/
        re-run pulse tracking from the onset CSVs
    serve    --port 8765
        expose the same stages as a JSON-over-HTTP service

Settings resolve in a fixed order: command-line flags beat the JSON
config file given with --config, which beats the built-in defaults.
The output directory additionally falls back to the RHYTHMKIT_OUT
environment variable before the built-in "rhythmkit_out".

Every run is deterministic: the same input and flags produce byte-equal
output files, so diffing two runs is a meaningful operation.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from .audio_io import read_wav, to_mono, write_wav
from .errors import MissingIntermediateError, RhythmkitError
from .onsets import OnsetConfig, detect_onsets
from .render import (
    MidiRenderConfig,
    onsets_from_csv,
    onsets_to_csv,
    to_midi,
    trajectory_to_csv,
)
from .separate import isa_separate
from .spectral import StftConfig
from .tatum import TatumConfig, trajectory

_OUT_DIR_ENV = "RHYTHMKIT_OUT"

_BUILTINS = {
    "components": 2,
    "rotate_basis": "temporal",
    "out_dir": None,
    "stft": {"window_length": 1024, "hop": 512, "window": "hamming"},
    "onsets": {
        "decimation_factor": 20,
        "smoothing_window_ms": 200.0,
        "threshold": 0.3,
        "min_spacing_s": 0.05,
        "loudness_window_ms": 200.0,
        "normalize_rdf": True,
    },
    "tatum": {
        "frame_s": 0.5,
        "decay": 0.8,
        "histogram_rate": 1000.0,
        "max_ioi_s": 1.0,
        "min_q_s": 0.05,
        "minima_tolerance": 0.15,
    },
    "midi": {"ppq": 480, "tempo_bpm": 120.0, "note_number": 38, "note_length_ticks": 120},
    "serve": {"host": "127.0.0.1", "port": 8765},
}


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in merged:
            raise ValueError("unknown config key %r" % key)
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ValueError("config key %r must be an object" % key)
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(config_path: str | None) -> dict:
    """Built-in defaults overlaid with the JSON config file, if any."""
    if config_path is None:
        return copy.deepcopy(_BUILTINS)
    with open(config_path, "r", encoding="utf-8") as fh:
        loaded = json.load(fh)
    if not isinstance(loaded, dict):
        raise ValueError("config file must hold a JSON object")
    return _deep_merge(_BUILTINS, loaded)


def _resolve_out_dir(flag_value: str | None, settings: dict) -> Path:
    if flag_value is not None:
        return Path(flag_value)
    if settings.get("out_dir"):
        return Path(settings["out_dir"])
    if os.environ.get(_OUT_DIR_ENV):
        return Path(os.environ[_OUT_DIR_ENV])
    return Path("rhythmkit_out")


def _stft_config(settings: dict) -> StftConfig:
    s = settings["stft"]
    return StftConfig(window_length=s["window_length"], hop=s["hop"], window=s["window"])


def _onset_config(settings: dict, args) -> OnsetConfig:
    s = dict(settings["onsets"])
    if getattr(args, "threshold", None) is not None:
        s["threshold"] = args.threshold
    if getattr(args, "min_spacing", None) is not None:
        s["min_spacing_s"] = args.min_spacing
    if getattr(args, "decimation", None) is not None:
        s["decimation_factor"] = args.decimation
    return OnsetConfig(**s)


def _tatum_config(settings: dict, args) -> TatumConfig:
    s = dict(settings["tatum"])
    if getattr(args, "frame_s", None) is not None:
        s["frame_s"] = args.frame_s
    if getattr(args, "decay", None) is not None:
        s["decay"] = args.decay
    return TatumConfig(**s)


def _midi_config(settings: dict) -> MidiRenderConfig:
    return MidiRenderConfig(**settings["midi"])


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_analyze(args) -> int:
    settings = load_settings(args.config)
    if args.components is not None:
        settings["components"] = args.components
    if args.rotate_basis is not None:
        settings["rotate_basis"] = args.rotate_basis
    if args.window_length is not None:
        settings["stft"]["window_length"] = args.window_length
    if args.hop is not None:
        settings["stft"]["hop"] = args.hop
    out_dir = _resolve_out_dir(args.out, settings)

    buffer = to_mono(read_wav(args.input))
    streams = isa_separate(
        buffer,
        components=int(settings["components"]),
        config=_stft_config(settings),
        rotate_basis=settings["rotate_basis"],
    )
    onset_config = _onset_config(settings, args)
    tatum_config = _tatum_config(settings, args)
    midi_config = _midi_config(settings)

    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for stream in streams:
            i = stream.component_index
            wav_path = out_dir / ("stream_%d.wav" % i)
            write_wav(stream.audio, wav_path, sample_format="float32")
            written.append(wav_path)

            onsets = detect_onsets(stream.audio, onset_config)
            csv_path = out_dir / ("stream_%d.onsets.csv" % i)
            _write_text(csv_path, onsets_to_csv(onsets))
            written.append(csv_path)

            traj = trajectory(onsets, buffer.duration_s, tatum_config)
            pulse_path = out_dir / ("stream_%d.pulse.csv" % i)
            _write_text(pulse_path, trajectory_to_csv(traj))
            written.append(pulse_path)

            midi_path = out_dir / ("stream_%d.mid" % i)
            with open(midi_path, "wb") as fh:
                fh.write(to_midi(onsets, midi_config))
            written.append(midi_path)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    print("wrote %d files for %d streams to %s" % (len(written), len(streams), out_dir))
    return 0


def _stream_indices(out_dir: Path, only: int | None, suffix: str) -> list[int]:
    if only is not None:
        if not (out_dir / ("stream_%d%s" % (only, suffix))).exists():
            raise MissingIntermediateError(
                "no stream_%d%s in %s; run analyze first" % (only, suffix, out_dir)
            )
        return [only]
    indices = sorted(
        int(p.name[len("stream_") : -len(suffix)])
        for p in out_dir.glob("stream_*" + suffix)
        if p.name[len("stream_") : -len(suffix)].isdigit()
    )
    if not indices:
        raise MissingIntermediateError(
            "no stream_*%s files in %s; run analyze first" % (suffix, out_dir)
        )
    return indices


def cmd_onsets(args) -> int:
    settings = load_settings(args.config)
    out_dir = Path(args.session_dir)
    onset_config = _onset_config(settings, args)
    midi_config = _midi_config(settings)

    for i in _stream_indices(out_dir, args.stream, ".wav"):
        buffer = read_wav(out_dir / ("stream_%d.wav" % i))
        onsets = detect_onsets(to_mono(buffer), onset_config)
        _write_text(out_dir / ("stream_%d.onsets.csv" % i), onsets_to_csv(onsets))
        with open(out_dir / ("stream_%d.mid" % i), "wb") as fh:
            fh.write(to_midi(onsets, midi_config))
        print("stream %d: %d onsets" % (i, len(onsets)))
    return 0


def cmd_tatum(args) -> int:
    settings = load_settings(args.config)
    out_dir = Path(args.session_dir)
    tatum_config = _tatum_config(settings, args)

    for i in _stream_indices(out_dir, args.stream, ".onsets.csv"):
        with open(out_dir / ("stream_%d.onsets.csv" % i), "r", encoding="utf-8") as fh:
            onsets = onsets_from_csv(fh.read())
        wav_path = out_dir / ("stream_%d.wav" % i)
        if wav_path.exists():
            duration = read_wav(wav_path).duration_s
        elif len(onsets):
            duration = float(onsets.times[-1]) + tatum_config.frame_s
        else:
            duration = tatum_config.frame_s
        traj = trajectory(onsets, duration, tatum_config)
        _write_text(out_dir / ("stream_%d.pulse.csv" % i), trajectory_to_csv(traj))
        defined = int(np.sum(~np.isnan(traj.pulse_s)))
        print("stream %d: %d/%d frames with a pulse estimate" % (i, defined, len(traj)))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    settings = load_settings(args.config)
    host = args.host if args.host is not None else settings["serve"]["host"]
    port = args.port if args.port is not None else settings["serve"]["port"]
    uvicorn.run(create_app(), host=host, port=int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhythmkit",
        description="separate percussive streams, detect onsets, track the pulse",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full pipeline on a WAV file")
    p.add_argument("input", help="input WAV (PCM16 or float32, mono or stereo)")
    p.add_argument("--components", type=int, default=None, help="streams to separate")
    p.add_argument("--threshold", type=float, default=None, help="onset peak threshold")
    p.add_argument("--min-spacing", type=float, default=None, help="minimum onset gap, seconds")
    p.add_argument("--decimation", type=int, default=None, help="envelope decimation factor")
    p.add_argument("--window-length", type=int, default=None, help="analysis window, samples")
    p.add_argument("--hop", type=int, default=None, help="analysis hop, samples")
    p.add_argument("--rotate-basis", choices=("temporal", "spectral"), default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--config", default=None, help="JSON settings file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("onsets", help="re-run onset detection on separated streams")
    p.add_argument("session_dir", help="directory produced by analyze")
    p.add_argument("--stream", type=int, default=None, help="single stream index")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--min-spacing", type=float, default=None)
    p.add_argument("--decimation", type=int, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_onsets)

    p = sub.add_parser("tatum", help="re-run pulse tracking from onset CSVs")
    p.add_argument("session_dir", help="directory produced by analyze")
    p.add_argument("--stream", type=int, default=None)
    p.add_argument("--frame-s", type=float, default=None, dest="frame_s")
    p.add_argument("--decay", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_tatum)

    p = sub.add_parser("serve", help="run the JSON-over-HTTP analysis service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RhythmkitError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
