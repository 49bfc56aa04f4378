"""The whole trip: mixture in, rhythm out.

Synthesizes a two-voice mixture, separates it, finds each stream's
onsets, tracks each stream's pulse, and renders the findings as MIDI,
CSV, and an audible click overlay.  Everything lands in output/.
"""

import os

import numpy as np

from rhythmkit.audio_io import AudioBuffer, write_wav
from rhythmkit.onsets import OnsetConfig, detect_onsets
from rhythmkit.render import MidiRenderConfig, default_click, onsets_to_csv, render_clicks, to_midi, trajectory_to_csv
from rhythmkit.separate import isa_separate
from rhythmkit.tatum import TatumConfig, trajectory

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

rate = 22050
duration_s = 6.0
n = int(duration_s * rate)


def voice(carrier_hz, period_s, offset_s, tau=0.02):
    out = np.zeros(n)
    start = offset_s
    while start < duration_s - 0.2:
        i0 = int(round(start * rate))
        tt = np.arange(int(6 * tau * rate)) / rate
        out[i0 : i0 + tt.size] += np.sin(2 * np.pi * carrier_hz * tt) * np.exp(-tt / tau)
        start += period_s
    return out


mixture = AudioBuffer(
    samples=0.4 * (voice(90.0, 0.5, 0.35) + 0.7 * voice(6000.0, 0.25, 0.475))
    + 0.01 * np.random.default_rng(2).standard_normal(n),
    sample_rate=rate,
)
write_wav(mixture, os.path.join(OUT_DIR, "mixture.wav"))
print("mixture: %.1f s at %d Hz" % (mixture.duration_s, mixture.sample_rate))

streams = isa_separate(mixture, components=2)
onset_config = OnsetConfig(smoothing_window_ms=100.0)

for stream in streams:
    i = stream.component_index
    onsets = detect_onsets(stream.audio, onset_config)
    traj = trajectory(onsets, mixture.duration_s, TatumConfig())
    settled = traj.pulse_s[~np.isnan(traj.pulse_s)]
    pulse = "%.0f ms" % (1000 * settled[-1]) if settled.size else "none"
    print("stream %d: %d onsets, pulse %s" % (i, len(onsets), pulse))

    write_wav(stream.audio, os.path.join(OUT_DIR, "pipeline_stream_%d.wav" % i))
    with open(os.path.join(OUT_DIR, "pipeline_stream_%d.mid" % i), "wb") as fh:
        fh.write(to_midi(onsets, MidiRenderConfig()))
    with open(os.path.join(OUT_DIR, "pipeline_stream_%d.onsets.csv" % i), "w") as fh:
        fh.write(onsets_to_csv(onsets))
    with open(os.path.join(OUT_DIR, "pipeline_stream_%d.pulse.csv" % i), "w") as fh:
        fh.write(trajectory_to_csv(traj))

    # click overlay: the stream with its own onsets ticked back at it
    overlay = render_clicks(onsets, default_click(rate), stream.audio.duration_s, rate)
    combined = AudioBuffer(
        samples=np.clip(stream.audio.mono + 0.5 * overlay.mono, -1.0, 1.0),
        sample_rate=rate,
    )
    write_wav(combined, os.path.join(OUT_DIR, "pipeline_stream_%d.clicked.wav" % i))

print("all files in", OUT_DIR)
