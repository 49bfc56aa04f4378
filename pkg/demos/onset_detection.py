"""Where do the notes begin?

The detector rectifies, decimates, and smooths the waveform into an
amplitude envelope, then watches two derivatives: the plain slope (FOD)
and the slope of the logarithm (RDF).  The log version pays attention to
proportional growth, so a sound swelling out of quiet registers the
moment it starts moving, not once it gets loud.  This demo runs both on
a click track and on a slow swell, and marks what was found where.
"""

import os

import numpy as np

from rhythmkit.audio_io import AudioBuffer
from rhythmkit.onsets import (
    OnsetConfig,
    decimate,
    detect_onsets,
    fod,
    half_wave_rectify,
    rdf,
    smooth,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

rate = 22050

# eight clicks on a quarter-second grid
truth = [0.3 + 0.25 * k for k in range(8)]
n = int(2.4 * rate)
clicks = np.zeros(n)
for start in truth:
    i0 = int(round(start * rate))
    tt = np.arange(int(0.05 * rate)) / rate
    clicks[i0 : i0 + tt.size] += np.sin(2 * np.pi * 1000 * tt) * np.exp(-tt / 0.005)

onsets = detect_onsets(AudioBuffer(samples=clicks, sample_rate=rate))
print("clicks placed at:  ", " ".join("%.3f" % t for t in truth))
print("detected onsets at:", " ".join("%.3f" % t for t in onsets.times))
print("loudness:          ", " ".join("%.2f" % x for x in onsets.loudness))

# a 300 ms swell: the two derivatives disagree about when it starts
t = np.arange(int(0.9 * rate)) / rate
swell = np.clip((t - 0.1) / 0.3, 0.0, 1.0) * np.sin(2 * np.pi * 800 * t)
envelope, env_rate = decimate(half_wave_rectify(swell), float(rate), 20)
envelope = smooth(envelope, env_rate, 200.0)
dt = 1.0 / env_rate
growth = fod(envelope, dt)
relative = rdf(envelope, dt)
relative = relative / relative.max()
rdf_peak = float(np.argmax(relative)) * dt
fod_peak = float(np.argmax(growth)) * dt
print("swell: RDF peaks at %.3f s, FOD at %.3f s (%.0f ms later)"
      % (rdf_peak, fod_peak, 1000 * (fod_peak - rdf_peak)))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 1, figsize=(8, 5))
    tt = np.arange(n) / rate
    axes[0].plot(tt, clicks, linewidth=0.4)
    for x in onsets.times:
        axes[0].axvline(x, color="crimson", linewidth=0.8, alpha=0.7)
    axes[0].set_title("click track with detected onsets")

    te = np.arange(envelope.size) * dt
    axes[1].plot(te, envelope / envelope.max(), label="envelope")
    axes[1].plot(te, growth / growth.max(), label="FOD")
    axes[1].plot(te, relative, label="RDF")
    axes[1].axvline(rdf_peak, color="tab:green", linestyle=":", linewidth=1)
    axes[1].axvline(fod_peak, color="tab:orange", linestyle=":", linewidth=1)
    axes[1].set_title("slow swell: the log derivative fires first")
    axes[1].set_xlabel("time (s)")
    axes[1].legend(loc="upper right", fontsize=8)
    path = os.path.join(OUT_DIR, "onsets.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print("wrote", path)
except ImportError:
    print("matplotlib not installed; skipping the figure")
