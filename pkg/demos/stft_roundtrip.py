"""Spectrogram analysis and exact resynthesis.

A signal goes in, a complex time-frequency grid comes out, and the
overlap-add inverse brings the waveform back to rounding error.  The
demo measures that error on noise (the hardest case: energy in every
bin) and draws the magnitude of a more photogenic chirp.
"""

import os

import numpy as np

from rhythmkit.audio_io import AudioBuffer
from rhythmkit.spectral import StftConfig, istft, magnitude, stft

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

rate = 22050
rng = np.random.default_rng(0)

# round trip on a second of white noise
noise = rng.standard_normal(rate)
buf = AudioBuffer(samples=noise, sample_rate=rate)
spec = stft(buf)
back = istft(spec)
error = np.max(np.abs(back.mono - noise))
print("frames: %d, bins per frame: %d" % (spec.frame_count, spec.bin_count))
print("max round-trip error: %.3e of peak %.3f" % (error, np.max(np.abs(noise))))

# the same geometry at a quarter hop: more frames, same exact inverse
dense = stft(buf, StftConfig(hop=256))
print("quarter hop: %d frames, error %.3e"
      % (dense.frame_count, np.max(np.abs(istft(dense).mono - noise))))

# a rising chirp for the picture
t = np.arange(2 * rate) / rate
chirp = np.sin(2 * np.pi * (200 + 1400 * t) * t) * np.exp(-((t - 1.0) ** 2) / 0.18)
chirp_spec = stft(AudioBuffer(samples=chirp, sample_rate=rate))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    mag = magnitude(chirp_spec)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.imshow(
        20 * np.log10(mag + 1e-6),
        origin="lower",
        aspect="auto",
        extent=[0, 2, 0, rate / 2 / 1000.0],
        cmap="magma",
    )
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (kHz)")
    ax.set_title("chirp magnitude, dB")
    path = os.path.join(OUT_DIR, "stft_chirp.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print("wrote", path)
except ImportError:
    print("matplotlib not installed; skipping the figure")
