"""Short-time Fourier analysis with exact resynthesis.

The transform here is the plain sliding-window DFT: slice the signal
into overlapping frames, taper each frame, and keep the one-sided
spectrum of every frame as a column.  Nothing clever happens at the
edges; the signal is zero-padded at the tail so the last partial frame
is still analyzed, and the frame count is

    m = 1 + floor((padded_length - window_length) / hop)

with padded_length the smallest window_length + k*hop covering the
signal.  A 4096-sample signal at the default 1024/512 framing gives
exactly 7 frames.

Inversion overlap-adds the windowed inverse DFTs and divides by the
accumulated squared taper.  For an unmodified spectrogram this is an
identity up to rounding, provided the taper never vanishes where only
one frame covers a sample.  That is why the default taper is the
periodic Hamming rather than the periodic Hann: both satisfy the
constant-overlap-add condition at hop = window/2, but the Hann taper
is exactly zero at its first sample, which would erase the first
sample of the signal beyond recovery.  The Hann and rectangular
tapers remain available for callers who window for spectral shape
rather than for round trips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import check_COLA, get_window

from .audio_io import AudioBuffer
from .errors import DimensionMismatchError, InvalidConfigError

_SUPPORTED_WINDOWS = ("hamming", "hann", "rect")


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters; window_length must be a power of two."""

    window_length: int = 1024
    hop: int = 512
    window: str = "hamming"

    def validate(self) -> None:
        n = self.window_length
        if n < 2 or (n & (n - 1)) != 0:
            raise InvalidConfigError("window_length must be a power of two >= 2, got %r" % n)
        if not 0 < self.hop <= n:
            raise InvalidConfigError("hop must satisfy 0 < hop <= window_length")
        if self.window not in _SUPPORTED_WINDOWS:
            raise InvalidConfigError(
                "window must be one of %s, got %r" % (", ".join(_SUPPORTED_WINDOWS), self.window)
            )
        taper = self.taper()
        if not check_COLA(taper, n, n - self.hop):
            raise InvalidConfigError(
                "window %r does not overlap-add to a constant at hop %d" % (self.window, self.hop)
            )

    def taper(self) -> np.ndarray:
        name = "boxcar" if self.window == "rect" else self.window
        # fftbins=True gives the periodic variant, the one that is COLA
        return get_window(name, self.window_length, fftbins=True)


@dataclass
class Spectrogram:
    """One-sided complex spectra, frequency bins down rows, frames across columns."""

    bins: np.ndarray
    config: StftConfig
    sample_rate: int
    original_length: int

    @property
    def bin_count(self) -> int:
        return self.bins.shape[0]

    @property
    def frame_count(self) -> int:
        return self.bins.shape[1]

    @property
    def padded_length(self) -> int:
        return self.config.window_length + (self.frame_count - 1) * self.config.hop


def _frame_count(n: int, window: int, hop: int) -> int:
    if n <= window:
        return 1
    return 1 + int(np.ceil((n - window) / hop))


def stft(buffer: AudioBuffer, config: StftConfig = StftConfig()) -> Spectrogram:
    """Transform a mono buffer into its complex spectrogram."""
    config.validate()
    x = buffer.mono
    n = x.shape[0]
    if n == 0:
        raise InvalidConfigError("cannot transform an empty signal")

    window = config.window_length
    hop = config.hop
    m = _frame_count(n, window, hop)
    padded = np.zeros(window + (m - 1) * hop)
    padded[:n] = x

    starts = np.arange(m) * hop
    frames = padded[starts[:, None] + np.arange(window)]
    bins = np.fft.rfft(frames * config.taper(), axis=1).T
    return Spectrogram(
        bins=bins, config=config, sample_rate=buffer.sample_rate, original_length=n
    )


def istft(spec: Spectrogram) -> AudioBuffer:
    """Invert a spectrogram back to audio, truncated to the original length.

    Unmodified spectrograms reconstruct to rounding error.  Modified ones
    (masked, rank-reduced) come back as the least-surprise overlap-add of
    whatever the frames now encode.
    """
    config = spec.config
    config.validate()
    window = config.window_length
    hop = config.hop
    m = spec.frame_count
    if spec.bin_count != window // 2 + 1:
        raise DimensionMismatchError(
            "spectrogram has %d bins but config expects %d" % (spec.bin_count, window // 2 + 1)
        )
    taper = config.taper()

    frames = np.fft.irfft(spec.bins.T, n=window, axis=1) * taper
    total = window + (m - 1) * hop
    acc = np.zeros(total)
    weight = np.zeros(total)
    taper_sq = taper * taper
    for t in range(m):
        s = t * hop
        acc[s : s + window] += frames[t]
        weight[s : s + window] += taper_sq

    # weight is strictly positive for every supported taper; the floor only
    # guards hypothetical all-zero columns from dividing 0 by 0
    out = acc / np.maximum(weight, 1e-12)
    return AudioBuffer(samples=out[: spec.original_length], sample_rate=spec.sample_rate)


def magnitude(spec: Spectrogram) -> np.ndarray:
    """Non-negative modulus of each bin; the input to subspace analysis."""
    return np.abs(spec.bins)


def phase(spec: Spectrogram) -> np.ndarray:
    """Per-bin phase angles, kept aside for resynthesis after magnitude edits."""
    return np.angle(spec.bins)
