"""Estimation of the lowest regular pulse underlying a stream of onsets.

On a perfect performance the job is arithmetic: express every
inter-onset interval (IOI) in integer ticks and the pulse is their
greatest common divisor.  Real onsets wobble, so the GCD idea is
recast as an optimization over a histogram.

Incoming IOIs are quantized into a millisecond-resolution histogram
that decays geometrically once per analysis frame, so the estimate
tracks tempo drift with a memory of a few seconds.  Intervals longer
than one second fall outside the histogram entirely; a slower pulse
than that stops being felt as a pulse.  For a candidate period q (in
bins) the badness of fit is the mass-weighted squared remainder

    e(q) = sum_k h[k] * ((k + q/2) mod q - q/2)^2 / sum_k h[k]

which is zero exactly when every occupied bin is a multiple of q, and
grows as occupied bins land between multiples.  Every divisor of the
true pulse also scores zero, so the rule is: collect the local minima
of e(q), keep those within 15 percent of the best one, and return the
largest such q.  The largest, not the smallest: sub-divisions of the
pulse fit at least as well as the pulse itself, so preferring small q
would collapse the estimate to one bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import EmptyHistogramError, EmptyInputError
from .onsets import OnsetList


@dataclass(frozen=True)
class TatumConfig:
    """Frame, decay, and histogram geometry for pulse tracking."""

    frame_s: float = 0.5
    decay: float = 0.8
    histogram_rate: float = 1000.0  # bins per second of interval
    max_ioi_s: float = 1.0
    min_q_s: float = 0.05
    minima_tolerance: float = 0.15

    @property
    def bins(self) -> int:
        return int(round(self.max_ioi_s * self.histogram_rate))

    @property
    def bin_width(self) -> float:
        return 1.0 / self.histogram_rate

    def validate(self) -> None:
        if self.frame_s <= 0:
            raise ValueError("frame_s must be positive")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must be in (0, 1]")
        if self.histogram_rate <= 0:
            raise ValueError("histogram_rate must be positive")
        if self.max_ioi_s <= 0:
            raise ValueError("max_ioi_s must be positive")
        if not 0.0 < self.min_q_s <= self.max_ioi_s:
            raise ValueError("min_q_s must be in (0, max_ioi_s]")
        if self.minima_tolerance < 0:
            raise ValueError("minima_tolerance must be non-negative")


@dataclass
class IoiHistogram:
    """Decaying interval histogram; bin k spans intervals near k * bin_width."""

    counts: np.ndarray
    bin_width: float

    @classmethod
    def empty(cls, config: TatumConfig) -> "IoiHistogram":
        return cls(counts=np.zeros(config.bins), bin_width=config.bin_width)

    @property
    def mass(self) -> float:
        return float(self.counts.sum())


def exact_gcd(tick_intervals) -> int:
    """GCD of integer intervals: the pulse of a perfectly timed sequence."""
    values = [int(v) for v in tick_intervals]
    if not values:
        raise EmptyInputError("need at least one interval")
    if any(v < 1 for v in values) or any(v != w for v, w in zip(values, tick_intervals)):
        raise ValueError("intervals must be positive integers")
    return reduce(math.gcd, values)


def iois(onsets: OnsetList) -> np.ndarray:
    """Consecutive inter-onset intervals, in seconds."""
    return np.diff(onsets.times)


def accumulate_frame(
    hist: IoiHistogram, frame_iois, config: TatumConfig
) -> IoiHistogram:
    """Decay the histogram once and credit one frame's intervals into it.

    Intervals round to the nearest bin; anything at or beyond max_ioi_s
    lands outside the last bin and is dropped.  The input histogram is
    left untouched.
    """
    counts = hist.counts * config.decay
    bins = counts.size
    for interval in np.asarray(frame_iois, dtype=np.float64).ravel():
        if interval < 0:
            raise ValueError("intervals must be non-negative")
        if interval > config.max_ioi_s:
            continue
        k = int(round(interval / hist.bin_width))
        if k < bins:
            counts[k] += 1.0
    return IoiHistogram(counts=counts, bin_width=hist.bin_width)


def error_function(hist: IoiHistogram, q: int) -> float:
    """Mass-weighted squared remainder of the occupied bins against period q.

    Zero if and only if every occupied bin index is an exact multiple of q.
    """
    if int(q) != q or q < 1:
        raise ValueError("q must be a positive integer bin count")
    mass = hist.mass
    if mass <= 0.0:
        raise EmptyHistogramError("histogram holds no intervals")
    k = np.arange(hist.counts.size, dtype=np.float64)
    remainder = np.mod(k + q / 2.0, q) - q / 2.0
    return float(hist.counts @ (remainder * remainder) / mass)


def _minima_runs(values: np.ndarray) -> list[int]:
    # local minima with plateau handling; a flat run flanked by higher
    # values counts once, at its last index (ties resolve toward larger q)
    found = []
    n = values.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        if i > 0 and j < n - 1 and values[i] < values[i - 1] and values[i] < values[j + 1]:
            found.append(j)
        i = j + 1
    return found


def pick_tatum(hist: IoiHistogram, config: TatumConfig = TatumConfig()) -> int | None:
    """Choose the pulse period, in bins, for the current histogram.

    Scans q from the configured minimum up to the histogram length,
    collects local minima of the error curve, and among minima within
    minima_tolerance of the best returns the largest q.  None when the
    curve has no interior minimum to offer.
    """
    config.validate()
    mass = hist.mass
    if mass <= 0.0:
        raise EmptyHistogramError("histogram holds no intervals")

    bins = hist.counts.size
    q_min = max(1, int(round(config.min_q_s / hist.bin_width)))
    if q_min > bins:
        return None
    qs = np.arange(q_min, bins + 1, dtype=np.float64)

    occupied = np.flatnonzero(hist.counts)
    weights = hist.counts[occupied]
    k = occupied[np.newaxis, :].astype(np.float64)
    q = qs[:, np.newaxis]
    remainder = np.mod(k + q / 2.0, q) - q / 2.0
    errors = (remainder * remainder) @ weights / mass

    minima = _minima_runs(errors)
    if not minima:
        return None
    best = min(errors[i] for i in minima)
    cutoff = (1.0 + config.minima_tolerance) * best
    eligible = [i for i in minima if errors[i] <= cutoff]
    return int(qs[max(eligible)])


@dataclass
class PulseTrajectory:
    """Per-frame pulse estimates; NaN marks frames with nothing to estimate."""

    frame_times: np.ndarray  # end-of-frame timestamps, seconds
    pulse_s: np.ndarray

    def __len__(self) -> int:
        return int(self.frame_times.size)


def trajectory(
    onsets: OnsetList, duration_s: float, config: TatumConfig = TatumConfig()
) -> PulseTrajectory:
    """Track the pulse over time in frame_s-sized steps.

    Each interval is credited to the frame containing its later onset, the
    histogram decays once per frame whether or not anything arrived, and
    each frame's estimate reads the histogram as accumulated so far.  A
    ten-second stream at the default half-second frame yields at most 20
    estimates.
    """
    config.validate()
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    frame_count = int(math.ceil(duration_s / config.frame_s - 1e-9))

    intervals = iois(onsets)
    later_onset = onsets.times[1:] if len(onsets) else np.empty(0)

    hist = IoiHistogram.empty(config)
    frame_times = (np.arange(frame_count) + 1) * config.frame_s
    pulses = np.full(frame_count, np.nan)
    for f in range(frame_count):
        lo = f * config.frame_s
        hi = (f + 1) * config.frame_s
        in_frame = intervals[(later_onset >= lo) & (later_onset < hi)]
        hist = accumulate_frame(hist, in_frame, config)
        if hist.mass > 0.0:
            q = pick_tatum(hist, config)
            if q is not None:
                pulses[f] = q * hist.bin_width
    return PulseTrajectory(frame_times=frame_times, pulse_s=pulses)
