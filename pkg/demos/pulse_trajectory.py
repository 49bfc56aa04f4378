"""Following the pulse through time.

Inter-onset intervals drip into a decaying histogram, half a second at a
time.  Each frame, an error function e(q) scores every candidate period
by how far the occupied bins sit from its multiples; the tolerated local
minimum at the largest period is the pulse.  The decay lets the tracker
change its mind: this demo plays a 250 ms grid for five seconds, then
shifts to 200 ms and watches the estimate follow.  The handover is not
instant; while both periods hold real mass the best explanation is
briefly a common divisor, and only once the old evidence has decayed
does the new period win outright.
"""

import os

import numpy as np

from rhythmkit.onsets import OnsetList
from rhythmkit.tatum import (
    IoiHistogram,
    TatumConfig,
    accumulate_frame,
    error_function,
    pick_tatum,
    trajectory,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

rng = np.random.default_rng(4)

duration_s = 25.0
first = np.arange(0.25, 5.0, 0.25)
second = np.arange(5.0, duration_s, 0.20)
times = np.sort(np.concatenate([first, second]) + rng.normal(0.0, 0.003, first.size + second.size))
onsets = OnsetList(times=times, loudness=np.ones(times.size))

config = TatumConfig()
traj = trajectory(onsets, duration_s, config)
previous = None
for frame_time, pulse in zip(traj.frame_times, traj.pulse_s):
    label = "-" if np.isnan(pulse) else "%.3f s" % pulse
    if label != previous:
        print("t=%5.1f s  pulse %s" % (frame_time, label))
        previous = label

# a snapshot of the error curve at the end of the run
hist = IoiHistogram.empty(config)
for f in range(int(duration_s / config.frame_s)):
    lo, hi = f * config.frame_s, (f + 1) * config.frame_s
    mask = (times[1:] >= lo) & (times[1:] < hi)
    hist = accumulate_frame(hist, np.diff(times)[mask], config)
picked = pick_tatum(hist, config)
print("final pick: %d ms" % picked)

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    qs = np.arange(50, 501)
    errors = [error_function(hist, int(q)) for q in qs]
    fig, axes = plt.subplots(2, 1, figsize=(8, 5))
    axes[0].step(traj.frame_times, traj.pulse_s * 1000, where="post")
    axes[0].set_ylabel("pulse (ms)")
    axes[0].set_title("pulse trajectory across a tempo change")
    axes[1].plot(qs, errors, linewidth=0.8)
    axes[1].axvline(picked, color="crimson", linestyle=":", linewidth=1)
    axes[1].set_xlabel("candidate period q (ms)")
    axes[1].set_ylabel("e(q)")
    path = os.path.join(OUT_DIR, "pulse.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print("wrote", path)
except ImportError:
    print("matplotlib not installed; skipping the figure")
