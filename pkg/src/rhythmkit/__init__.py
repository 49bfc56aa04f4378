"""Percussive stream separation, onset detection, and pulse estimation.

The package decomposes a short recording into independently moving
rhythm streams, finds each stream's onsets, and tracks the lowest
regular pulse the onsets imply.  See the individual modules for the
machinery; the names re-exported here are the everyday surface.
"""

from .audio_io import AudioBuffer, read_wav, to_mono, write_wav
from .onsets import OnsetConfig, OnsetList, detect_onsets
from .render import (
    MidiRenderConfig,
    export_csv,
    onsets_from_csv,
    onsets_to_csv,
    render_clicks,
    to_midi,
    trajectory_to_csv,
)
from .separate import (
    MixingModel,
    SeparatedStream,
    ica_rotation,
    isa_separate,
    kl_divergence,
    mutual_information,
    whiten,
)
from .spectral import Spectrogram, StftConfig, istft, magnitude, phase, stft
from .tatum import (
    IoiHistogram,
    PulseTrajectory,
    TatumConfig,
    error_function,
    pick_tatum,
    trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "IoiHistogram",
    "MidiRenderConfig",
    "MixingModel",
    "OnsetConfig",
    "OnsetList",
    "PulseTrajectory",
    "SeparatedStream",
    "Spectrogram",
    "StftConfig",
    "TatumConfig",
    "detect_onsets",
    "error_function",
    "export_csv",
    "ica_rotation",
    "isa_separate",
    "istft",
    "kl_divergence",
    "magnitude",
    "mutual_information",
    "onsets_from_csv",
    "onsets_to_csv",
    "phase",
    "pick_tatum",
    "read_wav",
    "render_clicks",
    "stft",
    "to_midi",
    "to_mono",
    "trajectory",
    "trajectory_to_csv",
    "whiten",
    "write_wav",
]
