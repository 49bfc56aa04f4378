"""Exception and warning types shared across the toolkit.

Built-in exceptions are reused where Python already has the right one:
missing files raise FileNotFoundError, other OS-level failures raise
OSError, and singular matrices raise numpy.linalg.LinAlgError.  The
classes below cover the conditions that have no natural built-in.
"""


class RhythmkitError(Exception):
    """Base class for all toolkit-specific errors."""


class UnsupportedFormatError(RhythmkitError):
    """The file is a well-formed WAV but uses an encoding we do not decode."""


class CorruptHeaderError(RhythmkitError):
    """The file is not parseable as RIFF/WAVE (bad magic, truncated chunks)."""


class InvalidConfigError(RhythmkitError, ValueError):
    """A configuration object fails its own validity rules."""


class DimensionMismatchError(RhythmkitError, ValueError):
    """Matrix or vector shapes are incompatible for the requested operation."""


class EmptyInputError(RhythmkitError, ValueError):
    """An operation that needs data received none."""


class BinningMismatchError(RhythmkitError, ValueError):
    """Two histograms do not share a common binning."""


class TooShortError(RhythmkitError, ValueError):
    """The input signal is too short for the analysis window."""


class InvalidFactorError(RhythmkitError, ValueError):
    """A decimation or rate factor is out of range."""


class WindowTooLongError(RhythmkitError, ValueError):
    """A smoothing or weighting window exceeds the signal length."""


class EmptyHistogramError(RhythmkitError, ValueError):
    """An interval histogram holds no mass, so no pulse can be estimated."""


class MissingIntermediateError(RhythmkitError, FileNotFoundError):
    """A staged command cannot find the files an earlier stage should have left."""


# Recoverable conditions are reported as warnings, not exceptions: the
# caller gets a best-effort result plus a note about why it may be weak.

class RankDeficientWarning(UserWarning):
    """Requested more components than the data's numerical rank supports."""


class DegenerateContrastWarning(UserWarning):
    """The independence contrast is flat; rotation choice is arbitrary."""


class InsufficientDataWarning(UserWarning):
    """Too few samples for a trustworthy density estimate."""


class ClippingWarning(UserWarning):
    """Rendered audio exceeded full scale and was clipped."""
