"""WAV reading and writing for short analysis recordings.

Only the two encodings that matter for desk-scale analysis are handled:
16-bit PCM and 32-bit IEEE float, mono or stereo.  Both the canonical
header layout and WAVE_FORMAT_EXTENSIBLE are accepted, and chunks we do
not care about (LIST, bext, cue, ...) are skipped.  Samples decode to
float64: 16-bit codes are scaled by 1/32768 so the most negative code
lands exactly on -1.0, float files pass through unscaled.

The parser is deliberately strict about structure.  A truncated chunk
or a bad magic number raises CorruptHeaderError rather than yielding a
silently shortened buffer, because downstream timing analysis has no
way to notice missing tail samples.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptHeaderError, UnsupportedFormatError

_FORMAT_PCM = 0x0001
_FORMAT_IEEE_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE

# 16-bit codes are divided by 32768, never 32767: the negative rail then
# maps exactly to -1.0 and the positive rail to 32767/32768.
_PCM16_SCALE = 1.0 / 32768.0


@dataclass
class AudioBuffer:
    """Decoded audio held as float64 rows, one row per channel."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ValueError("samples must be a 1-D or 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be a positive integer")
        self.samples = arr
        self.sample_rate = int(self.sample_rate)

    @property
    def channel_count(self) -> int:
        return self.samples.shape[0]

    @property
    def frame_count(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.samples.shape[1] / self.sample_rate

    @property
    def mono(self) -> np.ndarray:
        """The single channel as a 1-D array; raises unless mono."""
        if self.channel_count != 1:
            raise ValueError("buffer has %d channels, expected mono" % self.channel_count)
        return self.samples[0]


def read_wav(path) -> AudioBuffer:
    """Read a PCM16 or float32 WAV file into an AudioBuffer."""
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_wav(data)


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode an in-memory WAV image; see read_wav for the contract."""
    if len(data) < 12:
        raise CorruptHeaderError("file too short for a RIFF header")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError("not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise CorruptHeaderError(
                "chunk %r declares %d bytes but only %d remain"
                % (chunk_id, chunk_size, len(body))
            )
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            payload = body
        # chunks are word-aligned; a pad byte follows odd-sized bodies
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise CorruptHeaderError("missing fmt chunk")
    if payload is None:
        raise CorruptHeaderError("missing data chunk")

    format_code, channels, sample_rate, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedFormatError("%d channels; only mono and stereo decode" % channels)

    if format_code == _FORMAT_PCM and bits == 16:
        frame_bytes = 2 * channels
        if len(payload) % frame_bytes:
            raise CorruptHeaderError("data chunk is not a whole number of frames")
        codes = np.frombuffer(payload, dtype="<i2")
        flat = codes.astype(np.float64) * _PCM16_SCALE
    elif format_code == _FORMAT_IEEE_FLOAT and bits == 32:
        frame_bytes = 4 * channels
        if len(payload) % frame_bytes:
            raise CorruptHeaderError("data chunk is not a whole number of frames")
        flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedFormatError(
            "format code 0x%04x at %d bits; only PCM16 and float32 decode"
            % (format_code, bits)
        )

    samples = flat.reshape(-1, channels).T.copy()
    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def _parse_fmt(body: bytes):
    if len(body) < 16:
        raise CorruptHeaderError("fmt chunk shorter than 16 bytes")
    format_code, channels, sample_rate, _byte_rate, _block_align, bits = struct.unpack_from(
        "<HHIIHH", body, 0
    )
    if format_code == _FORMAT_EXTENSIBLE:
        # the real format code is the first word of the SubFormat GUID
        if len(body) < 40:
            raise CorruptHeaderError("extensible fmt chunk shorter than 40 bytes")
        (format_code,) = struct.unpack_from("<H", body, 24)
    if sample_rate <= 0:
        raise CorruptHeaderError("non-positive sample rate")
    return format_code, channels, sample_rate, bits


def write_wav(buffer: AudioBuffer, path, sample_format: str = "pcm16") -> None:
    """Write an AudioBuffer as a canonical WAV file.

    sample_format "pcm16" scales by 32768 and clamps to the 16-bit rails,
    so a read-back matches within one quantization step.  "float32" keeps
    sample values bit-exact for float32-representable data.
    """
    with open(path, "wb") as fh:
        fh.write(encode_wav(buffer, sample_format))


def encode_wav(buffer: AudioBuffer, sample_format: str = "pcm16") -> bytes:
    interleaved = buffer.samples.T.reshape(-1)
    channels = buffer.channel_count

    if sample_format == "pcm16":
        codes = np.round(interleaved * 32768.0)
        np.clip(codes, -32768, 32767, out=codes)
        payload = codes.astype("<i2").tobytes()
        format_code, bits = _FORMAT_PCM, 16
    elif sample_format == "float32":
        payload = interleaved.astype("<f4").tobytes()
        format_code, bits = _FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError("sample_format must be 'pcm16' or 'float32'")

    block_align = channels * bits // 8
    byte_rate = buffer.sample_rate * block_align
    fmt_body = struct.pack(
        "<HHIIHH", format_code, channels, buffer.sample_rate, byte_rate, block_align, bits
    )
    chunks = [b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body]
    if format_code == _FORMAT_IEEE_FLOAT:
        # non-PCM encodings carry a fact chunk with the per-channel frame count
        chunks.append(b"fact" + struct.pack("<II", 4, buffer.frame_count))
    chunks.append(b"data" + struct.pack("<I", len(payload)) + payload)
    if len(payload) & 1:
        chunks.append(b"\x00")

    body = b"".join(chunks)
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


def to_mono(buffer: AudioBuffer) -> AudioBuffer:
    """Average the channels down to one; mono input passes through as-is."""
    if buffer.channel_count == 1:
        return buffer
    mixed = buffer.samples.mean(axis=0)
    return AudioBuffer(samples=mixed, sample_rate=buffer.sample_rate)
