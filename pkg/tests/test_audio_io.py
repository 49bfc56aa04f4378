"""WAV codec tests against hand-assembled RIFF images.

The fixtures below build WAV bytes directly with struct.pack, so the
reader is checked against the file format, not against our own writer.
"""

import struct

import numpy as np
import pytest

from rhythmkit.audio_io import (
    AudioBuffer,
    decode_wav,
    encode_wav,
    read_wav,
    to_mono,
    write_wav,
)
from rhythmkit.errors import CorruptHeaderError, UnsupportedFormatError


def riff(body: bytes) -> bytes:
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


def fmt_chunk(format_code, channels, rate, bits) -> bytes:
    block = channels * bits // 8
    body = struct.pack("<HHIIHH", format_code, channels, rate, rate * block, block, bits)
    return b"fmt " + struct.pack("<I", len(body)) + body


def data_chunk(payload: bytes) -> bytes:
    return b"data" + struct.pack("<I", len(payload)) + payload


def pcm16_file(codes, rate=44100, channels=1) -> bytes:
    payload = np.asarray(codes, dtype="<i2").tobytes()
    return riff(fmt_chunk(1, channels, rate, 16) + data_chunk(payload))


def float32_file(values, rate=44100, channels=1) -> bytes:
    payload = np.asarray(values, dtype="<f4").tobytes()
    return riff(fmt_chunk(3, channels, rate, 32) + data_chunk(payload))


class TestRead:
    def test_mono_pcm16_one_second(self):
        buf = decode_wav(pcm16_file(np.zeros(44100, dtype=np.int16)))
        assert buf.channel_count == 1
        assert buf.frame_count == 44100
        assert buf.sample_rate == 44100
        assert buf.duration_s == pytest.approx(1.0)

    def test_stereo_frame_count(self):
        codes = np.zeros(2 * 44100, dtype=np.int16)  # 2 s at 22050, interleaved
        buf = decode_wav(pcm16_file(codes, rate=22050, channels=2))
        assert buf.channel_count == 2
        assert buf.frame_count == 44100

    def test_pcm16_scaling_hits_exact_rails(self):
        buf = decode_wav(pcm16_file([32767, -32768, 0, 16384]))
        assert buf.samples[0, 0] == 32767.0 / 32768.0
        assert buf.samples[0, 1] == -1.0
        assert buf.samples[0, 2] == 0.0
        assert buf.samples[0, 3] == 0.5

    def test_stereo_deinterleaves(self):
        # interleaved L R L R: left channel 100s, right channel 200s
        buf = decode_wav(pcm16_file([100, 200, 100, 200], channels=2))
        assert np.all(buf.samples[0] == 100 / 32768.0)
        assert np.all(buf.samples[1] == 200 / 32768.0)

    def test_float32_passthrough(self):
        values = np.array([0.25, -0.75, 1.5], dtype="<f4")  # float WAVs may exceed 1
        buf = decode_wav(float32_file(values))
        assert np.array_equal(buf.samples[0], values.astype(np.float64))

    def test_extensible_header(self):
        # 40-byte fmt: extensible wrapper around PCM16
        guid_tail = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"
        ext = struct.pack("<HHIIHH", 0xFFFE, 1, 8000, 16000, 2, 16)
        ext += struct.pack("<HHI", 22, 16, 1) + struct.pack("<H", 1) + guid_tail
        body = b"fmt " + struct.pack("<I", len(ext)) + ext
        image = riff(body + data_chunk(np.asarray([8192], dtype="<i2").tobytes()))
        buf = decode_wav(image)
        assert buf.samples[0, 0] == 0.25

    def test_skips_unknown_chunks(self):
        list_chunk = b"LIST" + struct.pack("<I", 4) + b"INFO"
        image = riff(
            list_chunk + fmt_chunk(1, 1, 8000, 16) + data_chunk(b"\x00\x40")
        )
        buf = decode_wav(image)
        assert buf.samples[0, 0] == 0.5

    def test_missing_file_raises_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_wav(tmp_path / "nope.wav")


class TestReadErrors:
    def test_bad_magic(self):
        with pytest.raises(CorruptHeaderError):
            decode_wav(b"RIFX" + b"\x00" * 40)

    def test_truncated_header(self):
        with pytest.raises(CorruptHeaderError):
            decode_wav(b"RIFF\x00\x00")

    def test_truncated_data_chunk(self):
        image = pcm16_file([1, 2, 3, 4])
        with pytest.raises(CorruptHeaderError):
            decode_wav(image[:-3])

    def test_missing_fmt(self):
        with pytest.raises(CorruptHeaderError):
            decode_wav(riff(data_chunk(b"\x00\x00")))

    def test_missing_data(self):
        with pytest.raises(CorruptHeaderError):
            decode_wav(riff(fmt_chunk(1, 1, 44100, 16)))

    def test_partial_trailing_frame(self):
        image = riff(fmt_chunk(1, 2, 44100, 16) + data_chunk(b"\x00\x00\x00"))
        with pytest.raises(CorruptHeaderError):
            decode_wav(image)

    def test_24_bit_unsupported(self):
        image = riff(fmt_chunk(1, 1, 44100, 24) + data_chunk(b"\x00" * 6))
        with pytest.raises(UnsupportedFormatError):
            decode_wav(image)

    def test_mulaw_unsupported(self):
        image = riff(fmt_chunk(7, 1, 8000, 8) + data_chunk(b"\x00"))
        with pytest.raises(UnsupportedFormatError):
            decode_wav(image)

    def test_three_channels_unsupported(self):
        image = riff(fmt_chunk(1, 3, 44100, 16) + data_chunk(b"\x00" * 6))
        with pytest.raises(UnsupportedFormatError):
            decode_wav(image)


class TestWrite:
    def test_float32_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        original = rng.uniform(-1, 1, 2048).astype(np.float32).astype(np.float64)
        buf = AudioBuffer(samples=original, sample_rate=22050)
        path = tmp_path / "f32.wav"
        write_wav(buf, path, sample_format="float32")
        back = read_wav(path)
        assert np.array_equal(back.samples[0], original)
        assert back.sample_rate == 22050

    def test_pcm16_round_trip_within_quantization(self, tmp_path):
        rng = np.random.default_rng(11)
        original = rng.uniform(-0.999, 0.999, 4096)
        buf = AudioBuffer(samples=original, sample_rate=44100)
        path = tmp_path / "p16.wav"
        write_wav(buf, path)
        back = read_wav(path)
        assert np.max(np.abs(back.samples[0] - original)) <= 2.0**-15

    def test_pcm16_clamps_out_of_range(self):
        buf = AudioBuffer(samples=np.array([1.5, -2.0]), sample_rate=8000)
        back = decode_wav(encode_wav(buf))
        assert back.samples[0, 0] == 32767 / 32768.0
        assert back.samples[0, 1] == -1.0

    def test_stereo_round_trip_keeps_channels(self, tmp_path):
        left = np.linspace(-0.5, 0.5, 100)
        right = np.linspace(0.5, -0.5, 100)
        buf = AudioBuffer(samples=np.stack([left, right]), sample_rate=16000)
        path = tmp_path / "st.wav"
        write_wav(buf, path, sample_format="float32")
        back = read_wav(path)
        assert back.channel_count == 2
        assert np.allclose(back.samples[0], left, atol=1e-7)
        assert np.allclose(back.samples[1], right, atol=1e-7)

    def test_rejects_unknown_format(self):
        buf = AudioBuffer(samples=np.zeros(4), sample_rate=8000)
        with pytest.raises(ValueError):
            encode_wav(buf, sample_format="pcm24")


class TestBuffer:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            AudioBuffer(samples=np.array([0.0, np.nan]), sample_rate=8000)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            AudioBuffer(samples=np.zeros(4), sample_rate=0)

    def test_mono_property_requires_mono(self):
        stereo = AudioBuffer(samples=np.zeros((2, 8)), sample_rate=8000)
        with pytest.raises(ValueError):
            stereo.mono


class TestToMono:
    def test_averages_channels(self):
        buf = AudioBuffer(samples=np.array([[0.5, 0.5], [-0.5, 0.1]]), sample_rate=8000)
        mono = to_mono(buf)
        assert mono.channel_count == 1
        assert np.allclose(mono.samples[0], [0.0, 0.3])

    def test_identical_channels_average_to_themselves(self):
        row = np.linspace(-1, 1, 64)
        buf = AudioBuffer(samples=np.stack([row, row]), sample_rate=8000)
        assert np.array_equal(to_mono(buf).samples[0], row)

    def test_mono_passes_through(self):
        buf = AudioBuffer(samples=np.zeros(16), sample_rate=8000)
        assert to_mono(buf) is buf
