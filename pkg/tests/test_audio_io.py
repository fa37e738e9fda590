import logging
import struct
import wave

import numpy as np
import pytest

from spectromorph.audio_io import Recording, read_wav, resample, write_wav
from spectromorph.errors import FormatError, UnsupportedFormatError


def _raw_wav(path, codes, rate=16000, channels=1, fmt_code=1, bits=16):
    payload = np.asarray(codes, dtype="<i2").tobytes()
    block = channels * bits // 8
    header = struct.pack("<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + len(payload), b"WAVE",
                         b"fmt ", 16, fmt_code, channels, rate, rate * block, block, bits,
                         b"data", len(payload))
    path.write_bytes(header + payload)
    return path


def test_zero_sample(tmp_path):
    rec = read_wav(_raw_wav(tmp_path / "z.wav", [0]))
    assert rec.samples.tolist() == [0.0]
    assert rec.sample_rate == 16000
    assert (rec.language, rec.word, rec.speaker) == ("", "", "")


def test_most_negative_code(tmp_path):
    rec = read_wav(_raw_wav(tmp_path / "n.wav", [-32768]))
    assert rec.samples[0] == -1.0


def test_stereo_averaged(tmp_path):
    rec = read_wav(_raw_wav(tmp_path / "s.wav", [100, 300, -50, 50], channels=2))
    np.testing.assert_array_equal(rec.samples, [200 / 32768, 0.0])


def test_round_trip_random(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(100):
        x = rng.uniform(-1, 1, rng.integers(1, 400))
        p = tmp_path / f"r{i}.wav"
        write_wav(Recording(x, 16000), p)
        y = read_wav(p).samples
        assert y.shape == x.shape
        assert np.max(np.abs(y - x)) <= 1 / 32768


def test_write_single_frame(tmp_path):
    p = tmp_path / "one.wav"
    write_wav(Recording([0.0], 16000), p)
    with wave.open(str(p)) as w:
        assert w.getnframes() == 1
        assert len(w.readframes(1)) == 2


def test_full_scale_clipped(tmp_path, caplog):
    p = tmp_path / "c.wav"
    write_wav(Recording([1.0, -1.0], 16000), p)
    with wave.open(str(p)) as w:
        codes = np.frombuffer(w.readframes(2), dtype="<i2")
    assert codes.tolist() == [32767, -32768]
    with caplog.at_level(logging.WARNING):
        write_wav(Recording([1.5], 16000), tmp_path / "d.wav")
    assert "clipping" in caplog.text


def test_header_duration_independent_reader(tmp_path):
    p = tmp_path / "sec.wav"
    write_wav(Recording(np.zeros(16000), 16000), p)
    with wave.open(str(p)) as w:
        assert w.getnchannels() == 1 and w.getsampwidth() == 2
        assert w.getnframes() / w.getframerate() == pytest.approx(1.0, abs=1e-12)


def test_malformed_and_unsupported(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"NOTAWAVEFILE")
    with pytest.raises(FormatError):
        read_wav(bad)
    with pytest.raises(UnsupportedFormatError):
        read_wav(_raw_wav(tmp_path / "f.wav", [0, 0], fmt_code=3))
    with pytest.raises(UnsupportedFormatError):
        read_wav(_raw_wav(tmp_path / "b.wav", [0, 0], bits=8))


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        write_wav(Recording([0.0], 16000), tmp_path / "missing" / "x.wav")


def test_resample_identity():
    x = np.random.default_rng(1).uniform(-1, 1, 500)
    y = resample(Recording(x, 16000), 16000)
    np.testing.assert_array_equal(y.samples, x)


def test_resample_sine_44k_to_16k():
    n = 44100
    t = np.arange(n) / 44100
    y = resample(Recording(0.8 * np.sin(2 * np.pi * 440 * t), 44100), 16000)
    assert y.sample_rate == 16000
    tt = np.arange(y.samples.size) / 16000
    truth = 0.8 * np.sin(2 * np.pi * 440 * tt)
    # the kernel reaches 32 output samples either side; stay clear of the ends
    interior = slice(64, -64)
    assert np.max(np.abs(y.samples[interior] - truth[interior])) <= 1e-3


def test_resample_length():
    y = resample(Recording(np.zeros(4800), 48000), 16000)
    assert abs(y.samples.size - 1600) <= 1
    assert abs(y.duration - 0.1) <= 1 / 16000


def test_resample_linear():
    x = np.random.default_rng(2).uniform(-0.5, 0.5, 3000)
    a = 0.37
    y1 = resample(Recording(a * x, 22050), 16000).samples
    y2 = a * resample(Recording(x, 22050), 16000).samples
    assert np.max(np.abs(y1 - y2)) <= 1e-12


def test_resample_upsample_sine():
    t = np.arange(8000) / 8000
    y = resample(Recording(np.sin(2 * np.pi * 300 * t), 8000), 16000)
    tt = np.arange(y.samples.size) / 16000
    err = np.abs(y.samples - np.sin(2 * np.pi * 300 * tt))[128:-128]
    assert err.max() <= 1e-3
