"""16-bit PCM WAV input/output and band-limited resampling."""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import i0

from .errors import FormatError, UnsupportedFormatError

LOG = logging.getLogger(__name__)

PCM_SCALE = 32768.0
WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class Recording:
    """Mono recording with corpus tags.

    Samples are floats in [-1, 1]. Tags are empty strings until a manifest
    fills them in.
    """

    samples: np.ndarray
    sample_rate: int
    language: str = ""
    word: str = ""
    speaker: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_tags(self, language="", word="", speaker="") -> "Recording":
        return replace(self, language=language, word=word, speaker=speaker)


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack("<4sI", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            # truncated trailing chunk: hand back what is there
            LOG.warning("chunk %r truncated (%d of %d bytes)", cid, len(body), size)
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> Recording:
    """Read a 16-bit PCM WAV file.

    Multichannel data are averaged to mono and integer codes are scaled by
    1/32768, so -32768 maps to exactly -1.0.

    Raises
    ------
    FormatError
        The file is not a RIFF/WAVE container or lacks fmt/data chunks.
    UnsupportedFormatError
        The encoding is not 16-bit integer PCM.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pcm = None
    for cid, body in _chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == WAVE_FORMAT_EXTENSIBLE and len(body) >= 26:
                # sub-format GUID starts with the actual format code
                fmt = (struct.unpack("<H", body[24:26])[0],) + fmt[1:]
        elif cid == b"data":
            pcm = body
    if fmt is None or pcm is None:
        raise FormatError(f"{path}: missing fmt or data chunk")

    code, channels, rate, _, block_align, bits = fmt
    if code != WAVE_FORMAT_PCM:
        raise UnsupportedFormatError(f"{path}: format code {code} is not PCM")
    if bits != 16:
        raise UnsupportedFormatError(f"{path}: {bits}-bit samples, expected 16")
    if channels < 1 or rate <= 0 or block_align != 2 * channels:
        raise FormatError(f"{path}: inconsistent fmt chunk")

    n_frames = len(pcm) // block_align
    if n_frames == 0:
        raise FormatError(f"{path}: empty data chunk")
    codes = np.frombuffer(pcm[:n_frames * block_align], dtype="<i2")
    codes = codes.reshape(n_frames, channels).astype(float)
    return Recording(codes.mean(axis=1) / PCM_SCALE, rate)


def write_wav(rec: Recording, path) -> None:
    """Write `rec` as a mono 16-bit PCM file.

    Out-of-range samples are clipped (not rescaled) and a warning is logged.
    Positive full scale maps to the top code 32767.
    """
    x = rec.samples
    n_clip = int(np.count_nonzero(np.abs(x) > 1.0))
    if n_clip:
        LOG.warning("clipping %d samples outside [-1, 1]", n_clip)
    codes = np.clip(np.round(np.clip(x, -1.0, 1.0) * PCM_SCALE), -32768, 32767)
    payload = codes.astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, WAVE_FORMAT_PCM, 1, rec.sample_rate,
        2 * rec.sample_rate, 2, 16,
        b"data", len(payload),
    )
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


def resample(rec: Recording, target_rate: int, zero_crossings: int = 32,
             beta: float = 8.6) -> Recording:
    """Band-limited resampling with a Kaiser-windowed sinc kernel.

    The kernel spans `zero_crossings` lobes on each side of the output sample
    (64 taps at the lower of the two rates) and its cutoff sits at the lower
    Nyquist frequency. Output length is ``round(n * target_rate / rate)``.
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == rec.sample_rate:
        return replace(rec, samples=rec.samples.copy())

    x = rec.samples
    fs = rec.sample_rate
    ratio = min(1.0, target_rate / fs)
    n_out = max(1, int(round(x.size * target_rate / fs)))
    half = zero_crossings / ratio  # kernel half-width in input samples

    taps = int(np.ceil(2 * half)) + 1
    y = np.empty(n_out)
    for lo in range(0, n_out, 4096):
        t = np.arange(lo, min(lo + 4096, n_out)) * (fs / target_rate)
        idx = (np.floor(t - half).astype(int) + 1)[:, None] + np.arange(taps)[None, :]
        d = t[:, None] - idx
        inside = (np.abs(d) < half) & (idx >= 0) & (idx < x.size)
        arg = np.where(inside, 1.0 - (d / half) ** 2, 0.0)
        kernel = ratio * np.sinc(ratio * d) * i0(beta * np.sqrt(arg)) / i0(beta)
        kernel[~inside] = 0.0
        y[lo:lo + t.size] = np.sum(x[np.clip(idx, 0, x.size - 1)] * kernel, axis=1)
    return replace(rec, samples=y, sample_rate=target_rate)
