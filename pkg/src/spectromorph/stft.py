"""Gaussian-window short-time Fourier analysis and phase-reuse synthesis.

Defaults follow a 16 kHz recording: a 160-sample Gaussian window with a
5 ms standard deviation, FFT size equal to the window length (81 bins at
100 Hz spacing up to 8 kHz) and a hop of 80 samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Recording
from .errors import ShapeError, TooShortError
from .surface import GridSurface

DEFAULT_SIGMA = 0.005
DEFAULT_HALF_WIDTH = 80
DEFAULT_HOP = 80
DEFAULT_FLOOR = 1e-10
OLA_EPS = 1e-8


@dataclass(frozen=True)
class ComplexSpectrogram:
    values: np.ndarray  # (n_freq, n_frames)
    freq_step: float
    frame_times: np.ndarray
    sample_rate: int
    hop: int
    window: np.ndarray
    n_samples: int

    @property
    def fft_size(self) -> int:
        return self.window.size

    @property
    def phase(self) -> np.ndarray:
        """Unit-modulus phase factors; zero bins get phase 1."""
        mag = np.abs(self.values)
        out = np.ones_like(self.values)
        nz = mag > 0
        out[nz] = self.values[nz] / mag[nz]
        return out


def gaussian_window(sigma_s: float = DEFAULT_SIGMA, sample_rate: int = 16000,
                    half_width_samples: int = DEFAULT_HALF_WIDTH) -> np.ndarray:
    """Sampled Gaussian ``exp(-0.5 (tau / sigma)^2)``.

    The window has ``2 * half_width_samples`` taps at offsets
    ``-half_width .. half_width - 1``; index ``half_width_samples`` is the
    centre (value 1) and ``w[h + k] == w[h - k]``.
    """
    if sigma_s <= 0:
        raise ValueError("sigma_s must be positive")
    tau = np.arange(-half_width_samples, half_width_samples) / sample_rate
    return np.exp(-0.5 * (tau / sigma_s) ** 2)


def forward_stft(rec: Recording, window: np.ndarray | None = None,
                 hop: int = DEFAULT_HOP) -> ComplexSpectrogram:
    """Short-time Fourier transform with frames centred every `hop` samples.

    The signal is reflect-padded by half a window, so frame ``f`` is centred
    on sample ``f * hop`` of the original signal. FFT size equals the window
    length; only non-negative frequency bins are kept.
    """
    if window is None:
        window = gaussian_window(sample_rate=rec.sample_rate)
    window = np.asarray(window, dtype=float)
    n_fft = window.size
    if hop < 1:
        raise ValueError("hop must be >= 1")
    x = rec.samples
    if x.size < n_fft:
        raise TooShortError(f"{x.size} samples is shorter than one window ({n_fft})")

    pad = n_fft // 2
    xp = np.pad(x, pad, mode="reflect")
    n_frames = 1 + x.size // hop
    starts = np.arange(n_frames) * hop
    frames = xp[starts[:, None] + np.arange(n_fft)[None, :]] * window
    values = np.fft.rfft(frames, n=n_fft, axis=1).T
    return ComplexSpectrogram(
        values=values,
        freq_step=rec.sample_rate / n_fft,
        frame_times=starts / rec.sample_rate,
        sample_rate=rec.sample_rate,
        hop=hop,
        window=window,
        n_samples=x.size,
    )


def log_spectrogram(spec: ComplexSpectrogram, floor: float = DEFAULT_FLOOR) -> GridSurface:
    """``10 log10(max(|X|^2, floor))`` on the (frequency, frame time) grid."""
    if floor <= 0:
        raise ValueError("floor must be positive")
    power = np.maximum(np.abs(spec.values) ** 2, floor)
    freq = np.arange(spec.values.shape[0]) * spec.freq_step
    return GridSurface(10.0 * np.log10(power), freq, spec.frame_times, units="dB")


def inverse_stft(magnitude_db, phase, window: np.ndarray | None = None,
                 hop: int = DEFAULT_HOP, sample_rate: int = 16000,
                 length: int | None = None) -> Recording:
    """Overlap-add resynthesis from a dB magnitude and a supplied phase.

    Parameters
    ----------
    magnitude_db : GridSurface or ndarray, shape (n_freq, n_frames)
    phase : ndarray, shape (n_freq, n_frames)
        Either unit complex factors or angles in radians.
    window, hop : analysis window and hop used by `forward_stft`.
    length : int, optional
        Number of output samples; defaults to ``(n_frames - 1) * hop + 1``.

    Frames are windowed again and normalised by the overlapped squared
    window (denominator floored at 1e-8), the least-squares inverse of
    `forward_stft` for an unmodified spectrogram.
    """
    if isinstance(magnitude_db, GridSurface):
        if magnitude_db.units != "dB":
            raise ValueError("magnitude surface must be in dB")
        db = magnitude_db.values
    else:
        db = np.asarray(magnitude_db, dtype=float)
    phase = np.asarray(phase)
    if db.shape != phase.shape:
        raise ShapeError(f"magnitude {db.shape} and phase {phase.shape} differ")
    if not np.iscomplexobj(phase):
        phase = np.exp(1j * phase)
    if window is None:
        window = gaussian_window(sample_rate=sample_rate)
    window = np.asarray(window, dtype=float)
    n_fft = window.size
    if db.shape[0] != n_fft // 2 + 1:
        raise ShapeError(f"{db.shape[0]} bins do not match FFT size {n_fft}")

    n_frames = db.shape[1]
    X = 10.0 ** (db / 20.0) * phase
    frames = np.fft.irfft(X, n=n_fft, axis=0).T * window

    pad = n_fft // 2
    total = (n_frames - 1) * hop + n_fft
    out = np.zeros(total)
    norm = np.zeros(total)
    w2 = window ** 2
    for f in range(n_frames):
        s = f * hop
        out[s:s + n_fft] += frames[f]
        norm[s:s + n_fft] += w2
    y = out / np.maximum(norm, OLA_EPS)

    if length is None:
        length = (n_frames - 1) * hop + 1
    y = y[pad:pad + length]
    if y.size < length:
        y = np.pad(y, (0, length - y.size))
    return Recording(y, sample_rate)
