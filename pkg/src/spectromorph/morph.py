"""Whitening/colouring of log-spectrograms and cross-language morph paths.

A language model maps a token to a speaker-specific residual by removing
the word mean and the separable covariance structure (whitening); colouring
with another model's parameters re-embeds that residual. Tensor-product
operators act on a grid surface as a matrix sandwich:
``(A (x) B) S = A S B^T``.
"""

from __future__ import annotations

import numpy as np

from . import stft as _stft
from .audio_io import Recording
from .covstats import (INVSQRT_REL_TOL, LanguageModel, SeparableCovariance,
                       operator_invsqrt, operator_sqrt)
from .opgeom import separable_geodesic
from .registration import WarpFunction, interp_matrix, invert_warp
from .surface import GridSurface, check_same_grid

PEAK = 0.9


def whiten(S: GridSurface, mean: GridSurface, sepcov: SeparableCovariance,
           rel_tol: float = INVSQRT_REL_TOL) -> GridSurface:
    """``Mf (S - mean) Mt^T`` with ``M`` the truncated inverse square roots."""
    check_same_grid(S, mean)
    Mf = operator_invsqrt(sepcov.freq, rel_tol)
    Mt = operator_invsqrt(sepcov.time, rel_tol)
    return S.with_values(Mf @ (S.values - mean.values) @ Mt.T, units="raw")


def color(Z: GridSurface, mean: GridSurface, sepcov: SeparableCovariance) -> GridSurface:
    """``Lf Z Lt^T + mean`` with ``L`` the operator square roots."""
    check_same_grid(Z, mean)
    Lf = operator_sqrt(sepcov.freq)
    Lt = operator_sqrt(sepcov.time)
    return mean.with_values(Lf @ Z.values @ Lt.T + mean.values, units=mean.units,
                            tags=dict(Z.tags))


def cross_language(S: GridSurface, src: LanguageModel, dst: LanguageModel,
                   word, rel_tol: float = INVSQRT_REL_TOL) -> GridSurface:
    """Map a token of `word` in the source language to the same relative
    position among the destination language's pronunciations."""
    Z = whiten(S, src.mean(word), src.sepcov, rel_tol)
    return color(Z, dst.mean(word), dst.sepcov)


def mean_path(m1: GridSurface, m2: GridSurface, x: float) -> GridSurface:
    """``m1 + x (m2 - m1)``; x outside [0, 1] extrapolates."""
    check_same_grid(m1, m2)
    return m1.with_values(m1.values + x * (m2.values - m1.values), tags={})


def interpolated_language(src: LanguageModel, dst: LanguageModel, word, x: float):
    """Mean and separable covariance of the language at position `x`."""
    return (mean_path(src.mean(word), dst.mean(word), x),
            separable_geodesic(src.sepcov, dst.sepcov, x))


def morph_path(S: GridSurface, src: LanguageModel, dst: LanguageModel, word,
               x: float, rel_tol: float = INVSQRT_REL_TOL) -> GridSurface:
    """Whiten under the source model and colour under the language at `x`."""
    Z = whiten(S, src.mean(word), src.sepcov, rel_tol)
    mean_x, cov_x = interpolated_language(src, dst, word, x)
    return color(Z, mean_x, cov_x)


def paired_path(S1: GridSurface, S2: GridSurface, src: LanguageModel,
                dst: LanguageModel, word, x: float, flip: bool = False,
                rel_tol: float = INVSQRT_REL_TOL) -> GridSurface:
    """Path between two observed tokens from different languages.

    The whitened residuals are blended as ``x Z1 + (1 - x) Z2`` and coloured
    under the language at `x`. Note the orientation: at ``x = 1`` only the
    first token's residual survives. ``flip=True`` uses the weights
    ``(1 - x, x)`` instead, which joins S1 (at x = 0) to S2 (at x = 1).
    """
    Z1 = whiten(S1, src.mean(word), src.sepcov, rel_tol)
    Z2 = whiten(S2, dst.mean(word), dst.sepcov, rel_tol)
    a = 1.0 - x if flip else x
    Z = Z1.with_values(a * Z1.values + (1.0 - a) * Z2.values)
    mean_x, cov_x = interpolated_language(src, dst, word, x)
    return color(Z, mean_x, cov_x)


def frames_from_standardized(S: GridSurface, n_frames: int, n_bins: int,
                             source_warp: WarpFunction | None = None,
                             freq_step: float | None = None) -> np.ndarray:
    """Resample a standardized, aligned surface onto a source frame timeline.

    Frame ``f`` sits at unaligned standardized time ``u = f / (n_frames - 1)``.
    An aligned surface satisfies ``S(t) = S_raw(h(t))`` with ``h`` the
    applied warp, so frame ``f`` reads column ``h^{-1}(u)`` (nearest column).
    Frequencies are linearly interpolated onto the STFT bins.
    """
    u = np.linspace(0.0, 1.0, n_frames)
    t = invert_warp(source_warp)(u) if source_warp is not None else u
    cols = np.abs(S.time_axis[None, :] - t[:, None]).argmin(axis=1)
    values = S.values[:, cols]
    step = freq_step if freq_step is not None else S.freq_axis[-1] / (n_bins - 1)
    bins = np.arange(n_bins) * step
    if values.shape[0] != n_bins or not np.allclose(bins, S.freq_axis):
        values = interp_matrix(S.freq_axis, bins) @ values
    return values


def resynthesize(S: GridSurface, source_phase, source_warp: WarpFunction | None = None,
                 hop: int = _stft.DEFAULT_HOP, window=None, sample_rate: int = 16000,
                 length: int | None = None, peak: float | None = PEAK) -> Recording:
    """Audio for a standardized log-spectrogram using the source's STFT phase.

    Parameters
    ----------
    S : standardized (and aligned) dB surface
    source_phase : ndarray (n_bins, n_frames)
        Phase of the source recording's original, unwarped STFT.
    source_warp : warp that aligned the source surface, or None
    length : number of output samples (the source's length)
    peak : normalise the output peak to this value; None leaves the gain
    """
    phase = np.asarray(source_phase)
    n_bins, n_frames = phase.shape
    if window is None:
        window = _stft.gaussian_window(sample_rate=sample_rate)
    db = frames_from_standardized(S, n_frames, n_bins, source_warp,
                                  sample_rate / len(window))
    rec = _stft.inverse_stft(db, phase, window, hop, sample_rate, length)
    y = rec.samples
    if peak is not None:
        top = np.max(np.abs(y))
        if top > 0:
            y = y * (peak / top)
    return Recording(y, sample_rate, *(S.tags.get(k, "") for k in
                                       ("language", "word", "speaker")))
