"""Functional data analysis of speech log-spectrograms.

Smoothing and time registration of log-spectrogram surfaces, separable
time/frequency covariance estimation, Procrustes geometry of covariance
operators, permutation tests, and cross-language morphing with audio
resynthesis.
"""

from .audio_io import Recording, read_wav, resample, write_wav
from .surface import GridSurface

__version__ = "0.1.0"

__all__ = ["Recording", "GridSurface", "read_wav", "write_wav", "resample"]
