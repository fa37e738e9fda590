"""Formant-synthesized stand-in corpus.

Each token is a glottal pulse train passed through three time-varying
second-order resonators. Formant trajectories come from the word, shifted
by the language and by a random per-token offset whose covariance is
language specific; speakers differ in pitch and a formant scale factor, and
every token gets its own speech rate and a nonlinear time distortion.
"""

from __future__ import annotations

import copy
import os

import numpy as np

from ..audio_io import Recording, write_wav
from .manifest import ManifestEntry, write_manifest
from .storage import token_name

DEFAULT_SPEC = {
    "sample_rate": 16000,
    "n_speakers": 3,
    "duration": [0.30, 0.45],
    "f0_range": [100.0, 220.0],
    "bandwidths": [90.0, 110.0, 160.0],
    "noise_level": 2e-3,
    "time_distortion_sd": 0.15,
    "languages": {
        "lang_a": {"shift": [0.0, 0.0, 0.0], "formant_sd": [40.0, 120.0, 150.0],
                   "correlation": 0.0},
        "lang_b": {"shift": [40.0, -150.0, 100.0], "formant_sd": [90.0, 40.0, 60.0],
                   "correlation": 0.6},
    },
    "words": {
        "one": [[350, 800, 2300], [600, 1100, 2400], [400, 900, 2300]],
        "two": [[700, 1200, 2500], [350, 2100, 2800], [300, 2300, 3000]],
    },
}


def default_spec(**overrides) -> dict:
    spec = copy.deepcopy(DEFAULT_SPEC)
    spec.update(overrides)
    return spec


def _resonate(x, freqs, bws, fs):
    """Cascade of unit-DC-gain two-pole resonators with per-sample formants."""
    y = x
    for F, B in zip(freqs, bws):
        r = np.exp(-np.pi * B / fs)
        b1 = 2.0 * r * np.cos(2.0 * np.pi * F / fs)
        b2 = -r * r
        a = 1.0 - b1 - b2
        out = np.empty_like(y)
        y1 = y2 = 0.0
        for n in range(y.size):
            v = a[n] * y[n] + b1[n] * y1 + b2 * y2
            out[n] = v
            y2, y1 = y1, v
        y = out
    return y


def synth_token(rng, word_traj, lang, speaker, spec) -> np.ndarray:
    fs = spec["sample_rate"]
    dur = rng.uniform(*spec["duration"])
    n = int(round(dur * fs))
    u = np.arange(n) / (n - 1)
    # token-specific monotone time distortion
    gamma = np.exp(rng.normal(0.0, spec["time_distortion_sd"]))
    u_warp = u ** gamma

    traj = np.asarray(word_traj, dtype=float)
    knots = np.linspace(0.0, 1.0, traj.shape[0])
    sd = np.asarray(lang["formant_sd"], dtype=float)
    rho = lang.get("correlation", 0.0)
    corr = np.full((3, 3), rho) + (1.0 - rho) * np.eye(3)
    offset = rng.multivariate_normal(np.zeros(3), corr * np.outer(sd, sd))
    formants = []
    for j in range(3):
        base = np.interp(u_warp, knots, traj[:, j])
        f = (base + lang["shift"][j] + offset[j]) * speaker["scale"]
        formants.append(np.clip(f, 150.0, 0.45 * fs))
    formants.sort(key=lambda f: f.mean())

    f0 = speaker["f0"] * (1.0 + 0.05 * np.sin(np.pi * u))
    phase = np.cumsum(f0 / fs)
    pulses = np.diff(np.floor(phase), prepend=0.0)
    src = pulses + 0.02 * rng.standard_normal(n)
    y = _resonate(src, formants, spec["bandwidths"], fs)
    env = np.sin(np.pi * np.clip(u_warp, 0, 1)) ** 0.5
    y = y * env
    y = 0.5 * y / np.max(np.abs(y))
    y = y + spec["noise_level"] * rng.standard_normal(n)
    return np.clip(y, -1.0, 1.0)


def synth_corpus(spec: dict | None, seed: int, out_dir) -> list:
    """Write one WAV per (language, word, speaker) and a manifest.csv.

    Returns the manifest entries. Output depends only on `spec` and `seed`.
    """
    spec = default_spec() if spec is None else {**default_spec(), **spec}
    os.makedirs(out_dir, exist_ok=True)
    root = np.random.SeedSequence(seed)
    langs = sorted(spec["languages"])
    words = sorted(spec["words"])
    n_spk = int(spec["n_speakers"])
    spk_rng = np.random.default_rng(root.spawn(1)[0])
    entries = []
    for li, lname in enumerate(langs):
        speakers = [{"f0": spk_rng.uniform(*spec["f0_range"]),
                     "scale": float(np.exp(spk_rng.normal(0.0, 0.04)))}
                    for _ in range(n_spk)]
        for wi, wname in enumerate(words):
            for si in range(n_spk):
                rng = np.random.default_rng(np.random.SeedSequence([seed, li, wi, si, 1]))
                x = synth_token(rng, spec["words"][wname], spec["languages"][lname],
                                speakers[si], spec)
                spk = f"s{si:02d}"
                fname = token_name(lname, wname, spk) + ".wav"
                path = os.path.join(out_dir, fname)
                write_wav(Recording(x, spec["sample_rate"]), path)
                entries.append(ManifestEntry(path, lname, wname, spk))
    write_manifest(entries, os.path.join(out_dir, "manifest.csv"))
    return entries
