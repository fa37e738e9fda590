import numpy as np
import pytest

from spectromorph.surface import GridSurface

FREQ = np.linspace(0.0, 8000.0, 81)

# (criterion, passed, text) lines collected by test_acceptance.py
ACCEPTANCE = []
TIME = np.linspace(0.0, 1.0, 100)


def random_psd(rng, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    A = rng.standard_normal((n, rank))
    return scale * A @ A.T / rank


def surface(values, freq=None, time=None, **kw):
    values = np.asarray(values, dtype=float)
    nf, nt = values.shape
    freq = np.linspace(0.0, 8000.0, nf) if freq is None else freq
    time = np.linspace(0.0, 1.0, nt) if time is None else time
    return GridSurface(values, freq, time, **kw)


def separable_language(seed, n_words=5, n_speakers=10, nf=81, nt=100, noise=1.0):
    """Surfaces drawn from word means plus separable Gaussian residuals."""
    rng = np.random.default_rng(seed)
    Af = rng.standard_normal((nf, nf)) / np.sqrt(nf)
    At = rng.standard_normal((nt, nt)) / np.sqrt(nt)
    data = {}
    for w in range(n_words):
        mean = 50.0 + 10.0 * rng.standard_normal((nf, nt))
        data[f"w{w}"] = [surface(mean + noise * Af @ rng.standard_normal((nf, nt)) @ At.T)
                         for _ in range(n_speakers)]
    return data


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def run_pipeline(root, seed=1, M=30, extra=()):
    """Synthesize a corpus and run every CLI stage inside `root`.

    Paths are relative to `root` so that two runs in different directories
    can be compared byte for byte.
    """
    import os

    from spectromorph.pipeline.cli import main

    cwd = os.getcwd()
    os.chdir(root)
    try:
        steps = [
            ["synth-corpus", "corpus", "--seed", str(seed)],
            ["preprocess", "corpus/manifest.csv", "--out", "run", *extra],
            ["estimate", "--out", "run", *extra],
            ["test", "--seed", str(seed), "-M", str(M), "--out", "run", *extra],
            ["morph", "--language", "lang_a", "--word", "one", "--speaker", "s00",
             "--to", "lang_b", "--out", "run", "--name", "six", *extra],
        ]
        for argv in steps:
            code = main(argv)
            if code != 0:
                raise AssertionError(f"{argv[0]} exited with {code}")
    finally:
        os.chdir(cwd)
    return root / "run"


def artifact_hashes(run_dir, skip=("report.json",)):
    import hashlib

    return {str(p.relative_to(run_dir)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(run_dir.rglob("*")) if p.is_file() and p.name not in skip}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {text}")
