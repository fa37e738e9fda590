"""FGRD1 grid container and typed save/load helpers.

Layout: the ASCII line ``FGRD1``, one line of JSON metadata (``dims``,
``units``, axis ranges, tags, ``config_hash`` and free-form extras), then
the array as row-major little-endian float64. Files are written to a
temporary name and renamed into place.
"""

from __future__ import annotations

import json
import os

import numpy as np

from ..covstats import CovarianceFactor, LanguageModel, SeparableCovariance
from ..errors import FormatError, StaleArtifactError
from ..registration import WarpFunction
from ..surface import GridSurface

MAGIC = b"FGRD1"


def atomic_write(path, data: bytes) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_grid(path, array, meta: dict | None = None) -> None:
    array = np.ascontiguousarray(array, dtype="<f8")
    meta = dict(meta or {})
    meta["dims"] = list(array.shape)
    line = json.dumps(meta, sort_keys=True, separators=(",", ":"))
    if "\n" in line:
        raise ValueError("metadata must serialize to one line")
    atomic_write(path, MAGIC + b"\n" + line.encode("utf-8") + b"\n" + array.tobytes())


def read_grid(path, expect_hash: str | None = None):
    """Return ``(array, meta)``; refuse artifacts from another configuration."""
    with open(path, "rb") as fh:
        data = fh.read()
    first = data.find(b"\n")
    second = data.find(b"\n", first + 1)
    if first < 0 or second < 0 or data[:first] != MAGIC:
        raise FormatError(f"{path}: not an FGRD1 file")
    try:
        meta = json.loads(data[first + 1:second].decode("utf-8"))
        dims = tuple(int(d) for d in meta["dims"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: bad metadata line") from exc
    payload = data[second + 1:]
    if len(payload) != 8 * int(np.prod(dims)):
        raise FormatError(f"{path}: payload has {len(payload)} bytes for dims {dims}")
    if expect_hash is not None and meta.get("config_hash") != expect_hash:
        raise StaleArtifactError(
            f"{path}: config hash {meta.get('config_hash')} != current {expect_hash}")
    return np.frombuffer(payload, dtype="<f8").reshape(dims).copy(), meta


def _axis_meta(axis):
    axis = np.asarray(axis, dtype=float)
    return [float(axis[0]), float(axis[-1])]


def save_surface(path, s: GridSurface, config_hash: str, **extra) -> None:
    meta = {"kind": "surface", "units": s.units, "tags": s.tags,
            "freq_range": _axis_meta(s.freq_axis), "time_range": _axis_meta(s.time_axis),
            "config_hash": config_hash, **extra}
    write_grid(path, s.values, meta)


def load_surface(path, expect_hash: str | None = None) -> GridSurface:
    values, meta = read_grid(path, expect_hash)
    nf, nt = values.shape
    return GridSurface(values, np.linspace(*meta["freq_range"], nf),
                       np.linspace(*meta["time_range"], nt),
                       meta.get("units", "dB"), meta.get("tags", {}))


def save_warp(path, w: WarpFunction, config_hash: str, **extra) -> None:
    meta = {"kind": "warp", "converged": bool(w.converged), "config_hash": config_hash, **extra}
    write_grid(path, np.vstack([w.knots, w.values]), meta)


def load_warp(path, expect_hash: str | None = None) -> WarpFunction:
    arr, meta = read_grid(path, expect_hash)
    return WarpFunction(arr[0], arr[1], converged=meta.get("converged", True))


def save_phase(path, phase, config_hash: str, **extra) -> None:
    """Phase sidecar: two stacked matrices, cos and sin of the angle."""
    phase = np.asarray(phase)
    ang = np.angle(phase) if np.iscomplexobj(phase) else phase
    meta = {"kind": "phase", "config_hash": config_hash, **extra}
    write_grid(path, np.stack([np.cos(ang), np.sin(ang)]), meta)


def load_phase(path, expect_hash: str | None = None):
    arr, meta = read_grid(path, expect_hash)
    return arr[0] + 1j * arr[1], meta


def save_factor(path, C: CovarianceFactor, config_hash: str) -> None:
    meta = {"kind": "covariance", "axis": C.axis, "axis_range": _axis_meta(C.axis_grid),
            "config_hash": config_hash}
    write_grid(path, C.matrix, meta)


def load_factor(path, expect_hash: str | None = None) -> CovarianceFactor:
    arr, meta = read_grid(path, expect_hash)
    return CovarianceFactor(arr, meta["axis"], np.linspace(*meta["axis_range"], arr.shape[0]))


def model_dir(out_dir, language) -> str:
    return os.path.join(out_dir, "models", safe_name(language))


def save_model(out_dir, model: LanguageModel, config_hash: str) -> str:
    d = model_dir(out_dir, model.language)
    words = sorted(model.word_means)
    for i, w in enumerate(words):
        save_surface(os.path.join(d, f"mean_{i:03d}.fgrd"), model.word_means[w], config_hash)
    save_factor(os.path.join(d, "cov_freq.fgrd"), model.sepcov.freq, config_hash)
    save_factor(os.path.join(d, "cov_time.fgrd"), model.sepcov.time, config_hash)
    index = {"language": model.language, "words": words,
             "sample_sizes": {w: model.sample_sizes.get(w, 0) for w in words},
             "config_hash": config_hash}
    atomic_write(os.path.join(d, "model.json"),
                 (json.dumps(index, sort_keys=True, indent=1) + "\n").encode("utf-8"))
    return d


def load_model(out_dir, language, expect_hash: str | None = None) -> LanguageModel:
    d = model_dir(out_dir, language)
    with open(os.path.join(d, "model.json"), encoding="utf-8") as fh:
        index = json.load(fh)
    if expect_hash is not None and index.get("config_hash") != expect_hash:
        raise StaleArtifactError(f"{d}: model built under another configuration")
    means = {w: load_surface(os.path.join(d, f"mean_{i:03d}.fgrd"), expect_hash)
             for i, w in enumerate(index["words"])}
    sep = SeparableCovariance(load_factor(os.path.join(d, "cov_freq.fgrd"), expect_hash),
                              load_factor(os.path.join(d, "cov_time.fgrd"), expect_hash))
    return LanguageModel(index["language"], means, sep, index.get("sample_sizes", {}))


def safe_name(text) -> str:
    out = "".join(c if c.isalnum() or c in "-_." else "_" for c in str(text))
    return out or "_"


def token_name(language, word, speaker) -> str:
    return "__".join(safe_name(x) for x in (language, word, speaker))
