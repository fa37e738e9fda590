"""Heatmap export: grayscale PGM, CSV dumps and matplotlib figures."""

from __future__ import annotations

import csv
import io

import numpy as np

from .storage import atomic_write


def to_gray(matrix) -> np.ndarray:
    """Map values linearly to 0..255; a constant matrix maps to 128."""
    m = np.asarray(matrix, dtype=float)
    lo, hi = float(m.min()), float(m.max())
    if hi == lo:
        return np.full(m.shape, 128, dtype=np.uint8)
    return np.round((m - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(matrix, path) -> None:
    """Binary 8-bit PGM with row 0 holding the highest frequency."""
    gray = to_gray(matrix)[::-1]
    h, w = gray.shape
    atomic_write(path, f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def write_csv(matrix, path) -> None:
    """Row-major dump, one matrix row per line, full float precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(np.asarray(matrix, dtype=float)):
        writer.writerow([repr(float(v)) for v in row])
    atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh) if row])


def write_table(rows, header, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write(path, buf.getvalue().encode("utf-8"))


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    buf = io.BytesIO()
    # fixed metadata keeps PNG output byte-identical across runs
    fig.savefig(buf, format="png", dpi=100, metadata={"Software": None})
    atomic_write(path, buf.getvalue())
    _pyplot().close(fig)


def _extent(freq_axis, time_axis):
    return [time_axis[0], time_axis[-1], freq_axis[0] / 1000, freq_axis[-1] / 1000]


def plot_surface(surface, path, title=None) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    im = ax.imshow(surface.values, origin="lower", aspect="auto", cmap="viridis",
                   extent=_extent(surface.freq_axis, surface.time_axis))
    ax.set_xlabel("time")
    ax.set_ylabel("frequency (kHz)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label=surface.units)
    fig.tight_layout()
    _save(fig, path)


def plot_matrix(matrix, path, title=None, grid=None, label="") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4, 3.5))
    kw = {}
    if grid is not None:
        kw["extent"] = [grid[0], grid[-1], grid[0], grid[-1]]
    im = ax.imshow(matrix, origin="lower", cmap="magma", **kw)
    ax.set_xlabel(label)
    ax.set_ylabel(label)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    _save(fig, path)


def plot_path(surfaces, xs, path, title=None) -> None:
    """Panel of surfaces along a path, two rows like a six-step figure."""
    plt = _pyplot()
    n = len(surfaces)
    ncols = int(np.ceil(n / 2)) if n > 3 else n
    nrows = int(np.ceil(n / ncols))
    vmin = min(float(s.values.min()) for s in surfaces)
    vmax = max(float(s.values.max()) for s in surfaces)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 2.6 * nrows), squeeze=False)
    for ax in axes.ravel()[n:]:
        ax.axis("off")
    for ax, s, x in zip(axes.ravel(), surfaces, xs):
        ax.imshow(s.values, origin="lower", aspect="auto", cmap="viridis", vmin=vmin,
                  vmax=vmax, extent=_extent(s.freq_axis, s.time_axis))
        ax.set_title(f"x = {x:g}")
        ax.set_xticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)


def plot_pvalues(table: dict, path) -> None:
    """Grouped bars of p-values; `table` maps test name -> {language: p}."""
    plt = _pyplot()
    tests = list(table)
    langs = sorted({lang for row in table.values() for lang in row})
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(langs), 3.2))
    width = 0.8 / max(1, len(tests))
    for i, name in enumerate(tests):
        vals = [table[name].get(lang, np.nan) for lang in langs]
        ax.bar(np.arange(len(langs)) + i * width, vals, width, label=name)
    ax.axhline(0.05, color="k", lw=0.8, ls="--")
    ax.set_xticks(np.arange(len(langs)) + 0.4 - width / 2)
    ax.set_xticklabels(langs)
    ax.set_ylim(0, 1)
    ax.set_ylabel("p-value")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
