"""Real-valued surfaces sampled on a regular frequency x time grid."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class GridSurface:
    """A function of (frequency, time) sampled on a uniform grid.

    ``values[i, j]`` is the value at ``freq_axis[i]`` (Hz) and
    ``time_axis[j]`` (seconds, or standardized time in [0, 1]).
    """

    values: np.ndarray
    freq_axis: np.ndarray
    time_axis: np.ndarray
    units: str = "dB"
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        freq = np.asarray(self.freq_axis, dtype=float)
        time = np.asarray(self.time_axis, dtype=float)
        if values.ndim != 2 or values.shape != (freq.size, time.size):
            raise ShapeError(
                f"values {values.shape} do not match axes ({freq.size}, {time.size})")
        if freq.size < 2 or time.size < 2:
            raise ShapeError("need at least 2 points on each axis")
        if not np.all(np.isfinite(values)):
            raise ValueError("surface values must be finite")
        if self.units not in ("dB", "raw"):
            raise ValueError(f"unknown units {self.units!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "freq_axis", freq)
        object.__setattr__(self, "time_axis", time)
        object.__setattr__(self, "tags", dict(self.tags))

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values, **changes) -> "GridSurface":
        return replace(self, values=values, **changes)

    def same_grid(self, other: "GridSurface", atol: float = 1e-9) -> bool:
        return (self.shape == other.shape
                and np.allclose(self.freq_axis, other.freq_axis, rtol=0, atol=atol)
                and np.allclose(self.time_axis, other.time_axis, rtol=0, atol=atol))


def check_same_grid(*surfaces: GridSurface) -> None:
    first = surfaces[0]
    for s in surfaces[1:]:
        if not first.same_grid(s):
            raise ShapeError(f"grid mismatch: {first.shape} vs {s.shape}")


def trapezoid_weights(axis) -> np.ndarray:
    """Quadrature weights w such that ``w @ f`` is the trapezoid integral."""
    axis = np.asarray(axis, dtype=float)
    w = np.zeros(axis.size)
    dx = np.diff(axis)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w
