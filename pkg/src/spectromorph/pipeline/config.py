"""Run configuration and its content hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

# fields that change what preprocess/estimate produce
ANALYSIS_FIELDS = (
    "sample_rate", "sigma", "half_width", "hop", "floor", "n_freq", "n_time",
    "smoothing", "warp_lambda", "lambda_scale", "n_interior", "register",
)


@dataclass
class RunConfig:
    out_dir: str = "run"
    sample_rate: int = 16000
    sigma: float = 0.005
    half_width: int = 80
    hop: int = 80
    floor: float = 1e-10
    n_freq: int = 81
    n_time: int = 100
    smoothing: object = "auto"  # "auto" or a float >= 0
    warp_lambda: float | None = None  # None: lambda_scale * mean square of the group
    lambda_scale: float = 1e-3
    n_interior: int = 20
    register: bool = True
    M: int = 1000
    seed: int | None = None
    rel_tol: float = 1e-10

    def __post_init__(self):
        for name in ("sample_rate", "sigma", "half_width", "hop", "floor", "n_freq",
                     "n_time", "lambda_scale", "n_interior", "M", "rel_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_freq < 2 or self.n_time < 2:
            raise ValueError("grid sizes must be >= 2")
        if isinstance(self.smoothing, str):
            if self.smoothing.lower() != "auto":
                self.smoothing = float(self.smoothing)
            else:
                self.smoothing = "auto"
        if not isinstance(self.smoothing, str) and self.smoothing < 0:
            raise ValueError("smoothing must be >= 0 or 'auto'")
        if self.warp_lambda is not None and self.warp_lambda < 0:
            raise ValueError("warp_lambda must be >= 0")

    def analysis_hash(self) -> str:
        payload = {k: getattr(self, k) for k in ANALYSIS_FIELDS}
        text = json.dumps(payload, sort_keys=True, default=repr)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})
