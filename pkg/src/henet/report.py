"""Evaluation reports shared by the CLI and the quantization study."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class EvalReport:
    method: str
    radius: float
    max_abs_error: float
    mse: float
    levels_consumed: int = 0
    ct_mults: int = 0
    scalar_mults: int = 0
    bootstraps: int = 0
    config: dict = field(default_factory=dict)
    wall_time_seconds: float = 0.0

    @classmethod
    def from_errors(cls, method, radius, y_true, y_pred, **kw) -> "EvalReport":
        err = np.abs(np.asarray(y_pred, dtype=float) - np.asarray(y_true, dtype=float))
        return cls(method, float(radius), float(err.max()), float(np.mean(err**2)), **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        known = set(cls.__dataclass_fields__)
        missing = {"method", "radius", "max_abs_error", "mse"} - set(d)
        if missing:
            raise ValueError(f"report lacks fields {sorted(missing)}")
        return cls(**{k: v for k, v in d.items() if k in known})
