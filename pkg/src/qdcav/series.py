"""Small value types shared by the solvers and the scenario layer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """Named channels sampled on a common time grid (ns)."""

    times: np.ndarray
    channels: dict[str, np.ndarray]

    def __post_init__(self):
        for name, values in self.channels.items():
            if values.shape != self.times.shape:
                raise ValueError(
                    f"channel {name!r} has shape {values.shape}, times {self.times.shape}"
                )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]


@dataclass(frozen=True)
class SweepCurve:
    """Named channels against a swept scalar (detuning, delay, power...)."""

    x_name: str
    x: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name, values in self.channels.items():
            if values.shape != self.x.shape:
                raise ValueError(
                    f"channel {name!r} has shape {values.shape}, x {self.x.shape}"
                )

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]
