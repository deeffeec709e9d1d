"""Symmetric uniform sampling grids shared by the spectral and time domains."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class _SymmetricGrid:
    half_range: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or int(n) != n:
            raise ValueError(f"n_points must be an integer, got {n!r}")
        object.__setattr__(self, "n_points", int(n))
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError(
                f"n_points must be odd and >= 3, got {self.n_points}")
        if not np.isfinite(self.half_range) or self.half_range <= 0:
            raise ValueError(
                f"grid half-range must be positive, got {self.half_range!r}")
        object.__setattr__(self, "half_range", float(self.half_range))

    @property
    def spacing(self) -> float:
        return self.half_range / (self.n_points // 2)

    @cached_property
    def values(self) -> np.ndarray:
        half = self.n_points // 2
        # integer multiples keep values[k] == -values[n-1-k] bit for bit
        v = np.arange(-half, half + 1, dtype=float) * self.spacing
        v[0], v[-1] = -self.half_range, self.half_range
        v.setflags(write=False)
        return v

    def __len__(self):
        return self.n_points


class FrequencyGrid(_SymmetricGrid):
    """Angular-frequency detuning samples from -omega_max to +omega_max (rad/s)."""

    @property
    def omega_max(self) -> float:
        return self.half_range

    def __repr__(self):
        return f"FrequencyGrid(omega_max={self.omega_max!r}, n_points={self.n_points})"


class TimeGrid(_SymmetricGrid):
    """Delay samples from -tau_max to +tau_max (s)."""

    @property
    def tau_max(self) -> float:
        return self.half_range

    def __repr__(self):
        return f"TimeGrid(tau_max={self.tau_max!r}, n_points={self.n_points})"


def make_grid(omega_max: float, n_points: int) -> FrequencyGrid:
    return FrequencyGrid(omega_max, n_points)


def make_time_grid(tau_max: float, n_points: int) -> TimeGrid:
    return TimeGrid(tau_max, n_points)
