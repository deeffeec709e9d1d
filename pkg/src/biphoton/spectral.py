"""Spectral amplitudes F(Omega) of collinear, frequency-degenerate SPDC.

Omega is the detuning of the signal photon from half the pump frequency; the
idler sits at -Omega.  All quantities are SI: rad/s, s, m, s/m, s^2/m.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grids import FrequencyGrid, make_grid

__all__ = [
    "SPEED_OF_LIGHT",
    "CrystalKind",
    "CrystalSpec",
    "FilterShape",
    "FilterSpec",
    "FrequencyGrid",
    "SpectralAmplitude",
    "make_grid",
    "sinc",
    "f_type2",
    "f_type1",
    "spectrum",
    "apply_filter",
    "apply_filter_pair",
    "apply_spectral_phase",
    "filter_transmission",
    "delta_lambda_to_delta_omega",
]

SPEED_OF_LIGHT = 299_792_458.0


class CrystalKind(enum.Enum):
    TYPE_II = "type2"
    TYPE_I_DEGENERATE = "type1"


class FilterShape(enum.Enum):
    GAUSSIAN = "gaussian"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class CrystalSpec:
    """Phase-matching configuration of the down-converting crystal.

    ``D`` (s/m) is the inverse group-velocity difference between signal and
    idler and only applies to type-II; ``D2`` (s^2/m) is the group-velocity
    dispersion of the crystal and only applies to degenerate type-I.
    """

    kind: CrystalKind
    length: float
    D: float | None = None
    D2: float | None = None

    def __post_init__(self):
        if not isinstance(self.kind, CrystalKind):
            raise ValueError(f"unknown crystal kind {self.kind!r}")
        if not self.length > 0:
            raise ValueError(f"crystal length must be positive, got {self.length!r}")
        if self.kind is CrystalKind.TYPE_II:
            active, other, names = self.D, self.D2, ("D", "D2")
        else:
            active, other, names = self.D2, self.D, ("D2", "D")
        if active is None or not active > 0:
            raise ValueError(f"{self.kind.value} crystal needs {names[0]} > 0, got {active!r}")
        if other is not None:
            raise ValueError(f"{self.kind.value} crystal must not set {names[1]}")

    @classmethod
    def type2(cls, length: float, D: float) -> "CrystalSpec":
        return cls(CrystalKind.TYPE_II, length, D=D)

    @classmethod
    def type1(cls, length: float, D2: float) -> "CrystalSpec":
        return cls(CrystalKind.TYPE_I_DEGENERATE, length, D2=D2)

    @property
    def first_zero(self) -> float:
        """Smallest positive detuning at which F vanishes (rad/s)."""
        if self.kind is CrystalKind.TYPE_II:
            return 2 * math.pi / (self.D * self.length)
        return math.sqrt(2 * math.pi / (self.D2 * self.length))


@dataclass(frozen=True)
class FilterSpec:
    shape: FilterShape
    fwhm_lambda: float
    center_lambda: float
    center_offset: float = 0.0

    def __post_init__(self):
        if not isinstance(self.shape, FilterShape):
            raise ValueError(f"unknown filter shape {self.shape!r}")
        if not self.fwhm_lambda > 0:
            raise ValueError(f"fwhm_lambda must be positive, got {self.fwhm_lambda!r}")
        if not self.center_lambda > 0:
            raise ValueError(f"center_lambda must be positive, got {self.center_lambda!r}")

    @property
    def fwhm_omega(self) -> float:
        return delta_lambda_to_delta_omega(self.fwhm_lambda, self.center_lambda)

    def mirrored(self) -> "FilterSpec":
        """The same filter seen from the idler, whose detuning is -Omega."""
        return FilterSpec(self.shape, self.fwhm_lambda, self.center_lambda,
                          -self.center_offset)


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, copy=True)
        if v.ndim != 1 or v.size != self.grid.n_points:
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {v.shape}")
        if not (np.issubdtype(v.dtype, np.floating) or np.issubdtype(v.dtype, np.complexfloating)):
            v = v.astype(float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values


def sinc(x):
    """sin(x)/x with sinc(0) = 1 exactly and a series branch near zero."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    x2 = xs * xs
    out[small] = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl
    return out if out.ndim else float(out)


def _even_from_half(grid: FrequencyGrid, func) -> np.ndarray:
    half = grid.n_points // 2
    right = func(grid.values[half:])
    return np.concatenate([right[:0:-1], right])


def f_type2(grid: FrequencyGrid, crystal: CrystalSpec) -> SpectralAmplitude:
    if crystal.kind is not CrystalKind.TYPE_II:
        raise ValueError("f_type2 needs a type-II crystal")
    a = 0.5 * crystal.D * crystal.length
    return SpectralAmplitude(grid, _even_from_half(grid, lambda w: sinc(a * w)))


def f_type1(grid: FrequencyGrid, crystal: CrystalSpec) -> SpectralAmplitude:
    if crystal.kind is not CrystalKind.TYPE_I_DEGENERATE:
        raise ValueError("f_type1 needs a degenerate type-I crystal")
    a = 0.5 * crystal.D2 * crystal.length
    return SpectralAmplitude(grid, _even_from_half(grid, lambda w: sinc(a * w * w)))


def spectral_amplitude(grid: FrequencyGrid, crystal: CrystalSpec) -> SpectralAmplitude:
    if crystal.kind is CrystalKind.TYPE_II:
        return f_type2(grid, crystal)
    return f_type1(grid, crystal)


def spectrum(F: SpectralAmplitude) -> np.ndarray:
    v = F.values
    if np.iscomplexobj(v):
        return v.real ** 2 + v.imag ** 2
    return v * v


def filter_transmission(omega, filt: FilterSpec) -> np.ndarray:
    """Amplitude transmission, the square root of the intensity profile."""
    dw = filt.fwhm_omega
    x = np.asarray(omega, dtype=float) - filt.center_offset
    if filt.shape is FilterShape.GAUSSIAN:
        return np.exp(-2.0 * math.log(2.0) * (x / dw) ** 2)
    return (np.abs(x) <= 0.5 * dw).astype(float)


def apply_filter(F: SpectralAmplitude, filt: FilterSpec) -> SpectralAmplitude:
    return SpectralAmplitude(F.grid, F.values * filter_transmission(F.omega, filt))


def apply_filter_pair(F: SpectralAmplitude, filt: FilterSpec) -> SpectralAmplitude:
    """Identical filters in front of both detectors: T(Omega) * T(-Omega) on F."""
    return apply_filter(apply_filter(F, filt), filt.mirrored())


def apply_spectral_phase(F: SpectralAmplitude, phase) -> SpectralAmplitude:
    phase = np.broadcast_to(np.asarray(phase, dtype=float), F.values.shape)
    return SpectralAmplitude(F.grid, F.values * np.exp(1j * phase))


def delta_lambda_to_delta_omega(delta_lambda: float, lambda0: float) -> float:
    """First-order bandwidth conversion, 2 pi c dlambda / lambda0^2."""
    if not lambda0 > 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0!r}")
    if delta_lambda < 0:
        raise ValueError(f"delta_lambda must be non-negative, got {delta_lambda!r}")
    return 2.0 * math.pi * SPEED_OF_LIGHT * delta_lambda / lambda0 ** 2
