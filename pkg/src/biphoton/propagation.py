"""First- and second-order correlation functions of the biphoton after dispersion.

The delay origin drops the constant group-delay and path offsets, so every
correlation function here is centred on tau = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from . import _quadrature
from ._curves import fwhm
from .grids import FrequencyGrid, TimeGrid, make_grid, make_time_grid
from .spectral import (
    CrystalSpec,
    FilterSpec,
    SpectralAmplitude,
    apply_filter_pair,
    apply_spectral_phase,
    spectral_amplitude,
    spectrum,
)

__all__ = [
    "AliasingRiskError",
    "BiphotonAmplitude",
    "CorrelationFunction",
    "DispersionBudget",
    "Normalization",
    "TimeGrid",
    "make_time_grid",
    "min_points_for_budget",
    "check_sampling",
    "apply_dispersion",
    "g1",
    "biphoton_amplitude",
    "g2",
    "g2_farfield",
    "dispersion_length",
    "coincidence_rate",
    "auto_grids",
]


class AliasingRiskError(ValueError):
    """The spectral grid is too coarse for the quadratic dispersion phase."""

    def __init__(self, message: str, min_points: int):
        super().__init__(message)
        self.min_points = min_points


MAX_AUTO_POINTS = 60_000_001


class Normalization(enum.Enum):
    PEAK_ONE = "peak"
    UNIT_INTEGRAL = "integral"


@dataclass(frozen=True)
class DispersionBudget:
    """Per-arm (k2 [s^2/m], z [m]) pairs; total_B = sum k2 * z in s^2.

    Negative k2 is allowed and models a compressing element.
    """

    arms: tuple = ()

    def __post_init__(self):
        arms = tuple((float(k2), float(z)) for k2, z in self.arms)
        for k2, z in arms:
            if not np.isfinite(k2) or not np.isfinite(z):
                raise ValueError(f"non-finite arm ({k2!r}, {z!r})")
            if z < 0:
                raise ValueError(f"arm length must be >= 0, got {z!r}")
        object.__setattr__(self, "arms", arms)

    @property
    def total_B(self) -> float:
        return sum(k2 * z for k2, z in self.arms)

    @property
    def total_length(self) -> float:
        return sum(z for _, z in self.arms)

    @classmethod
    def equal_arms(cls, total_B: float, lengths) -> "DispersionBudget":
        """Arms of the given lengths sharing one k2 chosen to reach total_B."""
        lengths = [float(z) for z in lengths]
        zsum = sum(lengths)
        if not zsum > 0:
            raise ValueError("total arm length must be positive")
        k2 = total_B / zsum
        return cls(tuple((k2, z) for z in lengths))

    def __add__(self, other: "DispersionBudget") -> "DispersionBudget":
        return DispersionBudget(self.arms + other.arms)


@dataclass(frozen=True, eq=False)
class CorrelationFunction:
    grid: TimeGrid
    values: np.ndarray
    normalization: Normalization = Normalization.PEAK_ONE

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def tau(self) -> np.ndarray:
        return self.grid.values

    def renormalized(self, normalization: Normalization) -> "CorrelationFunction":
        return CorrelationFunction(self.grid, _normalize(self.values, self.grid, normalization),
                                   normalization)


@dataclass(frozen=True, eq=False)
class BiphotonAmplitude:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def tau(self) -> np.ndarray:
        return self.grid.values

    def intensity(self) -> np.ndarray:
        return self.values.real ** 2 + self.values.imag ** 2


def _normalize(values, grid: TimeGrid, normalization: Normalization) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if normalization is Normalization.PEAK_ONE:
        scale = values.max()
    else:
        scale = trapezoid(values, grid.values)
    if not scale > 0:
        raise ValueError("cannot normalize a curve without positive weight")
    return values / scale


def min_points_for_budget(total_B: float, omega_max: float) -> int:
    """Smallest odd grid size with |B| * omega_max * dOmega < pi/4."""
    if total_B == 0:
        return 3
    n = math.floor(8.0 * abs(total_B) * omega_max ** 2 / math.pi) + 2
    n += 1 - n % 2
    while abs(total_B) * omega_max * (2 * omega_max / (n - 1)) >= math.pi / 4:
        n += 2
    return max(n, 3)


def check_sampling(total_B: float, fgrid: FrequencyGrid) -> None:
    increment = abs(total_B) * fgrid.omega_max * fgrid.spacing
    if increment >= math.pi / 4:
        n_min = min_points_for_budget(total_B, fgrid.omega_max)
        raise AliasingRiskError(
            f"quadratic phase advances {increment:.3g} rad between adjacent spectral "
            f"samples (limit pi/4); use n_points >= {n_min} for omega_max="
            f"{fgrid.omega_max:.6g}", n_min)


def apply_dispersion(F: SpectralAmplitude, budget: DispersionBudget) -> SpectralAmplitude:
    """F(Omega) * exp(i B Omega^2 / 2)."""
    w = F.omega
    return apply_spectral_phase(F, 0.5 * budget.total_B * w * w)


def g1(F: SpectralAmplitude, tgrid: TimeGrid) -> CorrelationFunction:
    """First-order correlation: cosine transform of the spectrum, peak-normalized.

    Takes no dispersion budget; spectral truncation can leave slightly
    negative ringing in the tails.
    """
    raw = _quadrature.cosine_transform(F.grid, spectrum(F), tgrid).real
    return CorrelationFunction(tgrid, raw / raw.max(), Normalization.PEAK_ONE)


def biphoton_amplitude(F: SpectralAmplitude, budget: DispersionBudget,
                       tgrid: TimeGrid) -> BiphotonAmplitude:
    B = budget.total_B
    check_sampling(B, F.grid)
    psi = _quadrature.cosine_transform(F.grid, F.values, tgrid, chirp=B)
    return BiphotonAmplitude(tgrid, psi)


def g2(F: SpectralAmplitude, budget: DispersionBudget, tgrid: TimeGrid,
       normalization: Normalization = Normalization.PEAK_ONE) -> CorrelationFunction:
    intensity = biphoton_amplitude(F, budget, tgrid).intensity()
    return CorrelationFunction(tgrid, _normalize(intensity, tgrid, normalization),
                               normalization)


def g2_farfield(F: SpectralAmplitude, budget: DispersionBudget,
                tgrid: TimeGrid) -> CorrelationFunction:
    """Far-field G2: the spectrum read off at Omega = tau / B."""
    B = budget.total_B
    if B == 0:
        raise ValueError("far-field mapping needs a non-zero dispersion budget")
    S = np.interp(tgrid.values / B, F.omega, spectrum(F), left=0.0, right=0.0)
    return CorrelationFunction(tgrid, _normalize(S, tgrid, Normalization.PEAK_ONE))


def dispersion_length(tau0: float, k2: float) -> float:
    """Propagation distance tau0^2 / (2 pi k2) that separates near and far field."""
    if not k2 > 0:
        raise ValueError(f"k2 must be positive, got {k2!r}")
    if tau0 < 0:
        raise ValueError(f"tau0 must be non-negative, got {tau0!r}")
    return tau0 ** 2 / (2 * math.pi * k2)


def coincidence_rate(g2: CorrelationFunction, window_width: float, t0: float) -> float:
    """Integral of G2 over a rectangular window of the given width centred on t0."""
    if window_width < 0:
        raise ValueError(f"window_width must be non-negative, got {window_width!r}")
    tau = g2.tau
    lo = min(max(t0 - 0.5 * window_width, tau[0]), tau[-1])
    hi = min(max(t0 + 0.5 * window_width, tau[0]), tau[-1])
    if hi <= lo:
        return 0.0
    inner = tau[(tau > lo) & (tau < hi)]
    x = np.concatenate(([lo], inner, [hi]))
    return float(trapezoid(np.interp(x, tau, g2.values), x))


def _spectral_width(crystal: CrystalSpec, filt: FilterSpec | None, omega_max: float) -> float:
    probe = make_grid(omega_max, 8193)
    F = spectral_amplitude(probe, crystal)
    if filt is not None:
        F = apply_filter_pair(F, filt)
    return fwhm(probe.values, spectrum(F))


def auto_grids(crystal: CrystalSpec, total_B: float = 0.0, filt: FilterSpec | None = None,
               jitter_fwhm: float = 0.0, *, n_zeros: float | None = None,
               tau_span: float | None = None, max_tau_step: float | None = None):
    """Spectral and delay grids sized for one scenario.

    The spectral window spans ``n_zeros`` first zeros of F (4 with dispersion,
    32 without, where truncation ringing would otherwise bias the
    Fourier-limited width).  The spectral step keeps the quadratic phase
    increment below pi/4 and is tied to the delay step through
    h * dtau * P = 2 pi so the fast folded transform applies.
    """
    B = abs(total_B)
    if n_zeros is None:
        n_zeros = 4 if B > 0 else 32
    zero = crystal.first_zero
    omega_target = n_zeros * zero

    w_spec = _spectral_width(crystal, filt, omega_target)
    t_intrinsic = 2 * math.pi / w_spec
    width = math.hypot(t_intrinsic, B * w_spec)
    dtau = width / 40
    if jitter_fwhm > 0:
        dtau = min(jitter_fwhm / 20, max(dtau, jitter_fwhm / 20000))
    if max_tau_step is not None:
        dtau = min(dtau, max_tau_step)
    tau_half = 1.1 * (2 * t_intrinsic + B * omega_target) + 5 * jitter_fwhm
    if tau_span is not None:
        tau_half = max(tau_half, tau_span)
    if tau_half / dtau > MAX_AUTO_POINTS / 2:
        raise ValueError(
            f"automatic delay grid would need about {2 * tau_half / dtau:.3g} points (limit "
            f"{MAX_AUTO_POINTS}); the jitter is too small for the delay range")
    J = math.ceil(tau_half / dtau)
    n_tau = 2 * J + 1

    h_max = min(zero / 16, math.pi / (2 * J * dtau))
    if B > 0:
        h_max = min(h_max, math.pi / (4 * B * omega_target))
    P = max(math.ceil(2 * math.pi / (h_max * dtau)), n_tau)
    n_estimate = 2 * math.ceil(omega_target * P * dtau / (2 * math.pi)) + 1
    if n_estimate > MAX_AUTO_POINTS:
        raise ValueError(
            f"automatic spectral grid would need {n_estimate} points (limit "
            f"{MAX_AUTO_POINTS}); reduce |total_B| or the delay range")
    while True:
        h = 2 * math.pi / (P * dtau)
        K = math.ceil(omega_target / h)
        fgrid = make_grid(K * h, 2 * K + 1)
        if B * fgrid.omega_max * fgrid.spacing < math.pi / 4:
            break
        P += 1
    return fgrid, make_time_grid(J * dtau, n_tau)
