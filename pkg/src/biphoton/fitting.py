"""Recover the dispersion budget (or the crystal D2) from an MCA histogram.

The free parameter is found by a log-spaced scan followed by golden-section
refinement; at every trial value the amplitude scale and flat background are
solved by linear least squares and the time offset by centroid alignment.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .detection import DetectorSpec, Histogram, detector_smear, expected_counts
from .grids import FrequencyGrid, TimeGrid
from .propagation import DispersionBudget, Normalization, auto_grids, g2
from .spectral import (
    CrystalKind,
    CrystalSpec,
    FilterSpec,
    apply_filter_pair,
    spectral_amplitude,
)

__all__ = [
    "FitProblem",
    "FitResult",
    "FreeParameter",
    "ModelParams",
    "fit",
    "forward_model",
    "format_report",
    "model_curve",
    "profile_residual",
    "report_k2_per_arm",
]

N_SCAN = 31
REL_TOL = 1e-4
MIN_SIGNIFICANCE = 25.0


class FreeParameter(enum.Enum):
    TOTAL_B = "total_B"
    D2_CRYSTAL = "D2"

    @property
    def units(self) -> str:
        return "s^2" if self is FreeParameter.TOTAL_B else "s^2/m"


@dataclass(frozen=True, eq=False)
class FitProblem:
    """Histogram plus everything about the setup that is not being fitted.

    ``fixed_k2`` (s^2/m, shared by all arms) is only used when the crystal D2
    is the free parameter.  ``grids`` overrides the automatic sizing.
    """

    histogram: Histogram
    crystal: CrystalSpec
    detector: DetectorSpec
    arm_lengths: tuple
    free_parameter: FreeParameter = FreeParameter.TOTAL_B
    bounds: tuple = (1e-24, 1e-22)
    filter: FilterSpec | None = None
    fixed_k2: float | None = None
    grids: tuple | None = None

    def __post_init__(self):
        lo, hi = (float(b) for b in self.bounds)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"bounds must be finite with lo < hi, got {self.bounds!r}")
        object.__setattr__(self, "bounds", (lo, hi))
        object.__setattr__(self, "arm_lengths", tuple(float(z) for z in self.arm_lengths))
        if any(z < 0 for z in self.arm_lengths):
            raise ValueError("arm lengths must be non-negative")
        if self.histogram.counts.size == 0:
            raise ValueError("histogram has no bins")
        if self.free_parameter is FreeParameter.D2_CRYSTAL:
            if self.crystal.kind is not CrystalKind.TYPE_I_DEGENERATE:
                raise ValueError("D2 can only be fitted for a degenerate type-I crystal")
            if lo <= 0:
                raise ValueError("D2 bounds must be positive")
            if self.fixed_k2 is None:
                raise ValueError("fitting D2 needs the fibre k2 (fixed_k2)")
        if self.grids is None:
            object.__setattr__(self, "grids", self._auto_grids())

    def _auto_grids(self):
        lo, hi = self.bounds
        edges = self.histogram.bin_edges
        span = float(edges[-1] - edges[0])
        step = 0.25 * float(np.min(np.diff(edges)))
        if self.free_parameter is FreeParameter.TOTAL_B:
            crystal, B = self.crystal, max(abs(lo), abs(hi))
        else:
            # widest candidate spectrum and the fixed fibre budget
            crystal = CrystalSpec.type1(self.crystal.length, lo)
            B = self.fixed_budget().total_B
        return auto_grids(crystal, B, self.filter, self.detector.combined_fwhm,
                          tau_span=span, max_tau_step=step)

    def fixed_budget(self) -> DispersionBudget:
        return DispersionBudget(tuple((self.fixed_k2, z) for z in self.arm_lengths))

    def setup(self, value: float):
        """(crystal, budget) for a trial value of the free parameter."""
        if self.free_parameter is FreeParameter.TOTAL_B:
            if sum(self.arm_lengths) > 0:
                budget = DispersionBudget.equal_arms(value, self.arm_lengths)
            else:
                budget = DispersionBudget(((value, 1.0),))
            return self.crystal, budget
        return CrystalSpec.type1(self.crystal.length, value), self.fixed_budget()


@dataclass(frozen=True)
class ModelParams:
    value: float
    scale: float = 1.0
    t0: float = 0.0
    background: float = 0.0


@dataclass(frozen=True)
class FitResult:
    free_parameter: FreeParameter
    estimate: float
    scale: float
    t0: float
    background: float
    residual_rms: float
    n_evaluations: int
    converged: bool
    at_bound: bool = False
    significance: float = field(default=float("nan"))

    @property
    def nuisance_estimates(self):
        return self.scale, self.t0, self.background


@lru_cache(maxsize=2)
def _base_amplitude(crystal: CrystalSpec, filt: FilterSpec | None, fgrid: FrequencyGrid):
    F = spectral_amplitude(fgrid, crystal)
    return apply_filter_pair(F, filt) if filt is not None else F


@lru_cache(maxsize=512)
def _smeared(crystal: CrystalSpec, budget: DispersionBudget, filt: FilterSpec | None,
             detector: DetectorSpec, fgrid: FrequencyGrid, tgrid: TimeGrid):
    F = _base_amplitude(crystal, filt, fgrid)
    curve = g2(F, budget, tgrid, Normalization.UNIT_INTEGRAL)
    return detector_smear(curve, detector)


def model_curve(problem: FitProblem, value: float):
    """Smeared, unit-integral G2 for a trial value of the free parameter."""
    crystal, budget = problem.setup(value)
    fgrid, tgrid = problem.grids
    return _smeared(crystal, budget, problem.filter, problem.detector, fgrid, tgrid)


def forward_model(params: ModelParams, problem: FitProblem) -> np.ndarray:
    """Expected counts per histogram bin."""
    curve = model_curve(problem, params.value)
    return expected_counts(curve, problem.histogram.bin_edges, params.t0,
                           params.scale, params.background)


def _centroid(x, y):
    return float(np.sum(x * y) / np.sum(y))


def _histogram_centroid(hist: Histogram) -> float:
    c = hist.counts.astype(float)
    edge = max(1, c.size // 20)
    floor = 0.5 * (c[:edge].mean() + c[-edge:].mean())
    signal = c - floor
    if signal.sum() <= 0:
        signal = c
    return _centroid(hist.bin_centers, signal)


def profile_residual(problem: FitProblem, value: float):
    """Sum of squared residuals with the nuisance parameters solved out.

    Returns ``(ssr, ModelParams)``.
    """
    hist = problem.histogram
    curve = model_curve(problem, value)
    t0 = _histogram_centroid(hist) - _centroid(curve.tau, curve.values)
    unit = expected_counts(curve, hist.bin_edges, t0)
    design = np.column_stack([unit, np.ones_like(unit)])
    counts = hist.counts.astype(float)
    (scale, background), *_ = np.linalg.lstsq(design, counts, rcond=None)
    resid = counts - design @ np.array([scale, background])
    return float(resid @ resid), ModelParams(value, float(scale), t0, float(background))


def _scan_points(lo: float, hi: float) -> np.ndarray:
    if lo > 0:
        return np.geomspace(lo, hi, N_SCAN)
    if hi < 0:
        return -np.geomspace(-lo, -hi, N_SCAN)[::-1]
    return np.linspace(lo, hi, N_SCAN)


def fit(problem: FitProblem) -> FitResult:
    counts = problem.histogram.counts.astype(float)
    if not counts.sum() > 0:
        raise ValueError("histogram is empty (all counts zero)")
    n_eval = 0

    def objective(value):
        nonlocal n_eval
        n_eval += 1
        return profile_residual(problem, value)[0]

    points = _scan_points(*problem.bounds)
    ssr = np.array([objective(v) for v in points])
    i_best = int(np.argmin(ssr))
    at_bound = i_best in (0, N_SCAN - 1)
    estimate = float(points[i_best])
    refined = False
    if not at_bound:
        bracket = (points[i_best - 1], points[i_best], points[i_best + 1])
        try:
            res = minimize_scalar(objective, bracket=bracket, method="golden",
                                  tol=0.5 * REL_TOL)
        except ValueError:
            # flat objective: the scan could not bracket a strict minimum
            res = None
        if res is not None and bracket[0] <= res.x <= bracket[2]:
            estimate, refined = float(res.x), True

    best_ssr, params = profile_residual(problem, estimate)
    n = counts.size
    null_ssr = float(np.sum((counts - counts.mean()) ** 2))
    if best_ssr == 0:
        significance = math.inf
    elif n > 3:
        significance = (null_ssr - best_ssr) / (best_ssr / (n - 3))
    else:
        significance = 0.0
    converged = (refined and not at_bound and params.scale > 0
                 and significance > MIN_SIGNIFICANCE)
    return FitResult(
        free_parameter=problem.free_parameter,
        estimate=estimate,
        scale=params.scale,
        t0=params.t0,
        background=params.background,
        residual_rms=math.sqrt(best_ssr / n),
        n_evaluations=n_eval,
        converged=converged,
        at_bound=at_bound,
        significance=significance,
    )


def report_k2_per_arm(result: FitResult, problem: FitProblem) -> float:
    """Per-photon fibre k2 (s^2/m), assuming every arm has the same k2."""
    if result.free_parameter is not FreeParameter.TOTAL_B:
        raise ValueError("k2 per arm is only defined when total_B was fitted")
    if not result.converged:
        raise ValueError("fit did not converge")
    zsum = sum(problem.arm_lengths)
    if not zsum > 0:
        raise ValueError("total arm length is zero")
    return result.estimate / zsum


def format_report(result: FitResult, problem: FitProblem) -> str:
    try:
        k2 = report_k2_per_arm(result, problem)
        k2_text, k2_cm = repr(k2), repr(k2 / 100.0)
    except ValueError:
        k2_text = k2_cm = "none"
    lines = [
        ("free_parameter", result.free_parameter.value),
        ("estimate", repr(result.estimate)),
        ("estimate_units", result.free_parameter.units),
        ("k2_per_arm", k2_text),
        ("k2_per_arm_units", "s^2/m"),
        ("k2_per_arm_s2_per_cm", k2_cm),
        ("residual_rms", repr(result.residual_rms)),
        ("converged", str(result.converged).lower()),
        ("at_bound", str(result.at_bound).lower()),
        ("n_evaluations", str(result.n_evaluations)),
        ("scale", repr(result.scale)),
        ("t0_s", repr(result.t0)),
        ("background_per_bin", repr(result.background)),
    ]
    return "".join(f"{k} = {v}\n" for k, v in lines)
