"""Measurement chain: detector jitter, TAC-MCA start-stop histograms, widths."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import fftconvolve

from ._curves import UnmeasurableWidthError, first_zeros_width, fwhm
from .propagation import CorrelationFunction, Normalization, _normalize

__all__ = [
    "DetectorSpec",
    "Histogram",
    "HistogramFormatError",
    "McaConfig",
    "RangeWarning",
    "UnmeasurableWidthError",
    "detector_smear",
    "expected_counts",
    "simulate_mca",
    "width_fwhm",
    "width_first_zeros",
    "read_histogram_csv",
    "write_histogram_csv",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class RangeWarning(UserWarning):
    """Part of the delay distribution falls outside the MCA range."""

    def __init__(self, message: str, clipped_fraction: float):
        super().__init__(message)
        self.clipped_fraction = clipped_fraction


class HistogramFormatError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class DetectorSpec:
    """Gaussian timing jitter (FWHM, s) of the start and stop detectors."""

    jitter_fwhm_start: float = 0.0
    jitter_fwhm_stop: float = 0.0

    def __post_init__(self):
        if self.jitter_fwhm_start < 0 or self.jitter_fwhm_stop < 0:
            raise ValueError("detector jitter must be non-negative")

    @property
    def combined_fwhm(self) -> float:
        return math.hypot(self.jitter_fwhm_start, self.jitter_fwhm_stop)

    @classmethod
    def from_combined(cls, fwhm_total: float) -> "DetectorSpec":
        """Split a combined start-stop resolution equally between the detectors."""
        each = fwhm_total / math.sqrt(2.0)
        return cls(each, each)


@dataclass(frozen=True)
class McaConfig:
    bin_width: float
    n_bins: int
    t_center: float
    n_pairs: int = 0
    background_per_bin: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width!r}")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise ValueError(f"n_bins must be a positive integer, got {self.n_bins!r}")
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 0:
            raise ValueError(f"n_pairs must be a non-negative integer, got {self.n_pairs!r}")
        if not self.background_per_bin >= 0:
            raise ValueError("background_per_bin must be non-negative")
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")

    @property
    def bin_edges(self) -> np.ndarray:
        return np.arange(self.n_bins + 1) * self.bin_width


@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.array(self.bin_edges, dtype=float, copy=True)
        counts = np.array(self.counts, copy=True)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("need at least one bin")
        if counts.shape != (edges.size - 1,):
            raise ValueError("counts must have one entry per bin")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly ascending")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise ValueError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        edges.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def detector_smear(g2: CorrelationFunction, det: DetectorSpec) -> CorrelationFunction:
    """Convolve with the unit-area Gaussian instrument response."""
    width = det.combined_fwhm
    if width == 0:
        return CorrelationFunction(g2.grid, g2.values, g2.normalization)
    step = g2.grid.spacing
    if step > width / 10:
        raise ValueError(
            f"delay grid spacing {step:.3g} s is too coarse for a {width:.3g} s response; "
            f"need spacing <= {width / 10:.3g} s")
    sigma = width / FWHM_PER_SIGMA
    half = min(math.ceil(6 * sigma / step), g2.grid.n_points - 1)
    x = np.arange(-half, half + 1) * step
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    out = fftconvolve(g2.values, kernel, mode="same")
    if np.all(g2.values >= 0):
        np.clip(out, 0.0, None, out=out)
    return CorrelationFunction(g2.grid, _normalize(out, g2.grid, g2.normalization),
                               g2.normalization)


def _delay_cdf(curve: CorrelationFunction):
    density = np.clip(curve.values, 0.0, None)
    cdf = cumulative_trapezoid(density, curve.tau, initial=0.0)
    if not cdf[-1] > 0:
        raise ValueError("delay distribution has no weight")
    return cdf / cdf[-1]


def _inverse_cdf(u, tau, cdf):
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.clip(idx, 1, tau.size - 1)
    lo = idx - 1
    frac = (u - cdf[lo]) / (cdf[idx] - cdf[lo])
    return tau[lo] + frac * (tau[idx] - tau[lo])


def expected_counts(curve: CorrelationFunction, bin_edges, t_center: float,
                    n_pairs: float = 1.0, background_per_bin: float = 0.0) -> np.ndarray:
    """Mean counts per bin for the law that simulate_mca samples from."""
    cdf = _delay_cdf(curve)
    at_edges = np.interp(np.asarray(bin_edges, dtype=float) - t_center, curve.tau, cdf,
                         left=0.0, right=1.0)
    return n_pairs * np.diff(at_edges) + background_per_bin


def simulate_mca(smeared: CorrelationFunction, cfg: McaConfig) -> Histogram:
    """Accumulate a start-stop delay histogram by inverse-CDF Monte Carlo."""
    tau = smeared.tau
    cdf = _delay_cdf(smeared)
    edges = cfg.bin_edges
    inside = np.diff(np.interp([edges[0] - cfg.t_center, edges[-1] - cfg.t_center],
                               tau, cdf, left=0.0, right=1.0))[0]
    clipped = 1.0 - inside
    if clipped > 0.01:
        warnings.warn(RangeWarning(
            f"{clipped:.2%} of the delay distribution lies outside the MCA range", clipped),
            stacklevel=2)

    rng = np.random.default_rng(int(cfg.rng_seed))
    u = rng.random(int(cfg.n_pairs))
    arrivals = _inverse_cdf(u, tau, cdf) + cfg.t_center
    counts, _ = np.histogram(arrivals, bins=edges)
    if cfg.background_per_bin > 0:
        counts = counts + rng.poisson(cfg.background_per_bin, cfg.n_bins)
    return Histogram(edges, counts)


def width_fwhm(curve) -> float:
    if isinstance(curve, Histogram):
        return fwhm(curve.bin_centers, curve.counts)
    return fwhm(curve.tau, curve.values)


def width_first_zeros(curve: CorrelationFunction) -> float:
    return first_zeros_width(curve.tau, curve.values)


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_center_s,counts\n")
        for center, count in zip(hist.bin_centers, hist.counts):
            fh.write(f"{float(center)!r},{int(count)}\n")


def read_histogram_csv(path) -> Histogram:
    centers, counts, rows = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise HistogramFormatError("empty file", row=1)
        if [h.strip() for h in header] != ["bin_center_s", "counts"]:
            raise HistogramFormatError("expected header 'bin_center_s,counts'", row=1)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise HistogramFormatError(f"expected 2 fields, got {len(row)}", row=row_no)
            try:
                center = float(row[0])
                count = float(row[1])
            except ValueError:
                raise HistogramFormatError(f"not a number: {row!r}", row=row_no) from None
            if not math.isfinite(center) or not math.isfinite(count):
                raise HistogramFormatError("non-finite value", row=row_no)
            if count < 0 or count != round(count):
                raise HistogramFormatError(f"count must be a non-negative integer, got {row[1]!r}",
                                           row=row_no)
            centers.append(center)
            counts.append(int(round(count)))
            rows.append(row_no)
    if len(centers) < 2:
        raise HistogramFormatError("need at least two bins to infer the bin width")
    centers = np.asarray(centers)
    width = centers[1] - centers[0]
    bad = ~(np.abs(np.diff(centers) - width) <= 1e-6 * abs(width))
    if not width > 0 or bad.any():
        row = rows[1] if not width > 0 else rows[int(np.argmax(bad)) + 1]
        raise HistogramFormatError("bin centres must be ascending and uniformly spaced", row=row)
    width = (centers[-1] - centers[0]) / (centers.size - 1)
    edges = np.concatenate(([centers[0] - 0.5 * width], centers + 0.5 * width))
    return Histogram(edges, counts)
