"""Trapezoid-rule cosine transforms with an optional quadratic spectral phase.

Evaluates, for every delay tau_j,

    sum_k w_k v_k exp(i chirp Omega_k^2 / 2) cos(Omega_k tau_j)

with trapezoid weights w_k on a symmetric uniform Omega grid.  Nothing here
approximates the sum; the two code paths only reorder it:

* commensurate grids (h * dtau * P == 2 pi for an integer P) fold the
  half-grid terms modulo P and finish with one length-P FFT;
* any other pair of grids goes through a blockwise chirp-z transform.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.signal import CZT

from .grids import FrequencyGrid, TimeGrid

_RESEED = 1024
_CZT_BLOCK = 1 << 18
_COMMENSURATE_RTOL = 64 * np.finfo(float).eps


@njit(cache=True)
def _fold_chirp(v, half, alpha, period):
    # out[r] = sum_{m = r mod period} e_m exp(i alpha m^2) where e_m pairs
    # v at +m and -m with trapezoid weights (h applied by the caller).  The
    # rotation recurrence restarts from an exact exp every _RESEED samples.
    out = np.zeros(period, dtype=np.complex128)
    n = half + 1
    r0 = 0
    for start in range(0, n, _RESEED):
        k0 = float(start)
        z = np.exp(1j * (alpha * k0 * k0))
        step = np.exp(1j * (alpha * (2.0 * k0 + 1.0)))
        rot = np.exp(2j * alpha)
        stop = min(start + _RESEED, n)
        r = r0
        for m in range(start, stop):
            if m == 0:
                e = v[half]
            elif m == half:
                e = 0.5 * (v[2 * half] + v[0])
            else:
                e = v[half + m] + v[half - m]
            out[r] += e * z
            z *= step
            step *= rot
            r += 1
            if r == period:
                r = 0
        r0 = r
    return out


def paired_half(fgrid: FrequencyGrid, values: np.ndarray) -> np.ndarray:
    """Trapezoid-weighted v(Omega) + v(-Omega) on the non-negative half grid."""
    half = fgrid.n_points // 2
    v = np.asarray(values)
    e = v[half:] + v[half::-1]
    e[0] = v[half]
    e[-1] *= 0.5
    return e * fgrid.spacing


def commensurate_period(fgrid: FrequencyGrid, tgrid: TimeGrid) -> int | None:
    p = 2.0 * math.pi / (fgrid.spacing * tgrid.spacing)
    p_int = round(p)
    if p_int >= tgrid.n_points and abs(p - p_int) <= _COMMENSURATE_RTOL * p:
        return int(p_int)
    return None


def _transform_folded(values, h, alpha, period, n_tau):
    v = np.ascontiguousarray(values)
    f = _fold_chirp(v, v.size // 2, alpha, period)
    y = np.fft.ifft(f) * (period * h)
    j = np.arange(-(n_tau // 2), n_tau // 2 + 1)
    return y[j % period]


def _transform_czt(e, alpha, h, tgrid):
    m = np.arange(e.size, dtype=float)
    c = e * np.exp(1j * alpha * m * m)
    tau0, dtau, n_tau = -tgrid.tau_max, tgrid.spacing, tgrid.n_points
    y = np.zeros(n_tau, dtype=complex)
    tau = tgrid.values
    transforms = {}
    for start in range(0, c.size, _CZT_BLOCK):
        block = c[start:start + _CZT_BLOCK]
        if block.size not in transforms:
            transforms[block.size] = CZT(block.size, n_tau,
                                         w=np.exp(1j * h * dtau),
                                         a=np.exp(-1j * h * tau0))
        y += np.exp(1j * (start * h) * tau) * transforms[block.size](block)
    return y


def cosine_transform(fgrid: FrequencyGrid, values: np.ndarray, tgrid: TimeGrid,
                     chirp: float = 0.0) -> np.ndarray:
    """Trapezoid sum of values * exp(i chirp Omega^2/2) * cos(Omega tau)."""
    h = fgrid.spacing
    alpha = 0.5 * chirp * h * h
    period = commensurate_period(fgrid, tgrid)
    if period is not None:
        y = _transform_folded(values, h, alpha, period, tgrid.n_points)
    else:
        y = _transform_czt(paired_half(fgrid, values), alpha, h, tgrid)
    # cos kernel from exp kernel on a symmetric delay grid
    return 0.5 * (y + y[::-1])
