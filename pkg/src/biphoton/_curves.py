"""Width measurements on sampled single-peaked curves."""

from __future__ import annotations

import numpy as np


class UnmeasurableWidthError(ValueError):
    """The curve lacks the features the requested width metric needs."""


def _crossing(x, y, i_in, i_out, level):
    # linear interpolation between an inside sample (>= level) and an outside one
    y0, y1 = y[i_in], y[i_out]
    return x[i_in] + (y0 - level) / (y0 - y1) * (x[i_out] - x[i_in])


def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        raise UnmeasurableWidthError("need at least three samples")
    i_max = int(np.argmax(y))
    peak = y[i_max]
    if not peak > 0:
        raise UnmeasurableWidthError("curve has no positive maximum")
    half = 0.5 * peak
    below = y < half
    left = np.flatnonzero(below[:i_max])
    right = np.flatnonzero(below[i_max:])
    if left.size == 0 or right.size == 0:
        raise UnmeasurableWidthError("no half-maximum crossing on one side of the peak")
    il = left[-1]
    ir = i_max + right[0]
    return _crossing(x, y, ir - 1, ir, half) - _crossing(x, y, il + 1, il, half)


def _refined_min(x, y, i):
    # vertex of the parabola through three neighbouring samples
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom <= 0:
        return x[i]
    shift = 0.5 * (y0 - y2) / denom
    return x[i] + shift * (x[i + 1] - x[i])


def first_zeros_width(x: np.ndarray, y: np.ndarray, rel_level: float = 0.01) -> float:
    """Distance between the first deep local minima either side of the peak.

    A minimum only counts if the curve rises again right after it (a side
    lobe follows), so a flat zero floor is not a minimum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i_max = int(np.argmax(y))
    level = rel_level * y[i_max]

    mid, prev, nxt = y[1:-1], y[:-2], y[2:]
    deep = mid < level
    right = np.flatnonzero(deep & (mid <= prev) & (mid < nxt)) + 1
    right = right[right > i_max]
    left = np.flatnonzero(deep & (mid <= nxt) & (mid < prev)) + 1
    left = left[left < i_max]
    if left.size == 0 or right.size == 0:
        raise UnmeasurableWidthError(
            "no local minimum below {:.0%} of the peak on both sides".format(rel_level))
    return _refined_min(x, y, right[0]) - _refined_min(x, y, left[-1])
