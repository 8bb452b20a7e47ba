"""Shared quantile convention.

Stage construction trims at the 25th percentile and relabels at the
median, and the evaluation oracles recompute both; everything must use
one quantile definition.  We standardise on linear interpolation between
closest order statistics (R type 7, position h = (n - 1) * p on the
sorted sample), which is numpy's default -- these wrappers exist so the
choice is made in exactly one place and input checking is uniform.
"""

from __future__ import annotations

import numpy as np


def quantile(values: np.ndarray, p: float) -> float:
    """Type-7 quantile of ``values`` at fraction ``p`` in [0, 1]."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("quantile of empty array")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"quantile fraction must be in [0, 1], got {p}")
    return float(np.quantile(v, p, method="linear"))


def median(values: np.ndarray) -> float:
    return quantile(values, 0.5)
