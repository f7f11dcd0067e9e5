"""Exact-integer resonance function and brute-force scans of its size and level sets.

For ``k = k1 + k2`` the resonance function is

    Omega(k1, k2) = k^(2j+1) - k1^(2j+1) - k2^(2j+1),

and on nonzero frequencies ``|Omega| ~ |k_min| |k_max|^(2j)``. Everything here is
computed with Python integers so nothing wraps at 64 bits.
"""

from __future__ import annotations

import bisect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np


def resonance_function(k1: int, k2: int, j: int) -> int:
    p = 2 * j + 1
    k1, k2 = int(k1), int(k2)
    return (k1 + k2) ** p - k1**p - k2**p


@dataclass
class ResonanceScanReport:
    j: int
    k_max: int
    ratio_min: float
    ratio_max: float
    argmin: tuple
    argmax: tuple
    violations: int

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["argmin"] = list(self.argmin)
        d["argmax"] = list(self.argmax)
        return d


def _scan_rows(j: int, k_max: int, rows):
    # min/max of |Omega| / (k_min * k_max^(2j)) over k1 in rows, exact rationals
    p2j = 2 * j
    best_lo = best_hi = None
    arg_lo = arg_hi = None
    violations = 0
    for k1 in rows:
        if k1 == 0:
            continue
        a1 = abs(k1)
        for k2 in range(-k_max, k_max + 1):
            k = k1 + k2
            if k2 == 0 or k == 0:
                continue
            sizes = (abs(k), a1, abs(k2))
            ratio = Fraction(abs(resonance_function(k1, k2, j)), min(sizes) * max(sizes) ** p2j)
            if ratio <= 0:
                violations += 1
            # ties keep the first triple in scan order
            if best_lo is None or ratio < best_lo:
                best_lo, arg_lo = ratio, (k, k1, k2)
            if best_hi is None or ratio > best_hi:
                best_hi, arg_hi = ratio, (k, k1, k2)
    return best_lo, arg_lo, best_hi, arg_hi, violations


def equivalence_scan(j: int, k_max: int, workers: int = 1) -> ResonanceScanReport:
    """Exhaustive scan over nonzero ``|k1|, |k2| <= k_max`` with ``k1 + k2 != 0``.

    Ratios are compared as exact fractions; the report carries them as floats.
    Rows of ``k1`` are split across ``workers`` and merged in a fixed order, so
    the report does not depend on the worker count.
    """
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if j < 1:
        raise ValueError("j must be a positive integer")
    all_rows = list(range(-k_max, k_max + 1))
    chunks = [all_rows[i::workers] for i in range(workers)] if workers > 1 else [all_rows]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda rows: _scan_rows(j, k_max, rows), chunks))
    else:
        parts = [_scan_rows(j, k_max, all_rows)]

    def scan_pos(arg):
        # position of (k1, k2) in the serial scan order, for deterministic tie-breaking
        return (arg[1], arg[2])

    lo = min((p for p in parts if p[0] is not None), key=lambda p: (p[0], scan_pos(p[1])))
    hi = max(
        (p for p in parts if p[2] is not None),
        key=lambda p: (p[2], tuple(-v for v in scan_pos(p[3]))),
    )
    return ResonanceScanReport(
        j=j,
        k_max=k_max,
        ratio_min=float(lo[0]),
        ratio_max=float(hi[2]),
        argmin=lo[1],
        argmax=hi[3],
        violations=sum(p[4] for p in parts),
    )


def resonance_values(k: int, j: int, k1_range: int, positive_only: bool = False) -> list:
    """``Omega(k1, k - k1)`` over the admissible ``k1``.

    By default ``0 < |k1| <= k1_range`` and ``k1 != k``. With ``positive_only`` both
    ``k1`` and ``k - k1`` are positive (so ``0 < k1 < k``), additionally capped by
    ``k1_range``.
    """
    if positive_only:
        ks = range(1, min(k, k1_range + 1))
    else:
        ks = (k1 for k1 in range(-k1_range, k1_range + 1) if k1 != 0 and k1 != k)
    return [resonance_function(k1, k - k1, j) for k1 in ks]


def annulus_count(
    k: int, j: int, window: int, k1_range: int, positive_only: bool = False
) -> int:
    """Largest number of admissible ``k1`` whose ``Omega`` lies in one window ``[mu0, mu0 + M]``.

    Window placements are tried at every attained value of ``Omega``.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    if window < 1 or k1_range < 1:
        raise ValueError("window and k1_range must be positive")
    values = sorted(resonance_values(k, j, k1_range, positive_only))
    best = 0
    for i, mu0 in enumerate(values):
        hi = bisect.bisect_right(values, mu0 + window, lo=i)
        best = max(best, hi - i)
    return best


def count_exponent(counts, windows) -> float:
    """Least-squares slope of ``log count`` against ``log M``."""
    slope, _ = np.polyfit(np.log(windows), np.log(np.maximum(counts, 1)), 1)
    return float(slope)


def uniform_annulus_counts(j: int, windows, k_values, k1_range: int, positive_only: bool = True) -> list:
    """``max_k annulus_count(k, j, M, k1_range)`` for each window ``M``."""
    return [
        max(annulus_count(k, j, m, k1_range, positive_only) for k in k_values)
        for m in windows
    ]
