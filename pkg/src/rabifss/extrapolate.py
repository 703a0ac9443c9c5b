"""Sequence extrapolation with a free power-law exponent.

Given values T(h_i) at strictly decreasing step sizes h_i, a triangular
tableau is built from the recurrence

    T_m(i) = T_{m-1}(i+1) + (T_{m-1}(i+1) - T_{m-1}(i)) /
             [ (h_i / h_{i+m})^omega *
               (1 - (T_{m-1}(i+1) - T_{m-1}(i)) /
                    (T_{m-1}(i+1) - T_{m-2}(i+1))) - 1 ]

with T_{-1} = 0 and T_0(i) = T(h_i).  The deepest entry T_{count-1}(0)
is the limit estimate for h -> 0.  The free exponent omega is chosen by
minimizing the convergence measure epsilon, the absolute difference of
the two entries in the deepest tableau row that still has two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ExtrapolationFailedError, InsufficientDataError

_OMEGA_GRID_LO = 0.1
_OMEGA_GRID_HI = 10.0
_OMEGA_GRID_STEP = 1e-2
_OMEGA_REFINE_TOL = 1e-4
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BsaTableau:
    """Extrapolation tableau; row m holds count - m entries."""

    h_values: tuple
    rows: tuple = field(repr=False)
    omega: float
    epsilon: float
    truncated: bool = False

    @property
    def limit(self) -> float:
        """Deepest completed entry: the h -> 0 estimate."""
        return float(self.rows[-1][-1])


class BsaResult(NamedTuple):
    limit: float
    omega_star: float
    epsilon: float


def _coerce_inputs(values, h_values):
    t0 = np.asarray(values, dtype=np.float64)
    h = np.asarray(h_values, dtype=np.float64)
    if t0.ndim != 1 or h.ndim != 1:
        raise InsufficientDataError("values and h_values must be 1-d sequences")
    if t0.size != h.size:
        raise InsufficientDataError(
            f"length mismatch: {t0.size} values vs {h.size} step sizes"
        )
    if t0.size < 3:
        raise InsufficientDataError(
            f"need at least 3 points to extrapolate, got {t0.size}"
        )
    if not np.all(np.isfinite(t0)):
        raise InsufficientDataError("values must all be finite")
    if np.any(h <= 0.0) or np.any(np.diff(h) >= 0.0):
        raise InsufficientDataError(
            "h_values must be positive and strictly decreasing"
        )
    return t0, h


def bsa_tableau(values, h_values, omega: float) -> BsaTableau:
    """Full tableau at a fixed exponent.

    A zero recurrence denominator truncates the tableau at the last
    completable level and sets the ``truncated`` flag.
    """
    if omega <= 0.0:
        raise InsufficientDataError(f"omega must be positive, got {omega}")
    t0, h = _coerce_inputs(values, h_values)
    count = t0.size
    rows = [t0.copy()]
    prev2 = np.zeros(count + 1)  # row m-2 padded; T_{-1} convention is all zeros
    truncated = False
    for m in range(1, count):
        prev = rows[m - 1]
        size = count - m
        new = np.empty(size)
        ok = True
        for i in range(size):
            t_hi = prev[i + 1]
            t_lo = prev[i]
            diff = t_hi - t_lo
            if diff == 0.0:
                # stationary differences: correction is exactly zero
                new[i] = t_hi
                continue
            inner_den = t_hi - prev2[i + 1]
            if inner_den == 0.0:
                ok = False
                break
            bracket = (h[i] / h[i + m]) ** omega * (1.0 - diff / inner_den) - 1.0
            if bracket == 0.0 or not math.isfinite(bracket):
                ok = False
                break
            new[i] = t_hi + diff / bracket
        if not ok or not np.all(np.isfinite(new)):
            truncated = True
            break
        prev2 = prev
        rows.append(new)
    epsilon = math.nan
    for row in reversed(rows):
        if row.size >= 2:
            epsilon = float(abs(row[-1] - row[-2]))
            break
    return BsaTableau(
        h_values=tuple(float(x) for x in h),
        rows=tuple(np.asarray(r) for r in rows),
        omega=float(omega),
        epsilon=epsilon,
        truncated=truncated,
    )


def _candidate(values, h_values, omega: float):
    tab = bsa_tableau(values, h_values, omega)
    if tab.truncated and len(tab.rows) == 1:
        return None
    if not math.isfinite(tab.limit) or not math.isfinite(tab.epsilon):
        return None
    return tab


def bsa_limit(values, h_values) -> BsaResult:
    """Extrapolate with the exponent chosen by convergence minimization.

    Scans omega over [0.1, 10] at 1e-2 resolution, then refines the best
    cell by golden-section search to 1e-4.  Ties go to the smaller
    omega.  If every candidate fails, raises with the last raw sequence
    value attached as a fallback.
    """
    t0, _ = _coerce_inputs(values, h_values)  # validate early
    count = int(round((_OMEGA_GRID_HI - _OMEGA_GRID_LO) / _OMEGA_GRID_STEP))
    omega_grid = _OMEGA_GRID_LO + _OMEGA_GRID_STEP * np.arange(count + 1)
    best = None
    for omega in omega_grid:
        tab = _candidate(values, h_values, float(omega))
        if tab is None:
            continue
        if best is None or tab.epsilon < best.epsilon:
            best = tab
    if best is None:
        raise ExtrapolationFailedError(
            "no exponent admitted a usable tableau", fallback=float(t0[-1])
        )
    lo = max(best.omega - _OMEGA_GRID_STEP, 1e-12)
    hi = best.omega + _OMEGA_GRID_STEP

    def eps_at(omega: float) -> float:
        tab = _candidate(values, h_values, omega)
        return math.inf if tab is None else tab.epsilon

    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = eps_at(x1), eps_at(x2)
    while hi - lo > _OMEGA_REFINE_TOL:
        if f1 <= f2:  # <= keeps the search drifting toward smaller omega on ties
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = eps_at(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = eps_at(x2)
    refined = _candidate(values, h_values, 0.5 * (lo + hi))
    if refined is not None and refined.epsilon <= best.epsilon:
        best = refined
    return BsaResult(limit=best.limit, omega_star=best.omega, epsilon=best.epsilon)
