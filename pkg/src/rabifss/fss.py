"""Finite-size scaling in the truncated-basis dimension.

The scaling exponent of a positive (or uniformly negative) quantity Q
between two truncations N, N' is estimated as

    delta(g) = log(Q_N / Q_N') / log(N' / N)

(default denominator order; the opposite order is available behind
``flip_denominator=False``).  Pairwise intersections of delta curves
drawn from consecutive truncation pairs locate the critical coupling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateCurvesError,
    GridMismatchError,
    InvalidDimensionError,
    NoCrossingError,
    UndefinedRatioError,
)
from .eigensolver import GroundSolution
from .operators import TruncatedOperator

_BRACKET_TOL = 1e-8


@dataclass(frozen=True)
class DeltaCurve:
    """Scaling-exponent estimate over a g grid for one truncation pair."""

    n: int
    n_prime: int
    g_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class IntersectionPoint:
    """Crossing of two delta curves; labelled by the largest truncation."""

    n_label: int
    g_star: float
    bracket_width: float
    multiple: bool = False


@dataclass(frozen=True)
class GammaCurve:
    """Derivative-based exponent ratio; undefined grid points are holes."""

    n: int
    n_prime: int
    g_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    holes: np.ndarray = field(repr=False)


def _check_grid(g_grid) -> np.ndarray:
    g = np.asarray(g_grid, dtype=np.float64)
    if g.ndim != 1 or g.size < 2:
        raise InvalidDimensionError("g grid must be 1-d with at least two points")
    if np.any(np.diff(g) <= 0.0):
        raise InvalidDimensionError("g grid must be strictly increasing")
    return g


def default_g_grid(g_min: float = 0.5, g_max: float = 1.5, g_step: float = 1e-3):
    """Uniform grid [g_min, g_max] inclusive with the requested step."""
    count = int(round((g_max - g_min) / g_step))
    if count < 1 or abs(g_min + count * g_step - g_max) > 1e-9 * max(1.0, abs(g_max)):
        raise InvalidDimensionError("grid bounds are not an integer number of steps apart")
    return g_min + g_step * np.arange(count + 1)


def delta_curve(
    energies_n,
    energies_n_prime,
    n: int,
    n_prime: int,
    g_grid,
    flip_denominator: bool = True,
) -> DeltaCurve:
    """Scaling-exponent curve from per-g values at two truncations.

    ``flip_denominator=True`` (default) divides by log(N'/N); False
    divides by log(N/N'), flipping the curve's sign.
    """
    g = _check_grid(g_grid)
    qn = np.asarray(energies_n, dtype=np.float64)
    qp = np.asarray(energies_n_prime, dtype=np.float64)
    if qn.shape != g.shape or qp.shape != g.shape:
        raise GridMismatchError(
            f"value arrays of shapes {qn.shape}, {qp.shape} do not match grid {g.shape}"
        )
    if n == n_prime or n < 2 or n_prime < 2:
        raise InvalidDimensionError(f"need two distinct truncations >= 2, got {n}, {n_prime}")
    bad = (qn == 0.0) | (qp == 0.0) | (np.sign(qn) != np.sign(qp))
    if np.any(bad):
        g_bad = float(g[np.argmax(bad)])
        raise UndefinedRatioError(
            f"energy ratio undefined at g = {g_bad}: zero or opposite-sign inputs",
            g=g_bad,
        )
    den = math.log(n_prime / n) if flip_denominator else math.log(n / n_prime)
    values = np.log(qn / qp) / den
    return DeltaCurve(n=n, n_prime=n_prime, g_grid=g, values=values)


def _interp(curve: DeltaCurve, g: float) -> float:
    return float(np.interp(g, curve.g_grid, curve.values))


def find_intersection(curve_a: DeltaCurve, curve_b: DeltaCurve) -> IntersectionPoint:
    """Crossing of two delta curves via bisection on their difference.

    The difference of the two linear interpolants is bisected inside
    each sign-change bracket down to a width of 1e-8.  With several
    crossings the one nearest the midpoint of the grid range wins and
    the multiplicity flag is set.
    """
    if curve_a.g_grid.shape != curve_b.g_grid.shape or np.any(
        curve_a.g_grid != curve_b.g_grid
    ):
        raise GridMismatchError("curves are not sampled on the same g grid")
    g = curve_a.g_grid
    diff = curve_a.values - curve_b.values
    if np.all(diff == 0.0):
        raise DegenerateCurvesError("curves are identical; intersection undefined")
    brackets = []
    for i in range(g.size - 1):
        lo, hi = diff[i], diff[i + 1]
        if lo == 0.0:
            brackets.append((float(g[i]), float(g[i]), 0.0))
        elif lo * hi < 0.0:
            brackets.append((float(g[i]), float(g[i + 1]), None))
    if diff[-1] == 0.0:
        brackets.append((float(g[-1]), float(g[-1]), 0.0))
    if not brackets:
        raise NoCrossingError(
            f"curves ({curve_a.n},{curve_a.n_prime}) and ({curve_b.n},{curve_b.n_prime}) "
            "do not cross inside the grid"
        )

    def refine(lo: float, hi: float) -> tuple[float, float]:
        f_lo = _interp(curve_a, lo) - _interp(curve_b, lo)
        while hi - lo > _BRACKET_TOL:
            mid = 0.5 * (lo + hi)
            f_mid = _interp(curve_a, mid) - _interp(curve_b, mid)
            if f_mid == 0.0:
                return mid, 0.0
            if (f_lo < 0.0) != (f_mid < 0.0):
                hi = mid
            else:
                lo, f_lo = mid, f_mid
        return 0.5 * (lo + hi), hi - lo

    centre = 0.5 * (float(g[0]) + float(g[-1]))
    results = []
    for lo, hi, width in brackets:
        if width == 0.0:
            results.append((lo, 0.0))
        else:
            results.append(refine(lo, hi))
    best = min(results, key=lambda r: abs(r[0] - centre))
    n_label = max(curve_a.n, curve_a.n_prime, curve_b.n, curve_b.n_prime)
    return IntersectionPoint(
        n_label=n_label,
        g_star=best[0],
        bracket_width=best[1],
        multiple=len(results) > 1,
    )


def refine_intersection(
    point: IntersectionPoint,
    diff_fn,
    step: float,
    tol: float = 1e-12,
    max_doublings: int = 6,
) -> IntersectionPoint:
    """Polish a grid-located crossing against directly evaluated curves.

    ``diff_fn`` maps g to the difference of the two delta values
    computed fresh at that coupling (no interpolation), so the returned
    crossing is limited only by the bisection tolerance rather than by
    the sampling grid.  The initial bracket is g_star +/- step, widened
    geometrically until it captures the sign change.
    """
    if step <= 0.0 or tol <= 0.0:
        raise InvalidDimensionError("step and tol must be positive")
    lo = point.g_star - step
    hi = point.g_star + step
    f_lo = diff_fn(lo)
    f_hi = diff_fn(hi)
    widenings = 0
    while f_lo * f_hi > 0.0:
        if widenings >= max_doublings:
            raise NoCrossingError(
                f"no sign change within {hi - lo:.3e} of g = {point.g_star}"
            )
        step *= 2.0
        lo = point.g_star - step
        hi = point.g_star + step
        f_lo = diff_fn(lo)
        f_hi = diff_fn(hi)
        widenings += 1
    if f_lo == 0.0:
        return IntersectionPoint(point.n_label, lo, 0.0, point.multiple)
    if f_hi == 0.0:
        return IntersectionPoint(point.n_label, hi, 0.0, point.multiple)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = diff_fn(mid)
        if f_mid == 0.0:
            return IntersectionPoint(point.n_label, mid, 0.0, point.multiple)
        if (f_lo < 0.0) != (f_mid < 0.0):
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return IntersectionPoint(
        n_label=point.n_label,
        g_star=0.5 * (lo + hi),
        bracket_width=hi - lo,
        multiple=point.multiple,
    )


def denergy_dg(h_family, dh_dg, g: float, ground: GroundSolution) -> float:
    """Energy derivative via the ground expectation of dH/dg.

    ``h_family`` and ``dh_dg`` map g to operators; ``ground`` must solve
    h_family(g), which is verified through its residual.
    """
    h = h_family(g)
    dh = dh_dg(g)
    h_m = h.entries if isinstance(h, TruncatedOperator) else np.asarray(h)
    dh_m = dh.entries if isinstance(dh, TruncatedOperator) else np.asarray(dh)
    v = ground.vector
    if dh_m.shape != (v.size, v.size) or h_m.shape != dh_m.shape:
        raise InvalidDimensionError(
            f"operator shape {dh_m.shape} does not match vector length {v.size}"
        )
    scale = max(1.0, float(np.max(np.abs(h_m))) * v.size)
    res = float(np.linalg.norm(h_m @ v - ground.energy * v))
    if res > 1e-6 * scale:
        raise ConfigError(
            f"ground solution does not solve the family at g = {g} (residual {res:.3e})"
        )
    return float(v @ (dh_m @ v))


def gamma_curve(delta_e: DeltaCurve, delta_de: DeltaCurve) -> GammaCurve:
    """Exponent ratio delta_E / (delta_dE - delta_E) with hole tracking.

    Grid points where the denominator magnitude falls below 1e-12 are
    recorded as holes (NaN values) rather than evaluated.
    """
    if (delta_e.n, delta_e.n_prime) != (delta_de.n, delta_de.n_prime):
        raise GridMismatchError("curves belong to different truncation pairs")
    if delta_e.g_grid.shape != delta_de.g_grid.shape or np.any(
        delta_e.g_grid != delta_de.g_grid
    ):
        raise GridMismatchError("curves are not sampled on the same g grid")
    den = delta_de.values - delta_e.values
    holes = np.abs(den) < 1e-12
    if np.all(holes):
        raise DegenerateCurvesError("gamma curve undefined at every grid point")
    values = np.full_like(den, np.nan)
    np.divide(delta_e.values, den, out=values, where=~holes)
    return GammaCurve(
        n=delta_e.n,
        n_prime=delta_e.n_prime,
        g_grid=delta_e.g_grid,
        values=values,
        holes=holes,
    )


def estimate_nu(gamma_at_gc: float, delta_at_gc: float) -> float:
    """Correlation-length exponent estimate gamma / delta at the crossing."""
    if delta_at_gc == 0.0:
        raise ZeroDivisionError("delta at the critical point is zero")
    return gamma_at_gc / delta_at_gc
