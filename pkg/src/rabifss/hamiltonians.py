"""Rabi-model Hamiltonians and their effective low/high-coupling limits.

Conventions fixed package-wide: the spin x Fock product basis is indexed
2*m + s with s in {0 = down, 1 = up}; sigma_z is diag(-1, +1) in (down,
up) order.  All builders return exactly symmetric matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import (
    InvalidCouplingError,
    InvalidDimensionError,
    TruncationInsufficientError,
)
from .eigensolver import ground_state
from .operators import (
    TruncatedOperator,
    build_annihilation,
    build_number,
    build_quadrature_squared,
)

_SIGMA_Z = np.diag([-1.0, 1.0])
_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class RabiParams:
    """Couplings of the full Rabi model; lam is derived from g."""

    omega0: float
    Omega: float
    g: float

    def __post_init__(self):
        if self.omega0 <= 0.0:
            raise InvalidCouplingError(f"omega0 must be positive, got {self.omega0}")
        if self.Omega < 0.0:
            raise InvalidCouplingError(f"Omega must be nonnegative, got {self.Omega}")
        if self.g < 0.0:
            raise InvalidCouplingError(f"g must be nonnegative, got {self.g}")

    @property
    def lam(self) -> float:
        """Dipole coupling such that g = 2*lam / sqrt(omega0 * Omega)."""
        return 0.5 * self.g * math.sqrt(self.omega0 * self.Omega)


@dataclass(frozen=True)
class AnalyticObservables:
    """Infinite-ratio rescaled ground energy and photon occupation."""

    e_g: float
    n_g: float


def build_h_np(dim: int, g: float, omega0: float = 1.0) -> TruncatedOperator:
    """Low-coupling effective Hamiltonian (constant offset dropped)."""
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    if g < 0.0:
        raise InvalidCouplingError(f"g must be nonnegative, got {g}")
    n_op = build_number(dim).entries
    x2 = build_quadrature_squared(dim).entries
    return TruncatedOperator(dim, omega0 * n_op - (omega0 * g * g / 4.0) * x2)


def build_h_sp(dim: int, g: float, omega0: float = 1.0) -> TruncatedOperator:
    """High-coupling effective Hamiltonian (constant offset dropped).

    Defined for every g > 0; below g = 1 the untruncated operator is
    unbounded from below and the truncated ground energy is a basis-set
    artifact, kept on purpose for the scaling analysis.
    """
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    if g <= 0.0:
        raise InvalidCouplingError(f"g must be positive, got {g}")
    n_op = build_number(dim).entries
    x2 = build_quadrature_squared(dim).entries
    return TruncatedOperator(dim, omega0 * n_op - (omega0 / (4.0 * g**4)) * x2)


def build_h_rabi(dim_fock: int, params: RabiParams) -> TruncatedOperator:
    """Full Rabi Hamiltonian on the 2 * dim_fock product space."""
    if dim_fock < 1:
        raise InvalidDimensionError(f"dim_fock must be >= 1, got {dim_fock}")
    a = build_annihilation(dim_fock).entries
    x = a + a.T
    n_op = build_number(dim_fock).entries
    eye_f = np.eye(dim_fock)
    h = (
        0.5 * params.Omega * np.kron(eye_f, _SIGMA_Z)
        + params.omega0 * np.kron(n_op, np.eye(2))
        - params.lam * np.kron(x, _SIGMA_X)
    )
    return TruncatedOperator(2 * dim_fock, h)


def analytic_observables(g: float, omega0: float = 1.0) -> AnalyticObservables:
    """Piecewise closed-form rescaled observables in the infinite-ratio limit."""
    if g <= 0.0:
        raise InvalidCouplingError(f"g must be positive, got {g}")
    if g <= 1.0:
        return AnalyticObservables(e_g=-omega0 / 2.0, n_g=0.0)
    g2 = g * g
    return AnalyticObservables(
        e_g=-omega0 * (g2 + 1.0 / g2) / 4.0,
        n_g=(g2 - 1.0 / g2) / 4.0,
    )


def _rescaled_point(args):
    g, dim_fock, ratio, omega0 = args
    params = RabiParams(omega0=omega0, Omega=ratio * omega0, g=g)
    h = build_h_rabi(dim_fock, params)
    sol = ground_state(h)
    n_full = np.kron(build_number(dim_fock).entries, np.eye(2))
    scale = omega0 / params.Omega
    e_g = scale * sol.energy
    n_g = scale * float(sol.vector @ (n_full @ sol.vector))
    top = float(np.sum(sol.vector[2 * (dim_fock - 1) :] ** 2))
    return e_g, n_g, top


def rescaled_curves(
    g_grid,
    dim_fock: int,
    Omega_over_omega0: float,
    omega0: float = 1.0,
    workers: int = 1,
):
    """Rescaled full-Rabi observables on a g grid.

    Returns (e_g, n_g, d2e_dg2) arrays over the grid; the curvature
    column uses central second differences and is NaN at the endpoints.
    The caller-supplied dim_fock must keep the top Fock level of the
    ground state below 1e-8 occupation, checked at the largest g.
    """
    g_grid = np.asarray(g_grid, dtype=np.float64)
    if g_grid.ndim != 1 or g_grid.size < 1:
        raise InvalidDimensionError("g_grid must be a nonempty 1-d array")
    if np.any(np.diff(g_grid) <= 0.0):
        raise InvalidCouplingError("g_grid must be strictly increasing")
    if Omega_over_omega0 <= 0.0:
        raise InvalidCouplingError("Omega_over_omega0 must be positive")
    tasks = [(float(g), dim_fock, Omega_over_omega0, omega0) for g in g_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_rescaled_point, tasks))
    else:
        results = [_rescaled_point(t) for t in tasks]
    e_g = np.array([r[0] for r in results])
    n_g = np.array([r[1] for r in results])
    top = results[-1][2]
    if top >= 1e-8:
        g_bad = float(g_grid[-1])
        raise TruncationInsufficientError(
            f"top Fock level holds {top:.3e} >= 1e-8 of the ground state "
            f"at g = {g_bad}; increase dim_fock",
            g=g_bad,
        )
    d2e = np.full_like(e_g, np.nan)
    if g_grid.size >= 3:
        h_step = np.diff(g_grid)
        if np.max(np.abs(h_step - h_step[0])) > 1e-12 * h_step[0]:
            raise InvalidCouplingError("g_grid must be uniformly spaced")
        d2e[1:-1] = (e_g[2:] - 2.0 * e_g[1:-1] + e_g[:-2]) / (h_step[0] ** 2)
    return e_g, n_g, d2e
