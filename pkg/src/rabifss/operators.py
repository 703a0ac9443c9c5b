"""Dense truncated bosonic operators on the first `dim` Fock levels.

All matrices are real float64 and exactly symmetric where documented:
symmetry holds entrywise with zero tolerance because each matrix is
assembled symmetrically, never symmetrized after the fact.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError


def _frozen(entries: np.ndarray) -> np.ndarray:
    entries = np.ascontiguousarray(entries, dtype=np.float64)
    entries.flags.writeable = False
    return entries


@dataclass(frozen=True)
class TruncatedOperator:
    """Immutable dense real matrix acting on a truncated basis."""

    dim: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        if self.entries.shape != (self.dim, self.dim):
            raise InvalidDimensionError(
                f"entries shape {self.entries.shape} does not match dim {self.dim}"
            )


def _check_dim(dim: int, minimum: int = 1) -> None:
    if not isinstance(dim, (int, np.integer)) or dim < minimum:
        raise InvalidDimensionError(f"dimension must be an integer >= {minimum}, got {dim!r}")


def build_annihilation(dim: int) -> TruncatedOperator:
    """Ladder-down operator: entry (m-1, m) = sqrt(m), zero elsewhere."""
    _check_dim(dim)
    a = np.zeros((dim, dim))
    m = np.arange(1, dim)
    a[m - 1, m] = np.sqrt(m)
    return TruncatedOperator(dim, a)


def build_number(dim: int) -> TruncatedOperator:
    """Occupation-number operator: diag(0, 1, ..., dim-1)."""
    _check_dim(dim)
    return TruncatedOperator(dim, np.diag(np.arange(dim, dtype=np.float64)))


def build_quadrature_squared(dim: int) -> TruncatedOperator:
    """Square of the position-like quadrature, (A + A^T) @ (A + A^T).

    The product of the exactly-symmetric factor with itself is itself
    exactly symmetric entrywise, so no symmetrization is applied.  The
    truncation artifact at the top two levels is kept as produced.
    """
    _check_dim(dim)
    a = build_annihilation(dim).entries
    x = a + a.T
    return TruncatedOperator(dim, x @ x)


def build_parity(dim_fock: int) -> TruncatedOperator:
    """Joint spin-boson parity on the spin x Fock space (index 2m + s).

    Diagonal entry (-1)^(m + s) with s = 1 for spin-up; dimension is
    2 * dim_fock.
    """
    _check_dim(dim_fock)
    m = np.arange(2 * dim_fock) // 2
    s = np.arange(2 * dim_fock) % 2
    signs = np.where((m + s) % 2 == 0, 1.0, -1.0)
    return TruncatedOperator(2 * dim_fock, np.diag(signs))
