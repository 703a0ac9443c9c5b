"""Unit tests for the truncated bosonic operator builders."""
import numpy as np
import pytest

from rabifss.errors import InvalidDimensionError
from rabifss.operators import (
    TruncatedOperator,
    build_annihilation,
    build_number,
    build_parity,
    build_quadrature_squared,
)


def test_annihilation_dim2_single_entry():
    a = build_annihilation(2)
    expected = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(a.entries, expected)


def test_annihilation_dim1_is_zero():
    a = build_annihilation(1)
    assert a.dim == 1
    assert np.array_equal(a.entries, np.zeros((1, 1)))


def test_annihilation_sqrt_rule():
    a = build_annihilation(4)
    assert a.entries[2, 3] == pytest.approx(np.sqrt(3.0), abs=0.0)
    # only the first superdiagonal is populated
    mask = np.zeros((4, 4), dtype=bool)
    mask[np.arange(3), np.arange(1, 4)] = True
    assert np.all(a.entries[~mask] == 0.0)
    assert np.allclose(a.entries[mask], np.sqrt([1.0, 2.0, 3.0]))


def test_number_diagonal():
    n = build_number(3)
    assert np.array_equal(n.entries, np.diag([0.0, 1.0, 2.0]))
    assert np.array_equal(build_number(1).entries, np.zeros((1, 1)))


def test_number_equals_adagger_a_up_to_64():
    # product oracle is exact up to one rounding of each sqrt(m)**2
    for dim in range(1, 65):
        a = build_annihilation(dim).entries
        n = build_number(dim).entries
        np.testing.assert_allclose(n, a.T @ a, rtol=0.0, atol=1e-13)


def test_quadrature_squared_banded_entries():
    x2 = build_quadrature_squared(6).entries
    for m in range(4):  # rows untouched by truncation
        assert x2[m, m] == pytest.approx(2 * m + 1)
    for m in range(4):
        assert x2[m, m + 2] == pytest.approx(np.sqrt((m + 1) * (m + 2)))


def test_quadrature_squared_dim1():
    # in a one-state space the ladder operator is zero, so the product is too
    assert np.array_equal(build_quadrature_squared(1).entries, np.array([[0.0]]))


def test_quadrature_squared_exactly_symmetric_and_banded():
    for dim in (1, 2, 3, 7, 16, 33):
        x2 = build_quadrature_squared(dim).entries
        assert np.max(np.abs(x2 - x2.T)) == 0.0
        for offset in range(dim):
            band = np.diagonal(x2, offset)
            if offset in (0, 2):
                continue
            assert np.all(band == 0.0), f"dim={dim} offset={offset}"


def test_quadrature_squared_matches_product_oracle():
    for dim in (2, 5, 12):
        a = build_annihilation(dim).entries
        x = a + a.T
        assert np.array_equal(build_quadrature_squared(dim).entries, x @ x)


def test_parity_dim1():
    p = build_parity(1)
    assert p.dim == 2
    assert np.array_equal(p.entries, np.diag([1.0, -1.0]))


def test_parity_involution_and_spectrum():
    for dim_fock in (1, 2, 5, 16):
        p = build_parity(dim_fock).entries
        assert np.max(np.abs(p @ p - np.eye(2 * dim_fock))) == 0.0
        diag = np.diag(p)
        assert set(np.unique(diag)) <= {-1.0, 1.0}
        assert np.array_equal(p, np.diag(diag))  # parity is diagonal


def test_parity_alternates_with_spin_then_fock():
    # index = 2 m + s; entry (-1)^(m+s)
    p = np.diag(build_parity(3).entries)
    assert np.array_equal(p, [1.0, -1.0, -1.0, 1.0, 1.0, -1.0])


def test_zero_dimension_rejected():
    for build in (build_annihilation, build_number, build_quadrature_squared, build_parity):
        with pytest.raises(InvalidDimensionError):
            build(0)


def test_operator_entries_are_read_only():
    a = build_annihilation(3)
    with pytest.raises(ValueError):
        a.entries[0, 0] = 7.0


def test_truncated_operator_validates_shape():
    with pytest.raises(InvalidDimensionError):
        TruncatedOperator(dim=3, entries=np.zeros((2, 2)))
