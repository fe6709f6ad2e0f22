import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octspec import cdnum
from octspec.cdnum import CdNumber, basis_mul, kappa

from conftest import cd_numbers, nonzero_cd_numbers


@pytest.mark.parametrize(
    "j, k, v, expected",
    [
        (0, 5, 3, (1, 5)),
        (1, 1, 2, (-1, 0)),
        (1, 2, 2, (1, 3)),
        (2, 1, 2, (-1, 3)),
        (3, 3, 3, (-1, 0)),
    ],
)
def test_basis_mul_table_entries(j, k, v, expected):
    assert tuple(basis_mul(j, k, v)) == expected


def test_basis_mul_rejects_out_of_range():
    with pytest.raises(IndexError):
        basis_mul(4, 0, 2)
    with pytest.raises(IndexError):
        basis_mul(0, -1, 2)


def test_quaternion_table_is_hamilton():
    # i j = k, j k = i, k i = j with i_1, i_2, i_3 = i, j, k
    assert tuple(basis_mul(1, 2, 2)) == (1, 3)
    assert tuple(basis_mul(2, 3, 2)) == (1, 1)
    assert tuple(basis_mul(3, 1, 2)) == (1, 2)


@pytest.mark.parametrize("j, k, expected", [(0, 3, 0), (2, 2, 0), (1, 2, 1), (5, 0, 0), (7, 3, 1)])
def test_kappa_values(j, k, expected):
    assert kappa(j, k) == expected


@pytest.mark.parametrize("v", [1, 2, 3, 4, 5])
def test_generators_commute_or_anticommute(v):
    assert cdnum.kappa_violations(v) == []


def test_doubling_matches_pair_formula_at_every_level():
    # (a, b)(c, d) = (ac - conj(d) b, d a + b conj(c)), checked on random pairs
    rng = np.random.default_rng(7)
    for v in range(1, 5):
        h = 1 << (v - 1)
        a, b, c, d = (CdNumber(rng.standard_normal(h)) for _ in range(4))
        x = CdNumber(np.concatenate([a.coeffs, b.coeffs]))
        y = CdNumber(np.concatenate([c.coeffs, d.coeffs]))
        first = a * c - d.conj() * b
        second = d * a + b * c.conj()
        want = np.concatenate([first.coeffs, second.coeffs])
        assert np.allclose((x * y).coeffs, want, atol=1e-12)


def test_structure_tables_are_read_only():
    sign, index = cdnum.structure_tables(3)
    with pytest.raises(ValueError):
        sign[0, 0] = 5


def test_mul_examples():
    one, i1 = CdNumber.real(1.0, 2), CdNumber.basis(1, 2)
    assert cdnum.mul(one + i1, one - i1) == CdNumber.real(2.0, 2)
    assert cdnum.mul(CdNumber.basis(1, 2), CdNumber.basis(2, 2)) == CdNumber.basis(3, 2)


def test_mul_level_mismatch():
    with pytest.raises(ValueError):
        cdnum.mul(CdNumber.basis(1, 2), CdNumber.basis(1, 3))


def test_conjugate_norm_inverse_examples():
    i2 = CdNumber.basis(2, 3)
    assert cdnum.conjugate(i2) == -i2
    q = CdNumber([1.0, 1.0, 1.0, 1.0])
    assert cdnum.norm(q) == 2.0
    assert cdnum.inverse(CdNumber.basis(1, 2, 2.0)).close_to(CdNumber.basis(1, 2, -0.5))
    assert cdnum.real_part(q) == 1.0


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        cdnum.inverse(CdNumber.zero(3))


def test_random_octonion_inverse(rng):
    for _ in range(50):
        a = CdNumber(rng.standard_normal(8))
        assert (a * a.inverse()).close_to(CdNumber.real(1.0, 3), 1e-12)


def test_zero_divisor_at_sixteen_dimensions():
    a, b = cdnum.find_zero_divisor(4)
    assert a.norm() * b.norm() > 0
    assert np.all((a * b).coeffs == 0.0)
    # both factors are two-term sums of generators with unit coefficients
    for z in (a, b):
        nz = np.flatnonzero(z.coeffs)
        assert nz.size == 2 and set(np.abs(z.coeffs[nz])) == {1.0}


def test_zero_divisor_rejected_for_division_algebras():
    with pytest.raises(ValueError):
        cdnum.find_zero_divisor(3)


def test_zero_divisor_factor_still_has_inverse():
    a, _ = cdnum.find_zero_divisor(4)
    # a conj(a) = |a|^2 holds at every level, so conj(a)/|a|^2 is a two-sided inverse
    inv = a.inverse()
    assert (a * inv).close_to(CdNumber.real(1.0, 4), 1e-12)


def test_json_round_trip():
    z = CdNumber([0.1, -2.5, 1e-17, 3.0])
    assert CdNumber.from_json(z.to_json()) == z


@given(cd_numbers(3), cd_numbers(3))
def test_octonion_norm_is_multiplicative(a, b):
    assert math.isclose((a * b).norm(), a.norm() * b.norm(), rel_tol=1e-12, abs_tol=1e-9)


@given(cd_numbers(3), cd_numbers(3))
def test_octonion_alternativity(a, b):
    assert ((a * a) * b).close_to(a * (a * b), 1e-9)
    assert ((a * b) * b).close_to(a * (b * b), 1e-9)


@given(cd_numbers(2), cd_numbers(2), cd_numbers(2))
def test_quaternion_associativity(a, b, c):
    assert ((a * b) * c).close_to(a * (b * c), 1e-9)


@given(st.integers(1, 4).flatmap(lambda v: st.tuples(cd_numbers(v), cd_numbers(v))))
def test_conjugation_reverses_products(ab):
    a, b = ab
    assert (a * b).conj().close_to(b.conj() * a.conj(), 1e-9)


@given(st.integers(1, 5).flatmap(cd_numbers))
def test_norm_squared_is_real_part_of_a_conj_a(a):
    assert math.isclose(a.norm() ** 2, (a * a.conj()).re, rel_tol=1e-12, abs_tol=1e-12)
    assert (a * a.conj()).is_real(1e-9)


@given(nonzero_cd_numbers(3))
def test_inverse_both_sides(a):
    one = CdNumber.real(1.0, 3)
    assert (a * a.inverse()).close_to(one, 1e-9)
    assert (a.inverse() * a).close_to(one, 1e-9)


@pytest.mark.parametrize("v", [2, 3])
def test_identity_residuals_small_where_expected(v):
    r = cdnum.identity_residuals(v, 300)
    assert r["left_alternativity"] <= 1e-12
    assert r["trace_associativity"] <= 1e-12
    if v == 2:
        assert r["associativity"] <= 1e-12
    else:
        assert r["associativity"] > 1e-3


def test_sedenions_lose_alternativity():
    r = cdnum.identity_residuals(4, 200)
    assert r["left_alternativity"] > 1e-3
    assert r["flexibility"] <= 1e-12


def test_left_and_right_matrices_agree_with_product(rng):
    for v in (2, 3, 4):
        a, b = rng.standard_normal((2, 1 << v))
        prod = (CdNumber(a) * CdNumber(b)).coeffs
        assert np.allclose(cdnum.left_matrix(a, v) @ b, prod)
        assert np.allclose(cdnum.right_matrix(b, v) @ a, prod)


def test_every_generator_pair_is_signed_generator():
    for v in (2, 3):
        n = 1 << v
        for j, k in itertools.product(range(n), repeat=2):
            p = basis_mul(j, k, v)
            assert p.sign in (1, -1) and 0 <= p.index < n
