import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpsm.clifford import (
    AlgebraError, DomainError, Multivector, Paravector, Signature, SignatureMismatch,
    blade_product, conjugate, geometric_product, gp, norm, paravector_inverse, reverse,
    scalar_part, sign_table,
)

SIG2 = Signature(0, 2)
SIG3 = Signature(1, 2)


def e(*idx, sig=SIG2):
    return Multivector.e(*idx, sig=sig)


def test_signature_validation():
    with pytest.raises(AlgebraError):
        Signature(0, 0)
    with pytest.raises(AlgebraError):
        Signature(-1, 2)
    with pytest.raises(AlgebraError):
        Signature(6, 7)
    assert Signature(2, 3).dim == 32


@pytest.mark.parametrize("a, b, expected", [
    (0b01, 0b10, (1, 0b11)),
    (0b01, 0b01, (-1, 0)),
    (0b11, 0b01, (1, 0b10)),
    (0b10, 0b01, (-1, 0b11)),
])
def test_blade_product_examples(a, b, expected):
    assert blade_product(a, b, SIG2) == expected


def test_sign_table_matches_blade_product():
    n = 4
    T = sign_table(n)
    for a in range(1 << n):
        for b in range(1 << n):
            assert T[a, b] == blade_product(a, b)[0]


def test_geometric_product_examples():
    assert (e(1) + e(2)) * (e(1) - e(2)) == -2 * e(1, 2)
    a = Multivector([1.0, 2.0, -3.0, 0.5], SIG2)
    assert a * 1.0 == a
    assert geometric_product(a, Multivector.scalar(1.0, SIG2)) == a
    assert e(1) * e(2) * e(1) == e(2)


def test_signature_mismatch():
    with pytest.raises(SignatureMismatch):
        e(1) * e(1, sig=SIG3)


@pytest.mark.parametrize("blade, expected", [
    ((), 1.0), ((1,), -1.0), ((1, 2), -1.0), ((1, 2, 3), 1.0)])
def test_conjugate_examples(blade, expected):
    x = e(*blade, sig=SIG3)
    assert conjugate(x) == expected * x


@pytest.mark.parametrize("blade, expected", [((1,), 1.0), ((1, 2), -1.0), ((1, 2, 3), -1.0)])
def test_reverse_examples(blade, expected):
    x = e(*blade, sig=SIG3)
    assert reverse(x) == expected * x


def test_scalar_part_and_norm_examples():
    assert scalar_part(3 + e(1)) == 3.0
    assert scalar_part(e(1, 2)) == 0.0
    assert norm(e(1, 2)) == 1.0
    assert np.isclose(norm(1 + e(1)), np.sqrt(2.0))
    assert norm(Multivector.zero(SIG2)) == 0.0


@pytest.mark.parametrize("x, expected", [
    ([2.0, 0, 0], [0.5, 0, 0]),
    ([0, 1.0, 0], [0, -1.0, 0]),
    ([1.0, 1.0, 0], [0.5, -0.5, 0]),
])
def test_paravector_inverse_examples(x, expected):
    inv = paravector_inverse(Paravector.from_point(x, SIG2))
    np.testing.assert_allclose(inv.coords(), expected, atol=1e-15)


def test_paravector_inverse_rejects_zero_and_bivectors():
    with pytest.raises(DomainError):
        paravector_inverse(Multivector.zero(SIG2))
    with pytest.raises(AlgebraError):
        paravector_inverse(e(1, 2))


@pytest.mark.parametrize("sig", [Signature(0, 1), Signature(0, 2), Signature(1, 2), Signature(2, 3)])
def test_generators_anticommute_exactly(sig):
    for i in range(1, sig.n + 1):
        assert e(i, i, sig=sig) == Multivector.scalar(-1.0, sig)
        for j in range(i + 1, sig.n + 1):
            assert e(i, j, sig=sig) + e(j, i, sig=sig) == Multivector.zero(sig)


coeffs = st.lists(st.floats(-10, 10, allow_nan=False), min_size=8, max_size=8)


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs, coeffs)
def test_associativity(a, b, c):
    A, B, C = (Multivector(v, SIG3) for v in (a, b, c))
    lhs = ((A * B) * C).coeffs
    rhs = (A * (B * C)).coeffs
    scale = 1.0 + norm(A) * norm(B) * norm(C)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(coeffs, coeffs)
def test_anti_automorphisms(a, b):
    A, B = Multivector(a, SIG3), Multivector(b, SIG3)
    scale = 1.0 + norm(A) * norm(B)
    assert np.max(np.abs((conjugate(A * B) - conjugate(B) * conjugate(A)).coeffs)) <= 1e-12 * scale
    assert np.max(np.abs((reverse(A * B) - reverse(B) * reverse(A)).coeffs)) <= 1e-12 * scale


paravectors = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=80, deadline=None)
@given(paravectors)
def test_paravector_norm_and_inverse(x):
    sig = Signature(1, 2)
    X = Multivector.from_point(x, sig)
    assert np.isclose(scalar_part(X * conjugate(X)), norm(X) ** 2, rtol=1e-12, atol=1e-12)
    if norm(X) > 1e-3:
        err = X * paravector_inverse(X) - 1.0
        assert norm(err) <= 1e-12


def test_gp_batches_match_single_products():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 8))
    B = rng.standard_normal((5, 8))
    batch = gp(A, B, 3)
    for k in range(5):
        np.testing.assert_allclose(batch[k], (Multivector(A[k], SIG3) * Multivector(B[k], SIG3)).coeffs,
                                   atol=1e-13)


def test_multivector_is_immutable():
    a = e(1)
    with pytest.raises(AttributeError):
        a.coeffs = None
    with pytest.raises(ValueError):
        a.coeffs[0] = 1.0
