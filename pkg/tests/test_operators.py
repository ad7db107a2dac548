import numpy as np
import pytest

from gpsm.clifford import Multivector, Signature, paravector_array
from gpsm.corpus import fueter_variable
from gpsm.fields import FieldFunction, constant_field
from gpsm.kernels import KernelParams, calE_array
from gpsm.operators import (
    FDScheme, SingularSetError, apply_D, apply_D_xp, apply_D_xq, apply_euler_q, apply_vartheta_bar,
    gpsm_residual, select_cr_variant, stem_cr_residual,
)
from gpsm.slices import StemFunction

SIG = Signature(1, 2)
PTS = np.array([[0.3, -0.2, 0.7, 0.4], [1.1, 0.5, -0.6, 0.9], [-0.4, 0.8, 0.2, -1.3]])


def scalar_field(sig, fn):
    def F(X):
        out = np.zeros((len(X), sig.dim))
        out[:, 0] = fn(X)
        return out
    return FieldFunction(F, sig)


def xq_field(sig):
    def F(X):
        P = np.zeros_like(X)
        P[:, sig.p + 1:] = X[:, sig.p + 1:]
        return paravector_array(P, sig.n)
    return FieldFunction(F, sig)


def test_fd_scheme_validation():
    with pytest.raises(ValueError):
        FDScheme(order=3)
    with pytest.raises(ValueError):
        FDScheme(step=-1.0)


@pytest.mark.parametrize("op", [apply_D, apply_euler_q, apply_vartheta_bar])
def test_constant_is_annihilated(op):
    c = constant_field(Multivector(np.arange(8.0), SIG), SIG)
    assert np.abs(op(c, PTS)).max() <= 1e-10


@pytest.mark.parametrize("i", [1, 2, 3])
def test_fueter_variables_are_monogenic(i):
    f = fueter_variable(i, SIG, check=False).f
    assert np.abs(apply_D(f, PTS)).max() <= 1e-8


def test_apply_D_of_x0_is_one():
    f = scalar_field(SIG, lambda X: X[:, 0])
    np.testing.assert_allclose(apply_D(f, PTS[0]).coeffs, np.eye(8)[0], atol=1e-9)


def test_D_splits_into_parts():
    f = FieldFunction(lambda X: np.sin(X @ np.arange(1.0, 5.0))[:, None] * np.arange(1.0, 9.0), SIG)
    np.testing.assert_array_equal(apply_D(f, PTS), apply_D_xp(f, PTS) + apply_D_xq(f, PTS))


def test_euler_examples():
    f = xq_field(SIG)
    expected = paravector_array(np.concatenate([0 * PTS[:, :2], PTS[:, 2:]], axis=1), SIG.n)
    np.testing.assert_allclose(apply_euler_q(f, PTS), expected, atol=1e-9)
    g = scalar_field(SIG, lambda X: np.sum(X[:, 2:] ** 2, axis=1))
    np.testing.assert_allclose(apply_euler_q(g, PTS)[:, 0], 2 * np.sum(PTS[:, 2:] ** 2, axis=1), atol=1e-8)


def test_vartheta_bar_of_xq_is_minus_one():
    out = apply_vartheta_bar(xq_field(SIG), PTS)
    np.testing.assert_allclose(out, -np.tile(np.eye(8)[0], (3, 1)), atol=1e-9)
    assert np.isclose(gpsm_residual(xq_field(SIG), PTS), 1.0, atol=1e-9)


def test_vartheta_bar_of_z_squared_vanishes():
    sig = Signature(0, 1)

    def F(X):
        return np.stack([X[:, 0] ** 2 - X[:, 1] ** 2, 2 * X[:, 0] * X[:, 1]], axis=1)

    f = FieldFunction(F, sig)
    X = np.array([[0.3, 0.5], [-1.0, 2.0], [0.2, -0.7]])
    assert np.abs(apply_vartheta_bar(f, X)).max() <= 1e-8


def test_vartheta_bar_singular_on_axis():
    with pytest.raises(SingularSetError):
        apply_vartheta_bar(xq_field(SIG), [0.1, 0.2, 0.0, 0.0])


def _stem(sig, f1, f2):
    def F1(Y):
        out = np.zeros((len(Y), sig.dim))
        out[:, 0] = f1(Y)
        return out

    def F2(Y):
        out = np.zeros((len(Y), sig.dim))
        out[:, 0] = f2(Y)
        return out
    return StemFunction(F1, F2, sig)


def test_stem_cr_linear_example():
    F = _stem(Signature(0, 1), lambda Y: Y[:, 0], lambda Y: Y[:, 1])
    for variant in ("holomorphic", "printed"):
        r1, r2 = stem_cr_residual(F, [0.4, 0.9], variant=variant)
        assert r1.norm() <= 1e-9 and r2.norm() <= 1e-9


def test_stem_cr_z_squared_disambiguates():
    F = _stem(Signature(0, 1), lambda Y: Y[:, 0] ** 2 - Y[:, 1] ** 2, lambda Y: 2 * Y[:, 0] * Y[:, 1])
    x0, r = 0.4, 0.9
    r1, r2 = stem_cr_residual(F, [x0, r], variant="holomorphic")
    assert r1.norm() <= 1e-8 and r2.norm() <= 1e-8
    _, p2 = stem_cr_residual(F, [x0, r], variant="printed")
    assert np.isclose(p2.coeffs[0], 4 * r, atol=1e-8)
    assert select_cr_variant() == "holomorphic"


def test_stem_cr_constant():
    F = _stem(Signature(0, 1), lambda Y: 0 * Y[:, 0] + 2.0, lambda Y: 0 * Y[:, 0])
    for variant in ("holomorphic", "printed"):
        r1, r2 = stem_cr_residual(F, [0.4, 0.9], variant=variant)
        assert r1.norm() == 0.0 and r2.norm() == 0.0


def test_operators_are_linear():
    rng = np.random.default_rng(0)
    A, B = rng.standard_normal((2, 8))
    f = FieldFunction(lambda X: np.cos(X[:, :1] * X[:, 2:3]) * A, SIG)
    g = FieldFunction(lambda X: np.exp(0.3 * X[:, 1:2] + X[:, 3:4]) * B, SIG)
    s = FDScheme(step=1e-3)
    lhs = apply_vartheta_bar(f + g.scaled(2.5), PTS, s)
    rhs = apply_vartheta_bar(f, PTS, s) + 2.5 * apply_vartheta_bar(g, PTS, s)
    assert np.abs(lhs - rhs).max() <= 1e-10 * (1 + np.abs(rhs).max())


@pytest.mark.parametrize("order", [2, 4])
def test_fd_order_observed(order):
    f = FieldFunction(lambda X: np.sin(X @ np.array([1.0, 0.5, -0.3, 0.7]))[:, None] * np.eye(8)[0], SIG)
    k = np.array([1.0, 0.5, -0.3, 0.7])
    exact_scalar = np.cos(PTS @ k)
    exact = np.zeros((3, 8))
    exact[:, 0] = exact_scalar * k[0]
    for i in range(1, 4):
        exact[:, 1 << (i - 1)] = exact_scalar * k[i]
    errs = [np.abs(apply_D(f, PTS, FDScheme(order, h)) - exact).max() for h in (0.1, 0.05)]
    assert abs(np.log2(errs[0] / errs[1]) - order) <= 0.3


def test_calE_residual_is_second_order():
    sig = Signature(0, 2)
    params = KernelParams(sig)
    y = np.array([0.0, 1.0])
    f = FieldFunction(lambda X: calE_array(y, params.eta.vec, X, sig), sig)
    X = np.array([[1.5, 1.2, 0.8], [-1.0, 0.3, 1.7]])
    res = [gpsm_residual(f, X, FDScheme(2, h)) for h in (4e-3, 2e-3)]
    assert abs(np.log2(res[0] / res[1]) - 2.0) <= 0.3
