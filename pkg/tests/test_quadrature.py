import numpy as np
import pytest

from gpsm.clifford import Signature
from gpsm.quadrature import (
    QuadRule, VolumeRes, boundary_rule, cauchy_ratios, centered_volume_rule, fibered_boundary_rule,
    fibered_volume_rule, gauss_legendre, hemisphere_rule, richardson, singular_volume_integral, sphere_rule,
    slice_volume_rule,
)
from gpsm.slices import SliceDomain


def test_gauss_legendre_examples():
    r1 = gauss_legendre(1)
    np.testing.assert_allclose(r1.nodes[:, 0], [0.0])
    np.testing.assert_allclose(r1.weights, [2.0])
    r2 = gauss_legendre(2)
    np.testing.assert_allclose(np.sort(r2.nodes[:, 0]), [-1 / np.sqrt(3), 1 / np.sqrt(3)])
    np.testing.assert_allclose(r2.weights, [1.0, 1.0])
    assert np.isclose(r2.integrate_fn(lambda x: x[:, 0] ** 2), 2 / 3, rtol=1e-15)
    with pytest.raises(ValueError):
        gauss_legendre(0)


@pytest.mark.parametrize("m, n, expected", [(1, 1, 2.0), (2, 16, 2 * np.pi), (3, 8, 4 * np.pi),
                                            (4, 6, 2 * np.pi ** 2)])
def test_sphere_rule_totals(m, n, expected):
    rule = sphere_rule(m, n)
    assert np.isclose(rule.total, expected, rtol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(rule.nodes, axis=1), 1.0, rtol=1e-14)


def test_sphere_rule_second_moment():
    rule = sphere_rule(3, 8)
    assert np.isclose(rule.integrate_fn(lambda u: u[:, 2] ** 2), 4 * np.pi / 3, rtol=1e-12)


@pytest.mark.parametrize("q, n", [(1, 1), (2, 16), (3, 8)])
def test_hemisphere_even_integrands(q, n):
    h, full = hemisphere_rule(q, n), sphere_rule(q, n)
    g = lambda u: 1.0 + u[:, 0] ** 2
    assert np.isclose(2 * h.integrate_fn(g), full.integrate_fn(g), rtol=1e-13)
    assert np.all(h.nodes[:, -1] >= -1e-14)


@pytest.mark.parametrize("D, length", [
    (SliceDomain.ball([0.0, 2.0], 1.5), 2 * 2 * np.pi * 1.5),
    (SliceDomain.box([0.0, 2.0], [1.0, 0.5]), 2 * 6.0),
])
def test_boundary_rule_planar(D, length):
    rule = boundary_rule(D, n=32)
    assert np.isclose(rule.total, length, rtol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(rule.normals, axis=1), 1.0, rtol=1e-14)
    assert np.abs(rule.integrate(rule.normals)).max() <= 1e-10


@pytest.mark.parametrize("D", [SliceDomain.ball([0.0, 0.0, 2.0], 1.0),
                               SliceDomain.box([0.0, 0.0, 2.0], [1.0, 0.5, 0.5])])
def test_boundary_closure_3d(D):
    rule = boundary_rule(D, n=16)
    assert np.abs(rule.integrate(rule.normals)).max() <= 1e-10


def test_slice_volume_examples():
    square = SliceDomain.box([0.0, 0.0], [0.5, 0.5])
    assert np.isclose(slice_volume_rule(square).total, 1.0, rtol=1e-12)
    disc = SliceDomain.ball([0.0, 0.0], 1.0)
    assert np.isclose(slice_volume_rule(disc).total, np.pi, rtol=1e-12)
    big = SliceDomain.box([0.0, 0.0], [1.0, 1.0])
    assert np.isclose(slice_volume_rule(big).integrate_fn(lambda Y: Y[:, 0] ** 2), 4 / 3 * 2 / 2, rtol=1e-12)


def test_fibered_volume_annulus_cylinder():
    sig = Signature(0, 2)
    D = SliceDomain.box([0.0, 1.5], [1.0, 0.5])
    rule = fibered_volume_rule(D, sig, n_eta=16, n_slice=8)
    assert np.isclose(rule.total, 2 * np.pi * (4 - 1), rtol=1e-12)


@pytest.mark.parametrize("q, expected", [(2, 4 * np.pi ** 2), (3, 4 * np.pi * np.pi * (4 + 0.25))])
def test_fibered_volume_ball(q, expected):
    sig = Signature(0, q)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    rule = fibered_volume_rule(D, sig, n_eta=8, n_slice=24)
    assert np.isclose(rule.total, expected, rtol=1e-6)


def test_fibered_integrand_off_domain_is_zero():
    sig = Signature(0, 2)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    rule = fibered_volume_rule(D, sig, n_eta=8, n_slice=12)
    X = rule.points(sig)
    vals = np.where(X[..., 0] > 5.0, 1.0, 0.0)
    assert rule.integrate(vals) == 0.0


def _disc_cartesian(g, x0, rho, n):
    """Integral of g(x0, ., .) over the disc |(x1, x2)| < rho in Cartesian form.

    ``x1 = rho sin(t)`` keeps the chord endpoints smooth in ``t``.
    """
    t, wt = np.polynomial.legendre.leggauss(n)
    t, wt = 0.5 * np.pi * t, 0.5 * np.pi * wt
    u, wu = np.polynomial.legendre.leggauss(n)
    half = rho * np.cos(t)
    x1 = np.repeat(rho * np.sin(t), n)
    x2 = (half[:, None] * u[None, :]).ravel()
    w = (wt * rho * np.cos(t) * half)[:, None] * wu[None, :]
    return np.sum(w.ravel() * g(np.stack([np.full_like(x1, x0), x1, x2], axis=-1)))


def _torus_direct(g, n=48):
    """Cartesian rule over the solid torus with R=2, r=1 in R^3."""
    phi, wphi = np.polynomial.legendre.leggauss(n)
    phi, wphi = 0.5 * np.pi * phi, 0.5 * np.pi * wphi
    total = 0.0
    for f, w in zip(phi, wphi):
        x0, s = np.sin(f), np.cos(f)
        ring = _disc_cartesian(g, x0, 2 + s, n) - _disc_cartesian(g, x0, 2 - s, n)
        total += w * np.cos(f) * ring
    return total


@pytest.mark.parametrize("g", [
    lambda X: 1.0 + 0 * X[..., 0],
    lambda X: X[..., 0] ** 2 + X[..., 1] ** 2,
    lambda X: np.exp(-X[..., 2] ** 2 / 4),
])
def test_fibered_matches_direct_cartesian(g):
    sig = Signature(0, 2)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    rule = fibered_volume_rule(D, sig, n_eta=32, n_slice=24)
    assert np.isclose(rule.integrate(g(rule.points(sig))), _torus_direct(g), rtol=1e-5)


def test_fibered_boundary_area():
    sig = Signature(0, 2)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    rule = fibered_boundary_rule(D, sig, n_eta=16, n_bdry=32)
    assert np.isclose(rule.total, 4 * np.pi ** 2 * 2 * 1, rtol=1e-10)


def test_richardson_removes_linear_term():
    vals = [1.0 + 0.3 * h for h in (0.1, 0.05, 0.025)]
    _, best = richardson(vals, exponents=[1.0])
    assert np.isclose(best, 1.0, atol=1e-14)


def test_cauchy_ratios():
    np.testing.assert_allclose(cauchy_ratios([1.0, 0.5, 0.25, 0.125]), [0.5, 0.5])
    np.testing.assert_array_equal(cauchy_ratios([1.0, 1.0, 1.0]), [0.0])


def test_singular_integral_bounded_off_domain_apex():
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    res = singular_volume_integral(lambda Y: np.cos(Y[:, 0]) + Y[:, 1] ** 2, D, [5.0, 5.0])
    assert np.ptp(res.values) == 0.0
    ref = slice_volume_rule(D).integrate_fn(lambda Y: np.cos(Y[:, 0]) + Y[:, 1] ** 2)
    assert np.isclose(res.value, ref, rtol=1e-8)


def test_singular_integral_bounded_inside():
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    g = lambda Y: np.cos(Y[:, 0]) + Y[:, 1] ** 2
    res = singular_volume_integral(g, D, [0.2, 2.1])
    ref = centered_volume_rule(D, [0.2, 2.1]).integrate_fn(g)
    assert np.isclose(res.extrapolated, ref, rtol=1e-8)


def test_singular_integral_zero_integrand():
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    res = singular_volume_integral(lambda Y: 0 * Y[:, 0], D, [0.0, 2.0])
    assert res.extrapolated == 0.0


@pytest.mark.parametrize("p", [0, 1])
def test_singular_integral_radial_oracle(p):
    c = np.zeros(p + 2)
    c[-1] = 2.0
    D = SliceDomain.ball(c, 1.0)
    g = lambda Y: np.linalg.norm(Y - c, axis=1) ** -(p + 1)
    res = singular_volume_integral(g, D, c, res=VolumeRes(32, 16, 4), max_ratio=0.5 + 1e-6)
    # the excluded mass is linear in delta, so the Cauchy ratio is exactly 1/2
    np.testing.assert_allclose(res.ratios, 0.5, atol=1e-6)
    assert res.converged
    upper = 2 * np.pi if p == 0 else 4 * np.pi
    mirror = SliceDomain([pr for pr in D.pieces if pr.center[-1] < 0])
    lower = slice_volume_rule(mirror).integrate_fn(g)
    assert np.isclose(res.extrapolated, upper + lower, rtol=1e-6)


def test_concat_keeps_normals():
    a = QuadRule(np.zeros((2, 2)), np.ones(2), np.ones((2, 2)))
    b = QuadRule(np.ones((1, 2)), np.ones(1), np.ones((1, 2)))
    assert QuadRule.concat([a, b]).normals.shape == (3, 2)
