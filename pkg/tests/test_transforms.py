import numpy as np
import pytest

from gpsm.clifford import Multivector, Signature, gp
from gpsm.complex_oracle import from_complex, sokhotski, to_complex
from gpsm.corpus import bump, gaussian, holomorphic_reduction, shifted_kernel
from gpsm.fields import constant_field
from gpsm.kernels import KernelParams, SliceEmbedding
from gpsm.quadrature import VolumeRes, boundary_rule, fibered_boundary_rule
from gpsm.slices import SliceDomain, embed_vector_q, stem_to_points
from gpsm.transforms import (
    ApproachPath, BoundaryData, LtParams, PompeiuRes, TeodorescuRes, cauchy_boundary_integral,
    cauchy_pompeiu, exterior_cauchy, field_orbit_violation, plemelj_limits, teodorescu, teodorescu_detailed,
    teodorescu_monogenicity_check, teodorescu_slice, teodorescu_stem,
)

SIG1 = Signature(0, 1)
DISC = SliceDomain.ball([0.0, 0.0], 1.0)
FAST = TeodorescuRes(VolumeRes(32, 16, 4), n_eta=8, levels=3)


def test_lt_params():
    lt = LtParams(4.0, q=2)
    assert np.isclose(lt.s, 4 / 3)
    assert lt.existence_ok and lt.estimate_ok
    assert not LtParams(2.0, q=2).existence_ok
    assert not LtParams(3.0, q=2, p=2).estimate_ok
    with pytest.raises(ValueError):
        LtParams(1.0, q=2)


def test_approach_path_validation():
    assert np.allclose(ApproachPath((1.0, 0.0), 0.1, 3).distances, [0.1, 0.05, 0.025])
    with pytest.raises(ValueError):
        ApproachPath((1.0, 0.0), n_terms=2)
    with pytest.raises(ValueError):
        ApproachPath((1.0, 0.0), ratio=1.5)


def test_boundary_data_needs_normals():
    from gpsm.quadrature import slice_volume_rule
    f = constant_field(1.0, SIG1)
    with pytest.raises(ValueError):
        BoundaryData(f, slice_volume_rule(DISC), SliceEmbedding.first(1))


@pytest.mark.parametrize("kind", ["z^k", "1/(z-c)"])
def test_cauchy_reproduces_holomorphic_values(kind):
    t = holomorphic_reduction(kind, SIG1, c=1.5 + 0.5j, check=False)
    params = KernelParams(SIG1)
    bd = BoundaryData(t.f, fibered_boundary_rule(DISC, SIG1, n_bdry=32), params.eta)
    rng = np.random.default_rng(0)
    for x in DISC.sample(rng, 5, margin=0.3, upper=False):
        got = cauchy_boundary_integral(bd, x, params)
        np.testing.assert_allclose(got.coeffs, t.f(x), atol=1e-8)


def test_cauchy_slice_kernels_agree_on_slice():
    sig = Signature(1, 2)
    params = KernelParams(sig)
    D = SliceDomain.ball([0.0, 0.0, 2.0], 1.0)
    t = shifted_kernel(np.array([0.0, 0.0, 4.5]), params, check=False)
    bd = BoundaryData(t.f, boundary_rule(D, n=16), params.eta)
    x = stem_to_points(np.array([0.1, -0.2, 2.1]), params.eta.vec, sig)
    a = cauchy_boundary_integral(bd, x, params, kernel="calE")
    b = cauchy_boundary_integral(bd, x, params, kernel="E")
    np.testing.assert_allclose(a.coeffs, t.f(x), atol=1e-8)
    np.testing.assert_allclose(b.coeffs, t.f(x), atol=1e-8)


def test_exterior_constant_field():
    params = KernelParams(SIG1)
    c = Multivector([2.0, -1.0], SIG1)
    bd = BoundaryData(constant_field(c, SIG1), boundary_rule(DISC, n=32), params.eta)
    inside = exterior_cauchy(bd, [0.2, 0.3], c, params)
    outside = exterior_cauchy(bd, [1.8, -0.4], c, params)
    np.testing.assert_allclose(inside.coeffs, c.coeffs, atol=1e-10)
    np.testing.assert_allclose(outside.coeffs, 0.0, atol=1e-10)
    with pytest.raises(ValueError):
        exterior_cauchy(bd, [1.0, 0.0], c, params)


def test_plemelj_matches_sokhotski():
    t = holomorphic_reduction("z^k", SIG1, check=False)
    params = KernelParams(SIG1)
    bd = BoundaryData(t.f, boundary_rule(DISC, n=32), params.eta, DISC)
    z0 = np.exp(0.7j)
    inner, outer, pv, info = plemelj_limits(bd, ApproachPath((z0.real, z0.imag)), params)
    ref = sokhotski(lambda z: z ** 2, z0)
    for got, want in zip((inner, outer, pv), ref):
        assert abs(to_complex(got.coeffs) - want) <= 1e-2 * abs(z0 ** 2)
    np.testing.assert_allclose((inner - outer).coeffs, from_complex(z0 ** 2), atol=1e-8)


def test_pompeiu_q1_gaussian():
    D = SliceDomain.ball([0.0, 0.0], 1.0)
    t = gaussian([0.1, 0.4], 0.5, 1.0, SIG1, 0.5, check=False)
    x = np.array([0.1, 0.2])
    res = PompeiuRes(32, FAST)
    recon, _, _ = cauchy_pompeiu(t.f, D, SliceEmbedding.first(1), x, res, analytic=True)
    assert np.linalg.norm(recon.coeffs - t.f(x)) <= 1e-3 * np.linalg.norm(t.f(x))
    with pytest.raises(ValueError):
        cauchy_pompeiu(t.f, D, SliceEmbedding.first(1), [2.0, 0.0], res)


def test_teodorescu_left_inverse_q1():
    t = bump([0.1, 0.5], 0.35, 1.0, SIG1, 0.5, check=False)
    vb = t.f.vartheta_bar
    for x in ([0.1, 0.5], [0.2, 0.4], [0.5, -0.3]):
        got, info = teodorescu_detailed(vb, DISC, np.array(x), res=FAST)
        assert info["converged"]
        np.testing.assert_allclose(got.coeffs, t.f(np.array(x)), atol=2e-3 * (1 + np.abs(t.f(np.array(x))).max()))


def test_teodorescu_slice_equals_completion_for_q1():
    t = bump([0.1, 0.5], 0.35, 1.0, SIG1, 0.5, check=False)
    x = np.array([0.15, 0.45])
    a = teodorescu(t.f, DISC, SIG1, x, rule=FAST)
    b = teodorescu_slice(t.f, DISC, SliceEmbedding.first(1), x, res=FAST)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-12)


def test_teodorescu_stem_matches_pointwise():
    sig = Signature(0, 2)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    t = bump([0.0, 2.0], 0.5, 1.0, sig, np.ones(4), check=False)
    res = TeodorescuRes(VolumeRes(16, 8, 4), n_eta=8, levels=0)
    xs = np.array([0.2, 2.1])
    G1, G2 = teodorescu_stem(t.f, D, xs[None, :], res=res)
    w = np.array([0.6, 0.8])
    direct = teodorescu(t.f, D, sig, np.r_[xs[0], xs[1] * w], rule=res)
    stem_val = G1[0] + gp(embed_vector_q(w, sig), G2[0], sig.n)
    np.testing.assert_allclose(stem_val, direct.coeffs, atol=1e-10)


def test_monogenicity_check_rejects_inside_points():
    sig = Signature(0, 2)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    t = bump([0.0, 2.0], 0.5, 1.0, sig, check=False)
    with pytest.raises(ValueError):
        teodorescu_monogenicity_check(t.f, D, sig, [[0.0, 2.0, 0.0]])


def test_field_orbit_violation_separates_controls():
    from gpsm.corpus import non_slice_field
    sig = Signature(0, 2)
    pts = np.array([[0.1, 1.5], [0.3, 2.2], [-0.2, 1.8]])
    good = bump([0.0, 2.0], 0.9, 1.0, sig, 0.3, check=False).f
    assert field_orbit_violation(good, pts, sig) <= 1e-12
    assert field_orbit_violation(non_slice_field(sig, check=False).f, pts, sig) >= 1e-2
