import numpy as np
import pytest

from gpsm.clifford import Signature
from gpsm.corpus import (
    CorpusError, TaggedFunction, build_corpus, bump, fueter_variable, gaussian, holomorphic_reduction,
    non_slice_field, random_bumps, representation_extension, shifted_kernel, tag_checks, verify,
)
from gpsm.kernels import KernelParams, SliceEmbedding
from gpsm.operators import FDScheme, apply_vartheta_bar
from gpsm.slices import SliceDomain


@pytest.mark.parametrize("sig, D", [
    (Signature(0, 1), SliceDomain.ball([0.0, 0.0], 1.0)),
    (Signature(0, 2), SliceDomain.ball([0.0, 2.0], 1.0)),
    (Signature(1, 2), SliceDomain.ball([0.0, 0.0, 2.0], 1.0)),
])
def test_corpus_entries_pass_their_tags(sig, D):
    corpus = build_corpus(sig, D)
    assert corpus
    for name, t in corpus.items():
        for tag, (ok, measured) in tag_checks(t).items():
            assert ok, (name, tag, measured)


def test_unknown_tag_rejected():
    f = fueter_variable(1, Signature(1, 1), check=False).f
    with pytest.raises(CorpusError):
        TaggedFunction(f, {"analytic"})


def test_mislabelled_function_fails_verification():
    f = non_slice_field(Signature(0, 2)).f
    with pytest.raises(CorpusError):
        verify(TaggedFunction(f, {"slice-induced"}))


def test_bump_support_and_domain_checks():
    sig = Signature(0, 2)
    with pytest.raises(CorpusError):
        bump([0.0, 0.2], 0.5, 1.0, sig)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    with pytest.raises(CorpusError):
        bump([0.0, 2.8], 0.5, 1.0, sig, domain=D)
    t = bump([0.0, 2.0], 0.4, 1.0, sig, 0.5, D)
    assert "compact-support" in t.tags
    assert np.all(t.f(np.array([[0.0, 2.5, 0.0], [0.0, 0.0, 1.5]])) == 0.0)


@pytest.mark.parametrize("maker", [
    lambda sig: bump(np.r_[np.zeros(sig.p + 1), 2.0], 0.5, np.arange(sig.dim) + 1.0, sig, 0.7, check=False),
    lambda sig: gaussian(np.r_[np.zeros(sig.p + 1), 2.0], 0.7, 1.0, sig, np.ones(sig.dim), check=False),
])
@pytest.mark.parametrize("sig", [Signature(0, 2), Signature(1, 2)])
def test_analytic_vartheta_bar_matches_fd(maker, sig):
    t = maker(sig)
    rng = np.random.default_rng(2)
    X = np.concatenate([rng.uniform(-0.3, 0.3, (6, sig.p + 1)), rng.uniform(1.0, 1.5, (6, sig.q))], axis=1)
    fd = apply_vartheta_bar(t.f, X, FDScheme(order=4))
    np.testing.assert_allclose(t.f.vartheta_bar(X), fd, atol=1e-7)


def test_random_bumps_fit_domain():
    sig = Signature(0, 2)
    D = SliceDomain.ball([0.0, 2.0], 1.0)
    fs = random_bumps(np.random.default_rng(0), 5, D, sig)
    assert len(fs) == 5
    for f in fs:
        pr = f.support.pieces[0]
        assert D.contains(pr.center) and -D.signed_distance(pr.center) >= pr.radius
        assert f.support.pieces[0].radius <= 0.5


@pytest.mark.parametrize("sig", [Signature(0, 2), Signature(1, 2)])
def test_shifted_kernel_is_gpsm(sig):
    c = np.r_[np.zeros(sig.p + 1), 4.0]
    t = shifted_kernel(c, KernelParams(sig))
    assert "gpsm" in t.tags and "slice-induced" in t.tags


def test_representation_extension_of_slice_monogenic():
    sig = Signature(1, 2)
    eta = SliceEmbedding.first(2)
    ker = shifted_kernel(np.array([0.0, 0.0, 4.0]), KernelParams(sig, eta), check=False)
    from gpsm.slices import stem_to_points
    g = lambda Y: ker.f(stem_to_points(Y, eta.vec, sig))
    D = SliceDomain.ball([0.0, 0.0, 1.5], 0.5)
    t = representation_extension(g, eta, sig, domain=D)
    assert tag_checks(t)["gpsm"][0]


@pytest.mark.parametrize("kind", ["z^k", "1/(z-c)", "exp"])
def test_holomorphic_reduction(kind):
    t = holomorphic_reduction(kind, Signature(0, 1), domain=SliceDomain.ball([0.0, 0.0], 0.2) if kind != "1/(z-c)"
                              else SliceDomain.ball([-2.0, 0.0], 0.5))
    assert t.analytic_derivatives is not None
    with pytest.raises(CorpusError):
        holomorphic_reduction(kind, Signature(0, 2))


def test_negative_control_needs_q2():
    with pytest.raises(CorpusError):
        non_slice_field(Signature(0, 1))
    ok, v = tag_checks(non_slice_field(Signature(0, 2)))["negative-control"]
    assert ok and v >= 1e-2
