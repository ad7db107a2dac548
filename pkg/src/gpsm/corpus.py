"""Test functions with machine-checked membership tags."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import Multivector, Signature, gp, paravector_array
from .complex_oracle import from_complex
from .fields import FieldFunction
from .kernels import KernelParams, SliceEmbedding, E_stem_coeffs, stem_paravector
from .operators import FDScheme, apply_D, gpsm_residual
from .slices import (SliceDomain, StemFunction, completion_contains_array, embed_vector_q,
                     random_unit_vectors, split_array, stem_to_points)

TAGS = ("gpsm", "monogenic", "slice-induced", "compact-support", "holomorphic-reduction",
        "negative-control")

GPSM_TOL = 1e-6
ORBIT_TOL = 1e-10
NEGATIVE_MIN = 1e-2


class CorpusError(ValueError):
    """A constructor precondition or a tag check failed."""


@dataclass(frozen=True)
class TaggedFunction:
    f: FieldFunction
    tags: frozenset
    analytic_derivatives: Optional[Callable] = None
    domain: Optional[SliceDomain] = None

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))
        unknown = set(self.tags) - set(TAGS)
        if unknown:
            raise CorpusError(f"unknown tags {sorted(unknown)}")


def _mv(value, sig: Signature) -> np.ndarray:
    if isinstance(value, Multivector):
        return value.coeffs
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        out = np.zeros(sig.dim)
        out[0] = float(v)
        return out
    if v.shape != (sig.dim,):
        raise CorpusError(f"coefficient needs {sig.dim} entries")
    return v


# ---------------------------------------------------------------- scalar stem profiles


def scalar_stem_field(phi, dphi, psi, dpsi, a, b, sig: Signature, name: str, domain=None,
                      support=None) -> FieldFunction:
    """Induced field of the stem ``(phi a, psi b)`` with analytic ϑ̄ attached.

    ``phi`` (even in r) and ``psi`` (odd in r) map stem points ``(N, p+2)``
    to ``(N,)``; ``dphi``, ``dpsi`` return their gradients ``(N, p+2)``.
    ``a`` and ``b`` are constant multivectors multiplied on the right.
    """
    a = _mv(a, sig)
    b = _mv(b, sig)
    n = sig.n
    F = StemFunction(lambda Y: phi(Y)[:, None] * a, lambda Y: psi(Y)[:, None] * b, sig, domain)

    def vb1(Y):
        g, h = dphi(Y), dpsi(Y)
        return gp(_xp_paravector(g, sig), a, n) - h[:, -1][:, None] * b

    def vb2(Y):
        g, h = dphi(Y), dpsi(Y)
        c = h.copy()
        c[:, 1:] = -c[:, 1:]
        return gp(_xp_paravector(c, sig), b, n) + g[:, -1][:, None] * a

    vb = StemFunction(vb1, vb2, sig, domain).induced(f"vb({name})", support=support)
    return F.induced(name, vartheta_bar=vb, support=support)


def _xp_paravector(G, sig: Signature) -> np.ndarray:
    """``g_0 + sum_{i<=p} g_i e_i`` from the first ``p+1`` stem components."""
    X = np.zeros((len(G), sig.point_dim))
    X[:, :sig.p + 1] = G[:, :sig.p + 1]
    return paravector_array(X, sig.n)


def _mirror(c) -> np.ndarray:
    m = np.array(c, dtype=float)
    m[-1] = -m[-1]
    return m


def _bump_profile(c, R):
    c = np.asarray(c, dtype=float)

    def val(Y):
        u2 = np.sum((Y - c) ** 2, axis=1) / R ** 2
        out = np.zeros(len(Y))
        ins = u2 < 1
        out[ins] = np.exp(1.0 - 1.0 / (1.0 - u2[ins]))
        return out

    def grad(Y):
        d = Y - c
        u2 = np.sum(d * d, axis=1) / R ** 2
        out = np.zeros_like(Y)
        ins = u2 < 1
        b = np.exp(1.0 - 1.0 / (1.0 - u2[ins]))
        out[ins] = (-2.0 * b / (1.0 - u2[ins]) ** 2 / R ** 2)[:, None] * d[ins]
        return out

    return val, grad


def _gauss_profile(c, w):
    c = np.asarray(c, dtype=float)

    def val(Y):
        return np.exp(-np.sum((Y - c) ** 2, axis=1) / w ** 2)

    def grad(Y):
        return (-2.0 / w ** 2) * val(Y)[:, None] * (Y - c)

    return val, grad


def _symmetric_pair(profile, c, *args):
    v1, g1 = profile(c, *args)
    v2, g2 = profile(_mirror(c), *args)
    even = (lambda Y: v1(Y) + v2(Y), lambda Y: g1(Y) + g2(Y))
    odd = (lambda Y: v1(Y) - v2(Y), lambda Y: g1(Y) - g2(Y))
    return even, odd


def bump(center, radius: float, coeff, sig: Signature, odd_coeff=0.0,
         domain: Optional[SliceDomain] = None, check: bool = True) -> TaggedFunction:
    """Smooth compactly supported induced field around the stem point ``center``.

    The stem is ``F1 = coeff (b_c + b_c')`` and ``F2 = odd_coeff (b_c - b_c')``
    where ``b_c = exp(1 - 1/(1 - (d/radius)^2))`` with ``d`` the distance to
    ``center`` and ``c'`` the mirror of the center across ``r = 0``.
    """
    c = np.asarray(center, dtype=float)
    if c.shape != (sig.stem_dim,):
        raise CorpusError(f"center needs {sig.stem_dim} stem coordinates")
    if not radius > 0 or c[-1] - radius <= 0:
        raise CorpusError("support ball must keep clear of r = 0")
    support = SliceDomain.ball(c, radius)
    if domain is not None:
        probe = c + radius * np.eye(sig.stem_dim)
        probe = np.concatenate([probe, c - radius * np.eye(sig.stem_dim)])
        if not np.all(domain.contains(probe)) or not domain.contains(c):
            raise CorpusError("bump support is not contained in the domain")
    (ph, dph), (ps, dps) = _symmetric_pair(_bump_profile, c, float(radius))
    f = scalar_stem_field(ph, dph, ps, dps, coeff, odd_coeff, sig, "bump", None, support)
    t = TaggedFunction(f, {"compact-support", "slice-induced"}, f.vartheta_bar, domain or support)
    return verify(t) if check else t


def gaussian(center, width: float, coeff, sig: Signature, odd_coeff=0.0,
             domain: Optional[SliceDomain] = None, check: bool = True) -> TaggedFunction:
    """Smooth induced field built from Gaussians at ``center`` and its mirror."""
    c = np.asarray(center, dtype=float)
    (ph, dph), (ps, dps) = _symmetric_pair(_gauss_profile, c, float(width))
    f = scalar_stem_field(ph, dph, ps, dps, coeff, odd_coeff, sig, "gauss", domain)
    t = TaggedFunction(f, {"slice-induced"}, f.vartheta_bar, domain)
    return verify(t) if check else t


def random_bumps(rng: np.random.Generator, k: int, D: SliceDomain, sig: Signature,
                 radius_range=(0.2, 0.5)) -> list:
    """``k`` bumps with random supports inside D and random coefficients."""
    out = []
    while len(out) < k:
        R = rng.uniform(*radius_range)
        c = D.sample(rng, 1, margin=R + 1e-3)[0]
        if c[-1] - R <= 1e-3:
            continue
        a = rng.standard_normal(sig.dim)
        b = rng.standard_normal(sig.dim)
        out.append(bump(c, R, a, sig, b, D, check=False).f)
    return out


# ---------------------------------------------------------------- monogenic families


def fueter_variable(i: int, sig: Signature, check: bool = True, domain=None) -> TaggedFunction:
    """``z_i = x_i - x_0 e_i``; slice-induced and gpsm when ``i <= p``."""
    if not 1 <= i <= sig.n:
        raise CorpusError(f"generator index must lie in 1..{sig.n}")
    n = sig.n
    mask = 1 << (i - 1)

    def fn(X):
        out = np.zeros((X.shape[0], sig.dim))
        out[:, 0] = X[:, i]
        out[:, mask] = -X[:, 0]
        return out

    tags = {"monogenic"}
    stem = None
    if i <= sig.p:
        tags |= {"gpsm", "slice-induced"}
        stem = StemFunction(lambda Y: fn(np.concatenate([Y[:, :-1], np.zeros((len(Y), sig.q))], 1)),
                            lambda Y: np.zeros((len(Y), sig.dim)), sig)

    def derivs(X):
        """Partials ``(n+1, N, dim)``."""
        P = np.zeros((n + 1, X.shape[0], sig.dim))
        P[0, :, mask] = -1.0
        P[i, :, 0] = 1.0
        return P

    f = FieldFunction(fn, sig, stem=stem, name=f"z{i}")
    t = TaggedFunction(f, tags, derivs, domain)
    return verify(t) if check else t


def shifted_kernel(c, params: KernelParams, domain: Optional[SliceDomain] = None,
                   check: bool = True) -> TaggedFunction:
    """``x -> 𝓔_c(x)`` for the stem point ``c = (c_p, c_r)`` on the slice of ``params.eta``."""
    sig = params.sig
    c = np.asarray(c, dtype=float)
    if c.shape != (sig.stem_dim,):
        raise CorpusError(f"c needs {sig.stem_dim} stem coordinates")
    if domain is not None:
        pole_orbit = np.array([c, _mirror(c)])
        if np.any(domain.contains(pole_orbit, closed=True)):
            raise CorpusError("the orbit of c meets the closed domain")
    eta = params.eta.vec
    H = embed_vector_q(eta, sig)
    s = params.sign

    def E(Y):
        return stem_paravector(E_stem_coeffs(s * (c - Y), sig.p), eta, sig)

    def F1(Y):
        return 0.5 * (E(Y) + E(_mirror_rows(Y)))

    def F2(Y):
        return -0.5 * gp(np.broadcast_to(H, (len(Y), sig.dim)), E(Y) - E(_mirror_rows(Y)), sig.n)

    F = StemFunction(F1, F2, sig)
    zero = FieldFunction(lambda X: np.zeros((X.shape[0], sig.dim)), sig, name="0")
    f = F.induced("calE_c", vartheta_bar=zero)
    t = TaggedFunction(f, {"gpsm", "slice-induced"}, None, domain)
    return verify(t) if check else t


def _mirror_rows(Y):
    Z = np.array(Y, dtype=float)
    Z[:, -1] = -Z[:, -1]
    return Z


def restrict(f: FieldFunction, eta) -> Callable:
    """Restriction of ``f`` to the slice of ``eta`` as a function of stem points."""
    eta = np.asarray(eta, dtype=float)
    return lambda Y: f(stem_to_points(Y, eta, f.sig))


def slice_monogenic_residual(g, eta, sig: Signature, Y, s: FDScheme = FDScheme(order=4)) -> float:
    """Max ``|(D_xp + eta ∂_r~) g|`` at stem points ``Y`` by finite differences."""
    from .operators import _stencil_partials, _dirac_part
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    P = _stencil_partials(g, Y, s, range(sig.stem_dim))
    H = embed_vector_q(eta, sig)
    res = _dirac_part(P, range(sig.p + 1), sig.n) + gp(np.broadcast_to(H, P[-1].shape), P[-1], sig.n)
    return float(np.max(np.linalg.norm(res, axis=1)))


def representation_extension(g: Callable, eta: SliceEmbedding, sig: Signature,
                             domain: Optional[SliceDomain] = None, check_points=None,
                             tol: float = 1e-6, check: bool = True) -> TaggedFunction:
    """Extend a slice-monogenic ``g`` (stem points -> values) off the slice.

    ``f(x_p + r w) = ½(1 - w eta) g(x_p, r) + ½(1 + w eta) g(x_p, -r)``.
    """
    ev = eta.vec
    if check_points is None and domain is not None:
        check_points = domain.sample(np.random.default_rng(0), 16, margin=0.05)
    if check_points is not None and len(check_points):
        res = slice_monogenic_residual(g, ev, sig, check_points)
        scale = max(1.0, float(np.max(np.abs(g(np.atleast_2d(check_points))))))
        if res > tol * scale:
            raise CorpusError(f"g is not slice monogenic (residual {res:.3g})")
    H = embed_vector_q(ev, sig)

    def F1(Y):
        return 0.5 * (g(Y) + g(_mirror_rows(Y)))

    def F2(Y):
        return -0.5 * gp(np.broadcast_to(H, (len(Y), sig.dim)), g(Y) - g(_mirror_rows(Y)), sig.n)

    zero = FieldFunction(lambda X: np.zeros((X.shape[0], sig.dim)), sig, name="0")
    f = StemFunction(F1, F2, sig).induced("ext(g)", vartheta_bar=zero)
    t = TaggedFunction(f, {"gpsm", "slice-induced"}, None, domain)
    return verify(t) if check else t


HOLOMORPHIC_KINDS = ("z^k", "1/(z-c)", "exp")


def holomorphic_reduction(kind: str, sig: Signature, k: int = 2, c: complex = 0.3 + 0.2j,
                          domain=None, check: bool = True) -> TaggedFunction:
    """Holomorphic function of ``z = x0 + x1 e1`` at p=0, q=1."""
    if (sig.p, sig.q) != (0, 1):
        raise CorpusError("holomorphic reductions live at p=0, q=1")
    if kind == "z^k":
        h = lambda z: z ** k
    elif kind == "1/(z-c)":
        h = lambda z: 1.0 / (z - c)
    elif kind == "exp":
        h = np.exp
    else:
        raise CorpusError(f"kind must be one of {HOLOMORPHIC_KINDS}")
    fn = lambda X: from_complex(h(X[:, 0] + 1j * X[:, 1]))
    zero = FieldFunction(lambda X: np.zeros((X.shape[0], 2)), sig, name="0")
    f = FieldFunction(fn, sig, domain, vartheta_bar=zero, name=kind)
    t = TaggedFunction(f, {"holomorphic-reduction", "gpsm"}, None, domain)
    t = TaggedFunction(f, t.tags, h, domain)
    return verify(t) if check else t


def non_slice_field(sig: Signature, coeff=1.0, domain=None, check: bool = True) -> TaggedFunction:
    """Negative control ``x_{p+1}^2 coeff``: not of the form F1 + w F2 when q > 1."""
    if sig.q < 2:
        raise CorpusError("every field is orbit-consistent when q = 1")
    a = _mv(coeff, sig)
    f = FieldFunction(lambda X: (X[:, sig.p + 1] ** 2)[:, None] * a, sig, domain, name="x_{p+1}^2")
    t = TaggedFunction(f, {"negative-control"}, None, domain)
    return verify(t) if check else t


# ---------------------------------------------------------------- tag checks


def _sample_points(t: TaggedFunction, sig: Signature, rng, k: int = 12) -> np.ndarray:
    D = t.domain
    if D is None:
        D = SliceDomain.ball(np.r_[np.zeros(sig.p + 1), 2.0], 0.8)
    Y = D.sample(rng, k, margin=0.05)
    return stem_to_points(Y, random_unit_vectors(rng, k, sig.q), sig)


def orbit_violation(f: FieldFunction, X, sig: Signature, rng) -> float:
    from .slices import orbit_triple_violation
    xp, r, _ = split_array(X, sig)
    w = random_unit_vectors(rng, len(X), sig.q)
    w3 = random_unit_vectors(rng, len(X), sig.q)
    mism, mag = orbit_triple_violation(f, xp, r, w, w3, sig)
    return float(np.max(mism) / max(float(np.max(mag)), 1e-300))


def tag_checks(t: TaggedFunction, seed: int = 0) -> dict:
    """Run the machine check of each tag; returns ``{tag: (passed, measured)}``."""
    f, sig = t.f, t.f.sig
    rng = np.random.default_rng(seed)
    X = _sample_points(t, sig, rng)
    scale = max(1.0, float(np.max(np.linalg.norm(f(X), axis=1))))
    s4 = FDScheme(order=4)
    out = {}
    for tag in sorted(t.tags):
        if tag == "gpsm":
            v = gpsm_residual(f, X, s4) / scale
            out[tag] = (v <= GPSM_TOL, v)
        elif tag == "monogenic":
            v = float(np.max(np.linalg.norm(apply_D(f, X, s4), axis=1))) / scale
            out[tag] = (v <= GPSM_TOL, v)
        elif tag == "slice-induced":
            v = orbit_violation(f, X, sig, rng)
            out[tag] = (v <= ORBIT_TOL, v)
        elif tag == "negative-control":
            v = orbit_violation(f, X, sig, rng)
            out[tag] = (v >= NEGATIVE_MIN, v)
        elif tag == "compact-support":
            sup = f.support
            if sup is None:
                out[tag] = (False, np.inf)
                continue
            lo, hi = sup.bounding_box()
            Y = lo - 0.5 + (hi - lo + 1.0) * rng.random((64, sig.stem_dim))
            Y = Y[~sup.contains(Y, closed=True)]
            P = stem_to_points(Y, random_unit_vectors(rng, len(Y), sig.q), sig)
            v = float(np.max(np.abs(f(P)))) if len(P) else 0.0
            out[tag] = (v == 0.0, v)
        elif tag == "holomorphic-reduction":
            z = X[:, 0] + 1j * X[:, 1]
            v = float(np.max(np.abs(from_complex(t.analytic_derivatives(z)) - f(X)))) / scale
            out[tag] = (v <= 1e-14, v)
    return out


def verify(t: TaggedFunction, seed: int = 0) -> TaggedFunction:
    """Return ``t`` unchanged if every tag check passes, else raise CorpusError."""
    failed = {k: v[1] for k, v in tag_checks(t, seed).items() if not v[0]}
    if failed:
        raise CorpusError(f"tag checks failed for {t.f.name}: {failed}")
    return t


def build_corpus(sig: Signature, domain: SliceDomain, params: Optional[KernelParams] = None,
                 seed: int = 0) -> dict:
    """Standard corpus for a signature; every entry has passed its tag checks."""
    params = KernelParams(sig) if params is None else params
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounding_box()
    c_out = hi.copy()
    c_out[-1] = hi[-1] + 1.0
    entries = {"shifted_kernel": shifted_kernel(c_out, params, domain, check=False)}
    if sig.p >= 1:
        entries["fueter_1"] = fueter_variable(1, sig, check=False, domain=domain)
    Y = domain.sample(rng, 1, margin=0.3)[0]
    R = min(0.3, Y[-1] - 1e-2)
    entries["bump"] = bump(Y, R, rng.standard_normal(sig.dim), sig, rng.standard_normal(sig.dim),
                           domain, check=False)
    entries["gaussian"] = gaussian(Y, 0.5, rng.standard_normal(sig.dim), sig,
                                   rng.standard_normal(sig.dim), domain, check=False)
    if sig.q >= 2:
        entries["negative_control"] = non_slice_field(sig, domain=domain, check=False)
    if (sig.p, sig.q) == (0, 1):
        entries["z^2"] = holomorphic_reduction("z^k", sig, domain=domain, check=False)
    return {k: verify(v, seed) for k, v in entries.items()}
