"""Cauchy, Cauchy–Pompeiu, Plemelj–Sokhotski and Teodorescu operators.

Conventions.  Slice integrals live on ``U_eta`` in stem coordinates
``(y_p, r~)`` with ``r~`` of both signs.  For ``x = x_p + r*omega`` the two
slice poles are ``x_± = (x_p, ±r)`` and the partial-slice kernel splits as
``𝓔_y(x) = a E(y - x_+) + b E(y - x_-)`` with ``a = (1 - omega eta)/2`` and
``b = (1 + omega eta)/2``.  Completion integrals over ``Ω_D`` use the
fibered measure ``|r~|^{q-1} dσ dS(eta)`` over the half sphere, which
cancels the weight of K.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .clifford import Multivector, Signature, gp
from .fields import FieldFunction
from .kernels import (KernelParams, K_array, SliceEmbedding, E_stem_coeffs, calE_array,
                      stem_paravector)
from .operators import FDScheme, vartheta_bar_field
from .parallel import pmap
from .quadrature import (FiberedRule, QuadRule, VolumeRes, boundary_rule, cauchy_ratios,
                         centered_volume_rule, eta_rule, fibered_volume_rule,
                         pole_graded_sphere_rule, richardson, rotation_matrix,
                         singular_volume_integral, tree_sum)
from .slices import (Ball, SliceDomain, UnsupportedGeometry, embed_vector_q,
                     orbit_triple_violation, random_unit_vectors, split, split_array,
                     stem_to_points)


class ExtrapolationError(RuntimeError):
    """A limit sequence failed its ratio test; ``sequence`` holds the values."""

    def __init__(self, msg, sequence=None):
        super().__init__(msg)
        self.sequence = sequence


class SingularNodeError(ValueError):
    pass


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class BoundaryData:
    """Field plus a boundary rule (slice ``QuadRule`` or fibered ``FiberedRule``)."""

    f: FieldFunction
    rule: object
    eta: SliceEmbedding
    domain: Optional[SliceDomain] = None

    def __post_init__(self):
        stem_rule = self.rule.slice_rule if isinstance(self.rule, FiberedRule) else self.rule
        if stem_rule.normals is None:
            raise ValueError("boundary data needs a rule with normals")


@dataclass(frozen=True)
class ApproachPath:
    """Normal approach to ``boundary_point`` (stem coordinates) at ``d0 ratio^k``."""

    boundary_point: tuple
    d0: float = 0.05
    n_terms: int = 6
    ratio: float = 0.5

    def __post_init__(self):
        if self.n_terms < 3:
            raise ValueError("need at least three offsets")
        if not (0 < self.ratio < 1 and self.d0 > 0):
            raise ValueError("offsets must form a decreasing geometric sequence")
        object.__setattr__(self, "boundary_point", tuple(float(v) for v in self.boundary_point))

    @property
    def distances(self) -> np.ndarray:
        return self.d0 * self.ratio ** np.arange(self.n_terms)


@dataclass(frozen=True)
class LtParams:
    """Integrability exponent ``t`` and its Hölder conjugate ``s``."""

    t: float
    q: int
    p: int = 0

    def __post_init__(self):
        if not self.t > 1:
            raise ValueError("t must exceed 1")

    @property
    def s(self) -> float:
        return self.t / (self.t - 1.0)

    @property
    def existence_ok(self) -> bool:
        return self.t > self.q

    @property
    def estimate_ok(self) -> bool:
        return self.q > 1 and self.t > max(2 * self.p - 1, 2 * self.q - 1)


@dataclass(frozen=True)
class TeodorescuRes:
    """Resolution of volume integrals.

    Attributes:
        vol: slice-volume rule resolution.
        n_eta: half-sphere resolution (ignored for q=1).
        levels: δ-schedule length; 0 integrates once with δ = 0.
        eta_rotation: angle of a deterministic rotation of the η rule.
    """

    vol: VolumeRes = VolumeRes()
    n_eta: int = 16
    levels: int = 5
    eta_rotation: float = 0.0

    def doubled(self) -> "TeodorescuRes":
        return TeodorescuRes(self.vol.doubled(), 2 * self.n_eta, self.levels, self.eta_rotation)


# ---------------------------------------------------------------- helpers


def _x_parts(x, sig: Signature, eta):
    sp = split(x, sig)
    omega = np.asarray(eta, dtype=float) if sp.omega is None else sp.omega
    return sp.xp, sp.r, omega


def _ab(omega, etas, sig: Signature):
    """Coefficients ``a_k, b_k`` of the two poles for each eta; ``(K, dim)`` each."""
    W = embed_vector_q(omega, sig)
    H = embed_vector_q(etas, sig)
    wh = gp(np.broadcast_to(W, H.shape), H, sig.n)
    a = -0.5 * wh
    b = 0.5 * wh
    a[..., 0] += 0.5
    b[..., 0] += 0.5
    return a, b


def _E_mv(Y, xs, etas, sig: Signature, sign: float) -> np.ndarray:
    """E(sign (y - xs)) for stem nodes ``Y (N, m)`` and each eta: ``(N, K, dim)``."""
    C = E_stem_coeffs(sign * (Y - xs), sig.p)
    return stem_paravector(C[:, None, :], etas[None, :, :], sig)


def _eta_setup(sig: Signature, n_eta: int, rotation: float, params: KernelParams, reading: str):
    """η nodes, weights and overall constant for 'slice' or 'completion' use."""
    if reading == "slice":
        return params.eta.vec[None, :], np.ones(1), 1.0
    rot = None if (rotation == 0.0 or sig.q == 1) else rotation_matrix(sig.q, rotation)
    h = eta_rule(sig.q, n_eta, rot)
    w = h.weights * (0.5 * sigma_q(sig.q) / tree_sum(h.weights))
    return h.nodes, w, 1.0 / params.k_constant


def sigma_q(q: int) -> float:
    from .kernels import sigma
    return sigma(q)


def _volume_pair(fv: FieldFunction, D: SliceDomain, xs, etas, sig, params, res: TeodorescuRes):
    """``A(eta) = ∫_D E(y - xs) fv(y_p + r~ eta) dσ`` for every eta, with δ-extrapolation."""

    def g(Y):
        E = _E_mv(Y, xs, etas, sig, params.sign)
        F = fv(stem_to_points(Y[:, None, :], etas[None, :, :], sig))
        return gp(E, F, sig.n)

    if res.levels <= 0:
        rule = centered_volume_rule(D, xs, res.vol)
        v = rule.integrate_fn(g)
        return v, None
    si = singular_volume_integral(g, D, xs, levels=res.levels, res=res.vol)
    return si.extrapolated, si


def _boundary_pair(f: FieldFunction, rule: QuadRule, xs, etas, sig, params):
    Y = rule.nodes
    E = _E_mv(Y, xs, etas, sig, params.sign)
    Nrm = stem_paravector(rule.normals[:, None, :], etas[None, :, :], sig)
    F = f(stem_to_points(Y[:, None, :], etas[None, :, :], sig))
    return rule.integrate(gp(gp(E, Nrm, sig.n), F, sig.n))


def _combine(a, b, Ap, Am, w, const, sig):
    per_eta = gp(a, Ap, sig.n) + gp(b, Am, sig.n)
    return const * tree_sum(w[:, None] * per_eta)


def _integration_domain(f: FieldFunction, D: SliceDomain) -> SliceDomain:
    return f.support if f.support is not None else D


# ---------------------------------------------------------------- Cauchy integrals


def cauchy_boundary_integral(bd: BoundaryData, x, params: KernelParams, kernel: str = "K") -> Multivector:
    """Quadrature of ``∫ kernel(y, x) n(y) f(y) dS(y)``.

    ``kernel="K"`` with a fibered rule realizes ``F_{∂Ω_D}``; ``"calE"``
    and ``"E"`` integrate over the slice ``∂U_eta`` (``"E"`` needs ``x`` on
    that slice).
    """
    sig = params.sig
    x = np.asarray(x, dtype=float)
    f = bd.f
    if kernel == "K":
        if isinstance(bd.rule, FiberedRule):
            fr = bd.rule
            P = fr.points(sig)
            Nrm = stem_paravector(fr.slice_rule.normals[None, :, :], fr.eta_nodes[:, None, :], sig)
            # fr.weights carry |r~|^{q-1}, K carries its inverse; both are applied as written
            vals = gp(gp(K_array(P, x, params), Nrm, sig.n), f(P), sig.n)
            return Multivector(fr.integrate(vals), sig)
        rule = bd.rule.with_eta(bd.eta.vec)
        P = rule.points(sig)
        kern = K_array(P, x, params)
    elif kernel in ("calE", "E"):
        rule = bd.rule if not isinstance(bd.rule, FiberedRule) else bd.rule.slice_rule
        rule = rule.with_eta(bd.eta.vec)
        P = rule.points(sig)
        if kernel == "calE":
            kern = calE_array(rule.nodes, bd.eta.vec, x, sig, params.orientation)
        else:
            xp, r, om = _x_parts(x, sig, bd.eta.vec)
            rt = float(x[sig.p + 1:] @ bd.eta.vec)
            if abs(abs(rt) - r) > 1e-12 * max(1.0, r):
                raise ValueError("kernel 'E' needs x on the slice through eta")
            xs = np.append(xp, rt)
            kern = _E_mv(rule.nodes, xs, bd.eta.vec[None, :], sig, params.sign)[:, 0]
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    if not np.all(np.isfinite(kern)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(kern), axis=1))[0])
        raise SingularNodeError(f"boundary node {bad} at {rule.nodes[bad]} is singular for x")
    Nrm = stem_paravector(rule.normals, bd.eta.vec, sig)
    vals = gp(gp(kern, Nrm, sig.n), f(P), sig.n)
    return Multivector(rule.integrate(vals), sig)


def exterior_cauchy(bd: BoundaryData, x, f_inf, params: KernelParams, min_dist: float = 1e-10) -> Multivector:
    """``∫_Γ 𝓔_y(x) n(y) f(y) dS(y)`` for ``x`` off Γ.

    For ``f`` monogenic outside Γ with limit ``f(∞)`` this equals
    ``-f(x) + f(∞)`` outside and ``f(∞)`` inside.  ``f_inf`` is only
    validated for signature here; callers compare against it.
    """
    sig = params.sig
    xp, r, _ = _x_parts(x, sig, bd.eta.vec)
    rule = bd.rule if not isinstance(bd.rule, FiberedRule) else bd.rule.slice_rule
    for s in (1.0, -1.0):
        d = np.min(np.linalg.norm(rule.nodes - np.append(xp, s * r), axis=1))
        if bd.domain is not None:
            d = min(d, abs(float(bd.domain.signed_distance(np.append(xp, s * r)))))
        if d < min_dist:
            raise ValueError("x lies on Γ")
    if isinstance(f_inf, Multivector) and f_inf.sig != sig:
        raise ValueError("f_inf has the wrong signature")
    return cauchy_boundary_integral(bd, x, params, kernel="calE")


def _piece_of(D: SliceDomain, y):
    for pr in D.pieces:
        if abs(float(pr.signed_distance(np.asarray(y)))) < 1e-12:
            return pr
    return None


def graded_boundary_rule(D: SliceDomain, pole, n_panel: int = 8, n_az: int = 16,
                         s_min: float = 1e-14) -> QuadRule:
    """Boundary rule whose piece through ``pole`` is graded toward it (balls only)."""
    pr0 = _piece_of(D, pole)
    if pr0 is None:
        raise ValueError("pole is not on the boundary")
    rules = []
    for pr in D.pieces:
        if not isinstance(pr, Ball):
            raise UnsupportedGeometry("graded boundary rules need ball pieces")
        if pr is pr0:
            c = np.asarray(pr.center)
            u = pole_graded_sphere_rule(pr.m, np.asarray(pole) - c, n_panel, n_az, s_min)
            rules.append(QuadRule(c + pr.radius * u.nodes, pr.radius ** (pr.m - 1) * u.weights, u.nodes))
        else:
            rules.append(boundary_rule(SliceDomain([pr]), n=4 * n_panel))
    return QuadRule.concat(rules)


def plemelj_limits(bd: BoundaryData, path: ApproachPath, params: KernelParams,
                   n_panel: int = 10, n_az: int = 24, max_ratio: float = 0.9,
                   floor_rel: float = 1e-10):
    """One-sided limits of the Cauchy-type integral at a boundary point.

    Returns:
        (inner, outer, principal, info) with Multivectors and a dict holding
        the approach sequences.  ``inner - outer`` should equal ``f(x)``.
    """
    sig = params.sig
    D = bd.domain
    if D is None:
        raise ValueError("Plemelj limits need the domain in BoundaryData")
    x0 = np.asarray(path.boundary_point, dtype=float)
    pr = _piece_of(D, x0)
    if pr is None:
        raise ValueError("approach path does not start on the boundary")
    nrm = (x0 - np.asarray(pr.center)) / pr.radius
    # off the boundary the omitted polar cap must be tiny; at the boundary
    # point nodes that close lose y - x to cancellation, so a larger cap is used
    near = graded_boundary_rule(D, x0, n_panel, n_az, s_min=1e-14).with_eta(bd.eta.vec)
    at = graded_boundary_rule(D, x0, n_panel, n_az, s_min=1e-9).with_eta(bd.eta.vec)
    eta = bd.eta.vec

    def phi(ts, rule=near):
        X = stem_to_points(ts, eta, sig)
        b = BoundaryData(bd.f, rule, bd.eta, D)
        return cauchy_boundary_integral(b, X, params, kernel="calE").coeffs

    principal = phi(x0, at)
    out = {}
    for side, s in (("inner", -1.0), ("outer", 1.0)):
        seq = np.array([phi(x0 + s * d * nrm) for d in path.distances])
        scale = max(1.0, float(np.max(np.abs(seq))), float(np.max(np.abs(principal))))
        ratios = cauchy_ratios(seq, floor_rel * scale)
        if not np.all(ratios < max_ratio):
            raise ExtrapolationError(f"{side} approach did not converge (ratios {ratios})", seq)
        _, lim = richardson(seq, path.ratio)
        out[side] = (lim, seq, ratios)
    info = {k: {"sequence": v[1], "ratios": v[2]} for k, v in out.items()}
    return (Multivector(out["inner"][0], sig), Multivector(out["outer"][0], sig),
            Multivector(principal, sig), info)


# ---------------------------------------------------------------- Cauchy–Pompeiu


@dataclass(frozen=True)
class PompeiuRes:
    n_bdry: int = 32
    tres: TeodorescuRes = TeodorescuRes()

    def doubled(self) -> "PompeiuRes":
        return PompeiuRes(2 * self.n_bdry, self.tres.doubled())


def cauchy_pompeiu(f: FieldFunction, D: SliceDomain, eta: SliceEmbedding, x, res: PompeiuRes = PompeiuRes(),
                   s: FDScheme = FDScheme(), params: Optional[KernelParams] = None,
                   reading: str = "slice", analytic: bool = False):
    """Boundary term minus volume term of the Cauchy–Pompeiu formula at ``x``.

    ``reading="slice"`` integrates 𝓔 over ``∂U_eta`` and ``U_eta``;
    ``reading="completion"`` integrates K over ``∂Ω_D`` and ``Ω_D``.  ϑ̄f
    comes from finite differences unless ``analytic`` and ``f`` carries it.

    Returns:
        (reconstruction, boundary_term, volume_term) as Multivectors.
    """
    sig = f.sig
    if params is None:
        params = KernelParams(sig, eta)
    elif params.eta != eta:
        params = KernelParams(sig, eta, params.orientation, params.weight)
    if reading not in ("slice", "completion"):
        raise ValueError("reading must be 'slice' or 'completion'")
    xp, r, omega = _x_parts(x, sig, eta.vec)
    poles = [np.append(xp, r), np.append(xp, -r)]
    if not all(D.contains(c) for c in poles):
        raise ValueError("x must lie in the interior of the completion of D")
    etas, w, const = _eta_setup(sig, res.tres.n_eta, res.tres.eta_rotation, params, reading)
    vb = vartheta_bar_field(f, s, analytic)
    brule = boundary_rule(D, n=res.n_bdry)
    Bp, Bm = (_boundary_pair(f, brule, c, etas, sig, params) for c in poles)
    Vp, Vm = (_volume_pair(vb, D, c, etas, sig, params, res.tres)[0] for c in poles)
    a, b = _ab(omega, etas, sig)
    bt = _combine(a, b, Bp, Bm, w, const, sig)
    vt = _combine(a, b, Vp, Vm, w, const, sig)
    return Multivector(bt - vt, sig), Multivector(bt, sig), Multivector(vt, sig)


# ---------------------------------------------------------------- Teodorescu


def teodorescu_detailed(f: FieldFunction, D: SliceDomain, x, params: Optional[KernelParams] = None,
                        res: TeodorescuRes = TeodorescuRes()):
    """``T f(x) = -∫_{Ω_D} K_y(x) f(y) dσ(y)`` with diagnostics.

    Returns:
        (value, info) where ``info["converged"]`` reports the δ-ratio test and
        ``info["ratios"]`` the Cauchy ratios of both pole integrals.
    """
    sig = f.sig
    params = KernelParams(sig) if params is None else params
    xp, r, omega = _x_parts(x, sig, params.eta.vec)
    if r == 0.0:
        raise ValueError("T is evaluated on R_*^{p+q+1}; x has x_q = 0")
    Dint = _integration_domain(f, D)
    etas, w, const = _eta_setup(sig, res.n_eta, res.eta_rotation, params, "completion")
    Ap, sip = _volume_pair(f, Dint, np.append(xp, r), etas, sig, params, res)
    Am, sim = _volume_pair(f, Dint, np.append(xp, -r), etas, sig, params, res)
    a, b = _ab(omega, etas, sig)
    val = -_combine(a, b, Ap, Am, w, const, sig)
    info = {"converged": True, "ratios": []}
    for si in (sip, sim):
        if si is not None:
            info["converged"] &= si.converged
            info["ratios"].append(si.ratios)
            info.setdefault("deltas", []).append(si.deltas)
    return Multivector(val, sig), info


def teodorescu(f: FieldFunction, D: SliceDomain, sig: Signature, x, rule=None, delta_schedule=None,
               params: Optional[KernelParams] = None, res: TeodorescuRes = TeodorescuRes()) -> Multivector:
    """Teodorescu transform at one point (see :func:`teodorescu_detailed`).

    ``rule`` and ``delta_schedule`` override the resolution: ``rule`` may be
    a TeodorescuRes, and ``delta_schedule=0`` disables exclusion.
    """
    if f.sig != sig:
        raise ValueError("signature mismatch")
    if isinstance(rule, TeodorescuRes):
        res = rule
    if delta_schedule is not None:
        res = TeodorescuRes(res.vol, res.n_eta, int(delta_schedule), res.eta_rotation)
    return teodorescu_detailed(f, D, x, params, res)[0]


def teodorescu_many(f: FieldFunction, D: SliceDomain, X, params=None, res: TeodorescuRes = TeodorescuRes()):
    """Vectorized front end returning ``(M, dim)`` values and converged flags."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = pmap(lambda x: teodorescu_detailed(f, D, x, params, res), X)
    return np.array([o[0].coeffs for o in out]), np.array([o[1]["converged"] for o in out])


def teodorescu_stem(f: FieldFunction, D: SliceDomain, XS, params=None, res: TeodorescuRes = TeodorescuRes()):
    """Stem pair ``(G1, G2)`` of ``T f`` at stem points ``XS (M, p+2)``, ``r > 0``.

    ``T f(x_p + r omega) = G1 + omega G2`` for every omega.  This is the
    fibered sum regrouped by the power of omega, so it needs one pair of
    pole integrals per orbit instead of one per point.
    """
    sig = f.sig
    params = KernelParams(sig) if params is None else params
    XS = np.atleast_2d(np.asarray(XS, dtype=float))
    Dint = _integration_domain(f, D)
    etas, w, const = _eta_setup(sig, res.n_eta, res.eta_rotation, params, "completion")
    H = embed_vector_q(etas, sig)

    def one(xs):
        Ap, _ = _volume_pair(f, Dint, xs, etas, sig, params, res)
        xm = xs.copy()
        xm[-1] = -xm[-1]
        Am, _ = _volume_pair(f, Dint, xm, etas, sig, params, res)
        g1 = -const * 0.5 * tree_sum(w[:, None] * (Ap + Am))
        g2 = const * 0.5 * tree_sum(w[:, None] * gp(H, Ap - Am, sig.n))
        return g1, g2

    out = pmap(one, XS)
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


def teodorescu_field(f: FieldFunction, D: SliceDomain, params=None, res: TeodorescuRes = TeodorescuRes(),
                     name: str = "Tf") -> FieldFunction:
    """``x -> T f(x)`` as a field (no δ-schedule)."""
    res0 = TeodorescuRes(res.vol, res.n_eta, 0, res.eta_rotation)
    return FieldFunction(lambda X: teodorescu_many(f, D, X, params, res0)[0], f.sig, name=name)


def teodorescu_monogenicity_check(f: FieldFunction, D: SliceDomain, sig: Signature, points_outside,
                                  s: FDScheme = FDScheme(), params=None,
                                  res: TeodorescuRes = TeodorescuRes()) -> float:
    """Max ``|ϑ̄ T f|`` by finite differences at points outside the closure of Ω_D.

    For such points every pole lies outside D, the quadrature rule is the
    same for all stencil points, and ``T f`` is then an exactly monogenic
    function of x, so the residual is pure finite-difference error.
    """
    from .operators import gpsm_residual
    from .slices import completion_contains_array
    P = np.atleast_2d(np.asarray(points_outside, dtype=float))
    if np.any(completion_contains_array(D, P, sig, closed=True)):
        raise ValueError("points must lie outside the closure of Ω_D")
    return gpsm_residual(teodorescu_field(f, D, params, res), P, s)


# ---------------------------------------------------------------- experiments


@dataclass
class NormEstimate:
    ratios: list
    max_ratio: float
    skipped: list = field(default_factory=list)
    f_norms: list = field(default_factory=list)
    tf_norms: list = field(default_factory=list)

    @property
    def spearman(self) -> float:
        if len(self.ratios) < 3:
            return 0.0
        return float(spearmanr(np.arange(len(self.ratios)), self.ratios)[0])


def lt_norm_fibered(values, rule: FiberedRule, t: float) -> float:
    """``(∫ |v|^t dV)^{1/t}`` for multivector values ``(K, N, dim)``."""
    mag = np.linalg.norm(np.asarray(values, dtype=float), axis=-1) ** t
    return float(rule.integrate(mag)) ** (1.0 / t)


def norm_estimate_experiment(ensemble: Sequence[FieldFunction], D: SliceDomain, sig: Signature, lt: LtParams,
                             rule: Optional[FiberedRule] = None, params=None,
                             res: TeodorescuRes = TeodorescuRes(levels=0),
                             n_eta: int = 8, n_slice: int = 12) -> NormEstimate:
    """Ratios ``|T f|_t / |f|_t`` over an ensemble, both norms on one fibered rule.

    Raises:
        ValueError: when the exponent violates the estimate's validity flags.
    """
    if not lt.estimate_ok:
        raise ValueError(f"t = {lt.t} outside the estimate range for (p, q) = ({sig.p}, {sig.q})")
    if rule is None:
        rule = fibered_volume_rule(D, sig, n_eta=n_eta, n_slice=n_slice)
    Y = rule.slice_rule.nodes
    up = np.abs(Y)
    uniq, inv = np.unique(up, axis=0, return_inverse=True)
    inv = np.ravel(inv)
    P = rule.points(sig)
    sgn = np.sign(Y[:, -1])
    Om = sgn[None, :, None] * rule.eta_nodes[:, None, :]
    Wom = embed_vector_q(Om, sig)
    est = NormEstimate([], 0.0)
    for i, f in enumerate(ensemble):
        fn = lt_norm_fibered(f(P), rule, lt.t)
        if fn == 0.0:
            warnings.warn(f"ensemble member {i} has zero norm; skipped")
            est.skipped.append(i)
            continue
        g1, g2 = teodorescu_stem(f, D, uniq, params, res)
        G1, G2 = g1[inv][None, :, :], g2[inv][None, :, :]
        tf = G1 + gp(Wom, np.broadcast_to(G2, Wom.shape), sig.n)
        tn = lt_norm_fibered(tf, rule, lt.t)
        est.ratios.append(tn / fn)
        est.f_norms.append(fn)
        est.tf_norms.append(tn)
    est.max_ratio = float(max(est.ratios)) if est.ratios else 0.0
    return est


def slice_preservation_check(f: FieldFunction, D: SliceDomain, sig: Signature, params=None,
                             res: TeodorescuRes = TeodorescuRes(levels=0), n_triples: int = 20,
                             seed: int = 0, stem_points=None, relative: bool = True) -> float:
    """Orbit-triple stem-consistency violation of ``g = T f``.

    Each of the three points of a triple is computed with a differently
    rotated η rule, so agreement is not an artefact of shared nodes.
    """
    rng = np.random.default_rng(seed)
    if stem_points is None:
        stem_points = D.sample(rng, n_triples, margin=0.02)
    XS = np.atleast_2d(np.asarray(stem_points, dtype=float))
    w = random_unit_vectors(rng, len(XS), sig.q)
    w3 = random_unit_vectors(rng, len(XS), sig.q)
    calls = iter(range(3))

    def g(X):
        k = next(calls)
        rk = TeodorescuRes(res.vol, res.n_eta, res.levels, res.eta_rotation + 0.37 * (k + 1))
        return teodorescu_many(f, D, X, params, rk)[0]

    mism, mag = orbit_triple_violation(g, XS[:, :-1], XS[:, -1], w, w3, sig)
    if not relative:
        return float(np.max(mism))
    return float(np.max(mism) / max(float(np.max(mag)), 1e-300))


def field_orbit_violation(f: FieldFunction, stem_points, sig: Signature, seed: int = 0) -> float:
    """Orbit-triple violation of a field itself, relative to its size."""
    rng = np.random.default_rng(seed)
    XS = np.atleast_2d(np.asarray(stem_points, dtype=float))
    w = random_unit_vectors(rng, len(XS), sig.q)
    w3 = random_unit_vectors(rng, len(XS), sig.q)
    mism, mag = orbit_triple_violation(f, XS[:, :-1], XS[:, -1], w, w3, sig)
    return float(np.max(mism) / max(float(np.max(mag)), 1e-300))


def teodorescu_slice(f: FieldFunction, D: SliceDomain, eta: SliceEmbedding, x,
                     params: Optional[KernelParams] = None, res: TeodorescuRes = TeodorescuRes()) -> Multivector:
    """Slice-volume variant ``-∫_{U_eta} 𝓔_y(x) f(y) dσ(y)``.

    This is the volume operator of the slice Cauchy–Pompeiu formula.  At
    q = 1 it coincides with :func:`teodorescu`.
    """
    sig = f.sig
    params = KernelParams(sig, eta) if params is None else params
    xp, r, omega = _x_parts(x, sig, eta.vec)
    Dint = _integration_domain(f, D)
    etas, w, const = _eta_setup(sig, res.n_eta, 0.0, params, "slice")
    etas = eta.vec[None, :]
    Ap, _ = _volume_pair(f, Dint, np.append(xp, r), etas, sig, params, res)
    Am, _ = _volume_pair(f, Dint, np.append(xp, -r), etas, sig, params, res)
    a, b = _ab(omega, etas, sig)
    return Multivector(-_combine(a, b, Ap, Am, w, const, sig), sig)
