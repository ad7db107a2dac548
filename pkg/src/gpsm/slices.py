"""Slice decomposition, p-symmetric domains and stem functions.

A point ``x`` of R^{p+q+1} splits as ``x = x_p + r*omega`` with ``x_p`` the
first ``p+1`` coordinates, ``r = |x_q| >= 0`` and ``omega`` a unit vector of
R^q.  Stem coordinates ``(x_p, r~)`` live in R^{p+2}; a stem point with
``r~ < 0`` on the slice through ``eta`` is the point ``x_p + r~*eta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .clifford import (AlgebraError, DomainError, Multivector, Signature, gp,
                       paravector_array)
from .fields import FieldFunction


class DegenerateDirectionError(AlgebraError):
    pass


class UnsupportedGeometry(ValueError):
    pass


@dataclass(frozen=True)
class SplitPoint:
    xp: np.ndarray
    r: float
    omega: Optional[np.ndarray]


def _norm(v) -> np.ndarray:
    """Euclidean norm along the last axis, scaled so tiny inputs do not underflow."""
    v = np.asarray(v, dtype=float)
    big = np.max(np.abs(v), axis=-1, keepdims=True)
    safe = np.where(big > 0, big, 1.0)
    return big[..., 0] * np.sqrt(np.sum((v / safe) ** 2, axis=-1))


def split(x, sig: Signature) -> SplitPoint:
    x = np.asarray(x, dtype=float)
    if x.shape != (sig.point_dim,):
        raise AlgebraError(f"expected a point with {sig.point_dim} coordinates, got {x.shape}")
    xq = x[sig.p + 1:]
    r = float(_norm(xq))
    omega = xq / r if r > 0 else None
    return SplitPoint(x[:sig.p + 1].copy(), r, omega)


def split_array(X, sig: Signature):
    """Vectorized :func:`split`; ``omega`` rows are zero where ``r == 0``."""
    X = np.asarray(X, dtype=float)
    xp = X[..., :sig.p + 1]
    xq = X[..., sig.p + 1:]
    r = _norm(xq)
    safe = np.where(r > 0, r, 1.0)
    omega = np.where((r > 0)[..., None], xq / safe[..., None], 0.0)
    return xp, r, omega


def reassemble(sp: SplitPoint, sig: Signature) -> np.ndarray:
    xq = np.zeros(sig.q) if sp.omega is None else sp.r * np.asarray(sp.omega)
    return np.concatenate([sp.xp, xq])


def embed_vector_q(v, sig: Signature) -> np.ndarray:
    """Coefficients of ``sum_j v_j e_{p+j}`` for ``v`` of shape ``(..., q)``."""
    v = np.asarray(v, dtype=float)
    X = np.zeros(v.shape[:-1] + (sig.point_dim,))
    X[..., sig.p + 1:] = v
    return paravector_array(X, sig.n)


def stem_to_points(Y, eta, sig: Signature) -> np.ndarray:
    """Map stem points ``(y_p, r~)`` on the ``eta`` slice to R^{p+q+1}.

    ``eta`` may be a single unit vector ``(q,)`` or one per leading index of
    ``Y``; broadcasting follows numpy rules on the leading axes.
    """
    Y = np.asarray(Y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    yp = Y[..., :sig.p + 1]
    rt = Y[..., sig.p + 1:sig.p + 2]
    xq = rt * eta
    shape = np.broadcast_shapes(yp.shape[:-1], xq.shape[:-1])
    return np.concatenate([np.broadcast_to(yp, shape + (sig.p + 1,)),
                           np.broadcast_to(xq, shape + (sig.q,))], axis=-1)


def points_to_stem(X, sig: Signature) -> np.ndarray:
    xp, r, _ = split_array(X, sig)
    return np.concatenate([xp, r[..., None]], axis=-1)


def orbit_membership(x, y, sig: Signature, tol: float = 1e-12) -> bool:
    a, b = split(x, sig), split(y, sig)
    return bool(np.all(np.abs(a.xp - b.xp) <= tol) and abs(a.r - b.r) <= tol)


def random_unit_vectors(rng: np.random.Generator, k: int, q: int) -> np.ndarray:
    """Uniform samples on S^{q-1} from normalized Gaussian draws."""
    v = rng.standard_normal((k, q))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------- domains


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in stem coordinates ``R^{p+2}`` (last axis is r~)."""

    center: tuple
    halfwidths: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in np.ravel(self.center))
        h = tuple(float(v) for v in np.ravel(self.halfwidths))
        if len(c) != len(h) or len(c) < 2:
            raise UnsupportedGeometry("box center and halfwidths need equal length >= 2")
        if min(h) <= 0:
            raise UnsupportedGeometry("box halfwidths must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "halfwidths", h)

    @property
    def m(self) -> int:
        return len(self.center)

    @property
    def lo(self) -> np.ndarray:
        return np.subtract(self.center, self.halfwidths)

    @property
    def hi(self) -> np.ndarray:
        return np.add(self.center, self.halfwidths)

    def mirrored(self) -> "Box":
        c = list(self.center)
        c[-1] = -c[-1]
        return Box(tuple(c), self.halfwidths)

    def is_symmetric(self) -> bool:
        return self.center[-1] == 0.0

    def contains(self, Y, closed: bool = False) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        d = np.abs(Y - np.asarray(self.center)) - np.asarray(self.halfwidths)
        return np.all(d <= 0, axis=-1) if closed else np.all(d < 0, axis=-1)

    def signed_distance(self, Y) -> np.ndarray:
        """Negative inside; exact for points inside, exact Euclidean outside."""
        Y = np.asarray(Y, dtype=float)
        d = np.abs(Y - np.asarray(self.center)) - np.asarray(self.halfwidths)
        outside = np.sqrt(np.sum(np.maximum(d, 0.0) ** 2, axis=-1))
        inside = np.minimum(np.max(d, axis=-1), 0.0)
        return outside + inside

    def r_range(self):
        return self.center[-1] - self.halfwidths[-1], self.center[-1] + self.halfwidths[-1]

    def volume(self) -> float:
        return float(np.prod(2 * np.asarray(self.halfwidths)))


@dataclass(frozen=True)
class Ball:
    """Euclidean ball in stem coordinates ``R^{p+2}``."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.ravel(self.center))
        if len(c) < 2:
            raise UnsupportedGeometry("ball center needs at least 2 coordinates")
        if not self.radius > 0:
            raise UnsupportedGeometry("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def m(self) -> int:
        return len(self.center)

    def mirrored(self) -> "Ball":
        c = list(self.center)
        c[-1] = -c[-1]
        return Ball(tuple(c), self.radius)

    def is_symmetric(self) -> bool:
        return self.center[-1] == 0.0

    def contains(self, Y, closed: bool = False) -> np.ndarray:
        d = self.signed_distance(Y)
        return d <= 0 if closed else d < 0

    def signed_distance(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        return np.linalg.norm(Y - np.asarray(self.center), axis=-1) - self.radius

    def r_range(self):
        return self.center[-1] - self.radius, self.center[-1] + self.radius


def _overlap(a, b) -> bool:
    """Conservative overlap test between primitives (bounding boxes)."""
    def bbox(pr):
        if isinstance(pr, Box):
            return pr.lo, pr.hi
        c = np.asarray(pr.center)
        return c - pr.radius, c + pr.radius
    alo, ahi = bbox(a)
    blo, bhi = bbox(b)
    return bool(np.all(alo < bhi) and np.all(blo < ahi))


class SliceDomain:
    """Reflection-symmetric region ``D`` of R^{p+2}; ``pieces`` minus ``holes``.

    Use :meth:`box` and :meth:`ball`; a primitive that does not contain the
    hyperplane ``r~ = 0`` symmetrically gets its mirror image appended.
    """

    def __init__(self, pieces, holes=()):
        self.pieces = tuple(pieces)
        self.holes = tuple(holes)
        if not self.pieces:
            raise UnsupportedGeometry("a domain needs at least one piece")
        ms = {pr.m for pr in self.pieces + self.holes}
        if len(ms) != 1:
            raise UnsupportedGeometry("all primitives must share one dimension")
        self.m = ms.pop()

    @classmethod
    def _symmetrized(cls, prim) -> list:
        if prim.is_symmetric():
            return [prim]
        mirror = prim.mirrored()
        lo, hi = prim.r_range()
        if lo < 0 < hi or _overlap(prim, mirror):
            raise UnsupportedGeometry(
                "primitive straddles r = 0 without being symmetric; center it on r = 0 or move it off")
        return [prim, mirror]

    @classmethod
    def box(cls, center, halfwidths) -> "SliceDomain":
        return cls(cls._symmetrized(Box(center, halfwidths)))

    @classmethod
    def ball(cls, center, radius) -> "SliceDomain":
        return cls(cls._symmetrized(Ball(center, radius)))

    def difference(self, other: "SliceDomain") -> "SliceDomain":
        if other.holes:
            raise UnsupportedGeometry("nested differences are not supported")
        return SliceDomain(self.pieces, self.holes + other.pieces)

    @property
    def p(self) -> int:
        return self.m - 2

    @property
    def is_primitive(self) -> bool:
        return not self.holes

    def contains(self, Y, closed: bool = False) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        inside = np.zeros(Y.shape[:-1], dtype=bool)
        for pr in self.pieces:
            inside |= pr.contains(Y, closed)
        for h in self.holes:
            inside &= ~h.contains(Y, not closed)
        return inside

    def clearance(self) -> float:
        """Lower bound on ``|r~|`` over D (0 when D meets the axis)."""
        c = np.inf
        for pr in self.pieces:
            lo, hi = pr.r_range()
            c = min(c, 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi)))
        return float(c)

    def piece_containing(self, a, closed: bool = False):
        a = np.asarray(a, dtype=float)
        for pr in self.pieces:
            if pr.contains(a, closed):
                return pr
        return None

    def signed_distance(self, Y) -> np.ndarray:
        """Distance to ``∂D`` (negative inside) for hole-free domains."""
        if self.holes:
            raise UnsupportedGeometry("signed distance is only defined for hole-free domains")
        return np.min(np.stack([pr.signed_distance(Y) for pr in self.pieces]), axis=0)

    def bounding_box(self):
        los, his = [], []
        for pr in self.pieces:
            if isinstance(pr, Box):
                los.append(pr.lo)
                his.append(pr.hi)
            else:
                los.append(np.asarray(pr.center) - pr.radius)
                his.append(np.asarray(pr.center) + pr.radius)
        return np.min(los, axis=0), np.max(his, axis=0)

    def sample(self, rng: np.random.Generator, k: int, margin: float = 0.0,
               upper: bool = True) -> np.ndarray:
        """Rejection-sample ``k`` stem points at least ``margin`` inside D."""
        lo, hi = self.bounding_box()
        out = []
        while sum(len(o) for o in out) < k:
            Y = lo + (hi - lo) * rng.random((4 * k + 16, self.m))
            if upper:
                Y[:, -1] = np.abs(Y[:, -1])
            ok = self.contains(Y)
            if margin > 0 and not self.holes:
                ok &= self.signed_distance(Y) < -margin
            out.append(Y[ok])
        return np.concatenate(out)[:k]

    def __repr__(self):
        return f"SliceDomain(pieces={self.pieces}, holes={self.holes})"


def completion_contains(D: SliceDomain, x, sig: Signature) -> bool:
    sp = split(x, sig)
    return bool(D.contains(np.append(sp.xp, sp.r)))


def completion_contains_array(D: SliceDomain, X, sig: Signature, closed: bool = False) -> np.ndarray:
    return D.contains(points_to_stem(X, sig), closed)


# ---------------------------------------------------------------- stems


@dataclass(frozen=True)
class StemFunction:
    """Stem pair ``(F1, F2)``; each maps stem points ``(N, p+2)`` to ``(N, 2**n)``.

    ``F1`` must be even and ``F2`` odd in the last stem variable.  Both
    callables must be reentrant.
    """

    F1: Callable[[np.ndarray], np.ndarray]
    F2: Callable[[np.ndarray], np.ndarray]
    sig: Signature
    domain: Optional[SliceDomain] = None

    def scaled(self, c: float) -> "StemFunction":
        return StemFunction(lambda Y: c * self.F1(Y), lambda Y: c * self.F2(Y), self.sig, self.domain)

    def evaluate(self, X) -> np.ndarray:
        """Induced values at points ``(N, n+1)``."""
        X = np.asarray(X, dtype=float)
        xp, r, omega = split_array(X, self.sig)
        Y = np.concatenate([xp, r[:, None]], axis=1)
        if self.domain is not None and np.any(
                self.domain.signed_distance(Y) > 1e-12 * (1.0 + np.linalg.norm(Y, axis=-1))):
            raise DomainError("point outside the stem domain")
        f1 = self.F1(Y)
        f2 = self.F2(Y)
        return f1 + gp(embed_vector_q(omega, self.sig), f2, self.sig.n)

    def induced(self, name: str = "I(F)", **kw) -> FieldFunction:
        return FieldFunction(self.evaluate, self.sig, self.domain, stem=self, name=name, **kw)


def induce(F: StemFunction, x) -> Multivector:
    """``F1(x') + omega F2(x')``; at ``r = 0`` parity makes this ``F1(x_p, 0)``."""
    return Multivector(F.evaluate(np.asarray(x, dtype=float)[None, :])[0], F.sig)


def check_stem_parity(F: StemFunction, samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        return 0.0
    samples = samples.reshape(-1, F.sig.stem_dim)
    refl = samples.copy()
    refl[:, -1] = -refl[:, -1]
    d1 = np.linalg.norm(F.F1(refl) - F.F1(samples), axis=1)
    d2 = np.linalg.norm(F.F2(refl) + F.F2(samples), axis=1)
    return float(np.max(d1 + d2))


def _q_vector(w, sig: Signature) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != sig.q:
        raise AlgebraError(f"direction needs {sig.q} components, got {w.shape[-1]}")
    return embed_vector_q(w, sig)


def representation_coefficients(w1, w2, w, sig: Signature, min_separation: float = 1e-8):
    """Left coefficients ``(a1, a2)`` with ``f(w) = a1 f(w1) + a2 f(w2)``."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    diff = w1 - w2
    d2 = np.sum(diff * diff, axis=-1)
    if np.any(d2 < min_separation ** 2):
        raise DegenerateDirectionError(f"|w1 - w2| below {min_separation:g}")
    inv = -_q_vector(diff, sig) / np.asarray(d2)[..., None]
    W = _q_vector(w, sig)
    a1 = gp(W - _q_vector(w2, sig), inv, sig.n)
    a2 = -gp(W - _q_vector(w1, sig), inv, sig.n)
    return a1, a2


def representation_formula(f_at_w1, f_at_w2, w1, w2, w, sig: Signature) -> Multivector:
    """Reconstruct ``f(x_p + r w)`` from values at ``x_p + r w1`` and ``x_p + r w2``."""
    f1 = f_at_w1.coeffs if isinstance(f_at_w1, Multivector) else np.asarray(f_at_w1, float)
    f2 = f_at_w2.coeffs if isinstance(f_at_w2, Multivector) else np.asarray(f_at_w2, float)
    a1, a2 = representation_coefficients(w1, w2, w, sig)
    return Multivector(gp(a1, f1, sig.n) + gp(a2, f2, sig.n), sig)


def orbit_triple_violation(g: Callable[[np.ndarray], np.ndarray], xp, r, w, w3, sig: Signature):
    """Stem-consistency mismatch of ``g`` on the orbit ``x_p + r S``.

    Recovers ``H1, H2`` from ``g`` at ``±w`` and compares ``H1 + w3 H2``
    with ``g`` at ``w3``.  Works on batches: ``xp (N, p+1)``, ``r (N,)``,
    ``w, w3 (N, q)``.  Returns the mismatch norms and the norms of ``g(w3)``.
    """
    xp = np.atleast_2d(np.asarray(xp, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    w3 = np.atleast_2d(np.asarray(w3, dtype=float))

    def pts(v):
        return np.concatenate([xp, r[:, None] * v], axis=1)

    g_p, g_m, g_3 = g(pts(w)), g(pts(-w)), g(pts(w3))
    W, W3 = embed_vector_q(w, sig), embed_vector_q(w3, sig)
    H1 = 0.5 * (g_p + g_m)
    H2 = -0.5 * gp(W, g_p - g_m, sig.n)
    pred = H1 + gp(W3, H2, sig.n)
    return np.linalg.norm(g_3 - pred, axis=1), np.linalg.norm(g_3, axis=1)
