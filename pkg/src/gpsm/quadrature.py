"""Deterministic quadrature rules in stem coordinates R^{p+2} and on spheres.

Every reduction goes through :func:`tree_sum` (pairwise, fixed order), so an
integral does not depend on how the work was scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_gegenbauer

from .kernels import sigma
from .slices import Ball, Box, SliceDomain, UnsupportedGeometry, stem_to_points


def tree_sum(a, axis: int = 0) -> np.ndarray:
    """Pairwise sum along ``axis`` with an order fixed by the length alone."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:])
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros_like(a[:1])])
        a = a[0::2] + a[1::2]
    return a[0]


@dataclass(frozen=True)
class QuadRule:
    """Nodes ``(N, d)`` with weights ``(N,)``; boundary rules carry ``normals``."""

    nodes: np.ndarray
    weights: np.ndarray
    normals: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(tree_sum(self.weights))

    def integrate(self, values) -> np.ndarray:
        """``sum_j w_j values[j]`` for values of shape ``(N, ...)``."""
        v = np.asarray(values, dtype=float)
        w = self.weights.reshape((-1,) + (1,) * (v.ndim - 1))
        return tree_sum(w * v)

    def integrate_fn(self, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return self.integrate(g(self.nodes))

    def points(self, sig) -> np.ndarray:
        """Nodes mapped to R^{p+q+1} along ``eta``."""
        if self.eta is None:
            raise ValueError("rule has no slice direction attached")
        return stem_to_points(self.nodes, self.eta, sig)

    def with_eta(self, eta) -> "QuadRule":
        return QuadRule(self.nodes, self.weights, self.normals, np.asarray(eta, dtype=float))

    @staticmethod
    def concat(rules: Sequence["QuadRule"]) -> "QuadRule":
        rules = [r for r in rules if len(r)]
        if not rules:
            return QuadRule(np.zeros((0, 1)), np.zeros(0))
        normals = None
        if all(r.normals is not None for r in rules):
            normals = np.concatenate([r.normals for r in rules])
        return QuadRule(np.concatenate([r.nodes for r in rules]),
                        np.concatenate([r.weights for r in rules]), normals, rules[0].eta)


# ---------------------------------------------------------------- 1-D


def gl_nodes(n: int, a: float, b: float):
    if n < 1:
        raise ValueError("need at least one node")
    if not a < b:
        raise ValueError(f"invalid interval [{a}, {b}]")
    x, w = leggauss(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> QuadRule:
    x, w = gl_nodes(n, a, b)
    return QuadRule(x[:, None], w)


def composite_gl(breaks, n: int):
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            x, w = gl_nodes(n, a, b)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def graded_breaks(a: float, b: float, foot: float, scale: float, ratio: float = 2.0) -> np.ndarray:
    """Panel breaks on ``[a, b]`` shrinking geometrically toward ``foot``.

    The smallest panel next to ``foot`` has width ``scale``; panels no
    longer than about a quarter of the interval are kept uniform.
    """
    L = b - a
    f = min(max(foot, a), b)
    cap = 0.25 * L
    pts = {a, b}
    if scale < cap:
        s = scale
        while s < cap:
            for v in (f - s, f + s):
                if a < v < b:
                    pts.add(v)
            s *= ratio
        if a < f < b:
            pts.add(f)
    br = np.array(sorted(pts))
    out = [br[0]]
    for x in br[1:]:
        k = int(np.ceil((x - out[-1]) / cap - 1e-12))
        out.extend(np.linspace(out[-1], x, k + 1)[1:])
    return np.array(out)


# ---------------------------------------------------------------- spheres


def _circle(n: int, offset: float = 0.0):
    t = offset + 2 * np.pi * np.arange(n) / n
    return np.stack([np.cos(t), np.sin(t)], axis=1), np.full(n, 2 * np.pi / n)


def _sphere2(n: int):
    z, wz = leggauss(n)
    phi = np.pi * np.arange(2 * n) / n
    Z, P = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1 - Z * Z)
    nodes = np.stack([s * np.cos(P), s * np.sin(P), Z], axis=-1).reshape(-1, 3)
    w = (wz[:, None] * np.full(2 * n, np.pi / n)[None, :]).ravel()
    return nodes, w


def sphere_rule(m: int, n: int, rotation: Optional[np.ndarray] = None) -> QuadRule:
    """Rule on S^{m-1} ⊂ R^m.

    m=1: the two points ±1.  m=2: ``n``-point trapezoid.  m=3: ``n``
    Gauss–Legendre heights times a ``2n`` trapezoid in azimuth.  m=4: ``n``
    Gegenbauer polar nodes times the m=3 rule.  All rules are symmetric
    under ``u -> -u`` when ``n`` is even (m=2) or always (m=1, 3, 4).
    """
    if n < 1:
        raise ValueError("resolution must be positive")
    if m == 1:
        nodes, w = np.array([[1.0], [-1.0]]), np.ones(2)
    elif m == 2:
        nodes, w = _circle(n)
    elif m == 3:
        nodes, w = _sphere2(n)
    elif m == 4:
        x, wx = roots_gegenbauer(n, 1.0)
        s2, w2 = _sphere2(n)
        s = np.sqrt(1 - x * x)
        nodes = np.concatenate([s[:, None, None] * s2[None], np.broadcast_to(x[:, None, None], (n, len(s2), 1))],
                               axis=-1).reshape(-1, 4)
        w = (wx[:, None] * w2[None, :]).ravel()
    else:
        raise UnsupportedGeometry(f"sphere_rule supports m in 1..4, got {m}")
    if rotation is not None:
        nodes = nodes @ np.asarray(rotation).T
    return QuadRule(nodes, w)


def rotation_matrix(m: int, angle: float) -> np.ndarray:
    """Deterministic rotation of R^m by ``angle`` in each coordinate plane (k, k+1)."""
    R = np.eye(m)
    for k in range(m - 1):
        G = np.eye(m)
        c, s = np.cos(angle * (k + 1)), np.sin(angle * (k + 1))
        G[k, k], G[k, k + 1], G[k + 1, k], G[k + 1, k + 1] = c, -s, s, c
        R = G @ R
    return R


def hemisphere_rule(q: int, n: int, rotation: Optional[np.ndarray] = None) -> QuadRule:
    """Half of a symmetric sphere rule on S^{q-1}: one node per antipodal pair.

    The kept node is the one whose last nonzero coordinate is positive, so
    the weights sum to ``sigma(q) / 2``.
    """
    if q == 2 and n % 2:
        raise ValueError("the circle rule needs an even node count for antipodal pairs")
    full = sphere_rule(q, n, rotation)
    X = full.nodes
    keep = np.zeros(len(X), dtype=bool)
    undecided = np.ones(len(X), dtype=bool)
    for k in range(q - 1, -1, -1):
        c = X[:, k]
        decided = undecided & (np.abs(c) > 1e-12)
        keep |= decided & (c > 0)
        undecided &= ~decided
    return QuadRule(X[keep], full.weights[keep])


def pole_graded_sphere_rule(m: int, pole, n_panel: int = 8, n_az: int = 16,
                            s_min: float = 1e-9, ratio: float = 2.0) -> QuadRule:
    """Sphere rule on S^{m-1} with polar panels shrinking toward ``pole``.

    The azimuthal factor is symmetric about the pole, so odd singular parts
    cancel and principal values come out right.  The cap of polar radius
    ``s_min`` around the pole is omitted.
    """
    pole = np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    if m < 2 or m > 4:
        raise UnsupportedGeometry("pole-graded rules support m in 2..4")
    br = [s_min]
    while br[-1] * ratio < 0.5:
        br.append(br[-1] * ratio)
    k = int(np.ceil((np.pi - br[-1]) / 0.4))
    br = np.concatenate([br, np.linspace(br[-1], np.pi, k + 1)[1:]])
    th, wt = composite_gl(br, n_panel)
    wt = wt * np.sin(th) ** (m - 2)
    az = sphere_rule(m - 1, n_az if m == 3 else max(2, n_az // 2))
    # orthonormal complement of the pole
    Q, _ = np.linalg.qr(np.column_stack([pole, np.eye(m)]))
    perp = Q[:, 1:m]
    V = az.nodes @ perp.T
    nodes = (np.cos(th)[:, None, None] * pole[None, None, :]
             + np.sin(th)[:, None, None] * V[None, :, :]).reshape(-1, m)
    w = (wt[:, None] * az.weights[None, :]).ravel()
    return QuadRule(nodes, w)


# ---------------------------------------------------------------- slice domains


def _box_faces(box: Box):
    c, h = np.asarray(box.center), np.asarray(box.halfwidths)
    for a in range(box.m):
        for s in (1.0, -1.0):
            yield a, s, c[a] + s * h[a]


def _tensor(grids):
    mesh = np.meshgrid(*[g[0] for g in grids], indexing="ij")
    wmesh = np.meshgrid(*[g[1] for g in grids], indexing="ij")
    nodes = np.stack([x.ravel() for x in mesh], axis=1)
    w = np.prod(np.stack([x.ravel() for x in wmesh], axis=1), axis=1)
    return nodes, w


def _box_boundary(box: Box, n: int) -> QuadRule:
    rules = []
    lo, hi = box.lo, box.hi
    for a, s, plane in _box_faces(box):
        others = [b for b in range(box.m) if b != a]
        F, w = _tensor([gl_nodes(n, lo[b], hi[b]) for b in others])
        nodes = np.empty((len(w), box.m))
        nodes[:, others] = F
        nodes[:, a] = plane
        normals = np.zeros_like(nodes)
        normals[:, a] = s
        rules.append(QuadRule(nodes, w, normals))
    return QuadRule.concat(rules)


def _ball_dirs(m: int, n: int) -> QuadRule:
    return sphere_rule(m, 2 * n if m == 2 else n)


def _ball_boundary(ball: Ball, n: int) -> QuadRule:
    u = _ball_dirs(ball.m, n)
    R = ball.radius
    return QuadRule(np.asarray(ball.center) + R * u.nodes, R ** (ball.m - 1) * u.weights, u.nodes.copy())


def _primitive_boundary(pr, n: int) -> QuadRule:
    return _ball_boundary(pr, n) if isinstance(pr, Ball) else _box_boundary(pr, n)


def boundary_rule(D: SliceDomain, eta=None, n: int = 32) -> QuadRule:
    """Rule on ``∂D`` with outward unit normals (stem coordinates).

    Balls use the sphere rule (``2n`` nodes on circles, ``n x 2n`` on
    2-spheres); boxes use ``n``-point Gauss–Legendre per face axis.  Holes
    contribute their boundary with inward normals.
    """
    rules = [_primitive_boundary(pr, n) for pr in D.pieces]
    for h in D.holes:
        r = _primitive_boundary(h, n)
        rules.append(QuadRule(r.nodes, r.weights, -r.normals))
    rule = QuadRule.concat(rules)
    return rule if eta is None else rule.with_eta(eta)


def _dir_rule(m: int, n_dir: int) -> QuadRule:
    """Direction rule for polar integration in R^m with about ``n_dir`` nodes per great circle."""
    if m == 2:
        return sphere_rule(2, n_dir)
    return sphere_rule(m, max(2, n_dir // 4))


def _ball_regular(ball: Ball, n_dir: int, n_rad: int) -> QuadRule:
    u = _dir_rule(ball.m, n_dir)
    rho, wr = gl_nodes(n_rad, 0.0, ball.radius)
    nodes = np.asarray(ball.center) + rho[None, :, None] * u.nodes[:, None, :]
    w = u.weights[:, None] * (wr * rho ** (ball.m - 1))[None, :]
    return QuadRule(nodes.reshape(-1, ball.m), w.ravel())


def _box_regular(box: Box, n: int) -> QuadRule:
    nodes, w = _tensor([gl_nodes(n, lo, hi) for lo, hi in zip(box.lo, box.hi)])
    return QuadRule(nodes, w)


def _ball_centered(ball: Ball, apex, n_dir: int, n_rad: int, delta: float) -> QuadRule:
    u = _dir_rule(ball.m, n_dir)
    d = np.asarray(apex) - np.asarray(ball.center)
    du = u.nodes @ d
    rmax = -du + np.sqrt(du * du + ball.radius ** 2 - d @ d)
    x, wx = leggauss(n_rad)
    lo = np.minimum(delta, rmax)
    half = 0.5 * (rmax - lo)
    rho = lo[:, None] + half[:, None] * (x[None, :] + 1.0)
    w = u.weights[:, None] * half[:, None] * wx[None, :] * rho ** (ball.m - 1)
    nodes = np.asarray(apex) + rho[:, :, None] * u.nodes[:, None, :]
    keep = (half > 0)[:, None] & np.ones_like(w, dtype=bool)
    return QuadRule(nodes[keep], w[keep])


def _box_centered(box: Box, apex, n_face: int, n_rad: int, delta: float) -> QuadRule:
    apex = np.asarray(apex, dtype=float)
    lo, hi = box.lo, box.hi
    x, wx = leggauss(n_rad)
    rules = []
    for a, s, plane in _box_faces(box):
        hF = abs(plane - apex[a])
        others = [b for b in range(box.m) if b != a]
        grids = [composite_gl(graded_breaks(lo[b], hi[b], apex[b], hF), n_face) for b in others]
        F, wF = _tensor(grids)
        Z = np.empty((len(wF), box.m))
        Z[:, others] = F
        Z[:, a] = plane
        dist = np.linalg.norm(Z - apex, axis=1)
        t0 = np.minimum(delta / dist, 1.0)
        half = 0.5 * (1.0 - t0)
        t = t0[:, None] + half[:, None] * (x[None, :] + 1.0)
        w = wF[:, None] * half[:, None] * wx[None, :] * t ** (box.m - 1) * hF
        nodes = apex + t[:, :, None] * (Z - apex)[:, None, :]
        keep = (half > 0)[:, None] & np.ones_like(w, dtype=bool)
        rules.append(QuadRule(nodes[keep], w[keep]))
    return QuadRule.concat(rules)


@dataclass(frozen=True)
class VolumeRes:
    """Resolution of slice-volume rules.

    ``n_dir``: directions for polar rules, counted as nodes per great
    circle (the circle rule when p=0; ``n_dir // 4`` Gauss–Legendre heights
    times ``n_dir // 2`` azimuths when p=1); ``n_rad``: radial / cone-axis Gauss–Legendre
    nodes, also the per-axis count of regular box rules; ``n_face``: nodes
    per graded face panel of box cone rules.
    """

    n_dir: int = 48
    n_rad: int = 24
    n_face: int = 6

    def doubled(self) -> "VolumeRes":
        return VolumeRes(2 * self.n_dir, 2 * self.n_rad, 2 * self.n_face)


def _check_volume_domain(D: SliceDomain):
    if D.holes:
        raise UnsupportedGeometry("volume rules are not available for difference domains")


def slice_volume_rule(D: SliceDomain, eta=None, n: int = 24, res: Optional[VolumeRes] = None) -> QuadRule:
    """Regular rule on D: tensor Gauss–Legendre on boxes, polar product on balls."""
    _check_volume_domain(D)
    if res is None:
        res = VolumeRes(n_dir=2 * n, n_rad=n)
    rules = [_ball_regular(pr, res.n_dir, res.n_rad) if isinstance(pr, Ball)
             else _box_regular(pr, res.n_rad) for pr in D.pieces]
    rule = QuadRule.concat(rules)
    return rule if eta is None else rule.with_eta(eta)


def centered_volume_rule(D: SliceDomain, apex, res: VolumeRes = VolumeRes(), delta: float = 0.0) -> QuadRule:
    """Rule on D minus the ball of radius ``delta`` about ``apex``.

    The piece containing ``apex`` gets a rule centred at the apex (polar for
    balls, one cone per face for boxes) whose Jacobian cancels a pole of
    order ``p+1`` there.  Other pieces get the regular rule.
    """
    _check_volume_domain(D)
    apex = np.asarray(apex, dtype=float)
    rules = []
    for pr in D.pieces:
        inside = bool(pr.contains(apex))
        if isinstance(pr, Ball):
            rules.append(_ball_centered(pr, apex, res.n_dir, res.n_rad, delta) if inside
                         else _ball_regular(pr, res.n_dir, res.n_rad))
        else:
            rules.append(_box_centered(pr, apex, res.n_face, res.n_rad, delta) if inside
                         else _box_regular(pr, res.n_rad))
    return QuadRule.concat(rules)


# ---------------------------------------------------------------- fibered


@dataclass(frozen=True)
class FiberedRule:
    """Product rule for ``∫_{Ω_D} g dV = ∫_{S^+} ∫_D g |r~|^{q-1} dσ dS(eta)``.

    ``weights[k, j]`` already contains ``w_eta[k] * w_j * |r~_j|^{q-1}``
    and a fold factor that makes the S^+ weights total exactly
    ``sigma(q) / 2``.
    """

    eta_nodes: np.ndarray
    eta_weights: np.ndarray
    slice_rule: QuadRule
    q: int
    weights: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        fold = 0.5 * sigma(self.q) / tree_sum(self.eta_weights)
        jac = np.abs(self.slice_rule.nodes[:, -1]) ** (self.q - 1)
        W = fold * self.eta_weights[:, None] * (self.slice_rule.weights * jac)[None, :]
        object.__setattr__(self, "weights", W)

    def points(self, sig) -> np.ndarray:
        """All nodes in R^{p+q+1}; shape ``(K, N, n+1)``."""
        return stem_to_points(self.slice_rule.nodes[None, :, :], self.eta_nodes[:, None, :], sig)

    def integrate(self, values) -> np.ndarray:
        """Integrate values of shape ``(K, N, ...)``."""
        v = np.asarray(values, dtype=float)
        w = self.weights.reshape(self.weights.shape + (1,) * (v.ndim - 2))
        return tree_sum(tree_sum(w * v, axis=1))

    @property
    def total(self) -> float:
        return float(tree_sum(tree_sum(self.weights, axis=1)))


def eta_rule(q: int, n_eta: int, rotation: Optional[np.ndarray] = None) -> QuadRule:
    return hemisphere_rule(q, 1 if q == 1 else n_eta, rotation)


def fibered_volume_rule(D: SliceDomain, sig, n_eta: int = 16, n_slice: int = 24,
                        res: Optional[VolumeRes] = None, rotation=None) -> FiberedRule:
    h = eta_rule(sig.q, n_eta, rotation)
    return FiberedRule(h.nodes, h.weights, slice_volume_rule(D, n=n_slice, res=res), sig.q)


def fibered_boundary_rule(D: SliceDomain, sig, n_eta: int = 16, n_bdry: int = 32, rotation=None) -> FiberedRule:
    """Surface rule on ``∂Ω_D``; the stem rule keeps its normals."""
    h = eta_rule(sig.q, n_eta, rotation)
    return FiberedRule(h.nodes, h.weights, boundary_rule(D, n=n_bdry), sig.q)


# ---------------------------------------------------------------- extrapolation


def richardson(values, ratio: float = 0.5, exponents: Optional[Sequence[float]] = None):
    """Richardson table for a sequence computed at steps ``h_k = h_0 ratio^k``.

    Row ``k`` column ``j`` removes the error terms ``h^{gamma_1..gamma_j}``.

    Returns:
        (table, best): ``table[k][j]`` arrays and the last diagonal entry.
    """
    vals = [np.asarray(v, dtype=float) for v in values]
    if not vals:
        raise ValueError("richardson needs at least one value")
    L = len(vals)
    if exponents is None:
        exponents = range(1, L)
    exponents = list(exponents)
    table = [[v] for v in vals]
    for k in range(1, L):
        for j in range(1, min(k, len(exponents)) + 1):
            fac = ratio ** (-exponents[j - 1]) - 1.0
            prev, cur = table[k - 1][j - 1], table[k][j - 1]
            table[k].append(cur + (cur - prev) / fac)
    return table, table[-1][-1]


def cauchy_ratios(values, floor: float = 0.0) -> np.ndarray:
    """``|v_{k+1} - v_k| / |v_k - v_{k-1}|``; differences at or below ``floor`` count as 0."""
    v = [np.asarray(x, dtype=float) for x in values]
    d = np.array([float(np.linalg.norm(np.ravel(b - a))) for a, b in zip(v[:-1], v[1:])])
    d = np.where(d <= floor, 0.0, d)
    out = []
    for a, b in zip(d[:-1], d[1:]):
        out.append(0.0 if b == 0.0 else (np.inf if a == 0.0 else b / a))
    return np.array(out)


@dataclass(frozen=True)
class SingularIntegral:
    deltas: np.ndarray
    values: np.ndarray
    extrapolated: np.ndarray
    ratios: np.ndarray
    converged: bool

    @property
    def value(self) -> np.ndarray:
        return self.values[-1]


def default_delta0(D: SliceDomain, center, base: float = 0.1) -> float:
    pr = D.piece_containing(center)
    if pr is None:
        return base
    return float(min(base, 0.5 * abs(pr.signed_distance(np.asarray(center)))))


def singular_volume_integral(g: Callable[[np.ndarray], np.ndarray], D: SliceDomain, center,
                             schedule: Optional[Sequence[float]] = None, *, levels: int = 5,
                             res: VolumeRes = VolumeRes(), exponents=None,
                             floor_rel: float = 1e-12, max_ratio: float = 0.5) -> SingularIntegral:
    """Integrate ``g`` over D with a pole at ``center`` (stem coordinates).

    ``g`` maps nodes ``(N, p+2)`` to values ``(N, ...)``.  For each ``delta``
    of the decreasing schedule the ball of radius ``delta`` about the pole is
    excluded; the sequence is Richardson-extrapolated to ``delta -> 0``.
    The default schedule is ``delta0 * 2^-k`` for ``k < levels``.
    """
    center = np.asarray(center, dtype=float)
    inside = D.piece_containing(center) is not None
    if schedule is None:
        d0 = default_delta0(D, center)
        schedule = d0 * 0.5 ** np.arange(levels)
    schedule = np.asarray(schedule, dtype=float)
    if len(schedule) < 1 or np.any(np.diff(schedule) >= 0) or np.any(schedule < 0):
        raise ValueError("delta schedule must be non-negative and strictly decreasing")
    if inside:
        pr = D.piece_containing(center)
        size = pr.radius if isinstance(pr, Ball) else min(pr.halfwidths)
        if schedule[0] >= 2 * size:
            raise ValueError("exclusion radius swallows the domain piece")
        vals = [centered_volume_rule(D, center, res, dl).integrate_fn(g) for dl in schedule]
    else:
        v = centered_volume_rule(D, center, res).integrate_fn(g)
        vals = [v] * len(schedule)
    vals = np.array(vals)
    ratio = schedule[1] / schedule[0] if len(schedule) > 1 else 0.5
    _, best = richardson(vals, ratio, exponents)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    ratios = cauchy_ratios(vals, floor_rel * scale)
    converged = bool(np.all(ratios < max_ratio))
    return SingularIntegral(schedule, vals, best, ratios, converged)
