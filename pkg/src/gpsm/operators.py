"""Central finite-difference realizations of D, ϑ̄ and the stem CR system."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .clifford import Multivector, Signature, gp, left_mul_blade
from .fields import FieldFunction
from .slices import StemFunction, completion_contains_array, embed_vector_q

_EPS = np.finfo(float).eps
CR_VARIANTS = ("holomorphic", "printed")
DEFAULT_CR_VARIANT = "holomorphic"


class StencilError(ValueError):
    """A finite-difference stencil leaves the domain of the field."""


class SingularSetError(ValueError):
    """ϑ̄ was requested on R^{p+1}, where x_q = 0."""


@dataclass(frozen=True)
class FDScheme:
    order: int = 2
    step: Union[float, str] = "auto"

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order}")
        if self.step != "auto" and not (isinstance(self.step, (int, float)) and self.step > 0):
            raise ValueError(f"step must be positive or 'auto', got {self.step!r}")

    def steps(self, X: np.ndarray) -> np.ndarray:
        """Per-point step sizes for points ``(N, d)``."""
        if self.step != "auto":
            return np.full(X.shape[0], float(self.step))
        base = np.cbrt(_EPS) if self.order == 2 else _EPS ** 0.2
        return base * np.maximum(1.0, np.linalg.norm(X, axis=1))

    @property
    def offsets(self):
        if self.order == 2:
            return (1.0, -1.0), (0.5, -0.5)
        return (2.0, 1.0, -1.0, -2.0), (-1 / 12, 8 / 12, -8 / 12, 1 / 12)


def _as_batch(x):
    X = np.asarray(x, dtype=float)
    return (X[None, :], True) if X.ndim == 1 else (X, False)


def _stencil_partials(fn, X: np.ndarray, s: FDScheme, axes, check=None) -> np.ndarray:
    """Partials along ``axes``; returns ``(len(axes), N, dim)``.

    All stencil points of all axes are evaluated in a single call so that
    every derived operator reuses identical evaluations.
    """
    N, d = X.shape
    h = s.steps(X)
    offs, coefs = s.offsets
    shifts = []
    for a in axes:
        for o in offs:
            Y = X.copy()
            Y[:, a] += o * h
            shifts.append(Y)
    P = np.concatenate(shifts, axis=0)
    if check is not None and not np.all(check(P)):
        raise StencilError("finite-difference stencil leaves the domain of the field")
    vals = fn(P).reshape(len(axes), len(offs), N, -1)
    out = np.zeros((len(axes), N, vals.shape[-1]))
    for k, c in enumerate(coefs):
        out += c * vals[:, k]
    return out / h[None, :, None]


def _field_check(f: FieldFunction):
    if f.domain is None:
        return None
    return lambda P: completion_contains_array(f.domain, P, f.sig, closed=True)


def partial_derivatives(f: FieldFunction, x, s: FDScheme = FDScheme()) -> np.ndarray:
    """All partials ``∂_0 f .. ∂_n f`` at points ``x``; shape ``(n+1, N, dim)``."""
    X, _ = _as_batch(x)
    return _stencil_partials(f.fn, X, s, range(f.sig.point_dim), _field_check(f))


def _dirac_part(partials: np.ndarray, idx, n: int) -> np.ndarray:
    out = np.zeros(partials.shape[1:])
    for i in idx:
        out += partials[i] if i == 0 else left_mul_blade(1 << (i - 1), partials[i], n)
    return out


def _ret(arr, single, sig):
    return Multivector(arr[0], sig) if single else arr


def _all_parts(f, x, s):
    X, single = _as_batch(x)
    P = partial_derivatives(f, X, s)
    sig = f.sig
    dxp = _dirac_part(P, range(sig.p + 1), sig.n)
    dxq = _dirac_part(P, range(sig.p + 1, sig.point_dim), sig.n)
    return X, single, P, dxp, dxq


def apply_D(f: FieldFunction, x, s: FDScheme = FDScheme()):
    """``sum_i e_i ∂_i f``; a Multivector for one point, an array for a batch."""
    X, single, _, dxp, dxq = _all_parts(f, x, s)
    return _ret(dxp + dxq, single, f.sig)


def apply_D_xp(f: FieldFunction, x, s: FDScheme = FDScheme()):
    X, single, _, dxp, _ = _all_parts(f, x, s)
    return _ret(dxp, single, f.sig)


def apply_D_xq(f: FieldFunction, x, s: FDScheme = FDScheme()):
    X, single, _, _, dxq = _all_parts(f, x, s)
    return _ret(dxq, single, f.sig)


def _euler_q(X, P, sig):
    out = np.zeros(P.shape[1:])
    for i in range(sig.p + 1, sig.point_dim):
        out += X[:, i, None] * P[i]
    return out


def apply_euler_q(f: FieldFunction, x, s: FDScheme = FDScheme()):
    X, single = _as_batch(x)
    P = partial_derivatives(f, X, s)
    return _ret(_euler_q(X, P, f.sig), single, f.sig)


def apply_vartheta_bar(f: FieldFunction, x, s: FDScheme = FDScheme()):
    """``D_xp f + (x_q / |x_q|^2) E_xq f``."""
    X, single = _as_batch(x)
    sig = f.sig
    xq = X[:, sig.p + 1:]
    r2 = np.sum(xq * xq, axis=1)
    if np.any(r2 == 0.0):
        raise SingularSetError("ϑ̄ is undefined where x_q = 0")
    P = partial_derivatives(f, X, s)
    dxp = _dirac_part(P, range(sig.p + 1), sig.n)
    coef = embed_vector_q(xq / r2[:, None], sig)
    return _ret(dxp + gp(coef, _euler_q(X, P, sig), sig.n), single, sig)


def vartheta_bar_field(f: FieldFunction, s: FDScheme = FDScheme(), analytic: bool = True) -> FieldFunction:
    """ϑ̄f as a field: the attached analytic one when present, else FD."""
    if analytic and f.vartheta_bar is not None:
        return f.vartheta_bar
    return FieldFunction(lambda X: apply_vartheta_bar(f, X, s), f.sig, f.domain,
                         support=f.support, name=f"vb({f.name})")


def stem_cr_residual(F: StemFunction, xs, s: FDScheme = FDScheme(), variant: str = DEFAULT_CR_VARIANT):
    """Residuals of the stem Cauchy–Riemann system at stem points ``xs``.

    Returns:
        (res1, res2) as Multivectors for one point or arrays for a batch.
        ``res1 = D_xp F1 - ∂_r F2`` and ``res2 = conj(D_xp) F2 ± ∂_r F1``
        with ``+`` for the holomorphic variant and ``-`` for the printed one.
    """
    if variant not in CR_VARIANTS:
        raise ValueError(f"variant must be one of {CR_VARIANTS}")
    X, single = _as_batch(xs)
    sig = F.sig
    m = sig.stem_dim
    check = None if F.domain is None else (lambda P: F.domain.contains(P, closed=True))
    both = lambda Y: np.concatenate([F.F1(Y), F.F2(Y)], axis=1)
    P = _stencil_partials(both, X, s, range(m), check)
    P1, P2 = P[..., :sig.dim], P[..., sig.dim:]
    d1 = _dirac_part(P1, range(sig.p + 1), sig.n)
    d2 = _dirac_part(P2, range(sig.p + 1), sig.n)
    conj_d2 = 2 * P2[0] - d2
    res1 = d1 - P2[m - 1]
    res2 = conj_d2 + P1[m - 1] if variant == "holomorphic" else conj_d2 - P1[m - 1]
    if single:
        return Multivector(res1[0], sig), Multivector(res2[0], sig)
    return res1, res2


def gpsm_residual(f: FieldFunction, points, s: FDScheme = FDScheme()) -> float:
    """Max norm of ϑ̄f over ``points``."""
    X, _ = _as_batch(points)
    if X.shape[0] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(apply_vartheta_bar(f, X, s), axis=1)))


def select_cr_variant(s: FDScheme = FDScheme(order=4)) -> str:
    """Pick the CR sign that annihilates the stem of z^2 at p=0, q=1."""
    sig = Signature(0, 1)

    def F1(Y):
        out = np.zeros((Y.shape[0], 2))
        out[:, 0] = Y[:, 0] ** 2 - Y[:, 1] ** 2
        return out

    def F2(Y):
        out = np.zeros((Y.shape[0], 2))
        out[:, 0] = 2 * Y[:, 0] * Y[:, 1]
        return out

    F = StemFunction(F1, F2, sig)
    pts = np.array([[0.3, 0.7], [-1.1, 0.4], [0.5, 1.6]])
    scores = {v: float(np.max(np.abs(stem_cr_residual(F, pts, s, v)[1]))) for v in CR_VARIANTS}
    return min(scores, key=scores.get)

