"""Surface constants and the Cauchy kernels E, 𝓔 and K."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .clifford import Multivector, Paravector, Signature, gp, paravector_array
from .slices import embed_vector_q, split_array


class SingularityError(ValueError):
    pass


def sigma(m: int) -> float:
    """Area of the unit sphere S^{m-1} in R^m, so ``sigma(2) = 2*pi``."""
    if int(m) != m or m < 1:
        raise ValueError(f"sigma needs an integer m >= 1, got {m}")
    return float(2 * np.pi ** (m / 2) / gamma(m / 2))


@dataclass(frozen=True)
class SliceEmbedding:
    """Slice direction ``eta`` in S ⊂ R^q."""

    eta: tuple

    def __post_init__(self):
        v = np.ravel(np.asarray(self.eta, dtype=float))
        nrm = np.linalg.norm(v)
        if v.size == 0 or abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"eta must be a unit vector, got norm {nrm}")
        object.__setattr__(self, "eta", tuple(v / nrm))

    @classmethod
    def first(cls, q: int) -> "SliceEmbedding":
        """``eta = e_{p+1}``."""
        return cls(tuple(np.eye(q)[0]))

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.eta)

    def multivector(self, sig: Signature) -> Multivector:
        return Multivector(embed_vector_q(self.vec, sig), sig)


ORIENTATIONS = ("y-x", "x-y")
WEIGHTS = ("hemisphere", "sphere")


@dataclass(frozen=True)
class KernelParams:
    """Kernel conventions shared by an experiment.

    Attributes:
        orientation: ``"y-x"`` evaluates E(y - x) (default), ``"x-y"`` E(x - y).
        weight: normalization of K.  ``"hemisphere"`` divides by the area of
            S^+ (``sigma(q)/2``), which makes the Cauchy formula and the left
            inverse exact; ``"sphere"`` divides by ``sigma(q)``.
    """

    sig: Signature
    eta: SliceEmbedding = None
    orientation: str = "y-x"
    weight: str = "hemisphere"

    def __post_init__(self):
        if self.eta is None:
            object.__setattr__(self, "eta", SliceEmbedding.first(self.sig.q))
        if len(self.eta.eta) != self.sig.q:
            raise ValueError(f"eta needs {self.sig.q} components")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        if self.weight not in WEIGHTS:
            raise ValueError(f"weight must be one of {WEIGHTS}")

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == "y-x" else -1.0

    @property
    def k_constant(self) -> float:
        s = sigma(self.sig.q)
        return s / 2 if self.weight == "hemisphere" else s


def E_stem_coeffs(Z, p: int) -> np.ndarray:
    """Coefficients of E(z) on ``(1, e_1, .., e_p, eta)`` for stem vectors ``z``.

    ``E(z) = conj(z) / (sigma_{p+1} |z|^{p+2})``.
    """
    Z = np.asarray(Z, dtype=float)
    m = p + 2
    nrm = np.sqrt(np.sum(Z * Z, axis=-1))
    if np.any(nrm == 0.0):
        raise SingularityError("Cauchy kernel evaluated at its pole")
    c = -Z / (sigma(m) * nrm[..., None] ** m)
    c[..., 0] = -c[..., 0]
    return c


def stem_paravector(C, eta, sig: Signature) -> np.ndarray:
    """Multivector of ``c_0 + sum_{i<=p} c_i e_i + c_{p+1} eta``."""
    C = np.asarray(C, dtype=float)
    eta = np.asarray(eta, dtype=float)
    V = C[..., sig.p + 1:] * eta
    S = np.broadcast_to(C[..., :sig.p + 1], V.shape[:-1] + (sig.p + 1,))
    X = np.concatenate([S, V], axis=-1)
    return paravector_array(X, sig.n)


def E_kernel(z, params: KernelParams, tol: float = 1e-12) -> Multivector:
    """E(z) inside R_{p+q} for a paravector ``z`` on the slice through ``eta``."""
    sig = params.sig
    if isinstance(z, Paravector):
        coords = z.coords()
    elif isinstance(z, Multivector):
        if not z.is_paravector(tol):
            raise ValueError("E_kernel needs a paravector argument")
        coords = z.coeffs[[0] + [1 << i for i in range(sig.n)]]
    else:
        coords = np.asarray(z, dtype=float)
    zq = coords[sig.p + 1:]
    rt = float(zq @ params.eta.vec)
    if np.linalg.norm(zq - rt * params.eta.vec) > tol * max(1.0, np.linalg.norm(coords)):
        raise ValueError("argument is not supported on span{1, e_1..e_p, eta}")
    zs = np.append(coords[:sig.p + 1], rt)
    return Multivector(stem_paravector(E_stem_coeffs(zs, sig.p), params.eta.vec, sig), sig)


def calE_array(ystem, eta, X, sig: Signature, orientation: str = "y-x") -> np.ndarray:
    """𝓔_y(x) with broadcasting over ``ystem (.., p+2)``, ``eta (.., q)``, ``X (.., n+1)``.

    At ``r = 0`` the direction of ``x`` is taken to be ``eta``; both terms
    then coincide.
    """
    ystem = np.asarray(ystem, dtype=float)
    eta = np.asarray(eta, dtype=float)
    X = np.asarray(X, dtype=float)
    xp, r, om = split_array(X, sig)
    om = np.where((r > 0)[..., None], om, eta)
    sgn = 1.0 if orientation == "y-x" else -1.0
    out = 0.0
    H = embed_vector_q(eta, sig)
    W = embed_vector_q(om, sig)
    wh = gp(W, H, sig.n)
    for s in (1.0, -1.0):
        xs = np.concatenate([xp, (s * r)[..., None]], axis=-1)
        E = stem_paravector(E_stem_coeffs(sgn * (ystem - xs), sig.p), eta, sig)
        coef = -s * 0.5 * wh
        coef[..., 0] += 0.5
        out = out + gp(coef, E, sig.n)
    return out


def calE(y, x, params: KernelParams) -> Multivector:
    """𝓔_y(x) for ``y`` given as a stem pair ``(y_p, r~)`` on the ``eta`` slice."""
    return Multivector(calE_array(y, params.eta.vec, x, params.sig, params.orientation), params.sig)


def K_array(Y, X, params: KernelParams) -> np.ndarray:
    """K_y(x) with ``Y`` and ``X`` points of R^{p+q+1}, broadcasting."""
    sig = params.sig
    yp, rho, eta = split_array(np.asarray(Y, dtype=float), sig)
    if sig.q > 1 and np.any(rho == 0.0):
        raise SingularityError("K_y has a weight singularity for y on R^{p+1}")
    eta = np.where((rho > 0)[..., None], eta, params.eta.vec)
    ys = np.concatenate([yp, rho[..., None]], axis=-1)
    val = calE_array(ys, eta, X, sig, params.orientation)
    return val / (params.k_constant * rho[..., None] ** (sig.q - 1))


def K_kernel(y, x, params: KernelParams) -> Multivector:
    return Multivector(K_array(y, x, params), params.sig)
