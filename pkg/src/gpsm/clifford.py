"""Real Clifford algebra R_{p+q} with negative-definite generators.

Elements are stored densely: a multivector over ``n`` generators is an array
of ``2**n`` real coefficients, and coefficient ``b`` belongs to the basis blade
whose generators are the set bits of ``b`` (bit ``i-1`` stands for ``e_i``).
Index 0 is the scalar part.

Two layers are provided.  The array layer (``gp``, ``conjugate_array`` ...)
works on stacks of coefficient arrays of shape ``(..., 2**n)`` and is what
the quadrature code uses.  The :class:`Multivector` and :class:`Paravector`
classes wrap single elements for the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_GENERATORS = 12
SIGN_TABLE_LIMIT = 8


class AlgebraError(ValueError):
    """Base class for algebra misuse."""


class SignatureMismatch(AlgebraError):
    pass


class DomainError(AlgebraError):
    """Raised when an operation is undefined for its argument (e.g. 0^-1)."""


@dataclass(frozen=True)
class Signature:
    """Generator split ``n = p + q``; ``e_1..e_p`` and ``e_{p+1}..e_{p+q}``."""

    p: int
    q: int

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q:
            raise AlgebraError("p and q must be integers")
        if self.p < 0:
            raise AlgebraError(f"p must be non-negative, got {self.p}")
        if self.q < 1:
            raise AlgebraError(f"q must be positive, got {self.q}")
        if self.p + self.q > MAX_GENERATORS:
            raise AlgebraError(
                f"p + q = {self.p + self.q} exceeds the cap of {MAX_GENERATORS} generators")

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def dim(self) -> int:
        """Number of blades, ``2**n``."""
        return 1 << self.n

    @property
    def point_dim(self) -> int:
        """Dimension of the paravector space ``R^{n+1}``."""
        return self.n + 1

    @property
    def stem_dim(self) -> int:
        """Dimension ``p + 2`` of a slice / stem domain."""
        return self.p + 2


def _popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


def blade_product(a_mask: int, b_mask: int, sig: Signature | None = None) -> tuple[int, int]:
    """Product of two basis blades as ``(sign, mask)``.

    The sign counts the transpositions needed to sort ``e_A e_B`` into
    canonical order, plus one factor of -1 for each generator that appears in
    both blades (``e_i^2 = -1``).
    """
    a_mask, b_mask = int(a_mask), int(b_mask)
    if a_mask < 0 or b_mask < 0:
        raise AlgebraError("blade masks must be non-negative")
    if sig is not None and max(a_mask, b_mask) >= sig.dim:
        raise AlgebraError(f"blade mask out of range for n = {sig.n}")
    swaps = 0
    a = a_mask >> 1
    while a:
        swaps += (a & b_mask).bit_count()
        a >>= 1
    swaps += (a_mask & b_mask).bit_count()
    return (-1 if swaps & 1 else 1), a_mask ^ b_mask


def _sign_row(a: int, n: int) -> np.ndarray:
    b = np.arange(1 << n, dtype=np.int64)
    swaps = _popcount(a & b)
    for k in range(1, n):
        swaps += _popcount((a >> k) & b)
    return np.where(swaps & 1, -1.0, 1.0)


@lru_cache(maxsize=None)
def sign_table(n: int) -> np.ndarray:
    """``table[a, b]`` is the sign of ``e_a e_b``; only built for small ``n``."""
    if n > SIGN_TABLE_LIMIT:
        raise AlgebraError(f"sign table is only precomputed for n <= {SIGN_TABLE_LIMIT}")
    table = np.stack([_sign_row(a, n) for a in range(1 << n)])
    table.setflags(write=False)
    return table


def _signs_for(a: int, n: int) -> np.ndarray:
    if n <= SIGN_TABLE_LIMIT:
        return sign_table(n)[a]
    return _sign_row(a, n)


@lru_cache(maxsize=None)
def grades(n: int) -> np.ndarray:
    g = _popcount(np.arange(1 << n))
    g.setflags(write=False)
    return g


@lru_cache(maxsize=None)
def _involution_signs(n: int, kind: str) -> np.ndarray:
    k = grades(n)
    if kind == "conjugate":
        e = k * (k + 1) // 2
    elif kind == "reverse":
        e = k * (k - 1) // 2
    else:  # grade involution
        e = k
    s = np.where(e % 2, -1.0, 1.0)
    s.setflags(write=False)
    return s


def _n_of(arr: np.ndarray) -> int:
    dim = arr.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise AlgebraError(f"last axis must have length 2**n, got {dim}")
    return n


def gp(A, B, n: int | None = None) -> np.ndarray:
    """Geometric product of coefficient stacks, broadcasting leading axes.

    Blades whose column in ``A`` is identically zero are skipped, so products
    with paravectors or other sparse factors cost little.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[-1] != B.shape[-1]:
        raise SignatureMismatch("multivector arrays have different blade counts")
    if n is None:
        n = _n_of(A)
    dim = 1 << n
    idx = np.arange(dim)
    out = np.zeros(np.broadcast_shapes(A.shape, B.shape), dtype=float)
    support = np.flatnonzero(np.any(A.reshape(-1, dim) != 0.0, axis=0))
    for a in support:
        perm = a ^ idx
        out += A[..., a:a + 1] * (_signs_for(int(a), n)[perm] * B[..., perm])
    return out


def left_mul_blade(mask: int, A, n: int | None = None) -> np.ndarray:
    """``e_mask * A`` for a stack ``A``; a signed permutation of columns."""
    A = np.asarray(A, dtype=float)
    if n is None:
        n = _n_of(A)
    perm = mask ^ np.arange(1 << n)
    return _signs_for(mask, n)[perm] * A[..., perm]


def conjugate_array(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return A * _involution_signs(_n_of(A), "conjugate")


def reverse_array(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return A * _involution_signs(_n_of(A), "reverse")


def involute_array(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return A * _involution_signs(_n_of(A), "involute")


def norm_array(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.sqrt(np.sum(A * A, axis=-1))


def vector_masks(n: int) -> np.ndarray:
    """Blade index of ``e_0 = 1, e_1, ..., e_n``."""
    return np.array([0] + [1 << i for i in range(n)], dtype=np.int64)


def paravector_array(X, n: int) -> np.ndarray:
    """Embed points ``(..., n+1)`` of ``R^{n+1}`` as paravector coefficient stacks."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != n + 1:
        raise AlgebraError(f"expected {n + 1} coordinates, got {X.shape[-1]}")
    out = np.zeros(X.shape[:-1] + (1 << n,))
    out[..., vector_masks(n)] = X
    return out


def paravector_coords(A) -> np.ndarray:
    """Inverse of :func:`paravector_array`; other grades are dropped."""
    A = np.asarray(A, dtype=float)
    return A[..., vector_masks(_n_of(A))]


def blade_name(mask: int) -> str:
    if mask == 0:
        return "1"
    return "e" + "".join(str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1)


class Multivector:
    """Immutable element of R_{p+q}."""

    __slots__ = ("coeffs", "sig")

    def __init__(self, coeffs, sig: Signature):
        c = np.array(coeffs, dtype=float)
        if c.shape != (sig.dim,):
            raise AlgebraError(f"expected {sig.dim} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "sig", sig)

    def __setattr__(self, name, value):
        raise AttributeError("Multivector is immutable")

    @classmethod
    def zero(cls, sig: Signature) -> Multivector:
        return cls(np.zeros(sig.dim), sig)

    @classmethod
    def scalar(cls, value: float, sig: Signature) -> Multivector:
        c = np.zeros(sig.dim)
        c[0] = value
        return cls(c, sig)

    @classmethod
    def blade(cls, mask: int, sig: Signature, value: float = 1.0) -> Multivector:
        if not 0 <= mask < sig.dim:
            raise AlgebraError(f"blade mask {mask} out of range")
        c = np.zeros(sig.dim)
        c[mask] = value
        return cls(c, sig)

    @classmethod
    def e(cls, *indices: int, sig: Signature) -> Multivector:
        """Product ``e_{i1} e_{i2} ...`` of generators (index 0 means 1)."""
        out = cls.scalar(1.0, sig)
        for i in indices:
            if not 0 <= i <= sig.n:
                raise AlgebraError(f"generator index {i} out of range")
            if i:
                out = out * cls.blade(1 << (i - 1), sig)
        return out

    @classmethod
    def from_point(cls, x, sig: Signature) -> Multivector:
        return cls(paravector_array(x, sig.n), sig)

    def _check(self, other: Multivector):
        if other.sig != self.sig:
            raise SignatureMismatch(f"{self.sig} vs {other.sig}")

    def _coerce(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            return other
        if np.isscalar(other):
            return Multivector.scalar(float(other), self.sig)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Multivector(self.coeffs + other.coeffs, self.sig)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Multivector(self.coeffs - other.coeffs, self.sig)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return Multivector(-self.coeffs, self.sig)

    def __mul__(self, other):
        if np.isscalar(other):
            return Multivector(self.coeffs * float(other), self.sig)
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Multivector(self.coeffs * float(other), self.sig)
        return NotImplemented

    def __truediv__(self, other):
        if np.isscalar(other):
            return Multivector(self.coeffs / float(other), self.sig)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.sig == other.sig and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.sig, self.coeffs.tobytes()))

    def __repr__(self):
        terms = [f"{c:g}" + ("" if b == 0 else " " + blade_name(b))
                 for b, c in enumerate(self.coeffs) if c != 0.0]
        return "Multivector(" + (" + ".join(terms) or "0") + ")"

    def conjugate(self) -> Multivector:
        return conjugate(self)

    def reverse(self) -> Multivector:
        return reverse(self)

    def scalar_part(self) -> float:
        return scalar_part(self)

    def norm(self) -> float:
        return norm(self)

    def grade(self, k: int) -> Multivector:
        return Multivector(np.where(grades(self.sig.n) == k, self.coeffs, 0.0), self.sig)

    def is_paravector(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[grades(self.sig.n) > 1]) <= tol))

    def allclose(self, other: Multivector, atol: float = 1e-12, rtol: float = 0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))


@dataclass(frozen=True)
class Paravector:
    """``x0 + sum_i vec[i-1] e_i``."""

    x0: float
    vec: tuple
    sig: Signature

    def __post_init__(self):
        vec = tuple(float(v) for v in np.ravel(self.vec))
        if len(vec) != self.sig.n:
            raise AlgebraError(f"paravector needs {self.sig.n} vector coefficients, got {len(vec)}")
        object.__setattr__(self, "vec", vec)
        object.__setattr__(self, "x0", float(self.x0))

    @classmethod
    def from_point(cls, x, sig: Signature) -> Paravector:
        x = np.asarray(x, dtype=float)
        return cls(x[0], tuple(x[1:]), sig)

    @classmethod
    def from_multivector(cls, a: Multivector, tol: float = 0.0) -> Paravector:
        if not a.is_paravector(tol):
            raise AlgebraError("multivector has components of grade >= 2")
        c = paravector_coords(a.coeffs)
        return cls(c[0], tuple(c[1:]), a.sig)

    def coords(self) -> np.ndarray:
        return np.array((self.x0,) + self.vec)

    def to_multivector(self) -> Multivector:
        return Multivector.from_point(self.coords(), self.sig)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords()))

    def inverse(self) -> Paravector:
        return paravector_inverse(self)


def _as_mv(a) -> Multivector:
    if isinstance(a, Paravector):
        return a.to_multivector()
    if not isinstance(a, Multivector):
        raise TypeError(f"expected Multivector, got {type(a).__name__}")
    return a


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    a, b = _as_mv(a), _as_mv(b)
    if a.sig != b.sig:
        raise SignatureMismatch(f"{a.sig} vs {b.sig}")
    return Multivector(gp(a.coeffs, b.coeffs, a.sig.n), a.sig)


def conjugate(a: Multivector) -> Multivector:
    """Clifford conjugation as the anti-automorphism with ``conj(e_i) = -e_i``.

    On a grade-k blade this is the sign ``(-1)^{k(k+1)/2}``.
    """
    a = _as_mv(a)
    return Multivector(conjugate_array(a.coeffs), a.sig)


def reverse(a: Multivector) -> Multivector:
    a = _as_mv(a)
    return Multivector(reverse_array(a.coeffs), a.sig)


def scalar_part(a: Multivector) -> float:
    return float(_as_mv(a).coeffs[0])


def norm(a: Multivector) -> float:
    return float(norm_array(_as_mv(a).coeffs))


def paravector_inverse(x):
    """``conj(x) / |x|^2``; returns the same kind (Paravector or Multivector) it got."""
    as_para = isinstance(x, Paravector)
    mv = _as_mv(x)
    if not mv.is_paravector():
        raise AlgebraError("paravector_inverse needs a paravector (grades 0 and 1 only)")
    nrm2 = float(np.dot(mv.coeffs, mv.coeffs))
    if nrm2 == 0.0:
        raise DomainError("the zero paravector has no inverse")
    inv = Multivector(conjugate_array(mv.coeffs) / nrm2, mv.sig)
    return Paravector.from_multivector(inv) if as_para else inv
