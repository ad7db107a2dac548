"""Vectorized multivector-valued fields on R^{p+q+1}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import Multivector, Signature


@dataclass(frozen=True)
class FieldFunction:
    """A field ``f : R^{p+q+1} -> R_{p+q}``.

    ``fn`` maps an array of points ``(N, n+1)`` to coefficients ``(N, 2**n)``
    and must be deterministic and reentrant.

    Attributes:
        domain: SliceDomain whose completion is where ``f`` may be evaluated
            (``None`` means everywhere).
        vartheta_bar: optional analytic ϑ̄f, another FieldFunction.
        stem: StemFunction when ``f`` is induced.
        support: SliceDomain containing the support of ``f`` (compactly
            supported fields only).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    sig: Signature
    domain: Optional[object] = None
    vartheta_bar: Optional["FieldFunction"] = None
    stem: Optional[object] = None
    support: Optional[object] = None
    name: str = field(default="f", compare=False)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return self.fn(X[None, :])[0]
        lead = X.shape[:-1]
        out = self.fn(X.reshape(-1, X.shape[-1]))
        return out.reshape(lead + (self.sig.dim,))

    def at(self, x) -> Multivector:
        return Multivector(self(np.asarray(x, dtype=float)), self.sig)

    def scaled(self, c: float) -> "FieldFunction":
        vb = None if self.vartheta_bar is None else self.vartheta_bar.scaled(c)
        stem = None if self.stem is None else self.stem.scaled(c)
        return FieldFunction(lambda X: c * self.fn(X), self.sig, self.domain, vb, stem,
                             self.support, f"{c:g}*{self.name}")

    def __add__(self, other: "FieldFunction") -> "FieldFunction":
        vb = None
        if self.vartheta_bar is not None and other.vartheta_bar is not None:
            vb = self.vartheta_bar + other.vartheta_bar
        return FieldFunction(lambda X: self.fn(X) + other.fn(X), self.sig, self.domain, vb,
                             name=f"{self.name}+{other.name}")


def constant_field(value, sig: Signature, domain=None) -> FieldFunction:
    c = np.asarray(getattr(value, "coeffs", value), dtype=float)
    if c.ndim == 0:
        c = np.zeros(sig.dim) + np.eye(sig.dim)[0] * float(c)

    def fn(X):
        return np.broadcast_to(c, (X.shape[0], sig.dim)).copy()

    zero = FieldFunction(lambda X: np.zeros((X.shape[0], sig.dim)), sig, domain, name="0")
    return FieldFunction(fn, sig, domain, vartheta_bar=zero, name="const")


def zero_field(sig: Signature, domain=None) -> FieldFunction:
    return constant_field(np.zeros(sig.dim), sig, domain)
