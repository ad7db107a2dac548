"""Independent complex-analysis references for p=0, q=1 on the unit circle.

Points ``x0 + x1 e1`` are identified with ``x0 + i x1``.  Nothing here uses
the Clifford code paths.
"""

from __future__ import annotations

import numpy as np


def to_complex(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    return c[..., 0] + 1j * c[..., 1]


def from_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def circle_nodes(n: int, offset: float = 0.0):
    t = offset + 2 * np.pi * np.arange(n) / n
    return np.exp(1j * t), 2 * np.pi / n


def cauchy_integral(f, z, n: int = 4096, radius: float = 1.0) -> complex:
    """``(1/2πi) ∮ f(ζ)/(ζ - z) dζ`` by the trapezoid rule."""
    u, h = circle_nodes(n, 0.5 * np.pi / n)
    zeta = radius * u
    dzeta = 1j * zeta * h
    return complex(np.sum(f(zeta) / (zeta - z) * dzeta) / (2j * np.pi))


def sokhotski(f, z0, n: int = 4096):
    """Boundary values at ``z0`` on the unit circle.

    Returns:
        (inner, outer, principal) where the principal value is
        ``(1/2πi) ∮ (f(ζ) - f(z0))/(ζ - z0) dζ + f(z0)/2`` and the one-sided
        limits are ``principal ± f(z0)/2``.
    """
    u, h = circle_nodes(n, 0.5 * np.pi / n)
    dzeta = 1j * u * h
    fz = f(np.asarray(z0))
    pv = complex(np.sum((f(u) - fz) / (u - z0) * dzeta) / (2j * np.pi) + 0.5 * fz)
    return pv + 0.5 * fz, pv - 0.5 * fz, pv
