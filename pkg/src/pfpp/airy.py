"""Airy function values Ai, Ai' and the tail integral T(x) = ∫_x^∞ Ai."""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import RangeError

X_RANGE = (-30.0, 30.0)


@dataclass(frozen=True)
class AiryValues:
    x: float
    ai: float
    ai_prime: float
    ai_tail: float


def _check(x):
    x = np.asarray(x, dtype=float)
    if x.size and (not np.all(np.isfinite(x)) or x.min() < X_RANGE[0] or x.max() > X_RANGE[1]):
        raise RangeError(f"Airy evaluation supported on [{X_RANGE[0]:g}, {X_RANGE[1]:g}]")
    return x


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_H = 0.05
_TERMS = 18


def _panel(a, b):
    """∫_a^b Ai by 32-point Gauss-Legendre; exact to rounding for |b - a| <= 1."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    h = 0.5 * (b - a)
    t = (0.5 * (a + b))[..., None] + h[..., None] * _GL_X
    return h * (special.airy(t)[0] @ _GL_W)


def _build_table():
    """Taylor data at nodes x0 = -30, -29.95, ..., 30.

    Row i holds T(x0) followed by Ai^(k)(x0)/k!, k < _TERMS. Derivatives
    follow from Ai'' = x Ai: Ai^(k+2) = x Ai^(k) + k Ai^(k-1).
    """
    x0 = np.linspace(X_RANGE[0], X_RANGE[1], int(round((X_RANGE[1] - X_RANGE[0]) / _H)) + 1)
    a, ap, _, _ = special.airy(x0)
    d = np.zeros((x0.size, _TERMS))
    d[:, 0], d[:, 1] = a, ap
    for k in range(_TERMS - 2):
        d[:, k + 2] = x0 * d[:, k] + (k * d[:, k - 1] if k else 0.0)
    fact = np.cumprod(np.r_[1.0, np.arange(1, _TERMS)])
    # T(x0) by panel quadrature between unit edges, summed from the right
    edges = np.arange(X_RANGE[0], X_RANGE[1] + 1.0)
    right = np.append(np.cumsum(_panel(edges[:-1], edges[1:])[::-1])[::-1], 0.0)
    k = np.ceil(x0 - 1e-12)
    tail = right[(k - X_RANGE[0]).astype(int)] + _panel(x0, k)
    return x0, tail, d / fact


_X0, _T0, _C = _build_table()


def _local(x):
    x = _check(x)
    i = np.rint((x - X_RANGE[0]) / _H).astype(int)
    return x - _X0[i], i


def ai(x):
    """Ai and Ai' (vectorised)."""
    dx, i = _local(x)
    c = _C[i]
    val = np.zeros_like(dx)
    der = np.zeros_like(dx)
    for k in range(_TERMS - 1, -1, -1):
        val = val * dx + c[..., k]
        if k:
            der = der * dx + k * c[..., k]
    return val, der


def ai_tail(x):
    """T(x) = ∫_x^∞ Ai(t) dt (vectorised).

    Tabulated by panel quadrature and continued by integrating the local
    Taylor series of Ai, which keeps relative accuracy for large positive x.
    """
    dx, i = _local(x)
    c = _C[i]
    acc = np.zeros_like(dx)
    for k in range(_TERMS - 1, -1, -1):
        acc = acc * dx + c[..., k] / (k + 1)
    return _T0[i] - acc * dx


def airy_eval(x):
    a, ap = ai(x)
    return AiryValues(float(x), float(a), float(ap), float(ai_tail(x)))
