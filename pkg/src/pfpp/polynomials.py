"""Orthonormal reference polynomial bases defined by three-term recurrences.

A basis satisfies ``x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}`` with
``p_0 = 1``. Coefficient vectors in such a basis stay well conditioned where
monomial coefficients would not, and give exact values and derivatives
anywhere on the real line.
"""

import numpy as np


class RecurrenceBasis:
    def __init__(self, a, b, name="custom"):
        self._a = a
        self._b = b
        self.name = name

    @classmethod
    def legendre(cls, lo, hi):
        """Legendre polynomials mapped to [lo, hi], orthonormal for the uniform probability measure."""
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        a = lambda k: np.full(np.shape(k), c, dtype=float)  # noqa: E731
        b = lambda k: h * k / np.sqrt(np.maximum(4.0 * np.asarray(k, float) ** 2 - 1.0, 1.0))  # noqa: E731
        return cls(a, b, name=f"legendre[{lo:g},{hi:g}]")

    @classmethod
    def hermite(cls, sigma=1.0):
        """Hermite polynomials orthonormal for the Gaussian N(0, sigma^2)."""
        a = lambda k: np.zeros(np.shape(k))  # noqa: E731
        b = lambda k: sigma * np.sqrt(np.asarray(k, dtype=float))  # noqa: E731
        return cls(a, b, name=f"hermite[{sigma:g}]")

    def coefficients(self, degree):
        k = np.arange(degree + 2, dtype=float)
        return self._a(k), self._b(k)

    def vander(self, x, degree, deriv=False):
        """Matrix of p_k(x) (and p_k'(x) when ``deriv``) with shape (len(x), degree+1)."""
        x = np.asarray(x, dtype=float)
        a, b = self.coefficients(degree)
        P = np.zeros(x.shape + (degree + 1,))
        dP = np.zeros_like(P)
        P[..., 0] = 1.0
        if degree >= 1:
            P[..., 1] = (x - a[0]) / b[1]
            dP[..., 1] = 1.0 / b[1]
        for k in range(1, degree):
            P[..., k + 1] = ((x - a[k]) * P[..., k] - b[k] * P[..., k - 1]) / b[k + 1]
            dP[..., k + 1] = ((x - a[k]) * dP[..., k] + P[..., k] - b[k] * dP[..., k - 1]) / b[k + 1]
        return (P, dP) if deriv else P

    def mul_x(self, coeffs):
        """Coefficients of x f(x); the last coefficient must be zero on input (room to grow)."""
        c = np.asarray(coeffs, dtype=float)
        D = c.shape[-1]
        a, b = self.coefficients(D)
        out = c * a[:D]
        out[..., 1:] += c[..., :-1] * b[1:D]
        out[..., :-1] += c[..., 1:] * b[1:D]
        return out

    def __repr__(self):
        return f"RecurrenceBasis({self.name})"
