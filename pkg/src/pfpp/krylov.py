"""Skew-symmetric inner products, symplectic Gram-Schmidt and the symplectic
Arnoldi iteration for skew-orthogonal polynomials (SOPs)."""

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import BreakdownError, ShapeError, SingularPivotError
from .polynomials import RecurrenceBasis
from .skew import skew_cholesky, standard_symplectic

BREAKDOWN_RTOL = 1e-14
DEFAULT_ETA = 0.75


class EsrKind(str, Enum):
    ESR1 = "ESR1"
    ESR2 = "ESR2"
    ESR3 = "ESR3"
    ESR3M = "ESR3M"


class PolyVector:
    """Polynomial(s) stored both as values on the domain nodes and as
    coefficients in the inner product's reference basis.

    Either a single polynomial (1-d arrays) or a block of them (2-d arrays,
    one polynomial per row). Linear combinations act on both representations.
    """

    __slots__ = ("values", "coeffs")

    def __init__(self, values, coeffs):
        self.values = np.asarray(values, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __len__(self):
        return self.values.shape[0] if self.values.ndim == 2 else 1

    def __getitem__(self, i):
        return PolyVector(self.values[i], self.coeffs[i])

    def __add__(self, other):
        return PolyVector(self.values + other.values, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return PolyVector(self.values - other.values, self.coeffs - other.coeffs)

    def __mul__(self, s):
        return PolyVector(self.values * s, self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return PolyVector(self.values / s, self.coeffs / s)

    def __neg__(self):
        return PolyVector(-self.values, -self.coeffs)

    def combine(self, h):
        """``Σ_k h_k self[k]`` for a block ``self``."""
        return PolyVector(h @ self.values, h @ self.coeffs)

    @staticmethod
    def stack(items):
        return PolyVector(np.stack([p.values for p in items]), np.stack([p.coeffs for p in items]))

    def degree(self, tol=0.0):
        nz = np.nonzero(np.abs(self.coeffs) > tol * np.max(np.abs(self.coeffs)))[0]
        return int(nz[-1]) if nz.size else -1


class SkewInnerProduct:
    """A skew-symmetric bilinear form on polynomials.

    Build with one of the constructors: :meth:`beta1_discrete`,
    :meth:`beta4_discrete`, :meth:`beta1_continuous`, :meth:`beta4_continuous`.
    ``nodes`` are the points where polynomial values are stored (the discrete
    domain, or quadrature nodes in the continuous case).
    """

    def __init__(self, kind, nodes, basis, max_degree, weight):
        self.kind = kind
        self.nodes = np.asarray(nodes, dtype=float)
        self.basis = basis
        self.max_degree = max_degree
        self.weight = weight
        self._V, self._dV = basis.vander(self.nodes, max_degree, deriv=True)
        self._omega = None
        self._qw2 = None
        self._w = None

    @property
    def discrete(self):
        return self.kind.endswith("discrete")

    @property
    def beta(self):
        return 1 if self.kind.startswith("beta1") else 4

    # constructors

    @classmethod
    def beta1_discrete(cls, nodes, weight, max_degree=None, basis=None):
        """Σ_{x,y} f(x) g(y) ½ sign(y - x) w(x) w(y) over distinct nodes."""
        nodes, w = _sorted_nodes(nodes, weight)
        max_degree = len(nodes) - 1 if max_degree is None else max_degree
        if basis is None:
            basis = (RecurrenceBasis.legendre(nodes[0], nodes[-1]) if len(nodes) > 1
                     else RecurrenceBasis.legendre(nodes[0] - 1.0, nodes[0] + 1.0))
        ip = cls("beta1_discrete", nodes, basis, max_degree, weight)
        ip._w = w
        return ip

    @classmethod
    def beta4_discrete(cls, nodes, weight, max_degree=None, basis=None):
        """Σ_x (f g' - f' g)(x) w(x)^2."""
        nodes, w = _sorted_nodes(nodes, weight)
        max_degree = max(len(nodes) - 1, 1) if max_degree is None else max_degree
        if basis is None:
            basis = (RecurrenceBasis.legendre(nodes[0], nodes[-1]) if len(nodes) > 1
                     else RecurrenceBasis.legendre(nodes[0] - 1.0, nodes[0] + 1.0))
        ip = cls("beta4_discrete", nodes, basis, max_degree, weight)
        ip._qw2 = w ** 2
        return ip

    @classmethod
    def beta1_continuous(cls, weight, interval, max_degree, basis=None, nodes=None):
        """½ ∫∫ f(x) g(y) sign(y - x) w(x) w(y) dx dy over ``interval``.

        The inner integral is split at x: with G(x) = ∫_lo^x g w, the form is
        ½ ∫ f w (G(hi) - 2 G(x)) dx. G is integrated spectrally on a Chebyshev
        grid, so the split is exact up to interpolation error.
        """
        lo, hi = interval
        m = nodes or max(256, 8 * max_degree + 64)
        t = _cheb_points(m, lo, hi)
        basis = basis or RecurrenceBasis.legendre(lo, hi)
        ip = cls("beta1_continuous", t, basis, max_degree, weight)
        w = np.asarray(weight(t), dtype=float)
        cum = _cheb_cumulative_matrix(m, lo, hi)
        cw = cum[-1]
        omega = 0.5 * (cw * w)[:, None] * (np.outer(np.ones(m), cw * w) - 2.0 * cum * w[None, :])
        ip._omega = 0.5 * (omega - omega.T)
        ip._cum = cum
        ip._w = w
        return ip

    @classmethod
    def beta4_continuous(cls, weight, interval, max_degree, basis=None, nodes=None):
        """∫ (f g' - f' g) w^2 dx with Gauss-Legendre quadrature on ``interval``."""
        lo, hi = interval
        m = nodes or max(200, 4 * max_degree + 40)
        x, q = np.polynomial.legendre.leggauss(m)
        x = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        q = 0.5 * (hi - lo) * q
        basis = basis or RecurrenceBasis.legendre(lo, hi)
        ip = cls("beta4_continuous", x, basis, max_degree, weight)
        ip._qw2 = q * np.asarray(weight(x), dtype=float) ** 2
        return ip

    # polynomial construction

    def from_coeffs(self, coeffs):
        c = np.zeros(np.shape(coeffs)[:-1] + (self.max_degree + 1,))
        c[..., :np.shape(coeffs)[-1]] = coeffs
        return PolyVector(c @ self._V.T, c)

    def constant(self):
        return self.from_coeffs([1.0])

    def monomials(self, n):
        """x^0 ... x^{n-1} as a block."""
        rows = [self.constant()]
        for _ in range(1, n):
            rows.append(self.times_x(rows[-1]))
        return PolyVector.stack(rows)

    def times_x(self, f):
        if f.coeffs[..., -1].any():
            raise ShapeError(f"degree would exceed max_degree={self.max_degree}")
        return PolyVector(f.values * self.nodes, self.basis.mul_x(f.coeffs))

    def derivative_values(self, f):
        return f.coeffs @ self._dV.T

    def evaluate(self, f, x, deriv=False):
        """Values (and optionally derivatives) of ``f`` at arbitrary points."""
        P = self.basis.vander(np.asarray(x, dtype=float), self.max_degree, deriv=deriv)
        if deriv:
            return P[0] @ f.coeffs.T, P[1] @ f.coeffs.T
        return P @ f.coeffs.T

    # forms

    def pair(self, F, G):
        """Matrix ``[⟨F_i, G_j⟩]`` for blocks (or single polynomials) F and G."""
        Fv, Gv = np.atleast_2d(F.values), np.atleast_2d(G.values)
        if Fv.shape[1] != self.nodes.size or Gv.shape[1] != self.nodes.size:
            raise ShapeError("polynomials are not on this inner product's domain")
        if self.kind == "beta1_discrete":
            Gw = Gv * self._w
            cs = np.cumsum(Gw, axis=1)
            t = 0.5 * ((cs[:, -1:] - cs) - (cs - Gw))
            return (Fv * self._w) @ t.T
        if self.kind == "beta1_continuous":
            return Fv @ self._omega @ Gv.T
        Fd = np.atleast_2d(self.derivative_values(F))
        Gd = np.atleast_2d(self.derivative_values(G))
        return (Fv * self._qw2) @ Gd.T - (Fd * self._qw2) @ Gv.T

    def __call__(self, f, g):
        return float(self.pair(f, g)[0, 0])

    def magnitude(self, f, g):
        """Upper bound for |⟨f, g⟩|: the same form with |kernel| and |integrand|."""
        fv, gv = np.abs(f.values), np.abs(g.values)
        if self.kind == "beta1_discrete":
            return 0.5 * float(np.sum(fv * self._w) * np.sum(gv * self._w))
        if self.kind == "beta1_continuous":
            return float(fv @ np.abs(self._omega) @ gv)
        fd, gd = np.abs(self.derivative_values(f)), np.abs(self.derivative_values(g))
        return float(np.sum(self._qw2 * (fv * gd + fd * gv)))

    def gram(self, S):
        return self.pair(S, S)

    def norm(self, f):
        """Euclidean norm of the representation: node values (discrete) or coefficients."""
        return float(np.linalg.norm(f.values if self.discrete else f.coeffs))

    def dot(self, f, g):
        if self.discrete:
            return float(f.values @ g.values)
        return float(f.coeffs @ g.coeffs)


def skew_inner(ip, f, g):
    """⟨f, g⟩ under ``ip``."""
    return ip(f, g)


def _sorted_nodes(nodes, weight):
    x = np.asarray(nodes, dtype=float).ravel()
    w = np.asarray(weight(x) if callable(weight) else weight, dtype=float)
    w = np.broadcast_to(w, x.shape).astype(float)
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    if x.size == 0 or np.any(np.diff(x) <= 0):
        raise ShapeError("discrete domain needs distinct nodes")
    return x, w


def _cheb_points(m, lo, hi):
    k = np.arange(m)
    t = -np.cos(np.pi * k / (m - 1))
    return 0.5 * (hi - lo) * t + 0.5 * (hi + lo)


def _cheb_cumulative_matrix(m, lo, hi):
    """Matrix mapping values at Chebyshev points to ∫_lo^{t_i} of their interpolant."""
    t = -np.cos(np.pi * np.arange(m) / (m - 1))
    V = C.chebvander(t, m - 1)
    coef_int = C.chebint(np.eye(m), lbnd=-1.0, axis=0) * (0.5 * (hi - lo))
    Vi = C.chebvander(t, m)
    return Vi @ coef_int @ np.linalg.inv(V)


# Gram-Schmidt


def esr_normalize(kind, x1, x2=None, ip=None):
    """(r11, r12) of the elementary SR step for the pair (x1, x2).

    ESR1: (‖x1‖, 0); ESR2: (‖x1‖, s1ᵀ x2); ESR3: (|⟨x1, x2⟩|, 0); ESR3M: (1, 0).
    Norms and dot products are those of ``ip`` (Euclidean on the
    representation); plain arrays are accepted when ``ip`` is omitted.
    """
    kind = EsrKind(kind)
    norm = ip.norm if ip else (lambda f: float(np.linalg.norm(f)))
    dot = ip.dot if ip else (lambda f, g: float(np.dot(f, g)))
    if kind is EsrKind.ESR3M:
        return 1.0, 0.0
    if kind is EsrKind.ESR3:
        if x2 is None or ip is None:
            raise ValueError("ESR3 needs x2 and the skew inner product")
        r11 = abs(ip(x1, x2))
        if r11 == 0.0:
            raise BreakdownError("ESR3: ⟨x1, x2⟩ = 0")
        return r11, 0.0
    r11 = norm(x1)
    if r11 == 0.0:
        raise BreakdownError("zero norm in ESR normalisation")
    if kind is EsrKind.ESR1 or x2 is None:
        return r11, 0.0
    return r11, dot(x1, x2) / r11


def _r11(esr, v, ip):
    if esr in (EsrKind.ESR1, EsrKind.ESR2):
        return ip.norm(v)
    return 1.0


def _r12(esr, s, v, ip):
    if esr is EsrKind.ESR2:
        return ip.dot(s, v)
    return 0.0


def skew_orthonormalize(S, v, ip, esr=EsrKind.ESR2, scheme="CSGS", reorth="iterated",
                        eta=DEFAULT_ETA, normalize=True):
    """Skew-orthogonalise ``v`` against the symplectic prefix ``S``.

    Returns ``(v', h)`` with ``v = Σ_k h_k S_k + h_n v'`` (``len(h) = n + 1``).
    With ``normalize=False`` the last entry is left at zero and ``v'`` is the
    unscaled remainder.

    ``reorth`` is ``"none"`` (one sweep), ``"twice"`` or ``"iterated"``
    (repeat while the norm drops below ``eta`` times its previous value).
    """
    esr = EsrKind(esr)
    n = 0 if S is None else len(S)
    v_in = v
    h = np.zeros(n + 1)
    npair = n // 2
    P = S[:2 * npair] if npair else None
    last = S[n - 1] if n % 2 else None
    sweeps = 0
    prev = math.inf
    while True:
        cur = ip.norm(v)
        if sweeps > 0:
            if reorth == "none" or (reorth == "twice" and sweeps >= 2):
                break
            if reorth == "iterated" and not cur < eta * prev:
                break
        prev = cur
        sweeps += 1
        if npair:
            if scheme == "CSGS":
                c = ip.pair(P, v)[:, 0]
                dh = np.empty(2 * npair)
                dh[0::2] = -c[1::2]
                dh[1::2] = c[0::2]
                v = v - P.combine(dh)
                h[:2 * npair] += dh
            elif scheme == "MSGS":
                for k in range(npair):
                    c = ip.pair(P[2 * k:2 * k + 2], v)[:, 0]
                    d0, d1 = -c[1], c[0]
                    v = v - (P[2 * k] * d0 + P[2 * k + 1] * d1)
                    h[2 * k] += d0
                    h[2 * k + 1] += d1
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
        if last is not None:
            d = _r12(esr, last, v, ip)
            h[n - 1] += d
            v = v - last * d
        if n == 0:
            break
    if not normalize:
        return v, h
    # the pairing coefficient is judged against the size of the skew form
    # itself; Euclidean norms are dominated by nodes where the weight is tiny
    if last is not None:
        h[n] = size = ip(last, v)
        scale = ip.magnitude(last, v_in)
    else:
        h[n] = _r11(esr, v, ip)
        size, scale = ip.norm(v), ip.norm(v_in)
    if not abs(size) > BREAKDOWN_RTOL * scale:
        raise BreakdownError(f"breakdown at step {n}: |h| = {abs(h[n]):.3e}")
    return v / h[n], h


@dataclass
class SymplecticBasis:
    """``S`` (block PolyVector), recurrence matrix ``H`` and residual ``r``
    with ``x S = S H + r e_{n-1}ᵀ`` (``H``/``r`` are None for the Cholesky route)."""

    S: PolyVector
    H: np.ndarray = None
    r: PolyVector = None

    def __len__(self):
        return len(self.S)


def symplectic_arnoldi(ip, n, esr=EsrKind.ESR2, scheme="CSGS", reorth="iterated", eta=DEFAULT_ETA):
    """n skew-orthonormal polynomials S_0 ... S_{n-1} (deg S_k = k) by Arnoldi
    on multiplication by x, starting from the constant polynomial."""
    esr = EsrKind(esr)
    if n < 1:
        raise ShapeError("need n >= 1")
    if ip.discrete and ip.nodes.size < n + 1:
        raise ShapeError(f"{ip.nodes.size} nodes cannot support {n} basis polynomials")
    if ip.max_degree < n:
        raise ShapeError(f"inner product max_degree {ip.max_degree} < {n}")
    one = ip.constant()
    rows = [one / _r11(esr, one, ip)]
    H = np.zeros((n, n))
    for k in range(1, n):
        v = ip.times_x(rows[-1])
        v, h = skew_orthonormalize(PolyVector.stack(rows), v, ip, esr, scheme, reorth, eta)
        H[:k + 1, k - 1] = h
        rows.append(v)
        if esr is EsrKind.ESR3 and k % 2 == 1:
            c = abs(h[k])
            rows[k - 1] = rows[k - 1] / c
            rows[k] = rows[k] * c
            H[k - 1, :] *= c
            H[k, :] /= c
            H[:, k - 1] /= c
    S = PolyVector.stack(rows)
    r, h = skew_orthonormalize(S, ip.times_x(rows[-1]), ip, esr, scheme, reorth, eta, normalize=False)
    H[:, n - 1] = h[:n]
    return SymplecticBasis(S, H, r)


def cholesky_sop(ip, n, rtol=0.0):
    """SOPs from the skew Cholesky factor of the moment matrix M = (⟨x^i, x^j⟩).

    With M = L J Lᵀ (L lower triangular), the rows of L^-1 applied to the
    monomials are skew-orthonormal. Pivots are accepted down to ``rtol``
    times the largest moment; the default takes any nonzero pivot, so the
    loss of accuracy with n shows up in the Gram error rather than as an error.
    """
    if n % 2:
        raise ShapeError("moment matrix order must be even")
    Mon = ip.monomials(n)
    M = ip.gram(Mon)
    fac = skew_cholesky(0.5 * (M - M.T), pivot=False, rtol=rtol)
    if not np.all(fac.pivots):
        raise SingularPivotError("moment matrix is rank deficient")
    Linv = np.linalg.inv(fac.B)
    return SymplecticBasis(PolyVector(Linv @ Mon.values, Linv @ Mon.coeffs))


def skew_orthogonality_error(S, ip):
    """(max, mean) of |⟨S_i, S_j⟩ - J_ij| over all pairs."""
    S = S.S if isinstance(S, SymplecticBasis) else S
    m = len(S)
    if m < 2:
        raise ShapeError("need at least two vectors")
    J = np.zeros((m, m))
    J[:2 * (m // 2), :2 * (m // 2)] = standard_symplectic(m // 2)
    E = np.abs(ip.gram(S) - J)
    return float(E.max()), float(E.mean())


def export_sop(basis, ip, path):
    """Write the SOPs as CSV rows (node values, or reference-basis coefficients
    for continuous inner products) plus a JSON sidecar with H."""
    S = basis.S
    data = S.values if ip.discrete else S.coeffs
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        cols = ip.nodes if ip.discrete else np.arange(S.coeffs.shape[1])
        w.writerow(["k"] + [f"{c:.17g}" for c in cols])
        for k, row in enumerate(data):
            w.writerow([k] + [f"{x:.17g}" for x in row])
    side = {
        "kind": ip.kind,
        "representation": "values" if ip.discrete else "coefficients",
        "basis": ip.basis.name,
        "H": None if basis.H is None else basis.H.tolist(),
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=1)
