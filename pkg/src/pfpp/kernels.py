"""2x2 matrix-valued PfPP kernels, their discretisation and derived quantities.

A kernel evaluates to an array of shape ``(m, n, 2, 2)`` for point arrays of
length m and n; ``matrix`` interleaves it into the ``(2m, 2n)`` skew layout
used by :mod:`pfpp.skew` (point i owns rows 2i, 2i+1).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from . import airy
from .errors import ConditioningError, NumericalFailure, RangeError, ShapeError
from .krylov import EsrKind, SkewInnerProduct, symplectic_arnoldi
from .polynomials import RecurrenceBasis
from .skew import SkewMatrix, pfaffian, standard_symplectic

FAMILIES = ("GOE_N", "GSE_N", "AIRY1", "AIRY4", "CORNER_GROWTH", "CUSTOM")
AIRY_SUPPORT = (-12.0, 20.0)
AIRY_Z_MAX = 14.0


class Kernel2x2:
    """Matrix-valued kernel on a continuous interval or a discrete node set.

    Parameters
    ----------
    family : str
    params : dict
        Family parameters, recorded for sidecars.
    blocks : callable
        ``blocks(x, y) -> (m, n, 2, 2)`` array.
    support : (float, float)
        Interval where evaluation is allowed.
    nodes : array, optional
        Discrete ground set; evaluation is then restricted to these values.
    rho1 : callable, optional
        Fast diagonal K12(x, x).
    jumps : dict, optional
        ``{(a, b): c}`` when component K_ab contains the term c sign(x - y).
        Quadrature-based operators integrate that part exactly.
    """

    def __init__(self, family, params, blocks, support, nodes=None, rho1=None, jumps=None):
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {family!r}")
        self.family = family
        self.params = dict(params)
        self._blocks = blocks
        self.support = (float(support[0]), float(support[1]))
        self.nodes = None if nodes is None else np.asarray(nodes, dtype=float)
        self._rho1 = rho1
        self.jumps = dict(jumps or {})

    @property
    def discrete(self):
        return self.nodes is not None

    def _check(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        if x.size and (not np.all(np.isfinite(x)) or x.min() < lo - 1e-12 or x.max() > hi + 1e-12):
            raise RangeError(f"{self.family} kernel evaluated outside [{lo:g}, {hi:g}]")
        if self.discrete:
            i = np.searchsorted(self.nodes, x)
            i = np.clip(i, 0, self.nodes.size - 1)
            if np.any(self.nodes[i] != x):
                raise RangeError(f"{self.family} kernel is defined on integer nodes only")
        return x

    def blocks(self, x, y=None):
        x = self._check(x)
        y = x if y is None else self._check(y)
        return self._blocks(x, y)

    def __call__(self, x, y):
        return self.blocks([x], [y])[0, 0]

    def matrix(self, x, y=None, wx=None, wy=None):
        """Interleaved ``(2m, 2n)`` matrix, rows/cols scaled by optional weights."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = x if y is None else np.atleast_1d(np.asarray(y, dtype=float))
        B = self.blocks(x, y)
        if wx is not None:
            B = B * np.asarray(wx)[:, None, None, None]
        if wy is not None:
            B = B * np.asarray(wy)[None, :, None, None]
        m, n = B.shape[:2]
        return B.transpose(0, 2, 1, 3).reshape(2 * m, 2 * n)

    def rho1(self, x):
        """First intensity K12(x, x)."""
        x = self._check(x)
        if self._rho1 is not None:
            return self._rho1(x)
        return np.array([self._blocks(x[i:i + 1], x[i:i + 1])[0, 0, 0, 1] for i in range(x.size)])

    def sidecar(self):
        return {"family": self.family, "params": self.params}


def zero_kernel(support=(-1.0, 1.0)):
    return Kernel2x2("CUSTOM", {"kind": "zero"},
                     lambda x, y: np.zeros((x.size, y.size, 2, 2)), support)


def _assemble(K11, K12, K21, K22):
    return np.stack([np.stack([K11, K12], -1), np.stack([K21, K22], -1)], -2)


# finite N ensembles


def _cheb_antiderivative(f, lo, hi, m):
    """Chebyshev coefficients (on [lo, hi]) of ∫_lo^x f for the columns of f."""
    t = -np.cos(np.pi * np.arange(m) / (m - 1))
    x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
    vals = f(x)
    coef = np.linalg.solve(C.chebvander(t, m - 1), vals)
    return C.chebint(coef, lbnd=-1.0, axis=0) * (0.5 * (hi - lo))


class _SopTable:
    """Evaluates SOPs (and derivatives) from reference-basis coefficients."""

    def __init__(self, ip, basis):
        self.ip = ip
        self.coeffs = basis.S.coeffs

    def values(self, x, deriv=False):
        P = self.ip.basis.vander(x, self.ip.max_degree, deriv=deriv)
        if deriv:
            return P[0] @ self.coeffs.T, P[1] @ self.coeffs.T
        return P @ self.coeffs.T


def _goe_kernel(N, interval, esr, cheb_nodes):
    lo, hi = interval
    w = lambda x: np.exp(-0.25 * np.asarray(x) ** 2)  # noqa: E731
    ip = SkewInnerProduct.beta1_continuous(w, interval, N + 1, basis=RecurrenceBasis.hermite(1.0),
                                           nodes=cheb_nodes)
    sop = _SopTable(ip, symplectic_arnoldi(ip, N, esr=esr))
    # G_k(x) = ∫_lo^x R_k w; ψ_k(x) = G_k(x) - ½ G_k(hi)
    G = _cheb_antiderivative(lambda x: sop.values(x) * w(x)[:, None], lo, hi, cheb_nodes)
    total = C.chebval(1.0, G)

    def psi(x):
        t = np.clip((2.0 * x - (hi + lo)) / (hi - lo), -1.0, 1.0)
        return C.chebval(t, G).T - 0.5 * total

    def blocks(x, y):
        Rx, Ry = sop.values(x), sop.values(y)
        Px, Py = psi(x), psi(y)
        wx, wy = w(x), w(y)

        def S1(Ra, wa, Pb):
            return wa[:, None] * (Ra[:, 1::2] @ Pb[:, 0::2].T - Ra[:, 0::2] @ Pb[:, 1::2].T)

        D1 = wx[:, None] * wy[None, :] * (-Rx[:, 1::2] @ Ry[:, 0::2].T + Rx[:, 0::2] @ Ry[:, 1::2].T)
        J1 = Px[:, 1::2] @ Py[:, 0::2].T - Px[:, 0::2] @ Py[:, 1::2].T
        J1 = J1 - 0.5 * np.sign(x[:, None] - y[None, :])
        Sxy = S1(Rx, wx, Py)
        Syx = S1(Ry, wy, Px).T
        return _assemble(J1, Syx, -Sxy, -D1)

    def rho1(x):
        R, P = sop.values(x), psi(x)
        return w(x) * np.sum(R[:, 1::2] * P[:, 0::2] - R[:, 0::2] * P[:, 1::2], axis=1)

    return blocks, rho1, ip


def _gse_kernel(N, interval, esr, quad_nodes):
    w2 = lambda x: np.exp(-2.0 * np.asarray(x) ** 2)  # noqa: E731
    ip = SkewInnerProduct.beta4_continuous(lambda x: np.sqrt(w2(x)), interval, 2 * N + 1,
                                           basis=RecurrenceBasis.hermite(0.5), nodes=quad_nodes)
    sop = _SopTable(ip, symplectic_arnoldi(ip, 2 * N, esr=esr))
    w = lambda x: np.exp(-np.asarray(x) ** 2)  # noqa: E731

    def blocks(x, y):
        Qx, dQx = sop.values(x, deriv=True)
        Qy, dQy = sop.values(y, deriv=True)
        ww = w(x)[:, None] * w(y)[None, :]

        def S4(dQa, Qb):
            return dQa[:, 1::2] @ Qb[:, 0::2].T - dQa[:, 0::2] @ Qb[:, 1::2].T

        D4 = -dQx[:, 1::2] @ dQy[:, 0::2].T + dQx[:, 0::2] @ dQy[:, 1::2].T
        I4 = Qx[:, 1::2] @ Qy[:, 0::2].T - Qx[:, 0::2] @ Qy[:, 1::2].T
        return _assemble(ww * I4, ww * S4(dQy, Qx).T, -ww * S4(dQx, Qy), -ww * D4)

    def rho1(x):
        Q, dQ = sop.values(x, deriv=True)
        return w(x) ** 2 * np.sum(dQ[:, 1::2] * Q[:, 0::2] - dQ[:, 0::2] * Q[:, 1::2], axis=1)

    return blocks, rho1, ip


def build_finite_kernel(family, N, interval=None, esr=EsrKind.ESR3M, nodes=None):
    """Rank-N kernel of the finite GOE (``"GOE_N"``) or GSE (``"GSE_N"``).

    Parameters
    ----------
    family : {"GOE_N", "GSE_N"}
    N : int
        Matrix size, even for the GOE (GSE: number of distinct eigenvalues).
    interval : (float, float), optional
        Truncation of the real line used for the inner product. Defaults
        reach far enough that the weight times the largest SOP is below
        double precision.
    esr : EsrKind
        Normalisation used by the symplectic Arnoldi run.
    nodes : int, optional
        Quadrature size of the inner product.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ShapeError(f"N must be a positive integer, got {N!r}")
    if family == "GOE_N" and N % 2:
        raise ShapeError(f"the GOE kernel is built for even N only, got {N}")
    if family == "GOE_N":
        L = 2.0 * math.sqrt(N) + 10.0
        interval = interval or (-L, L)
        blocks, rho1, ip = _goe_kernel(N, interval, esr, nodes or 384)
    elif family == "GSE_N":
        L = math.sqrt(2.0 * N) + 6.0
        interval = interval or (-L, L)
        blocks, rho1, ip = _gse_kernel(N, interval, esr, nodes or 400)
    else:
        raise ValueError(f"{family!r} is not a finite-N family")
    params = {"N": int(N), "interval": list(interval), "esr": EsrKind(esr).value}
    # polynomials times Gaussians: evaluable on the whole line
    jumps = {(0, 0): -0.5} if family == "GOE_N" else {}
    return Kernel2x2(family, params, blocks, (-math.inf, math.inf), rho1=rho1, jumps=jumps)


# Airy processes


def _t_grid(zmax, per_unit=24):
    panels = max(1, int(math.ceil(zmax)))
    gx, gw = np.polynomial.legendre.leggauss(per_unit)
    h = zmax / panels
    left = h * np.arange(panels)
    t = (left[:, None] + 0.5 * h * (gx + 1.0)).ravel()
    q = np.tile(0.5 * h * gw, panels)
    return t, q


def _airy_pieces(x, y):
    """Ai, T at x and y plus the semi-infinite integrals over a shared t-grid.

    K_Ai(x, y) = ∫ Ai(x+t) Ai(y+t), ∂_y K_Ai = ∫ Ai(x+t) Ai'(y+t),
    M(x, y) = ∫ T(x+t) Ai(y+t), all t >= 0 and truncated where x+t, y+t
    exceed ``AIRY_Z_MAX``.
    """
    lo = min(x.min(), y.min())
    t, q = _t_grid(max(AIRY_Z_MAX - lo, 1.0))
    hi = airy.X_RANGE[1]
    ax = np.minimum(x[:, None] + t, hi)
    ay = np.minimum(y[:, None] + t, hi)
    Ax, _ = airy.ai(ax)
    Ay, dAy = airy.ai(ay)
    Tx = airy.ai_tail(ax)
    Aq = Ax * q
    out = {
        "K": Aq @ Ay.T,
        "dyK": Aq @ dAy.T,
        "M": (Tx * q) @ Ay.T,
    }
    out["ai_x"], _ = airy.ai(x)
    out["ai_y"], _ = airy.ai(y)
    out["T_x"] = airy.ai_tail(x)
    out["T_y"] = airy.ai_tail(y)
    return out


def _airy1_blocks(x, y):
    p = _airy_pieces(x, y)
    q = _airy_pieces(y, x)
    aa = np.outer(p["ai_x"], p["ai_y"])
    Tx, Ty = p["T_x"][:, None], p["T_y"][None, :]
    K11 = 2.0 * p["dyK"] + aa
    K12 = p["K"] + 0.5 * p["ai_x"][:, None] * (1.0 - Ty)
    K21 = -(q["K"] + 0.5 * q["ai_x"][:, None] * (1.0 - q["T_y"][None, :])).T
    K22 = (-0.5 * p["M"] + 0.25 * (Ty - Tx) + 0.25 * Tx * Ty
           - 0.25 * np.sign(x[:, None] - y[None, :]))
    return _assemble(K11, K12, K21, K22)


def _airy4_blocks(x, y):
    p = _airy_pieces(x, y)
    q = _airy_pieces(y, x)
    aa = np.outer(p["ai_x"], p["ai_y"])
    K11 = -0.5 * p["dyK"] - 0.25 * aa
    K12 = 0.5 * p["K"] - 0.25 * p["ai_x"][:, None] * p["T_y"][None, :]
    K21 = -(0.5 * q["K"] - 0.25 * q["ai_x"][:, None] * q["T_y"][None, :]).T
    K22 = 0.5 * p["M"] - 0.25 * np.outer(p["T_x"], p["T_y"])
    return _assemble(K11, K12, K21, K22)


def airy_kernel_diagonal(x):
    """K_Ai(x, x) = Ai'(x)^2 - x Ai(x)^2."""
    a, ap = airy.ai(x)
    return ap ** 2 - np.asarray(x) * a ** 2


def build_airy_kernel(beta):
    """Kernel of the Airy_1 (``beta=1``) or Airy_4 (``beta=4``) point process."""
    if beta == 1:
        def rho1(x):
            a = airy.ai(x)[0]
            return airy_kernel_diagonal(x) + 0.5 * a * (1.0 - airy.ai_tail(x))
        return Kernel2x2("AIRY1", {"beta": 1}, _airy1_blocks, AIRY_SUPPORT, rho1=rho1,
                         jumps={(1, 1): -0.25})
    if beta == 4:
        def rho1(x):
            return 0.5 * airy_kernel_diagonal(x) - 0.25 * airy.ai(x)[0] * airy.ai_tail(x)
        return Kernel2x2("AIRY4", {"beta": 4}, _airy4_blocks, AIRY_SUPPORT, rho1=rho1)
    raise ValueError(f"Airy kernels exist for beta 1 and 4, got {beta!r}")


# symmetric corner growth


def default_cutoff(q, N=None, tol=1e-10):
    """Even node cutoff ``c`` for the corner-growth kernel.

    Without ``N``: smallest even c with q^(c/2) < tol. With ``N`` the cutoff
    is then grown by 10% steps until the intensity of the truncated rank-N
    kernel at the last node is below ``tol``; the Vandermonde factor pushes
    the largest point far beyond where the weight alone is negligible.
    """
    c = int(math.ceil(2.0 * math.log(tol) / math.log(q)))
    c += c % 2
    if N is None:
        return c
    while True:
        K = corner_growth_kernel(q, N, c)
        if K.rho1(K.nodes[-1:])[0] < tol:
            return c
        c = int(math.ceil(1.1 * c))
        c += c % 2


def discrete_beta1_kernel(x, w, N, esr=EsrKind.ESR3M):
    """Rank-N kernel table of the discrete β=1 Coulomb gas with weight w on nodes x.

    Returns the ``(m, m, 2, 2)`` block array; probabilities of configurations
    are ∝ ∏|x_i - x_j| ∏ w(x_i).
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if N < 2 or N % 2:
        raise ShapeError(f"discrete β=1 kernels need an even N >= 2, got {N!r}")
    if x.size < N + 1:
        raise ShapeError(f"{x.size} nodes cannot carry a rank-{N} kernel")
    if np.any(np.diff(x) <= 0):
        raise ShapeError("nodes must be strictly increasing")
    ip = SkewInnerProduct.beta1_discrete(x, w, max_degree=N + 1)
    R = symplectic_arnoldi(ip, N, esr=esr).S.values.T
    # ψ_k(x) = ½ Σ_y R_k(y) sign(x - y) w(y)
    F = R * w[:, None]
    cs = np.cumsum(F, axis=0)
    psi = 0.5 * ((cs - F) - (cs[-1] - cs))
    S = w[:, None] * (R[:, 1::2] @ psi[:, 0::2].T - R[:, 0::2] @ psi[:, 1::2].T)
    D = np.outer(w, w) * (-R[:, 1::2] @ R[:, 0::2].T + R[:, 0::2] @ R[:, 1::2].T)
    J1 = psi[:, 1::2] @ psi[:, 0::2].T - psi[:, 0::2] @ psi[:, 1::2].T
    J1 -= 0.5 * np.sign(x[:, None] - x[None, :])
    return _assemble(J1, S.T, -S, -D)


def corner_growth_kernel(q, N, cutoff=None, esr=EsrKind.ESR3M):
    """Discrete β=1 kernel with weight q^(x/2) on the nodes {0, ..., cutoff}."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    if N < 2 or N % 2:
        raise ShapeError(f"corner growth kernel needs an even N >= 2, got {N!r}")
    cutoff = default_cutoff(q, N) if cutoff is None else int(cutoff)
    x = np.arange(cutoff + 1, dtype=float)
    table = discrete_beta1_kernel(x, q ** (0.5 * x), N, esr)
    rho = table[np.arange(x.size), np.arange(x.size), 0, 1].copy()

    def index(v):
        return np.rint(v).astype(int)

    def blocks(a, b):
        return table[np.ix_(index(a), index(b))]

    params = {"q": float(q), "N": int(N), "cutoff": int(cutoff)}
    return Kernel2x2("CORNER_GROWTH", params, blocks, (0.0, float(cutoff)), nodes=x,
                     rho1=lambda v: rho[index(v)])


def last_passage_from_points(points, N):
    """F(N) = max h - N + 1 for a configuration h of N points."""
    return int(max(points)) - N + 1


# discretisation and operators


@dataclass
class Grid:
    x_min: float
    x_max: float
    delta: float
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.delta > 0:
            raise ShapeError("grid spacing must be positive")
        if self.x_max < self.x_min:
            raise ShapeError("x_max < x_min")
        count = int(math.floor((self.x_max - self.x_min) / self.delta + 1e-9)) + 1
        self.nodes = self.x_min + self.delta * np.arange(count)

    def to_dict(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "delta": self.delta}


def discretize(K, grid=None):
    """SkewMatrix with block (i, j) = Δ K(x_i, x_j); Δ = 1 on discrete ground sets."""
    if K.discrete and grid is None:
        x, d = K.nodes, 1.0
    else:
        if grid is None:
            raise ShapeError("continuous kernels need a grid")
        x, d = grid.nodes, (1.0 if K.discrete else grid.delta)
    A = d * K.matrix(x)
    return SkewMatrix(0.5 * (A - A.T), atol=np.inf)


def gauss_nodes(a, b, n):
    gx, gw = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * gx + 0.5 * (a + b), 0.5 * (b - a) * gw


def _sign_operator(a, b, n):
    """Symmetrised Gauss-Legendre matrix of f ↦ ∫_a^b sign(x - y) f(y) dy.

    Exact on polynomials of degree < n: ∫_a^x f - ∫_x^b f = 2 (C f)(x) - wᵀf
    with C the spectral cumulative-integration matrix.
    """
    t, wt = np.polynomial.legendre.leggauss(n)
    V = np.polynomial.legendre.legvander(t, n - 1)
    integ = np.polynomial.legendre.legint(np.eye(n), lbnd=-1.0, axis=0)
    Cm = np.polynomial.legendre.legvander(t, n) @ integ @ np.linalg.inv(V) * (0.5 * (b - a))
    w = 0.5 * (b - a) * wt
    r = np.sqrt(w)
    S = r[:, None] * (2.0 * Cm - w[None, :]) / r[None, :]
    return 0.5 * (S - S.T)


def _operator(K, s, s_max, nodes):
    """Nyström matrix √w_i √w_j K(x_i, x_j) on [s, s_max] (nodes on discrete sets).

    Sign-function parts listed in ``K.jumps`` are replaced by their exact
    integration matrix; plain Nyström converges only at first order across
    the diagonal jump.
    """
    if K.discrete:
        x = K.nodes[(K.nodes > s) & (K.nodes <= s_max)]
        return K.matrix(x), x
    x, w = gauss_nodes(s, s_max, nodes)
    r = np.sqrt(w)
    B = K.blocks(x, x) * (r[:, None] * r[None, :])[..., None, None]
    if K.jumps:
        sgn = np.sign(x[:, None] - x[None, :]) * (r[:, None] * r[None, :])
        S = _sign_operator(s, s_max, nodes)
        for (a, b), c in K.jumps.items():
            B[:, :, a, b] += c * (S - sgn)
    m = x.size
    return B.transpose(0, 2, 1, 3).reshape(2 * m, 2 * m), x


def fredholm_pfaffian(K, s, s_max, nodes=200):
    """pf(J - K) restricted to (s, s_max): the probability of no point there."""
    if not s < s_max:
        raise ValueError("need s < s_max")
    A, x = _operator(K, s, s_max, nodes)
    if x.size == 0:
        return 1.0
    sign, la = pfaffian(standard_symplectic(x.size) - 0.5 * (A - A.T))
    if not math.isfinite(la) and sign != 0:
        raise NumericalFailure("non-finite Fredholm Pfaffian")
    return 0.0 if sign == 0 else sign * math.exp(la)


def condition_at_point(K, s, tol=1e-14):
    """Kernel conditioned on a point at s: K(x,y) - K(x,s) K(s,s)^-1 K(s,y)."""
    Kss = K.blocks([s])[0, 0]
    det = Kss[0, 0] * Kss[1, 1] - Kss[0, 1] * Kss[1, 0]
    if not abs(det) > tol:
        raise ConditioningError(f"K(s, s) is singular at s = {s:g}")
    inv = np.linalg.inv(Kss)
    sv = np.array([s], dtype=float)

    def blocks(x, y):
        Kx = K.blocks(x, sv)[:, 0]
        Ky = K.blocks(sv, y)[0]
        return K.blocks(x, y) - np.einsum("mab,bc,ncd->mnad", Kx, inv, Ky)

    params = dict(K.params, conditioned_at=float(s), base=K.family)
    return Kernel2x2("CUSTOM", params, blocks, K.support, nodes=K.nodes, jumps=K.jumps)


def skew_trace(K, a, b, nodes=200):
    """∫_a^b K12(x, x) dx (a sum over nodes in (a, b] for discrete kernels)."""
    if K.discrete:
        x = K.nodes[(K.nodes > a) & (K.nodes <= b)]
        return float(np.sum(K.rho1(x))) if x.size else 0.0
    x, w = gauss_nodes(a, b, nodes)
    return float(w @ K.rho1(x))


def second_eigenvalue_density(K, s, s_max, nodes=200):
    """Density of the second-largest point at s.

    ρ1(s) times the probability that the process conditioned on a point at s
    has exactly one point in (s, s_max). With Kₛ the Nyström matrix of the
    conditioned kernel that probability is pf(J - Kₛ) skewtr(Kₛ (J - Kₛ)^-1 J).
    """
    rho = float(K.rho1([s])[0])
    # the density is bounded by rho1; below this K(s, s) cannot be inverted reliably
    if rho <= 1e-7:
        return 0.0
    Ks = condition_at_point(K, s)
    A, x = _operator(Ks, s, s_max, nodes)
    if x.size == 0:
        return 0.0
    A = 0.5 * (A - A.T)
    J = standard_symplectic(x.size)
    sign, la = pfaffian(J - A)
    if sign == 0:
        return 0.0
    X = A @ np.linalg.solve(J - A, J)
    tr = float(np.sum(np.diagonal(X[0::2, 1::2])))
    val = rho * sign * math.exp(la) * tr
    if not math.isfinite(val):
        raise NumericalFailure(f"non-finite second-eigenvalue density at s = {s:g}")
    return val
