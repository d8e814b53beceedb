"""Dense real skew-symmetric linear algebra.

Matrices of order 2n are viewed as n x n arrays of 2x2 blocks; point ``i``
(0-based) owns rows/columns ``2i`` and ``2i + 1``.
"""

import itertools
import math
import struct

import numpy as np

from .errors import (
    ConditioningError,
    NoLKernelError,
    NotSkewError,
    ShapeError,
    SingularPivotError,
)

SKEW_ATOL = 1e-12
PIVOT_RTOL = 1e-12
COMBINATORIAL_MAX = 12
MAGIC = b"PFPPSKW1"


class SkewMatrix:
    """Immutable even-order real skew-symmetric matrix.

    The diagonal is set to exact zeros; off-diagonal asymmetry larger than
    ``atol`` is rejected.
    """

    __slots__ = ("_a",)

    def __init__(self, data, atol=SKEW_ATOL):
        a = np.array(data, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] % 2:
            raise ShapeError(f"skew matrix must have even order, got {a.shape[0]}")
        if a.size and np.max(np.abs(a + a.T)) > atol:
            raise NotSkewError(f"A + A^T has max entry {np.max(np.abs(a + a.T)):.3e} > {atol:g}")
        a = 0.5 * (a - a.T)
        a.setflags(write=False)
        self._a = a

    @property
    def array(self):
        return self._a

    @property
    def n(self):
        return self._a.shape[0] // 2

    @property
    def shape(self):
        return self._a.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a
        return self._a.astype(dtype)

    def __repr__(self):
        return f"SkewMatrix(n={self.n})"

    def __eq__(self, other):
        if not isinstance(other, SkewMatrix):
            return NotImplemented
        return np.array_equal(self._a, other._a)

    __hash__ = None

    def block(self, X, Y=None):
        """Submatrix ``K_{X,Y}`` collecting the 2x2 rows of X and columns of Y."""
        Y = X if Y is None else Y
        return self._a[np.ix_(point_rows(X), point_rows(Y))]

    def to_bytes(self):
        head = MAGIC + struct.pack("<Q", self.n)
        return head + np.ascontiguousarray(self._a, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf):
        if buf[:8] != MAGIC:
            raise ShapeError("bad magic, not a PFPPSKW1 file")
        (n,) = struct.unpack("<Q", buf[8:16])
        body = buf[16:]
        if len(body) != 8 * 4 * n * n:
            raise ShapeError(f"expected {4 * n * n} float64 values, found {len(body) // 8}")
        return cls(np.frombuffer(body, dtype="<f8").reshape(2 * n, 2 * n))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def as_array(A):
    """Validated float copy of a skew matrix given as SkewMatrix or array-like."""
    if isinstance(A, SkewMatrix):
        return A.array.copy()
    return SkewMatrix(A).array.copy()


def standard_symplectic(n):
    """J_n, the block diagonal of n copies of [[0, 1], [-1, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    J[2 * idx, 2 * idx + 1] = 1.0
    J[2 * idx + 1, 2 * idx] = -1.0
    return J


def point_rows(points):
    points = np.asarray(points, dtype=int).ravel()
    return np.column_stack([2 * points, 2 * points + 1]).ravel()


def _perfect_matchings(items):
    if not items:
        yield []
        return
    first = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1:]
        for m in _perfect_matchings(rest):
            yield [(first, items[k])] + m


def _crossing_sign(matching):
    # sign of the permutation (i1 j1 i2 j2 ...) equals (-1)^(number of crossings)
    crossings = 0
    for (a, b), (c, d) in itertools.combinations(matching, 2):
        if a < c < b < d or c < a < d < b:
            crossings += 1
    return -1 if crossings % 2 else 1


def pfaffian_combinatorial(A):
    """Pfaffian as the signed sum over perfect matchings (oracle, order <= 12)."""
    a = np.asarray(A, dtype=float)
    m = a.shape[0]
    if a.ndim != 2 or m != a.shape[1] or m % 2:
        raise ShapeError(f"need an even square matrix, got {a.shape}")
    if m > COMBINATORIAL_MAX:
        raise ShapeError(f"order {m} too large for matching enumeration (max {COMBINATORIAL_MAX})")
    total = 0.0
    for match in _perfect_matchings(list(range(m))):
        term = float(_crossing_sign(match))
        for i, j in match:
            term *= a[i, j]
        total += term
    return total


def _swap(W, i, j):
    W[[i, j], :] = W[[j, i], :]
    W[:, [i, j]] = W[:, [j, i]]


def _select_pivot(W, k):
    """Largest |W[i, j]|, i < j, in the trailing block starting at k."""
    T = np.abs(np.triu(W[k:, k:], 1))
    flat = int(np.argmax(T))
    i, j = divmod(flat, T.shape[0])
    return k + i, k + j


class SkewCholesky:
    """Result of ``skew_cholesky``: ``A[perm][:, perm] = B J Bᵀ``.

    ``B`` is block lower-triangular; ``perm`` is the symmetric permutation
    applied by pivoting and ``perm_sign`` its sign (+1 or -1). ``pivots``
    holds the 2x2 block pivots ``p_k`` so that ``pf(A) = perm_sign * prod(pivots)``.
    """

    def __init__(self, B, perm, perm_sign, pivots):
        self.B = B
        self.perm = perm
        self.perm_sign = perm_sign
        self.pivots = pivots

    def pfaffian(self):
        return self.perm_sign * float(np.prod(self.pivots))


def skew_cholesky(A, pivot=False, rtol=PIVOT_RTOL):
    """Factor a skew-symmetric A as B J_n Bᵀ by 2x2-block elimination.

    Without pivoting the natural point order is used and a tiny pivot whose
    block row is not also negligible raises ``SingularPivotError``. With
    ``pivot=True`` the largest trailing entry is moved into pivot position.
    Negligible block rows give a zero column pair in B (rank-deficient A).
    """
    W = as_array(A)
    m = W.shape[0]
    scale = np.max(np.abs(W)) if m else 0.0
    tol = rtol * scale
    B = np.zeros_like(W)
    perm = np.arange(m)
    sign = 1
    pivots = np.zeros(m // 2)
    for k in range(0, m, 2):
        if pivot:
            i, j = _select_pivot(W, k)
            for src, dst in ((i, k), (j if j != k else i, k + 1)):
                if src != dst:
                    _swap(W, src, dst)
                    B[[src, dst], :] = B[[dst, src], :]
                    perm[[src, dst]] = perm[[dst, src]]
                    sign = -sign
        p = W[k, k + 1]
        rest = W[k + 2:, k:k + 2]
        if abs(p) <= tol:
            if rest.size == 0 or np.max(np.abs(rest)) <= tol:
                pivots[k // 2] = 0.0
                W[k:, k:k + 2] = 0.0
                W[k:k + 2, k:] = 0.0
                continue
            raise SingularPivotError(f"pivot {p:.3e} at block {k // 2} below tolerance {tol:.3e}")
        pivots[k // 2] = p
        a = math.sqrt(abs(p))
        b = math.copysign(a, p)
        B[k, k] = a
        B[k + 1, k + 1] = b
        x0 = rest[:, 0].copy()
        x1 = rest[:, 1].copy()
        B[k + 2:, k] = x1 / b
        B[k + 2:, k + 1] = -x0 / a
        T = W[k + 2:, k + 2:]
        T -= (np.outer(x0, x1) - np.outer(x1, x0)) / p
        T[...] = 0.5 * (T - T.T)
    return SkewCholesky(B, perm, sign, pivots)


def pfaffian(A, rtol=PIVOT_RTOL):
    """Pfaffian in log form, ``(sign, log_abs)`` with ``pf = sign * exp(log_abs)``.

    Uses pivoted 2x2-block elimination; an exactly singular matrix returns
    ``(0, -inf)``.
    """
    W = as_array(A)
    m = W.shape[0]
    if m == 0:
        return 1, 0.0
    tol = rtol * np.max(np.abs(W))
    sign = 1
    log_abs = 0.0
    for k in range(0, m, 2):
        i, j = _select_pivot(W, k)
        if i != k:
            _swap(W, i, k)
            sign = -sign
            if j == k:
                j = i
        if j != k + 1:
            _swap(W, j, k + 1)
            sign = -sign
        p = W[k, k + 1]
        if abs(p) <= tol or p == 0.0:
            return 0, -math.inf
        sign *= 1 if p > 0 else -1
        log_abs += math.log(abs(p))
        x0 = W[k + 2:, k].copy()
        x1 = W[k + 2:, k + 1].copy()
        T = W[k + 2:, k + 2:]
        T -= (np.outer(x0, x1) - np.outer(x1, x0)) / p
    return sign, log_abs


def pfaffian_value(A):
    s, la = pfaffian(A)
    return 0.0 if s == 0 else s * math.exp(la)


def _solve_checked(M, R, err, what):
    if M.shape[0] and np.linalg.cond(M) > 1e12:
        raise err(f"{what} is singular to working precision")
    return np.linalg.solve(M, R)


def kernel_convert(M, direction):
    """Convert between K- and L-kernels.

    ``direction`` is ``"K_to_L"`` (L = J K (J - K)^-1) or ``"L_to_K"``
    (K = J + (J + L)^-1).
    """
    a = as_array(M)
    J = standard_symplectic(a.shape[0] // 2)
    if direction == "K_to_L":
        R = _solve_checked((J - a).T, (J @ a).T, NoLKernelError, "J - K").T
    elif direction == "L_to_K":
        R = J + _solve_checked(J + a, np.eye(a.shape[0]), NoLKernelError, "J + L")
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return SkewMatrix(0.5 * (R - R.T), atol=np.inf)


def condition(K, Y, mode):
    """Kernel of the process on the complement of Y given Y ⊂ 𝒥 or Y ∩ 𝒥 = ∅.

    Returns ``(kernel, remaining_points)``; the kernel is indexed by the
    remaining points in increasing order.
    """
    a = as_array(K)
    n = a.shape[0] // 2
    Y = sorted(set(int(y) for y in Y))
    rest = [i for i in range(n) if i not in set(Y)]
    if not Y:
        return SkewMatrix(a), rest
    ry, rr = point_rows(Y), point_rows(rest)
    KY = a[np.ix_(ry, ry)]
    if mode == "include":
        pivot = KY
    elif mode == "exclude":
        pivot = KY - standard_symplectic(len(Y))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    s, la = pfaffian(pivot)
    if s == 0 or la < math.log(1e-12):
        raise ConditioningError(f"conditioning on {mode} {Y} has probability ~0")
    C = a[np.ix_(rr, rr)] - a[np.ix_(rr, ry)] @ np.linalg.solve(pivot, a[np.ix_(ry, rr)])
    return SkewMatrix(0.5 * (C - C.T), atol=np.inf), rest
