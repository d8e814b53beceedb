"""Independent ground truth: matrix models, the tridiagonal β-Hermite model and
the corner-growth last-passage dynamic program."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import NumericalFailure

QL_MAX_ITER = 60
SMALL_N = 200


@dataclass
class EnsembleSample:
    eigenvalues: np.ndarray
    N: int
    beta: float


def _eig(W):
    try:
        return np.linalg.eigvalsh(W)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc


def goe_matrices(N, rng, count=1):
    X = rng.standard_normal((count, N, N))
    return (X + X.transpose(0, 2, 1)) / math.sqrt(2.0)


def gse_matrices(N, rng, count=1):
    """2N x 2N complex embedding (A + A*)/√8 with A = [[X, Y], [-conj(Y), conj(X)]]."""
    s = math.sqrt(0.5)

    def cn():
        return s * (rng.standard_normal((count, N, N)) + 1j * rng.standard_normal((count, N, N)))

    X, Y = cn(), cn()
    A = np.block([[X, Y], [-Y.conj(), X.conj()]])
    return (A + A.conj().transpose(0, 2, 1)) / math.sqrt(8.0)


def _dedupe_pairs(ev, tol=1e-8):
    lo, hi = ev[..., 0::2], ev[..., 1::2]
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.max(np.abs(hi - lo)) > tol * scale:
        raise NumericalFailure("GSE spectrum is not paired")
    return 0.5 * (lo + hi)


def dense_goe(N, rng):
    return EnsembleSample(_eig(goe_matrices(N, rng)[0]), N, 1)


def dense_gse(N, rng):
    return EnsembleSample(_dedupe_pairs(_eig(gse_matrices(N, rng)[0])), N, 4)


def dense_batch(kind, N, count, rng, chunk=500):
    """Sorted spectra of ``count`` GOE or GSE draws, shape (count, N)."""
    make = {"goe": goe_matrices, "gse": gse_matrices}[kind]
    out = []
    for start in range(0, count, chunk):
        ev = _eig(make(N, rng, min(chunk, count - start)))
        out.append(_dedupe_pairs(ev) if kind == "gse" else ev)
    return np.concatenate(out)


def tridiagonal_eigvalsh(d, e):
    """Eigenvalues of the symmetric tridiagonal matrix (d, e) by implicit-shift QL."""
    d = np.array(d, dtype=float)
    n = d.size
    e = np.append(np.asarray(e, dtype=float), 0.0)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > QL_MAX_ITER:
                raise NumericalFailure("tridiagonal QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s, c = f / r, g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)


def tridiagonal_model(N, beta, rng):
    """Diagonal and off-diagonal of the β-Hermite tridiagonal model.

    Eigenvalue density ∝ ∏|λ_i - λ_j|^β ∏ exp(-β λ_i² / 4).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    d = rng.normal(0.0, math.sqrt(2.0), N)
    e = np.sqrt(rng.chisquare(beta * np.arange(N - 1, 0, -1))) if N > 1 else np.zeros(0)
    r = 1.0 / math.sqrt(beta)
    return d * r, e * r


def tridiagonal_hermite(N, beta, rng):
    d, e = tridiagonal_model(N, beta, rng)
    if N <= SMALL_N:
        ev = tridiagonal_eigvalsh(d, e)
    else:
        ev = eigvalsh_tridiagonal(d, e)
    return EnsembleSample(ev, N, beta)


def tridiagonal_top(N, beta, rng, k=1):
    """Largest ``k`` eigenvalues (ascending) of one tridiagonal draw."""
    d, e = tridiagonal_model(N, beta, rng)
    if N <= SMALL_N:
        return tridiagonal_eigvalsh(d, e)[-k:]
    return eigvalsh_tridiagonal(d, e, select="i", select_range=(N - k, N - 1))


def waiting_times(N, q, rng, count=1):
    """Symmetric waiting-time matrices; geometric laws on {0, 1, ...}."""
    off = rng.geometric(1.0 - q, (count, N, N)) - 1
    diag = rng.geometric(1.0 - math.sqrt(q), (count, N)) - 1
    W = np.triu(off, 1)
    W = W + W.transpose(0, 2, 1)
    idx = np.arange(N)
    W[:, idx, idx] = diag
    return W


def last_passage(W):
    """G(N, N) of the up-right last-passage DP, batched over leading axes."""
    W = np.asarray(W)
    N = W.shape[-1]
    G = np.zeros(W.shape, dtype=np.int64)
    for i in range(N):
        for j in range(N):
            best = 0
            if i and j:
                best = np.maximum(G[..., i - 1, j], G[..., i, j - 1])
            elif i:
                best = G[..., i - 1, j]
            elif j:
                best = G[..., i, j - 1]
            G[..., i, j] = W[..., i, j] + best
    return G[..., N - 1, N - 1]


def last_passage_brute(W):
    """Maximum over all up-right paths by enumeration (small N)."""
    N = W.shape[0]
    best = -1
    for moves in set(itertools.permutations("R" * (N - 1) + "D" * (N - 1))):
        i = j = 0
        total = W[0, 0]
        for mv in moves:
            if mv == "R":
                j += 1
            else:
                i += 1
            total += W[i, j]
        best = max(best, total)
    return int(best)


def corner_growth_simulate(N, q, rng, count=None):
    """F(N) for one draw, or an array of ``count`` draws."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    F = last_passage(waiting_times(N, q, rng, 1 if count is None else count))
    return int(F[0]) if count is None else F


def soft_edge_rescale(lam, N, beta):
    """β=1: N^{1/6}(λ - 2√N); β=4: (2N)^{1/6}(√2 λ - 2√N)."""
    lam = np.asarray(lam, dtype=float)
    if beta == 1 or beta == 2:
        return N ** (1.0 / 6.0) * (lam - 2.0 * math.sqrt(N))
    if beta == 4:
        return (2.0 * N) ** (1.0 / 6.0) * (math.sqrt(2.0) * lam - 2.0 * math.sqrt(N))
    raise ValueError(f"no soft-edge map for beta {beta!r}")
