"""Exact sampling of discrete Pfaffian point processes.

Points are processed in a fixed order. At each step the inclusion probability
is the (2j, 2j+1) entry of the current kernel; after the Bernoulli draw the
trailing kernel is replaced by the Schur complement for "j included" (pivot
block p J) or "j excluded" (pivot block (p - 1) J)::

    K' = K_T - K_{T,j} (pivot)^-1 K_{j,T} = K_T - (x0 x1ᵀ - x1 x0ᵀ) / pivot

where x0, x1 are the two columns of ``K_{T,j}``.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidKernelError, ShapeError
from .skew import as_array, point_rows

PROB_EPS = 1e-8
DEGENERATE_TOL = 1e-12


def stream(seed, index=0):
    """Independent generator for batch element ``index`` of run ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _check_prob(p, step):
    if not (-PROB_EPS <= p <= 1 + PROB_EPS) or not math.isfinite(p):
        raise InvalidKernelError(step, p)
    return min(max(p, 0.0), 1.0)


def _permuted(K, order):
    a = as_array(K)
    if order is None:
        return a, np.arange(a.shape[0] // 2)
    order = np.asarray(order, dtype=int)
    if sorted(order.tolist()) != list(range(a.shape[0] // 2)):
        raise ShapeError("order must be a permutation of the points")
    r = point_rows(order)
    return a[np.ix_(r, r)], order


def sample(K, rng, order=None, max_points=None):
    """Draw one configuration from the PfPP with kernel K.

    Parameters
    ----------
    K : SkewMatrix or array
        Kernel of order 2n.
    rng : numpy.random.Generator
        Exactly ``n`` uniforms are consumed, one per point, in processing order.
    order : sequence of int, optional
        Processing order of the points (default: natural order).
    max_points : int, optional
        Stop after this many inclusions. With ``order`` sorted by decreasing
        position this returns the top ``max_points`` points exactly.

    Returns
    -------
    list of int
        Included point indices, ascending.
    """
    W, order = _permuted(K, order)
    n = W.shape[0] // 2
    u = rng.random(n)
    picked = []
    for j in range(n):
        k = 2 * j
        p = _check_prob(W[k, k + 1], j)
        if u[j] < p:
            picked.append(int(order[j]))
            pivot = p
            if max_points is not None and len(picked) >= max_points:
                break
        else:
            pivot = p - 1.0
        if abs(pivot) < DEGENERATE_TOL:
            continue
        x0 = W[k + 2:, k].copy()
        x1 = W[k + 2:, k + 1].copy()
        T = W[k + 2:, k + 2:]
        T -= (np.outer(x0, x1) - np.outer(x1, x0)) / pivot
        T[...] = 0.5 * (T - T.T)
    return sorted(picked)


class _Node:
    """Elimination state after a fixed accept/reject decision prefix.

    ``prefix`` holds the frozen rank-2 factor segments ``(cols, weights)`` of
    every step before ``start``; the node then owns the reject chain
    ``start, start + 1, ...``, extended lazily (left-looking).
    """

    __slots__ = ("prefix", "start", "cols", "w", "probs", "children")

    def __init__(self, prefix, start, rows, cap):
        self.prefix = prefix
        self.start = start
        self.cols = np.empty((rows, 2 * cap))
        self.w = np.empty(cap)
        self.probs = []
        self.children = {}

    def segments(self, upto):
        if upto == 0:
            return self.prefix
        return self.prefix + [(self.cols[:, :2 * upto], self.w[:upto])]


class PrefixCachedSampler:
    """Sequential sampler with memoisation of shared accept/reject prefixes.

    Draws have the same law as :func:`sample` (and, up to floating-point
    rounding, the same values for the same uniforms), but Schur-complement
    states are shared between draws whose decision prefixes agree. This pays
    off for top-k statistics: order points by decreasing position and set
    ``max_points = k``; almost all decisions are rejections, so the tree of
    distinct prefixes stays small.
    """

    def __init__(self, K, order=None, max_points=None, block=64):
        self.W, self.order = _permuted(K, order)
        self.n = self.W.shape[0] // 2
        self.max_points = max_points
        self.block = block
        self.root = _Node([], 0, self.W.shape[0], block)

    def _column_pair(self, segs, j):
        k = 2 * j
        X = self.W[:, k:k + 2].copy()
        for cols, w in segs:
            c0, c1 = cols[:, 0::2], cols[:, 1::2]
            X -= c0 @ (w[:, None] * c1[k:k + 2].T) - c1 @ (w[:, None] * c0[k:k + 2].T)
        return X

    def _extend(self, node):
        i = len(node.probs)
        j = node.start + i
        X = self._column_pair(node.segments(i), j)
        p = _check_prob(X[2 * j, 1], j)
        if i >= node.w.shape[0]:
            cap = 2 * node.w.shape[0]
            cols = np.empty((node.cols.shape[0], 2 * cap))
            cols[:, :2 * i] = node.cols[:, :2 * i]
            w = np.empty(cap)
            w[:i] = node.w[:i]
            node.cols, node.w = cols, w
        pivot = p - 1.0
        if abs(pivot) < DEGENERATE_TOL:
            node.w[i] = 0.0
            node.cols[:, 2 * i:2 * i + 2] = 0.0
        else:
            node.w[i] = 1.0 / pivot
            node.cols[:, 2 * i:2 * i + 2] = X
        node.probs.append(p)
        return p

    def _child(self, node, j):
        ch = node.children.get(j)
        if ch is None:
            i = j - node.start
            segs = node.segments(i)
            X = self._column_pair(segs, j)
            p = node.probs[i]
            w = np.array([0.0 if abs(p) < DEGENERATE_TOL else 1.0 / p])
            ch = _Node(segs + [(X, w)], j + 1, self.W.shape[0], self.block)
            node.children[j] = ch
        return ch

    def draw(self, rng):
        """One configuration; consumes ``n`` uniforms like :func:`sample`."""
        u = rng.random(self.n)
        node = self.root
        picked = []
        for j in range(self.n):
            i = j - node.start
            p = node.probs[i] if i < len(node.probs) else self._extend(node)
            if u[j] < p:
                picked.append(int(self.order[j]))
                if self.max_points is not None and len(picked) >= self.max_points:
                    break
                node = self._child(node, j)
        return sorted(picked)


class SubsetDistribution:
    """Probabilities of configurations over the ground set ``range(n)``.

    Keys are ascending tuples of point indices. ``count`` records the number
    of draws for empirical distributions (None for exact ones).
    """

    def __init__(self, n, probabilities, count=None):
        self.n = n
        self.count = count
        self.probabilities = {tuple(sorted(k)): float(v) for k, v in probabilities.items()}

    def __getitem__(self, subset):
        return self.probabilities.get(tuple(sorted(subset)), 0.0)

    def __len__(self):
        return len(self.probabilities)

    def items(self):
        return self.probabilities.items()

    def total(self):
        return sum(self.probabilities.values())

    def marginals(self):
        m = np.zeros(self.n)
        for s, p in self.probabilities.items():
            m[list(s)] += p
        return m

    @classmethod
    def from_samples(cls, n, samples):
        counts = {}
        for s in samples:
            key = tuple(sorted(s))
            counts[key] = counts.get(key, 0) + 1
        total = len(samples)
        return cls(n, {k: c / total for k, c in counts.items()}, count=total)


def exact_distribution(K, tol=1e-10):
    """Probability of every configuration, by walking both branches of the sequential sampler.

    Cost is O(2^n n^2); intended as an oracle for ``n <= 12``.
    """
    a = as_array(K)
    n = a.shape[0] // 2
    if n > 12:
        raise ShapeError(f"exact enumeration limited to n <= 12, got {n}")
    out = {}

    def walk(W, j, prob, chosen):
        if j == n:
            out[tuple(chosen)] = out.get(tuple(chosen), 0.0) + prob
            return
        k = 2 * j
        p = _check_prob(W[k, k + 1], j)
        for take, branch, pivot in ((True, p, p), (False, 1.0 - p, p - 1.0)):
            if branch <= 0.0:
                continue
            V = W.copy()
            if abs(pivot) >= DEGENERATE_TOL:
                x0 = V[k + 2:, k].copy()
                x1 = V[k + 2:, k + 1].copy()
                T = V[k + 2:, k + 2:]
                T -= (np.outer(x0, x1) - np.outer(x1, x0)) / pivot
                T[...] = 0.5 * (T - T.T)
            walk(V, j + 1, prob * branch, chosen + [j] if take else chosen)

    walk(a, 0, 1.0, [])
    dist = SubsetDistribution(n, out)
    if abs(dist.total() - 1.0) > tol:
        raise InvalidKernelError(n, dist.total(), f"probabilities sum to {dist.total()!r}")
    return dist


def compare_distributions(empirical, exact, min_expected=5.0):
    """Total-variation distance and Pearson chi-square of ``empirical`` against ``exact``.

    The chi-square statistic uses configurations whose expected count is at
    least ``min_expected``; it is NaN when ``empirical.count`` is unknown.
    """
    if empirical.n != exact.n:
        raise ShapeError(f"ground sets differ: {empirical.n} vs {exact.n}")
    keys = set(empirical.probabilities) | set(exact.probabilities)
    tv = 0.5 * sum(abs(empirical[k] - exact[k]) for k in keys)
    if empirical.count is None:
        return tv, math.nan
    m = empirical.count
    chi2 = 0.0
    for k in keys:
        e = m * exact[k]
        if e >= min_expected:
            chi2 += (m * empirical[k] - e) ** 2 / e
    return tv, chi2


def max_workers():
    env = os.environ.get("PFPP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_batch(K, count, seed, order=None, max_points=None, cached=None, workers=None):
    """``count`` independent draws; draw ``b`` uses ``stream(seed, b)``.

    ``cached`` selects :class:`PrefixCachedSampler` (default when
    ``max_points`` is set); otherwise draws fan out over worker threads.
    """
    if cached is None:
        cached = max_points is not None
    if cached:
        s = PrefixCachedSampler(K, order=order, max_points=max_points)
        return [s.draw(stream(seed, b)) for b in range(count)]
    W = as_array(K)
    workers = workers or max_workers()
    job = lambda b: sample(W, stream(seed, b), order=order, max_points=max_points)  # noqa: E731
    if workers == 1:
        return [job(b) for b in range(count)]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(job, range(count)))


@dataclass
class SampleRun:
    kernel_id: str
    seed: int
    samples: list
    grid: object = None

    def coordinates(self, index):
        if self.grid is None:
            return list(self.samples[index])
        return [float(self.grid.nodes[i]) for i in self.samples[index]]

    def to_csv(self, path, extra=None):
        """Write ``sample_index,points`` rows; grid coordinates use 17 significant digits."""
        with open(path, "w", newline="") as fh:
            fh.write("sample_index,points\n")
            for b, s in enumerate(self.samples):
                if self.grid is None:
                    pts = " ".join(str(int(i)) for i in s)
                else:
                    pts = " ".join(f"{self.grid.nodes[i]:.17g}" for i in s)
                fh.write(f"{b},{pts}\n")


def read_samples_csv(path):
    """Parse a samples CSV into (sample_index list, list of float lists)."""
    idx, pts = [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            row = line.rstrip("\n").split(",")
            rec = dict(zip(header, row))
            idx.append(int(rec["sample_index"]))
            pts.append([float(v) for v in rec["points"].split()] if rec["points"] else [])
    return header, idx, pts
