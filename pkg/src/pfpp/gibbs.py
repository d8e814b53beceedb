"""Slice-within-Gibbs sampling of rank-N projection PfPPs on a continuum.

The N points have joint density ∝ pf K(S, S). Each coordinate is refreshed by
univariate slice sampling of s ↦ pf K({s} ∪ S₋ᵢ); bordering the factored
K(S₋ᵢ, S₋ᵢ) reduces every candidate evaluation to a 2x2 Schur complement.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GibbsStateError

NEGATIVE_RTOL = 1e-8


@dataclass
class GibbsState:
    points: np.ndarray
    step_count: int = 0
    rng: np.random.Generator = field(default=None, repr=False)


def default_init_interval(K):
    N = K.params.get("N")
    if K.family == "GOE_N":
        r = 0.9 * 2.0 * math.sqrt(N)
    elif K.family == "GSE_N":
        r = 0.9 * math.sqrt(2.0 * N)
    else:
        lo, hi = K.support
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("pass init_interval for kernels with unbounded support")
        return lo, hi
    return -r, r


class _Conditional:
    """log of s ↦ pf K({s} ∪ rest) / pf K(rest)."""

    def __init__(self, K, rest):
        self.K = K
        self.rest = rest
        if rest.size:
            A = K.matrix(rest)
            self.G = np.linalg.inv(0.5 * (A - A.T))
        else:
            self.G = None

    def value(self, s):
        K = self.K
        lo, hi = K.support
        if not lo <= s <= hi:
            return 0.0
        D = K.blocks([s])[0, 0]
        if self.G is None:
            return float(D[0, 1])
        B = K.matrix(self.rest, [s])
        return float(D[0, 1] + B[:, 0] @ self.G @ B[:, 1])

    def log(self, s, scale):
        v = self.value(s)
        if not math.isfinite(v):
            raise GibbsStateError(f"non-finite conditional density at s = {s!r}, others = {self.rest.tolist()}")
        if v < -NEGATIVE_RTOL * scale:
            raise GibbsStateError(f"negative conditional density {v:.3e} at s = {s!r}, "
                                  f"others = {self.rest.tolist()}")
        return math.log(v) if v > 0 else -math.inf


def _slice_step(logf, x0, rng, width, max_doublings):
    """Neal's doubling slice sampler with the acceptability test; shrinks on rejection."""
    y = logf(x0) - rng.exponential()
    u = rng.random()
    left = x0 - width * u
    right = left + width
    fl, fr = logf(left), logf(right)
    k = max_doublings
    while k > 0 and (y < fl or y < fr):
        if rng.random() < 0.5:
            left -= right - left
            fl = logf(left)
        else:
            right += right - left
            fr = logf(right)
        k -= 1

    def acceptable(x1, lo, hi):
        d = False
        while hi - lo > 1.1 * width:
            mid = 0.5 * (lo + hi)
            if (x0 < mid) != (x1 < mid):
                d = True
            if x1 < mid:
                hi = mid
            else:
                lo = mid
            if d and y >= logf(lo) and y >= logf(hi):
                return False
        return True

    lo, hi = left, right
    while True:
        x1 = lo + rng.random() * (hi - lo)
        if y < logf(x1) and acceptable(x1, left, right):
            return x1
        if x1 < x0:
            lo = x1
        else:
            hi = x1


def slice_within_gibbs(K, N, rng, steps, burn_in=100, init="equispaced", init_interval=None,
                       width=0.5, max_doublings=20, thin=1):
    """Run one Slice-within-Gibbs chain.

    Parameters
    ----------
    K : Kernel2x2
        Rank-N projection kernel on a continuous ground set.
    N : int
        Number of points.
    rng : numpy.random.Generator
    steps : int
        Total sweeps including burn-in.
    burn_in : int
        Initial sweeps to discard.
    init : "equispaced" or array of N points
    thin : int
        Keep every ``thin``-th sweep after burn-in.

    Returns
    -------
    ndarray, shape (kept, N)
        Sorted configurations of the retained sweeps, in order.
    """
    if K.discrete:
        raise ValueError("Slice-within-Gibbs needs a continuous kernel")
    if not steps > burn_in >= 0:
        raise ValueError("need steps > burn_in >= 0")
    if isinstance(init, str):
        if init != "equispaced":
            raise ValueError(f"unknown init {init!r}")
        lo, hi = init_interval or default_init_interval(K)
        pts = np.linspace(lo, hi, N + 2)[1:-1] if N > 1 else np.array([0.5 * (lo + hi)])
    else:
        pts = np.array(init, dtype=float)
        if pts.shape != (N,):
            raise ValueError(f"init must hold {N} points")
    state = GibbsState(pts.copy(), 0, rng)
    kept = []
    for sweep in range(steps):
        for i in range(N):
            rest = np.delete(state.points, i)
            cond = _Conditional(K, rest)
            scale = cond.value(state.points[i])
            if not scale > 0:
                raise GibbsStateError(f"current point {state.points[i]!r} has density {scale!r}")
            state.points[i] = _slice_step(lambda s: cond.log(s, scale), state.points[i], rng,
                                          width, max_doublings)
        state.step_count += 1
        if sweep >= burn_in and (sweep - burn_in) % thin == 0:
            kept.append(np.sort(state.points))
    return np.array(kept)
