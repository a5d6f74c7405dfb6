"""Multi-indices, Hermite functions on R^d and Gauss-Hermite quadrature.

Hermite functions use the L^2-orthonormal normalisation

    h_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) exp(-x^2/2),

and h_n(x) = prod_i h_{n_i}(x_i) for a multi-index n.  Every coefficient
vector in the package is flattened in graded lexicographic order: by total
degree |n| first, then lexicographically descending, so that for d=2 the
order starts (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...  A useful
consequence is that the first ``basis_size(d, K)`` entries of a cap-N vector
are exactly its cap-K truncation.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError

MultiIndex = tuple  # tuple of d non-negative ints

PI_QUARTER = math.pi ** -0.25
X_CUTOFF = 40.0
_FAST_LIMIT = 30.0
_RESCALE_AT = 1e200

MAX_NODES = 200


def order(n: MultiIndex) -> int:
    """Total degree |n| of a multi-index."""
    return sum(n)


def basis_size(d: int, N: int) -> int:
    """Number of multi-indices of dimension d with |n| <= N."""
    return math.comb(N + d, d)


def _compositions(k: int, d: int):
    # all d-tuples of non-negative ints summing to k, lex descending
    if d == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _compositions(k - first, d - 1):
            yield (first,) + rest


@functools.lru_cache(maxsize=None)
def _enumerate(d: int, N: int) -> tuple:
    return tuple(n for k in range(N + 1) for n in _compositions(k, d))


def enumerate_multi_indices(d: int, N: int) -> list[MultiIndex]:
    """All multi-indices with |n| <= N in graded lexicographic order."""
    if d < 1 or N < 0:
        raise ConfigurationError(f"need d >= 1 and N >= 0, got d={d}, N={N}")
    return list(_enumerate(d, N))


@functools.lru_cache(maxsize=None)
def index_table(d: int, N: int) -> np.ndarray:
    """Integer array of shape (basis_size, d) holding the enumerated indices."""
    table = np.array(_enumerate(d, N), dtype=np.int64).reshape(-1, d)
    table.setflags(write=False)
    return table


@functools.lru_cache(maxsize=None)
def index_lookup(d: int, N: int) -> dict:
    """Map from multi-index tuple to its flat position."""
    return {n: i for i, n in enumerate(_enumerate(d, N))}


def index_of(n: MultiIndex, N: int | None = None) -> int:
    """Flat graded-lex position of n (independent of the cap as long as |n| <= N)."""
    n = tuple(int(v) for v in n)
    cap = order(n) if N is None else N
    return index_lookup(len(n), cap)[n]


def hermite_functions(K: int, x) -> np.ndarray:
    """Values h_0(x), ..., h_K(x) stacked along a new leading axis.

    Uses the orthonormal three-term recurrence with the Gaussian factor
    built into the starting value.  Points with |x| > 40 return 0.  For
    30 < |x| <= 40 the recurrence runs on rescaled values with a tracked
    log-scale so that neither the start value nor intermediate terms
    underflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((K + 1,) + x.shape)
    if x.size == 0:
        return out
    amax = float(np.max(np.abs(x)))
    if amax <= _FAST_LIMIT:
        prev = np.zeros_like(x)
        cur = PI_QUARTER * np.exp(-0.5 * x * x)
        out[0] = cur
        for k in range(K):
            nxt = math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
            prev, cur = cur, nxt
            out[k + 1] = cur
        return out

    inside = np.abs(x) <= X_CUTOFF
    xs = np.where(inside, x, 0.0)
    log_scale = -0.5 * xs * xs
    prev = np.zeros_like(xs)
    cur = np.full_like(xs, PI_QUARTER)
    out[0] = cur * np.exp(log_scale)
    for k in range(K):
        nxt = math.sqrt(2.0 / (k + 1)) * xs * cur - math.sqrt(k / (k + 1)) * prev
        big = np.abs(nxt) > _RESCALE_AT
        if np.any(big):
            s = np.where(big, np.abs(nxt), 1.0)
            nxt = nxt / s
            cur = cur / s
            log_scale = log_scale + np.log(s)
        prev, cur = cur, nxt
        out[k + 1] = cur * np.exp(log_scale)
    out[:, ~inside] = 0.0
    return out


def eval_hermite(n: MultiIndex, x) -> float:
    """h_n(x) for a single multi-index n and point x in R^d."""
    n = tuple(int(v) for v in np.atleast_1d(n))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (len(n),):
        raise ConfigurationError(f"point of shape {x.shape} for multi-index of length {len(n)}")
    value = 1.0
    for ni, xi in zip(n, x):
        value *= hermite_functions(ni, xi)[ni]
    return float(value)


def hermite_basis_values(d: int, N: int, points) -> np.ndarray:
    """h_n(x) for every graded-lex n with |n| <= N at each point.

    ``points`` has shape (P, d) (or (P,) when d=1); returns shape
    (basis_size(d, N), P).
    """
    pts = np.asarray(points, dtype=float)
    if d == 1:
        pts = pts.reshape(-1)
        return hermite_functions(N, pts)
    pts = pts.reshape(-1, d)
    table = index_table(d, N)
    vals = np.ones((table.shape[0], pts.shape[0]))
    for axis in range(d):
        h = hermite_functions(N, pts[:, axis])
        vals *= h[table[:, axis]]
    return vals


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-x^2)."""

    nodes: np.ndarray
    weights: np.ndarray
    # weights * exp(nodes**2); these integrate f against dx when f already
    # carries its own Gaussian decay (products of Hermite functions)
    scaled_weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> float:
        """Approximate int f(x) exp(-x^2) dx."""
        return float(np.dot(self.weights, f(self.nodes)))


@functools.lru_cache(maxsize=None)
def gauss_hermite_rule(Q: int) -> QuadratureRule:
    """Q-node Gauss-Hermite rule (Golub-Welsch).

    Nodes are eigenvalues of the symmetric Jacobi matrix with off-diagonal
    sqrt(k/2).  Weights come from the Christoffel function of the same
    orthonormal family, w_i = exp(-x_i^2) / sum_k h_k(x_i)^2, which equals
    the squared-first-eigenvector formula but keeps full relative accuracy
    for the tiny outer weights.
    """
    if not isinstance(Q, (int, np.integer)) or not 1 <= Q <= MAX_NODES:
        raise ConfigurationError(f"node count must be an integer in [1, {MAX_NODES}], got {Q!r}")
    Q = int(Q)
    if Q == 1:
        nodes = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, Q) / 2.0)
        nodes = eigh_tridiagonal(np.zeros(Q), off, eigvals_only=True)
        # exact symmetry about the origin
        nodes = 0.5 * (nodes - nodes[::-1])
    h = hermite_functions(Q - 1, nodes)
    scaled = 1.0 / np.sum(h * h, axis=0)
    weights = scaled * np.exp(-nodes * nodes)
    for arr in (nodes, weights, scaled):
        arr.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights, scaled_weights=scaled)
