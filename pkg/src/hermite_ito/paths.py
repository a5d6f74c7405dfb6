"""Rcll paths on jump-adapted grids, decompositions and brackets.

A path stores its values on a strictly increasing grid together with
explicit jump records (grid position, left limit, jump).  Integrals that
need predictable integrands work on the *node* expansion of a path: every
jump position k contributes a left-limit node (value X_{s-}) immediately
before the grid node (value X_s), both at the same time.  Increments
between consecutive nodes are then either purely continuous or purely a
jump, and a left-endpoint sum over nodes evaluates integrands at exact
left limits.
"""
from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigurationError, ResourceError, SimulationError, UsageError
from .rng import as_generator

MAX_EXHAUSTIVE_STEPS = 20


def uniform_grid(T: float, n_steps: int) -> np.ndarray:
    if n_steps < 1 or not T > 0:
        raise ConfigurationError(f"need T > 0 and n_steps >= 1, got T={T}, n_steps={n_steps}")
    return np.linspace(0.0, T, n_steps + 1)


class Nodes(NamedTuple):
    times: np.ndarray
    values: np.ndarray  # (n_nodes, d)
    is_left: np.ndarray  # bool, True for left-limit nodes
    grid_pos: np.ndarray  # node position of every grid point


def node_positions(n_grid: int, jump_index: np.ndarray) -> np.ndarray:
    """Node position of each grid point when left nodes sit before jump_index."""
    shift = np.zeros(n_grid, dtype=np.int64)
    if len(jump_index):
        np.add.at(shift, jump_index, 1)
    return np.arange(n_grid) + np.cumsum(shift)


def expand_to_nodes(values: np.ndarray, left_values: np.ndarray, jump_index: np.ndarray):
    """Interleave left limits before the grid values at jump positions."""
    pos = node_positions(values.shape[0], jump_index)
    out = np.empty((values.shape[0] + len(jump_index),) + values.shape[1:])
    out[pos] = values
    out[pos[jump_index] - 1] = left_values[jump_index]
    return out


@dataclass(frozen=True)
class RcllPath:
    """A d-dimensional rcll path on a grid with explicit jump records."""

    times: np.ndarray
    values: np.ndarray
    jump_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    left_limits: np.ndarray | None = None
    jumps: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        d = values.shape[1]
        idx = np.asarray(self.jump_index, dtype=np.int64).reshape(-1)
        left = np.zeros((0, d)) if self.left_limits is None else np.asarray(self.left_limits, float).reshape(-1, d)
        jumps = np.zeros((0, d)) if self.jumps is None else np.asarray(self.jumps, float).reshape(-1, d)
        if values.shape[0] != times.size:
            raise UsageError("times and values have different lengths")
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise UsageError("grid must be strictly increasing with at least two points")
        if not (len(idx) == len(left) == len(jumps)):
            raise UsageError("jump records are inconsistent")
        if len(idx) and (idx[0] < 1 or idx[-1] >= times.size or np.any(np.diff(idx) <= 0)):
            raise UsageError("jump positions must be increasing grid positions >= 1")
        if not np.all(np.isfinite(values)):
            raise UsageError("path values must be finite")
        if len(idx) and not np.array_equal(values[idx], left + jumps):
            raise UsageError("jump records violate X(s) = X(s-) + dX(s)")
        for name, arr in (("times", times), ("values", values), ("jump_index", idx),
                          ("left_limits", left), ("jumps", jumps)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def n_jumps(self) -> int:
        return len(self.jump_index)

    def left_limit_values(self) -> np.ndarray:
        """X_{t-} at every grid point (equal to X_t away from jump records)."""
        out = np.array(self.values)
        out[self.jump_index] = self.left_limits
        return out

    def jumps_on_grid(self) -> np.ndarray:
        out = np.zeros_like(self.values)
        out[self.jump_index] = self.jumps
        return out

    def component(self, i: int) -> "RcllPath":
        return RcllPath(self.times, self.values[:, i], self.jump_index,
                        self.left_limits[:, i], self.jumps[:, i], f"{self.label}[{i}]")

    def nodes(self, jump_index=None) -> Nodes:
        """Node expansion; ``jump_index`` defaults to this path's own records."""
        idx = self.jump_index if jump_index is None else np.asarray(jump_index, dtype=np.int64)
        pos = node_positions(self.times.size, idx)
        vals = expand_to_nodes(self.values, self.left_limit_values(), idx)
        times = expand_to_nodes(self.times, self.times, idx)
        is_left = np.zeros(vals.shape[0], dtype=bool)
        is_left[pos[idx] - 1] = True
        return Nodes(times, vals, is_left, pos)

    def jump_square_sum(self) -> float:
        return float(np.sum(self.jumps ** 2))

    def to_csv(self) -> str:
        """Columns: time, x_1..x_d, jump flag, left_1..left_d."""
        buf = io.StringIO()
        d = self.d
        head = ["time"] + [f"x{i + 1}" for i in range(d)] + ["jump"] + [f"left{i + 1}" for i in range(d)]
        buf.write(",".join(head) + "\n")
        left = self.left_limit_values()
        flag = np.zeros(self.times.size, dtype=int)
        flag[self.jump_index] = 1
        for k in range(self.times.size):
            row = [repr(float(self.times[k]))] + [repr(float(v)) for v in self.values[k]]
            row += [str(flag[k])] + [repr(float(v)) for v in left[k]]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label="") -> "RcllPath":
        rows = [line.split(",") for line in text.strip().splitlines()]
        head, body = rows[0], np.array(rows[1:], dtype=float)
        d = (len(head) - 2) // 2
        times, values = body[:, 0], body[:, 1:1 + d]
        flag = body[:, 1 + d].astype(bool)
        left = body[:, 2 + d:]
        idx = np.flatnonzero(flag)
        return cls(times, values, idx, left[idx], values[idx] - left[idx], label)


@dataclass(frozen=True)
class SemimartingaleDecomposition:
    """X = x0 + M + A on the grid, with the predictable bracket <M^i, M^j>."""

    path: RcllPath
    x0: np.ndarray
    martingale: RcllPath
    fv: RcllPath
    predictable_bracket: np.ndarray  # (K+1, d, d)

    def consistency_error(self) -> float:
        recon = self.x0[None, :] + self.martingale.values + self.fv.values
        return float(np.max(np.abs(recon - self.path.values)))

    def check(self, rtol: float = 1e-12):
        scale = max(1.0, float(np.max(np.abs(self.path.values))))
        err = self.consistency_error()
        if err > rtol * scale * max(1, self.path.n_steps):
            raise UsageError(f"decomposition does not reproduce the path (max error {err:.3e})")
        if np.any(self.martingale.values[0] != 0) or np.any(self.fv.values[0] != 0):
            raise UsageError("decomposition parts must start at 0")

    def component(self, i: int) -> "SemimartingaleDecomposition":
        return SemimartingaleDecomposition(
            self.path.component(i), self.x0[i:i + 1], self.martingale.component(i),
            self.fv.component(i), self.predictable_bracket[:, i:i + 1, i:i + 1])


@dataclass(frozen=True)
class BracketPath:
    """Full bracket [X^i, X^j] and its continuous part on a grid."""

    pair: tuple
    times: np.ndarray
    full: np.ndarray
    continuous: np.ndarray
    source: str = "realized"

    def jump_part(self) -> np.ndarray:
        return self.full - self.continuous


def _as_scalar(path: RcllPath) -> RcllPath:
    if path.d != 1:
        raise UsageError("expected a scalar path")
    return path


def realized_bracket(path_i: RcllPath, path_j: RcllPath, pair=(0, 1)) -> BracketPath:
    """Sum of increment products; the continuous part removes recorded jump products."""
    path_i, path_j = _as_scalar(path_i), _as_scalar(path_j)
    if path_i.times.shape != path_j.times.shape or not np.array_equal(path_i.times, path_j.times):
        raise UsageError("paths do not share a grid")
    inc = np.diff(path_i.values[:, 0]) * np.diff(path_j.values[:, 0])
    jmp = path_i.jumps_on_grid()[1:, 0] * path_j.jumps_on_grid()[1:, 0]
    full = np.concatenate([[0.0], np.cumsum(inc)])
    jump_part = np.concatenate([[0.0], np.cumsum(jmp)])
    return BracketPath(tuple(pair), path_i.times, full, full - jump_part, "realized")


def bracket_matrix(path: RcllPath, continuous: np.ndarray, source="model") -> dict:
    """BracketPath objects for all (i, j) given a model continuous bracket (K+1, d, d)."""
    jumps = path.jumps_on_grid()
    out = {}
    for i in range(path.d):
        for j in range(path.d):
            jp = np.concatenate([[0.0], np.cumsum(jumps[1:, i] * jumps[1:, j])])
            cont = continuous[:, i, j]
            out[(i, j)] = BracketPath((i, j), path.times, cont + jp, cont, source)
    return out


def simulate_brownian(d: int, times, seed, increments=None):
    """Standard Brownian motion on ``times``; returns (path, decomposition).

    ``increments`` (shape (K, d)) overrides sampling, which is how coupled
    refinement studies feed aggregated fine-level noise to coarse levels.
    """
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    if increments is None:
        rng = as_generator(seed)
        increments = rng.standard_normal((dt.size, d)) * np.sqrt(dt)[:, None]
    increments = np.asarray(increments, dtype=float).reshape(dt.size, d)
    values = np.vstack([np.zeros((1, d)), np.cumsum(increments, axis=0)])
    path = RcllPath(times, values, label="brownian")
    zero = RcllPath(times, np.zeros_like(values), label="A")
    bracket = times[:, None, None] * np.eye(d)[None, :, :]
    decomposition = SemimartingaleDecomposition(path, np.zeros(d), path, zero, bracket)
    return path, decomposition


def coarsen_increments(increments: np.ndarray, factor: int) -> np.ndarray:
    """Aggregate consecutive fine increments in blocks of ``factor``."""
    inc = np.asarray(increments)
    if inc.shape[0] % factor:
        raise UsageError("fine level is not a refinement of the coarse level")
    return inc.reshape(inc.shape[0] // factor, factor, *inc.shape[1:]).sum(axis=1)


@dataclass
class JumpDiffusionModel:
    """dX = b(X)dt + diag(sigma(X))dB + jumps, finite jump activity.

    ``coefficients`` may be given instead of ``drift``/``vol`` when both are
    cheaper to compute together; it returns (b(x), sigma(x)).  Jump marks
    are drawn by ``jump_sampler(rng, n)`` and turned into jumps by
    ``jump_map(x_left, mark)`` (identity by default).
    """

    d: int = 1
    drift: Callable | None = None
    vol: Callable | None = None
    coefficients: Callable | None = None
    intensity: float = 0.0
    jump_sampler: Callable | None = None
    jump_map: Callable | None = None
    x0: np.ndarray | None = None

    def coeffs(self, x):
        if self.coefficients is not None:
            b, s = self.coefficients(x)
        else:
            b = self.drift(x) if self.drift is not None else 0.0
            s = self.vol(x) if self.vol is not None else 0.0
        return (np.broadcast_to(np.asarray(b, float), (self.d,)),
                np.broadcast_to(np.asarray(s, float), (self.d,)))


class Simulation(NamedTuple):
    path: RcllPath
    decomposition: SemimartingaleDecomposition
    brackets: dict
    dB: np.ndarray  # Brownian increment on each grid interval, (K, d)
    marks: np.ndarray  # jump marks in record order, (J, d)
    drift_values: np.ndarray  # b(X_{t_k}) on each interval
    vol_values: np.ndarray  # sigma(X_{t_k}) on each interval


def _insert_jump_times(times, jump_times):
    # merged grid plus the position of every jump time inside it
    merged = np.union1d(times, jump_times)
    return merged, np.searchsorted(merged, jump_times)


def _bridge_split(times, increments, merged, rng):
    # Brownian increments on the merged grid, consistent with the given
    # increments on the original grid (Brownian bridge at inserted points)
    d = increments.shape[1]
    out = np.empty((merged.size - 1, d))
    pos = np.searchsorted(merged, times)
    for k in range(times.size - 1):
        lo, hi = pos[k], pos[k + 1]
        if hi - lo == 1:
            out[lo] = increments[k]
            continue
        remaining = increments[k].copy()
        t_rem = times[k + 1] - times[k]
        for m in range(lo, hi - 1):
            h = merged[m + 1] - merged[m]
            frac = h / t_rem
            mean = frac * remaining
            sd = np.sqrt(h * (1 - frac))
            out[m] = mean + sd * rng.standard_normal(d)
            remaining = remaining - out[m]
            t_rem -= h
        out[hi - 1] = remaining
    return out


def simulate_jump_diffusion(model: JumpDiffusionModel, times, seed, increments=None) -> Simulation:
    """Jump-adapted Euler scheme.

    Jump times of the Poisson clock are inserted into ``times``; the
    diffusion is stepped to each jump time, giving the left limit exactly,
    and the jump is then added.  The continuous bracket accumulates
    sigma(X_{t_k})^2 dt by left-endpoint sums.
    """
    times = np.asarray(times, dtype=float)
    d = model.d
    rng = as_generator(seed)
    T = times[-1]
    n_jumps = int(rng.poisson(model.intensity * T)) if model.intensity > 0 else 0
    jump_times = np.sort(rng.uniform(0.0, T, n_jumps))
    marks = (np.asarray(model.jump_sampler(rng, n_jumps), float).reshape(n_jumps, d)
             if n_jumps else np.zeros((0, d)))
    # a jump exactly at 0 cannot be represented (X_0 is a left limit)
    keep = jump_times > 0
    jump_times, marks = jump_times[keep], marks[keep]
    merged, jpos = _insert_jump_times(times, jump_times)
    if len(np.unique(jpos)) != len(jpos):
        raise SimulationError("two jumps at the same time", seed, float(jump_times[0]))
    dt = np.diff(merged)
    if increments is None:
        dB = rng.standard_normal((dt.size, d)) * np.sqrt(dt)[:, None]
    else:
        inc = np.asarray(increments, float).reshape(times.size - 1, d)
        dB = inc if merged.size == times.size else _bridge_split(times, inc, merged, rng)

    jump_at = np.full(merged.size, -1, dtype=np.int64)
    jump_at[jpos] = np.arange(len(jpos))
    x0 = np.zeros(d) if model.x0 is None else np.asarray(model.x0, float).reshape(d)
    jump_map = model.jump_map or (lambda x, m: m)

    K = dt.size
    X = np.empty((K + 1, d)); M = np.zeros((K + 1, d)); A = np.zeros((K + 1, d))
    qc = np.zeros((K + 1, d, d))
    b_vals = np.empty((K, d)); s_vals = np.empty((K, d))
    lefts = np.empty((len(jpos), d)); jumps = np.empty((len(jpos), d))
    a_lefts = np.empty((len(jpos), d))
    x = x0.copy(); m = np.zeros(d); a = np.zeros(d)
    X[0] = x
    for k in range(K):
        b, s = model.coeffs(x)
        b_vals[k] = b; s_vals[k] = s
        x = x + b * dt[k] + s * dB[k]
        m = m + s * dB[k]
        a = a + b * dt[k]
        qc[k + 1] = qc[k] + np.diag(s * s) * dt[k]
        j = jump_at[k + 1]
        if j >= 0:
            lefts[j] = x
            jumps[j] = np.asarray(jump_map(x.copy(), marks[j]), float).reshape(d)
            x = lefts[j] + jumps[j]
            a_lefts[j] = a
            a = a_lefts[j] + jumps[j]
        if not np.all(np.isfinite(x)):
            raise SimulationError("non-finite state", seed, float(merged[k + 1]))
        X[k + 1] = x; M[k + 1] = m; A[k + 1] = a

    path = RcllPath(merged, X, jpos, lefts, jumps, "jump-diffusion")
    mart = RcllPath(merged, M, label="M")
    fv = RcllPath(merged, A, jpos, a_lefts, A[jpos] - a_lefts if len(jpos) else None, "A")
    decomposition = SemimartingaleDecomposition(path, x0, mart, fv, qc)
    brackets = bracket_matrix(path, qc, "model")
    return Simulation(path, decomposition, brackets, dB, marks, b_vals, s_vals)


@dataclass(frozen=True)
class WalkEnsemble:
    """Scaled random walks with their probabilities."""

    paths: list
    decompositions: list
    weights: np.ndarray

    def expectation(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def _walk_from_signs(signs: np.ndarray, k: int):
    step = 1.0 / np.sqrt(k)
    times = np.arange(k + 1) / k
    values = np.zeros(k + 1)
    jumps = signs * step
    for j in range(k):
        values[j + 1] = values[j] + jumps[j]
    idx = np.arange(1, k + 1)
    path = RcllPath(times, values, idx, values[:-1], jumps, "walk")
    fv = RcllPath(times, np.zeros(k + 1), label="A")
    bracket = times[:, None, None].copy()
    return path, SemimartingaleDecomposition(path, np.zeros(1), path, fv, bracket)


def scaled_walk(k: int, seed=None, exhaustive: bool = False, n_paths: int = 1) -> WalkEnsemble:
    """Walks with +-1/sqrt(k) steps at times j/k; every step is a jump record.

    In exhaustive mode all 2^k sign patterns are returned with weight 2^-k,
    so expectations become exact finite sums.
    """
    if k < 1:
        raise ConfigurationError("need k >= 1")
    if exhaustive:
        if k > MAX_EXHAUSTIVE_STEPS:
            raise ResourceError(f"exhaustive enumeration of 2^{k} paths refused (k > {MAX_EXHAUSTIVE_STEPS})")
        sign_rows = np.array(list(itertools.product((1.0, -1.0), repeat=k)))
    else:
        rng = as_generator(0 if seed is None else seed)
        sign_rows = rng.choice(np.array([1.0, -1.0]), size=(n_paths, k))
    paths, decs = [], []
    for signs in sign_rows:
        p, dec = _walk_from_signs(signs, k)
        paths.append(p)
        decs.append(dec)
    weights = np.full(len(paths), 1.0 / len(paths))
    return WalkEnsemble(paths, decs, weights)
