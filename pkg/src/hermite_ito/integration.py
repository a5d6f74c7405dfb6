"""Stochastic integrals of coefficient-valued integrands against scalar paths.

All integrals are left-endpoint Riemann-Stieltjes sums on a fixed set of
nodes.  A :class:`CoeffPath` lives either on a grid or on the node
expansion of a grid (left-limit nodes inserted before ``jump_index``); the
integrator is expanded to the same nodes, so a predictable integrand meets
each jump with its value at the left limit.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, UsageError
from .hermite_core import basis_size
from .paths import RcllPath, SemimartingaleDecomposition, expand_to_nodes, node_positions
from .sobolev import HermiteCoeffs, cap_of_length, norms_p


@dataclass(frozen=True)
class CoeffPath:
    """Coefficient vectors along the nodes of a grid.

    ``grid`` holds the grid times; ``jump_index`` the grid positions that are
    preceded by a left-limit node.  ``coeffs`` has one row per node.
    """

    grid: np.ndarray
    coeffs: np.ndarray
    d: int
    jump_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    predictable: bool = True
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        idx = np.asarray(self.jump_index, dtype=np.int64).reshape(-1)
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if coeffs.shape[0] != grid.size + idx.size:
            raise UsageError(
                f"{coeffs.shape[0]} coefficient rows for {grid.size} grid points and {idx.size} left nodes")
        cap_of_length(self.d, coeffs.shape[1])
        if not np.all(np.isfinite(coeffs)):
            raise UsageError("coefficient path has non-finite entries")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "jump_index", idx)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def N(self) -> int:
        return cap_of_length(self.d, self.coeffs.shape[1])

    @property
    def n_nodes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def times(self) -> np.ndarray:
        return expand_to_nodes(self.grid, self.grid, self.jump_index)

    @property
    def grid_pos(self) -> np.ndarray:
        return node_positions(self.grid.size, self.jump_index)

    @property
    def is_left(self) -> np.ndarray:
        flag = np.zeros(self.n_nodes, dtype=bool)
        flag[self.grid_pos[self.jump_index] - 1] = True
        return flag

    def on_grid(self) -> np.ndarray:
        """Rows at the grid points (left-limit nodes dropped)."""
        return self.coeffs[self.grid_pos]

    def at(self, node: int) -> HermiteCoeffs:
        return HermiteCoeffs(self.d, self.N, self.coeffs[node], self.label)

    def final(self) -> HermiteCoeffs:
        return self.at(self.n_nodes - 1)

    def truncate(self, N: int) -> "CoeffPath":
        return self._replace(self.coeffs[:, : basis_size(self.d, N)])

    def pair_with(self, psi: HermiteCoeffs) -> np.ndarray:
        """pairing(G_t, psi) at every node."""
        L = min(psi.c.size, self.coeffs.shape[1])
        return self.coeffs[:, :L] @ psi.c[:L]

    def norms(self, p: float) -> np.ndarray:
        return norms_p(self.coeffs, self.d, p)

    def _replace(self, coeffs, predictable=None, label=None, meta=None) -> "CoeffPath":
        return CoeffPath(self.grid, coeffs, self.d, self.jump_index,
                         self.predictable if predictable is None else predictable,
                         self.label if label is None else label,
                         dict(self.meta) if meta is None else meta)

    def __add__(self, other: "CoeffPath") -> "CoeffPath":
        _check_layout(self, other)
        L = max(self.coeffs.shape[1], other.coeffs.shape[1])
        return self._replace(_pad(self.coeffs, L) + _pad(other.coeffs, L), False)

    def __sub__(self, other: "CoeffPath") -> "CoeffPath":
        return self + other.scale(-1.0)

    def scale(self, a: float) -> "CoeffPath":
        return self._replace(a * self.coeffs)

    def to_csv(self) -> str:
        """Columns: time, left flag, c_0..c_{L-1}."""
        buf = io.StringIO()
        L = self.coeffs.shape[1]
        buf.write(",".join(["time", "left"] + [f"c{i}" for i in range(L)]) + "\n")
        for t, flag, row in zip(self.times, self.is_left, self.coeffs):
            buf.write(",".join([repr(float(t)), str(int(flag))] + [repr(float(v)) for v in row]) + "\n")
        return buf.getvalue()


def _pad(coeffs, L):
    if coeffs.shape[1] == L:
        return coeffs
    out = np.zeros((coeffs.shape[0], L))
    out[:, : coeffs.shape[1]] = coeffs
    return out


def _check_layout(a: CoeffPath, b: CoeffPath):
    if a.d != b.d or not np.array_equal(a.grid, b.grid) or not np.array_equal(a.jump_index, b.jump_index):
        raise UsageError("coefficient paths live on different nodes")


def constant_path(g: HermiteCoeffs, grid, jump_index=()) -> CoeffPath:
    grid = np.asarray(grid, dtype=float)
    n = grid.size + len(jump_index)
    return CoeffPath(grid, np.tile(g.c, (n, 1)), g.d, np.asarray(jump_index, dtype=np.int64),
                     True, g.label)


def integrator_on_nodes(G: CoeffPath, path: RcllPath) -> np.ndarray:
    """Values of a scalar path at the nodes of G."""
    if path.d != 1:
        raise UsageError("integrators must be scalar paths")
    if path.times.shape != G.grid.shape or not np.array_equal(path.times, G.grid):
        raise UsageError("integrand and integrator grids are not aligned")
    return expand_to_nodes(path.values[:, 0], path.left_limit_values()[:, 0], G.jump_index)


def _riemann_stieltjes(G: CoeffPath, increments: np.ndarray, label: str) -> CoeffPath:
    terms = G.coeffs[:-1] * increments[:, None]
    out = np.zeros_like(G.coeffs)
    np.cumsum(terms, axis=0, out=out[1:])
    return G._replace(out, predictable=False, label=label, meta={})


def integrate_vs_martingale(G: CoeffPath, M: RcllPath) -> CoeffPath:
    """(int G dM)(t_k) = sum_{j<k} G(t_j) (M(t_{j+1}) - M(t_j)) over the nodes of G."""
    dM = np.diff(integrator_on_nodes(G, M))
    return _riemann_stieltjes(G, dM, "int G dM")


@dataclass(frozen=True)
class FVDiagnostic:
    """R = max ||G||_{-p}, V = total variation of A and the bound int ||G|| |dA| <= R V."""

    p: float
    R: float
    variation: float
    weighted: float

    @property
    def holds(self) -> bool:
        return self.weighted <= self.R * self.variation * (1 + 1e-12)


def integrate_vs_fv(G: CoeffPath, A: RcllPath, p: float = 0.0, bound: float | None = None) -> CoeffPath:
    """Left-endpoint Stieltjes sums against dA.

    The diagnostic in ``meta['fv']`` records the Bochner bound.  When
    ``bound`` is given, max_t ||G_t||_{-p} above it raises NumericError.
    """
    dA = np.diff(integrator_on_nodes(G, A))
    norms = G.norms(-p)
    R = float(np.max(norms))
    if bound is not None and R > bound:
        worst = int(np.argmax(norms))
        raise NumericError(f"integrand norm {R:.6g} exceeds bound {bound:.6g} at t={G.times[worst]!r}")
    out = _riemann_stieltjes(G, dA, "int G dA")
    diag = FVDiagnostic(p, R, float(np.sum(np.abs(dA))), float(np.sum(norms[:-1] * np.abs(dA))))
    out.meta["fv"] = diag
    return out


def integrate_vs_semimartingale(G: CoeffPath, X: SemimartingaleDecomposition,
                                p: float = 0.0, bound: float | None = None) -> CoeffPath:
    """int G dM + int G dA for a scalar decomposition."""
    if X.path.d != 1:
        raise UsageError("use X.component(i) for vector semimartingales")
    out = integrate_vs_martingale(G, X.martingale) + integrate_vs_fv(G, X.fv, p, bound)
    return out._replace(out.coeffs, predictable=False, label="int G dX")


def step_process(path: RcllPath, breaks, values, d: int, N: int) -> CoeffPath:
    """Predictable step integrand on the grid of ``path``.

    ``breaks`` are grid positions 0 = s_0 < s_1 < ... ; on (t_{s_m}, t_{s_{m+1}}]
    the integrand equals ``values(m, path_values_up_to_s_m)``, a coefficient
    vector measurable with respect to the path up to s_m.
    """
    breaks = list(breaks) + [path.times.size - 1]
    L = basis_size(d, N)
    coeffs = np.zeros((path.times.size, L))
    for m in range(len(breaks) - 1):
        lo, hi = breaks[m], breaks[m + 1]
        xi = np.asarray(values(m, path.values[: lo + 1]), dtype=float).reshape(L)
        # left endpoints t_lo .. t_{hi-1} carry the increments on (t_lo, t_hi]
        coeffs[lo:hi] = xi
    return CoeffPath(path.times, coeffs, d, predictable=True, label="step")
