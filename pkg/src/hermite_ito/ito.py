"""Both sides of the Ito formula for tau_{X_t} phi, and the local-time field.

For a semimartingale X and a test coefficient vector phi,

    tau_{X_t} phi = tau_{X_0} phi - sum_i int d_i tau_{X_{s-}} phi dX^i_s
                    + 1/2 sum_{ij} int d_ij tau_{X_{s-}} phi d[X^i, X^j]^c_s + Y_t,

    Y_t = sum_{s <= t} [tau_{X_s} phi - tau_{X_{s-}} phi + sum_i dX^i_s d_i tau_{X_{s-}} phi].

Everything is assembled on the node expansion of the path.  tau_x phi is
computed directly for every distinct node value (never by composing
truncated translations), so its coefficients are exact up to the working
cap N_big and the derivative terms are exact up to N_big - 2.  Residuals
are measured at N_eval < N_big and only carry the time-discretization error.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericError, UsageError
from .hermite_core import basis_size, hermite_functions, index_of
from .integration import CoeffPath, integrate_vs_fv, integrate_vs_semimartingale
from .operators import _derivative_sparse, translate_batch
from .paths import BracketPath, RcllPath, SemimartingaleDecomposition, expand_to_nodes, realized_bracket
from .sobolev import HermiteCoeffs, norms_p

QUANTUM = 1e-12
MIN_RETENTION = 0.999
MIN_CUSHION = 6


def node_translates(phi: HermiteCoeffs, points: np.ndarray, cache: dict | None = None) -> np.ndarray:
    """tau_x phi for every row x of ``points``, one evaluation per quantized x.

    Rows whose coordinates agree after rounding to ``QUANTUM`` share one
    vector, which makes telescoping sums over jumps exact.  ``cache`` maps
    quantized keys to vectors and may be reused across calls.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, phi.d)
    keys = np.round(pts / QUANTUM).astype(np.int64)
    uniq, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    if cache is None:
        vecs = translate_batch(phi.c, phi.d, pts[first])
    else:
        vecs = np.empty((uniq.shape[0], phi.c.size))
        todo = [u for u, k in enumerate(map(tuple, uniq)) if k not in cache]
        if todo:
            fresh = translate_batch(phi.c, phi.d, pts[first[todo]])
            for u, v in zip(todo, fresh):
                cache[tuple(uniq[u])] = v
        for u, k in enumerate(map(tuple, uniq)):
            vecs[u] = cache[k]
    return vecs[inv]


def _apply_sparse(mat, rows: np.ndarray) -> np.ndarray:
    return np.asarray((mat @ rows.T).T)


def _first_derivatives(V: np.ndarray, d: int, N: int):
    return [_apply_sparse(_derivative_sparse(d, i, N), V) for i in range(d)]


def _retention(V: np.ndarray, phi: HermiteCoeffs) -> np.ndarray:
    base = float(np.linalg.norm(phi.c))
    if base == 0.0:
        return np.ones(V.shape[0])
    return np.linalg.norm(V, axis=1) / base


def _check_retention(retention: np.ndarray, times: np.ndarray, floor: float):
    bad = np.flatnonzero(retention < floor)
    if bad.size:
        k = int(bad[0])
        raise NumericError(
            f"mass retention {retention[k]:.6f} < {floor} at t={float(times[k])!r}; "
            "increase the cap or shrink the state range")


def _compensation_rows(V, DV, path: RcllPath, pos) -> np.ndarray:
    # Y on the nodes: cumulative jump terms, assigned at the post-jump node
    Y = np.zeros_like(V)
    if path.n_jumps == 0:
        return Y
    post = pos[path.jump_index]
    left = post - 1
    inc = V[post] - V[left]
    for i in range(path.d):
        inc = inc + path.jumps[:, i:i + 1] * DV[i][left, : V.shape[1]]
    Y[post] = inc
    return np.cumsum(Y, axis=0)


def jump_compensation_series(phi: HermiteCoeffs, X: RcllPath, p: float = 0.0,
                             N: int | None = None) -> CoeffPath:
    """Y_t on the node expansion of X, at cap N (default: the cap of phi).

    ``meta`` holds the per-jump increment norms at order -p-1.
    """
    N = phi.N if N is None else N
    phi = phi.resize(N)
    nodes = X.nodes()
    V = node_translates(phi, nodes.values)
    DV = _first_derivatives(V, X.d, N)
    Y = _compensation_rows(V, DV, X, nodes.grid_pos)
    out = CoeffPath(X.times, Y, X.d, X.jump_index, False, "Y")
    if X.n_jumps:
        post = nodes.grid_pos[X.jump_index]
        dY = Y[post] - Y[post - 1]
        out.meta["increment_norms"] = norms_p(dY, X.d, -p - 1)
    else:
        out.meta["increment_norms"] = np.zeros(0)
    return out


@dataclass(frozen=True)
class ItoReport:
    """Per-grid-time residual ||LHS - RHS||_{order} at cap N_eval and term norms."""

    times: np.ndarray
    residual: np.ndarray
    residual_half: np.ndarray
    first_order: np.ndarray
    bracket: np.ndarray
    jump: np.ndarray
    retention: np.ndarray
    N_big: int
    N_eval: int
    p: float
    order: float
    n_jumps: int
    bracket_source: str
    lhs: np.ndarray = field(repr=False, compare=False, default=None)
    rhs: np.ndarray = field(repr=False, compare=False, default=None)
    extra: dict = field(default_factory=dict, compare=False)
    label: str = ""

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1])

    @property
    def min_retention(self) -> float:
        return float(np.min(self.retention))

    def columns(self) -> dict:
        cols = {
            "time": self.times,
            "residual": self.residual,
            "residual_half": self.residual_half,
            "first_order": self.first_order,
            "bracket": self.bracket,
            "jump": self.jump,
            "retention": self.retention,
        }
        for key, val in self.extra.items():
            if isinstance(val, np.ndarray) and val.shape == self.times.shape:
                cols[key] = val
        return cols

    def to_csv(self) -> str:
        cols = self.columns()
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for k in range(self.times.size):
            buf.write(",".join(repr(float(v[k])) for v in cols.values()) + "\n")
        return buf.getvalue()


def check_caps(N_big: int, N_eval: int, min_cushion: int = MIN_CUSHION):
    if N_eval < 0 or N_big - N_eval < min_cushion:
        raise ConfigurationError(
            f"N_eval={N_eval} needs a cushion of at least {min_cushion} below N_big={N_big}")


def continuous_brackets(dec: SemimartingaleDecomposition, brackets: dict | None):
    """Continuous bracket arrays (K+1, d, d) and the source label."""
    path = dec.path
    d = path.d
    out = np.zeros((path.times.size, d, d))
    if brackets is not None:
        source = "model"
        for i in range(d):
            for j in range(d):
                b = brackets[(i, j)]
                if not np.array_equal(b.times, path.times):
                    raise UsageError("bracket grid differs from the path grid")
                out[:, i, j] = b.continuous
                source = b.source
        return out, source
    for i in range(d):
        for j in range(d):
            out[:, i, j] = realized_bracket(path.component(i), path.component(j), (i, j)).continuous
    return out, "realized"


@dataclass(frozen=True)
class ItoTerms:
    """Assembled Ito formula terms on the nodes, truncated to N_eval."""

    V: np.ndarray  # tau_{X} phi at N_big, all nodes
    lhs: np.ndarray
    first_order: np.ndarray  # sum_i int d_i tau phi dX^i
    bracket: np.ndarray  # 1/2 sum_ij int d_ij tau phi d[X^i, X^j]^c
    jump: np.ndarray  # Y
    rhs: np.ndarray
    grid_pos: np.ndarray
    node_times: np.ndarray


def ito_terms(phi: HermiteCoeffs, dec: SemimartingaleDecomposition, cont: np.ndarray,
              N_big: int, N_eval: int, cache: dict | None = None) -> ItoTerms:
    path = dec.path
    d = path.d
    phi = phi.resize(N_big)
    nodes = path.nodes()
    V = node_translates(phi, nodes.values, cache)
    L = basis_size(d, N_eval)
    DV = _first_derivatives(V, d, N_big)

    first = np.zeros((V.shape[0], L))
    for i in range(d):
        G = CoeffPath(path.times, DV[i][:, :L], d, path.jump_index)
        first += integrate_vs_semimartingale(G, dec.component(i)).coeffs

    bracket = np.zeros((V.shape[0], L))
    for i in range(d):
        D1 = _derivative_sparse(d, i, N_big + 1)
        for j in range(d):
            if not np.any(cont[:, i, j]):
                continue
            G = CoeffPath(path.times, _apply_sparse(D1, DV[j])[:, :L], d, path.jump_index)
            integrator = RcllPath(path.times, cont[:, i, j])
            bracket += integrate_vs_fv(G, integrator).coeffs
    bracket *= 0.5

    Y = _compensation_rows(V[:, :L], [dv[:, :L] for dv in DV], path, nodes.grid_pos)
    lhs = V[:, :L]
    rhs = lhs[0][None, :] - first + bracket + Y
    return ItoTerms(V, lhs, first, bracket, Y, rhs, nodes.grid_pos, nodes.times)


def ito_residual(phi: HermiteCoeffs, dec: SemimartingaleDecomposition, brackets: dict | None = None,
                 p: float = 0.0, N_big: int | None = None, N_eval: int | None = None,
                 min_retention: float = MIN_RETENTION, cache: dict | None = None,
                 label: str = "") -> ItoReport:
    """Evaluate both sides of the Ito formula along a path.

    Brackets come from ``brackets`` (model accumulation) when given and are
    otherwise estimated from the path.  Residuals are reported at order
    -p-1 (and -p-1/2 for reference) on cap N_eval.
    """
    N_big = phi.N if N_big is None else N_big
    N_eval = N_big - MIN_CUSHION if N_eval is None else N_eval
    check_caps(N_big, N_eval)
    cont, source = continuous_brackets(dec, brackets)
    terms = ito_terms(phi, dec, cont, N_big, N_eval, cache)
    d = dec.path.d
    pos = terms.grid_pos
    retention = _retention(terms.V, phi.resize(N_big))
    _check_retention(retention, terms.node_times, min_retention)
    diff = (terms.lhs - terms.rhs)[pos]
    order = -p - 1.0
    return ItoReport(
        times=dec.path.times,
        residual=norms_p(diff, d, order),
        residual_half=norms_p(diff, d, -p - 0.5),
        first_order=norms_p(terms.first_order[pos], d, -p - 0.5),
        bracket=norms_p(terms.bracket[pos], d, order),
        jump=norms_p(terms.jump[pos], d, order),
        retention=retention[pos],
        N_big=N_big, N_eval=N_eval, p=p, order=order,
        n_jumps=dec.path.n_jumps, bracket_source=source,
        lhs=terms.lhs[pos], rhs=terms.rhs[pos], label=label,
    )


def scalar_route_rhs(phi: HermiteCoeffs, dec: SemimartingaleDecomposition, n,
                     brackets: dict | None = None, N_big: int | None = None) -> np.ndarray:
    """pairing(RHS_t, h_n) from the scalar Ito formula for f(x) = <tau_x phi, h_n>.

    Derivatives are taken on phi before translating (f' = -<tau_x d phi, h_n>,
    f'' = <tau_x d^2 phi, h_n>), an independent route to the coefficient
    assembly.  Returns one value per grid time.
    """
    path = dec.path
    d = path.d
    N_big = phi.N if N_big is None else N_big
    phi = phi.resize(N_big)
    n = tuple(int(v) for v in np.atleast_1d(n))
    k = index_of(n)
    cont, _ = continuous_brackets(dec, brackets)
    nodes = path.nodes()
    pts = nodes.values

    def along(c):
        return translate_batch(c, d, pts)[:, k]

    f = along(phi.c)
    g = [-along(np.asarray(_derivative_sparse(d, i, N_big) @ phi.c)) for i in range(d)]
    value = np.full(pts.shape[0], f[0])
    for i in range(d):
        comp = dec.component(i)
        dm = np.diff(expand_to_nodes(comp.martingale.values[:, 0], comp.martingale.left_limit_values()[:, 0],
                                     path.jump_index))
        da = np.diff(expand_to_nodes(comp.fv.values[:, 0], comp.fv.left_limit_values()[:, 0], path.jump_index))
        value[1:] += np.cumsum(g[i][:-1] * dm) + np.cumsum(g[i][:-1] * da)
    for i in range(d):
        di = _derivative_sparse(d, i, N_big)
        for j in range(d):
            if not np.any(cont[:, i, j]):
                continue
            dj = _derivative_sparse(d, j, N_big + 1)
            hess = along(np.asarray(dj @ (di @ phi.c)))
            db = np.diff(expand_to_nodes(cont[:, i, j], cont[:, i, j], path.jump_index))
            value[1:] += 0.5 * np.cumsum(hess[:-1] * db)
    if path.n_jumps:
        post = nodes.grid_pos[path.jump_index]
        jumps = np.zeros(pts.shape[0])
        jumps[post] = f[post] - f[post - 1] - sum(path.jumps[:, i] * g[i][post - 1] for i in range(d))
        value += np.cumsum(jumps)
    return value[nodes.grid_pos]


# local time


def local_time_field(X: RcllPath, bracket, N: int, p: float = 0.5) -> CoeffPath:
    """c_n(t) = int_0^t h_n(X_{s-}) d<X>^c_s by left-endpoint sums (d = 1).

    ``bracket`` is a BracketPath or an array of continuous-bracket values on
    the grid.  ``meta['norm']`` holds ||L_T||_{-p}, finite for p > 1/4.
    """
    if X.d != 1:
        raise UsageError("the local-time field is defined for one-dimensional paths")
    cont = bracket.continuous if isinstance(bracket, BracketPath) else np.asarray(bracket, dtype=float)
    if cont.shape != X.times.shape:
        raise UsageError("bracket grid differs from the path grid")
    H = hermite_functions(N, X.values[:-1, 0])  # (N+1, K)
    out = np.zeros((X.times.size, N + 1))
    np.cumsum((H * np.diff(cont)[None, :]).T, axis=0, out=out[1:])
    field_ = CoeffPath(X.times, out, 1, predictable=False, label="local time")
    field_.meta["p"] = p
    field_.meta["norm"] = float(norms_p(out[-1], 1, -p)[0])
    return field_


def cap_for_bandwidth(h: float) -> int:
    """Cap whose spectral resolution sqrt(2N+1) matches 1/h."""
    return max(0, int(round((1.0 / h ** 2 - 1.0) / 2.0)))


def kernel_occupation(X: RcllPath, bracket, xs, h: float) -> np.ndarray:
    """Gaussian-kernel occupation density sum_j K_h(x - X_{t_j}) d<X>^c_j."""
    cont = bracket.continuous if isinstance(bracket, BracketPath) else np.asarray(bracket, dtype=float)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    z = (xs[:, None] - X.values[:-1, 0][None, :]) / h
    k = np.exp(-0.5 * z * z) / (np.sqrt(2 * np.pi) * h)
    return k @ np.diff(cont)


class SpectralKernel:
    """y -> K_N(x0, y) = sum_{n <= N} h_n(x0) h_n(y), tabulated for fast lookup.

    Pairing the local-time field with the reconstruction point x0 needs only
    this kernel along the path, so ensemble runs avoid forming coefficients.
    Points outside the table are evaluated exactly.
    """

    def __init__(self, N: int, x0: float = 0.0, half_width: float = 12.0, spacing: float = 2.5e-5):
        self.N, self.x0, self.half_width = N, float(x0), half_width
        self.grid = np.linspace(-half_width, half_width, int(round(2 * half_width / spacing)) + 1)
        self.table = self.exact(self.grid)

    def exact(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        a = hermite_functions(self.N, np.array([self.x0]))[:, 0]
        out = np.empty(y.size)
        step = max(1, 4_000_000 // (self.N + 1))
        for lo in range(0, y.size, step):
            out[lo:lo + step] = a @ hermite_functions(self.N, y[lo:lo + step])
        return out

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.interp(y, self.grid, self.table)
        outside = np.abs(y) > self.half_width
        if np.any(outside):
            out[outside] = self.exact(y[outside])
        return out
