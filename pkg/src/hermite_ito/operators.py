"""Derivative, translation and Dirac coefficient maps in the Hermite basis.

Conventions: (tau_x phi)(y) = phi(y - x) and

    d_i h_n = sqrt(n_i/2) h_{n-e_i} - sqrt((n_i+1)/2) h_{n+e_i}.

Translation entries T_nm = int h_m(y - x) h_n(y) dy are computed by
Gauss-Hermite quadrature after the substitution u = y - x/2, which turns the
integrand into p_m(u - x/2) p_n(u + x/2) exp(-u^2) exp(-x^2/4) with p_k the
orthonormal polynomials.  The rule is therefore exact once it has more than
N nodes; we evaluate it through Hermite functions and the scaled weights
w_q exp(u_q^2) so nothing overflows.
"""
from __future__ import annotations

import functools
import io
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, NumericError, UsageError
from .hermite_core import (
    MAX_NODES,
    basis_size,
    gauss_hermite_rule,
    hermite_basis_values,
    hermite_functions,
    index_lookup,
    index_table,
)
from .sobolev import HermiteCoeffs, cap_of_length

MAX_SHIFT = 20.0
IDENTITY_TOL = 1e-8
_BATCH_FLOATS = 4_000_000


@dataclass(frozen=True)
class CoeffOperator:
    """A linear map between graded-lex coefficient vectors."""

    d: int
    N_in: int
    N_out: int
    matrix: object  # ndarray or scipy sparse matrix, shape (size_out, size_in)
    kind: str = "custom"

    @property
    def shape(self):
        return (basis_size(self.d, self.N_out), basis_size(self.d, self.N_in))

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sparse.issparse(m) else np.asarray(m)

    def apply(self, phi: HermiteCoeffs) -> HermiteCoeffs:
        if phi.d != self.d:
            raise UsageError(f"operator acts on d={self.d}, got d={phi.d}")
        c = phi.pad(self.N_in).c if phi.N <= self.N_in else phi.truncate(self.N_in).c
        return HermiteCoeffs(self.d, self.N_out, self.matrix @ c, phi.label)

    def apply_rows(self, coeffs: np.ndarray) -> np.ndarray:
        """Apply to each row of a (B, size_in) array."""
        return np.asarray((self.matrix @ np.asarray(coeffs).T).T)

    def __call__(self, phi):
        return self.apply(phi)

    def __matmul__(self, other: "CoeffOperator") -> "CoeffOperator":
        if other.d != self.d:
            raise UsageError("dimension mismatch in operator composition")
        inner = other.matrix
        if other.N_out != self.N_in:
            inner = _resize_rows(other.matrix, self.d, other.N_out, self.N_in)
        return CoeffOperator(self.d, other.N_in, self.N_out, self.matrix @ inner, "custom")

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.dense():
            buf.write(",".join(repr(float(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()


def _resize_rows(m, d, N_from, N_to):
    # pad with zero rows or drop rows so the output cap becomes N_to
    n_to = basis_size(d, N_to)
    if sparse.issparse(m):
        m = m.tocsr()
        if n_to <= m.shape[0]:
            return m[:n_to]
        return sparse.vstack([m, sparse.csr_matrix((n_to - m.shape[0], m.shape[1]))]).tocsr()
    if n_to <= m.shape[0]:
        return m[:n_to]
    return np.vstack([m, np.zeros((n_to - m.shape[0], m.shape[1]))])


@functools.lru_cache(maxsize=None)
def _derivative_sparse(d: int, axis: int, N: int):
    table = index_table(d, N)
    out_lookup = index_lookup(d, N + 1)
    rows, cols, vals = [], [], []
    for col, n in enumerate(map(tuple, table)):
        k = n[axis]
        if k > 0:
            down = n[:axis] + (k - 1,) + n[axis + 1:]
            rows.append(out_lookup[down])
            cols.append(col)
            vals.append(np.sqrt(k / 2.0))
        up = n[:axis] + (k + 1,) + n[axis + 1:]
        rows.append(out_lookup[up])
        cols.append(col)
        vals.append(-np.sqrt((k + 1) / 2.0))
    shape = (basis_size(d, N + 1), basis_size(d, N))
    return sparse.csr_matrix((vals, (rows, cols)), shape=shape)


def derivative_matrix(d: int, axis: int, N: int) -> CoeffOperator:
    """Partial derivative along ``axis`` (0-based) from cap N to cap N+1."""
    if not 0 <= axis < d:
        raise ConfigurationError(f"axis {axis} out of range for d={d}")
    return CoeffOperator(d, N, N + 1, _derivative_sparse(d, axis, N), f"derivative({axis})")


def second_derivative_matrix(d: int, i: int, j: int, N: int) -> CoeffOperator:
    """d_i d_j from cap N to cap N+2."""
    return derivative_matrix(d, i, N + 1) @ derivative_matrix(d, j, N)


def quadrature_size(N: int) -> int:
    return min(MAX_NODES, 2 * N + 12)


@functools.lru_cache(maxsize=None)
def _checked_rule(N: int):
    Q = quadrature_size(N)
    if Q < N + 1:
        raise ConfigurationError(f"cap {N} needs more than {MAX_NODES} quadrature nodes")
    rule = gauss_hermite_rule(Q)
    ident = _translation_1d(np.zeros(1), N, rule)[0]
    err = float(np.max(np.abs(ident - np.eye(N + 1))))
    if err > IDENTITY_TOL:
        raise NumericError(
            f"quadrature self-check failed: |T(0) - I| = {err:.3e} > {IDENTITY_TOL} "
            f"(N={N}, Q={Q})"
        )
    return rule


def _translation_1d(shifts: np.ndarray, N: int, rule) -> np.ndarray:
    # full (B, N+1, N+1) matrices for a batch of 1-d shifts
    u = rule.nodes[:, None]
    half = 0.5 * shifts[None, :]
    hp = hermite_functions(N, u + half)  # (N+1, Q, B)
    hm = hermite_functions(N, u - half)
    return np.einsum("nqb,q,mqb->bnm", hp, rule.scaled_weights, hm)


def _check_shift(x, d):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (d,):
        raise UsageError(f"shift of shape {x.shape} for d={d}")
    if np.any(np.abs(x) > MAX_SHIFT):
        raise ConfigurationError(f"shift {x} exceeds |x| <= {MAX_SHIFT}")
    return x


def translation_1d(x: float, N: int) -> np.ndarray:
    """Dense (N+1, N+1) matrix of tau_x in d=1."""
    rule = _checked_rule(N)
    return _translation_1d(np.array([float(x)]), N, rule)[0]


def translation_matrix(x, N: int) -> CoeffOperator:
    """tau_x as a cap-N to cap-N operator; x is a point of R^d."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    x = _check_shift(x, d)
    table = index_table(d, N)
    m = np.ones((table.shape[0], table.shape[0]))
    for axis in range(d):
        t1 = translation_1d(x[axis], N)
        m *= t1[table[:, axis][:, None], table[:, axis][None, :]]
    return CoeffOperator(d, N, N, m, f"translation({', '.join(f'{v:g}' for v in x)})")


def translate_batch(c: np.ndarray, d: int, shifts) -> np.ndarray:
    """tau_x phi for many shifts at once.

    ``c`` holds the cap-N coefficients of phi, ``shifts`` has shape (B, d)
    (or (B,) for d=1).  Returns a (B, len(c)) array of cap-N coefficients.
    """
    c = np.asarray(c, dtype=float)
    N = cap_of_length(d, c.size)
    xs = np.asarray(shifts, dtype=float).reshape(-1, d)
    if xs.size and np.max(np.abs(xs)) > MAX_SHIFT:
        raise ConfigurationError(f"shift exceeds |x| <= {MAX_SHIFT}")
    rule = _checked_rule(N)
    out = np.empty((xs.shape[0], c.size))
    if d == 1:
        per = (N + 1) * rule.size
        step = max(1, _BATCH_FLOATS // per)
        u = rule.nodes[:, None]
        for lo in range(0, xs.shape[0], step):
            half = 0.5 * xs[lo:lo + step, 0][None, :]
            hm = hermite_functions(N, u - half)
            g = np.einsum("m,mqb->qb", c, hm) * rule.scaled_weights[:, None]
            hp = hermite_functions(N, u + half)
            out[lo:lo + step] = np.einsum("nqb,qb->bn", hp, g)
        return out
    table = index_table(d, N)
    box_index = tuple(table.T)
    box = np.zeros((N + 1,) * d)
    box[box_index] = c
    step = max(1, _BATCH_FLOATS // ((N + 1) ** 2 * rule.size))
    for lo in range(0, xs.shape[0], step):
        chunk = xs[lo:lo + step]
        mats = [_translation_1d(chunk[:, a], N, rule) for a in range(d)]
        for b in range(chunk.shape[0]):
            t = box
            for a in range(d):
                t = np.moveaxis(np.tensordot(mats[a][b], t, axes=([1], [a])), 0, a)
            out[lo + b] = t[box_index]
    return out


def translate(phi: HermiteCoeffs, x) -> HermiteCoeffs:
    """tau_x phi at the cap of phi."""
    x = _check_shift(x, phi.d)
    c = translate_batch(phi.c, phi.d, x[None, :])[0]
    return HermiteCoeffs(phi.d, phi.N, c, phi.label)


def mass_retention(phi: HermiteCoeffs, x) -> float:
    """||tau_x phi||_0 / ||phi||_0 at the cap of phi."""
    base = float(np.linalg.norm(phi.c))
    if base == 0.0:
        return 1.0
    return float(np.linalg.norm(translate(phi, x).c)) / base


def delta_coeffs(x, N: int) -> HermiteCoeffs:
    """Coefficients h_n(x) of the Dirac distribution at x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    _check_shift(x, d)
    vals = hermite_basis_values(d, N, x[None, :])[:, 0]
    return HermiteCoeffs(d, N, vals, f"delta({', '.join(repr(float(v)) for v in x)})")
