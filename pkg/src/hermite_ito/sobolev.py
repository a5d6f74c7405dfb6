"""Truncated Hermite coefficient vectors, Hermite-Sobolev norms and pairing."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UsageError
from .hermite_core import basis_size, index_lookup, index_table


def sobolev_weights(d: int, N: int) -> np.ndarray:
    """The weights (2|n| + d) for every graded-lex index up to cap N."""
    return 2.0 * index_table(d, N).sum(axis=1) + d


def cap_of_length(d: int, length: int) -> int:
    """Inverse of basis_size in N; raises if length is not a valid size."""
    N = 0
    while basis_size(d, N) < length:
        N += 1
    if basis_size(d, N) != length:
        raise UsageError(f"length {length} is not a graded-lex basis size for d={d}")
    return N


@dataclass(frozen=True, eq=False)
class HermiteCoeffs:
    """Coefficients <phi, h_n> for |n| <= N, graded-lex ordered.

    The same container holds test functions and distributions; the Sobolev
    order only enters through :func:`norm_p`.
    """

    d: int
    N: int
    c: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        if self.d < 1 or self.N < 0:
            raise ConfigurationError(f"invalid (d, N) = ({self.d}, {self.N})")
        if c.size != basis_size(self.d, self.N):
            raise UsageError(
                f"coefficient vector of length {c.size} does not match "
                f"(d={self.d}, N={self.N}) which needs {basis_size(self.d, self.N)}"
            )
        if not np.all(np.isfinite(c)):
            raise UsageError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def zeros(cls, d, N, label=""):
        return cls(d, N, np.zeros(basis_size(d, N)), label)

    @classmethod
    def basis(cls, n, N=None, label=None):
        """The coefficient vector of a single Hermite function h_n."""
        n = tuple(int(v) for v in np.atleast_1d(n))
        d = len(n)
        N = sum(n) if N is None else N
        c = np.zeros(basis_size(d, N))
        c[index_lookup(d, N)[n]] = 1.0
        return cls(d, N, c, label if label is not None else f"h{n}")

    def __eq__(self, other):
        if not isinstance(other, HermiteCoeffs):
            return NotImplemented
        return self.d == other.d and self.N == other.N and np.array_equal(self.c, other.c)

    __hash__ = None

    def __len__(self):
        return self.c.size

    def truncate(self, N: int) -> "HermiteCoeffs":
        if N > self.N:
            raise UsageError(f"cannot truncate cap {self.N} to larger cap {N}")
        return HermiteCoeffs(self.d, N, self.c[: basis_size(self.d, N)], self.label)

    def pad(self, N: int) -> "HermiteCoeffs":
        if N < self.N:
            raise UsageError(f"cannot pad cap {self.N} to smaller cap {N}")
        c = np.zeros(basis_size(self.d, N))
        c[: self.c.size] = self.c
        return HermiteCoeffs(self.d, N, c, self.label)

    def resize(self, N: int) -> "HermiteCoeffs":
        return self.pad(N) if N >= self.N else self.truncate(N)

    def __add__(self, other):
        a, b = _aligned(self, other)
        return HermiteCoeffs(self.d, max(self.N, other.N), a + b, self.label)

    def __sub__(self, other):
        a, b = _aligned(self, other)
        return HermiteCoeffs(self.d, max(self.N, other.N), a - b, self.label)

    def __mul__(self, scalar):
        return HermiteCoeffs(self.d, self.N, float(scalar) * self.c, self.label)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def evaluate(self, x) -> np.ndarray:
        """Pointwise value sum_n c_n h_n(x) of the truncated expansion."""
        from .hermite_core import hermite_basis_values

        pts = np.asarray(x, dtype=float)
        vals = hermite_basis_values(self.d, self.N, pts)
        return self.c @ vals

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            [self.d, self.N] + [repr(float(v)) for v in self.c]
        )
        return buf.getvalue()

    @classmethod
    def from_csv_row(cls, row: str, label="") -> "HermiteCoeffs":
        fields = next(csv.reader([row.strip()]))
        d, N = int(fields[0]), int(fields[1])
        return cls(d, N, np.array([float(v) for v in fields[2:]]), label)


def _aligned(a: HermiteCoeffs, b: HermiteCoeffs):
    if a.d != b.d:
        raise UsageError(f"dimension mismatch: {a.d} vs {b.d}")
    N = max(a.N, b.N)
    return a.pad(N).c, b.pad(N).c


def norm_p(phi: HermiteCoeffs, p: float, N: int | None = None) -> float:
    """Hermite-Sobolev norm sqrt(sum (2|n|+d)^{2p} c_n^2), optionally at cap N."""
    c = phi.c if N is None else phi.truncate(N).c
    w = sobolev_weights(phi.d, phi.N if N is None else N)
    return float(np.sqrt(np.sum(w ** (2.0 * p) * c * c)))


def norms_p(coeffs: np.ndarray, d: int, p: float) -> np.ndarray:
    """Row-wise norm_p for a stacked array of coefficient vectors."""
    coeffs = np.atleast_2d(coeffs)
    N = cap_of_length(d, coeffs.shape[-1])
    w = sobolev_weights(d, N) ** (2.0 * p)
    return np.sqrt(np.sum(w * coeffs * coeffs, axis=-1))


def pairing(phi: HermiteCoeffs, psi: HermiteCoeffs) -> float:
    """Duality pairing sum_n <phi, h_n><psi, h_n>; the shorter vector is zero-padded."""
    a, b = _aligned(phi, psi)
    return float(np.dot(a, b))
