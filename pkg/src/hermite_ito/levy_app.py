"""The Levy-driven SDE for X and the SPDE satisfied by Y_t = tau_{X_t} phi.

The scalar state solves

    X_t = int b(X_{s-}) ds + int s(X_{s-}) dB_s
          + int_{0<|x|<1} F(X_{s-}, x) Ntilde(ds dx) + int_{|x|>=1} G(X_{s-}, x) N(ds dx)

with s(x) = <sigma, tau_x phi> and b(x) = <b, tau_x phi>.  Small jumps are
truncated at eps and compensated with a midpoint rule on log-spaced bins;
the same rule feeds the nu(dx)ds term of the SPDE so both sides use one
discretization of nu.  Compositions tau_F tau_{X_{s-}} phi are evaluated as
tau_{X_{s-} + F} phi (translations form a group), which avoids composing
truncated matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, NumericError
from .hermite_core import basis_size
from .ito import MIN_RETENTION, ItoReport, check_caps, continuous_brackets, ito_terms, node_translates, QUANTUM
from .operators import _derivative_sparse, translate_batch
from .paths import JumpDiffusionModel, Simulation, simulate_jump_diffusion, uniform_grid
from .sobolev import HermiteCoeffs, norms_p, pairing

COEFF_CUSHION = 4


def damped_mark(x_state, mark):
    """F(x, m) = m * min(1, 1/|x|): bounded by |m| and damped far from 0."""
    return mark * min(1.0, 1.0 / abs(x_state)) if x_state != 0 else mark


def identity_mark(x_state, mark):
    return mark


@dataclass(frozen=True)
class SmallJumpLaw:
    """Symmetric Levy density on eps < |x| < 1.

    ``uniform``: total mass ``rate`` spread evenly over eps < |x| < 1.
    ``power``: density (rate/2) |x|^{-1-alpha} on 0 < |x| < 1, truncated at eps.
    """

    rate: float = 0.0
    eps: float = 0.1
    kind: str = "uniform"
    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        if self.rate < 0:
            raise ConfigurationError("small-jump rate must be non-negative")
        if self.kind not in ("uniform", "power"):
            raise ConfigurationError(f"unknown small-jump law {self.kind!r}")
        if self.kind == "power" and not 0.0 < self.alpha < 2.0:
            raise ConfigurationError("power law needs 0 < alpha < 2")

    def density(self, x):
        a = np.abs(np.asarray(x, dtype=float))
        inside = (a > self.eps) & (a < 1.0)
        if self.kind == "uniform":
            val = np.full(a.shape, self.rate / (2.0 * (1.0 - self.eps)))
        else:
            with np.errstate(divide="ignore"):
                val = 0.5 * self.rate * a ** (-1.0 - self.alpha)
        return np.where(inside, val, 0.0)

    def mass(self) -> float:
        if self.kind == "uniform":
            return self.rate
        return self.rate * (self.eps ** -self.alpha - 1.0) / self.alpha

    def second_moment(self) -> float:
        """int_{eps<|x|<1} x^2 nu(dx)."""
        if self.kind == "uniform":
            return self.rate * (1.0 - self.eps ** 3) / (3.0 * (1.0 - self.eps))
        return self.rate * (1.0 - self.eps ** (2.0 - self.alpha)) / (2.0 - self.alpha)

    def tail_second_moment(self) -> float:
        """int_{|x|<eps} x^2 nu(dx), the mass dropped by truncation."""
        if self.kind == "uniform":
            return 0.0
        return self.rate * self.eps ** (2.0 - self.alpha) / (2.0 - self.alpha)

    def sample(self, rng, n: int) -> np.ndarray:
        u = rng.uniform(size=n)
        if self.kind == "uniform":
            r = self.eps + (1.0 - self.eps) * u
        else:
            e = self.eps ** -self.alpha
            r = (e - u * (e - 1.0)) ** (-1.0 / self.alpha)
        sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
        return sign * r

    def bins(self, n_bins: int):
        """Midpoint rule on log-spaced bins, both signs: (marks, weights)."""
        if self.rate == 0.0:
            return np.zeros(0), np.zeros(0)
        edges = np.geomspace(self.eps, 1.0, n_bins + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        w = self.density(mids) * np.diff(edges)
        return np.concatenate([mids, -mids]), np.concatenate([w, w])


@dataclass(frozen=True)
class LevyModel:
    phi: HermiteCoeffs
    sigma: HermiteCoeffs
    b: HermiteCoeffs
    small: SmallJumpLaw = field(default_factory=SmallJumpLaw)
    large_rate: float = 0.0
    large_size: float = 1.5
    F: Callable = damped_mark
    G: Callable = identity_mark
    T: float = 1.0
    n_steps: int = 256
    n_bins: int = 8
    N_big: int = 32
    N_eval: int = 26
    frozen: bool = False
    name: str = "custom"

    def __post_init__(self):
        if any(v.d != 1 for v in (self.phi, self.sigma, self.b)):
            raise ConfigurationError("the Levy application is one-dimensional")
        top = max(self.phi.N, self.sigma.N, self.b.N)
        if self.N_big - top < COEFF_CUSHION:
            raise ConfigurationError(
                f"N_big={self.N_big} needs a cushion of {COEFF_CUSHION} over the coefficient caps ({top})")
        if self.large_rate < 0 or self.large_size < 1.0:
            raise ConfigurationError("large jumps need rate >= 0 and |size| >= 1")
        check_caps(self.N_big, self.N_eval)

    @property
    def intensity(self) -> float:
        return self.small.mass() + self.large_rate

    def grid(self) -> np.ndarray:
        return uniform_grid(self.T, self.n_steps)


def preset(name: str = "default", **overrides) -> LevyModel:
    """Named models; keyword overrides replace fields of the preset."""
    phi = HermiteCoeffs.basis((0,), 0, "phi")
    sigma = HermiteCoeffs.basis((0,), 1) * 0.8
    b = HermiteCoeffs.basis((1,), 1) * -0.3
    base = dict(phi=phi, sigma=sigma, b=b, small=SmallJumpLaw(5.0, 0.1), large_rate=1.0, name=name)
    if name == "default":
        pass
    elif name == "diffusion":
        base.update(small=SmallJumpLaw(0.0, 0.1), large_rate=0.0)
    elif name == "pure-jump":
        base.update(sigma=HermiteCoeffs.zeros(1, 1), b=HermiteCoeffs.zeros(1, 1))
    elif name == "power":
        base.update(small=SmallJumpLaw(0.5, 0.05, "power", 1.0))
    elif name == "still":
        base.update(sigma=HermiteCoeffs.zeros(1, 1), b=HermiteCoeffs.zeros(1, 1),
                    small=SmallJumpLaw(0.0, 0.1), large_rate=0.0)
    else:
        raise ConfigurationError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    base.update(overrides)
    return LevyModel(**base)


PRESETS = ("default", "diffusion", "pure-jump", "power", "still")


class CoefficientFunctions:
    """s(x) = <sigma, tau_x phi> and b(x) = <b, tau_x phi>, memoized on quantized x.

    The cache stores tau_x phi itself and is shared with the SPDE assembly.
    """

    def __init__(self, model: LevyModel, cache: dict | None = None, min_retention: float = MIN_RETENTION):
        self.model = model
        self.phi = model.phi.pad(model.N_big)
        self.sigma = model.sigma.pad(model.N_big).c
        self.b = model.b.pad(model.N_big).c
        self.cache = {} if cache is None else cache
        self.min_retention = min_retention
        self._base = float(np.linalg.norm(self.phi.c))

    def translate(self, x: float) -> np.ndarray:
        key = (int(np.round(x / QUANTUM)),)
        v = self.cache.get(key)
        if v is None:
            v = translate_batch(self.phi.c, 1, np.array([[x]]))[0]
            if self._base and np.linalg.norm(v) / self._base < self.min_retention:
                raise NumericError(f"mass retention below {self.min_retention} at state x={x!r}")
            self.cache[key] = v
        return v

    def sigma_bar(self, x: float) -> float:
        return float(self.sigma @ self.translate(float(x)))

    def b_bar(self, x: float) -> float:
        return float(self.b @ self.translate(float(x)))

    def __call__(self, x: float):
        v = self.translate(float(x))
        return float(self.sigma @ v), float(self.b @ v)


def coefficient_functions(model: LevyModel, cache: dict | None = None):
    """The scalar coefficient functions (sigma_bar, b_bar)."""
    cf = CoefficientFunctions(model, cache)
    return cf.sigma_bar, cf.b_bar


def compensator(model: LevyModel, x: float) -> float:
    """Midpoint-rule value of int_{eps<|m|<1} F(x, m) nu(dm)."""
    marks, w = model.small.bins(model.n_bins)
    return float(sum(wk * model.F(x, mk) for mk, wk in zip(marks, w)))


def compensator_quadrature_error(model: LevyModel, x: float = 0.0) -> float:
    """|midpoint rule - adaptive quadrature| for the compensator at state x."""
    if model.small.rate == 0.0:
        return 0.0
    eps = model.small.eps

    def integrand(m):
        return (model.F(x, m) + model.F(x, -m)) * float(model.small.density(m))

    exact, _ = integrate.quad(integrand, eps, 1.0, limit=200, points=[eps * 1.0000001])
    return abs(compensator(model, x) - exact)


def apply_A(state: HermiteCoeffs, sigma: HermiteCoeffs) -> HermiteCoeffs:
    """A phi = -<sigma, phi> d phi, from cap N to cap N+1."""
    d1 = _derivative_sparse(1, 0, state.N)
    return HermiteCoeffs(1, state.N + 1, -pairing(sigma, state) * (d1 @ state.c), "A")


def apply_L(state: HermiteCoeffs, sigma: HermiteCoeffs, b: HermiteCoeffs) -> HermiteCoeffs:
    """L phi = 1/2 <sigma, phi>^2 d^2 phi - <b, phi> d phi, from cap N to cap N+2."""
    d1 = _derivative_sparse(1, 0, state.N) @ state.c
    d2 = _derivative_sparse(1, 0, state.N + 1) @ d1
    first = np.zeros(d2.size)
    first[: d1.size] = d1
    s, bb = pairing(sigma, state), pairing(b, state)
    return HermiteCoeffs(1, state.N + 2, 0.5 * s * s * d2 - bb * first, "L")


def _sampler(model: LevyModel):
    small_mass = model.small.mass()
    total = model.intensity

    def sample(rng, n):
        small = rng.uniform(size=n) * total < small_mass
        marks = np.empty(n)
        marks[small] = model.small.sample(rng, int(small.sum()))
        k = int((~small).sum())
        marks[~small] = np.where(rng.uniform(size=k) < 0.5, -1.0, 1.0) * model.large_size
        return marks

    return sample


def simulate_fd_sde(model: LevyModel, seed, increments=None, cache: dict | None = None):
    """Jump-adapted Euler scheme for the scalar state.

    Returns the path simulation (with Brownian increments and jump marks as
    the driving-noise record) and the coefficient functions used.
    """
    cf = CoefficientFunctions(model, cache)
    comp_cache = {}

    def comp(x):
        key = float(x)
        if key not in comp_cache:
            comp_cache[key] = compensator(model, key)
        return comp_cache[key]

    if model.frozen:
        s0, b0 = cf(0.0)
        c0 = comp(0.0)
        coefficients = lambda x: (b0 - c0, s0)  # noqa: E731
    else:
        def coefficients(x):
            s, b = cf(x[0])
            return b - comp(x[0]), s

    def jump_map(x_left, mark):
        x = float(x_left[0])
        m = float(mark[0])
        return model.F(x, m) if abs(m) < 1.0 else model.G(x, m)

    jd = JumpDiffusionModel(d=1, coefficients=coefficients, intensity=model.intensity,
                            jump_sampler=_sampler(model), jump_map=jump_map)
    sim = simulate_jump_diffusion(jd, model.grid(), seed, increments)
    return sim, cf


def jump_form_error(model: LevyModel, sim: Simulation) -> float:
    """max |dX - F(X-, m)| (small marks) or |dX - G(X-, m)| (large marks)."""
    path = sim.path
    err = 0.0
    for left, jump, mark in zip(path.left_limits[:, 0], path.jumps[:, 0], sim.marks[:, 0]):
        expect = model.F(left, mark) if abs(mark) < 1.0 else model.G(left, mark)
        err = max(err, abs(jump - expect))
    return err


def spde_residual(model: LevyModel, seed=None, p: float = -1.0, sim: Simulation | None = None,
                  cache: dict | None = None, increments=None, label: str = "") -> ItoReport:
    """Both sides of the SPDE for Y_t = tau_{X_t} phi on one simulated path.

    ``p`` is signed: phi lies in S_p and the residual is measured in the
    S_{p-1} norm at cap N_eval.  ``extra`` carries the rearrangement error
    (small-jump N integral against Ntilde plus nu ds integrals), the
    agreement with the Ito-formula assembly, and jump diagnostics.
    """
    cache = {} if cache is None else cache
    if sim is None:
        sim, _ = simulate_fd_sde(model, seed, increments, cache)
    path = sim.path
    N_big, L = model.N_big, basis_size(1, model.N_eval)
    phi = model.phi.pad(N_big)
    sigma, bvec = model.sigma.pad(N_big).c, model.b.pad(N_big).c
    nodes = path.nodes()
    pos = nodes.grid_pos
    V = node_translates(phi, nodes.values, cache)
    D1 = _derivative_sparse(1, 0, N_big)
    D2 = _derivative_sparse(1, 0, N_big + 1)
    DV = np.asarray((D1 @ V.T).T)
    D2V = np.asarray((D2 @ DV.T).T)
    n_nodes = V.shape[0]
    x = nodes.values[:, 0]

    # continuous intervals start at the grid nodes pos[k], k < K
    starts = pos[:-1]
    dt = np.diff(path.times)
    s_bar = V[starts] @ sigma
    b_bar = V[starts] @ bvec

    def accumulate(rows_at_starts):
        inc = np.zeros((n_nodes, L))
        inc[starts + 1] = rows_at_starts
        return np.cumsum(inc, axis=0)

    A_term = accumulate((-s_bar * sim.dB[:, 0])[:, None] * DV[starts, :L])
    L_term = accumulate(((0.5 * s_bar ** 2) * dt)[:, None] * D2V[starts, :L]
                        - (b_bar * dt)[:, None] * DV[starts, :L])

    marks, weights = model.small.bins(model.n_bins)
    nu_full = np.zeros((starts.size, L))  # sum_b w_b (tau_F - Id + F d) V
    nu_shift = np.zeros((starts.size, L))  # sum_b w_b (tau_F - Id) V
    if marks.size:
        xs = x[starts]
        F = np.array([[model.F(xv, m) for m in marks] for xv in xs])
        shifted = node_translates(phi, (xs[:, None] + F).reshape(-1, 1), cache)
        shifted = shifted.reshape(xs.size, marks.size, -1)[:, :, :L]
        diff = shifted - V[starts, None, :L]
        nu_shift = np.einsum("b,kbl->kl", weights, diff)
        nu_full = nu_shift + (F @ weights)[:, None] * DV[starts, :L]
    nu_term = accumulate(dt[:, None] * nu_full)

    # jump records split by mark region
    post = pos[path.jump_index]
    left = post - 1
    small = np.abs(sim.marks[:, 0]) < 1.0
    jump_shift = V[post, :L] - V[left, :L]
    jump_first = path.jumps[:, 0:1] * DV[left, :L]

    def at_jumps(rows, mask):
        inc = np.zeros((n_nodes, L))
        inc[post[mask]] = rows[mask]
        return inc

    small_shift_inc = at_jumps(jump_shift, small)
    ntilde_inc = small_shift_inc.copy()
    ntilde_inc[starts + 1] -= dt[:, None] * nu_shift
    ntilde_term = np.cumsum(ntilde_inc, axis=0)
    large_term = np.cumsum(at_jumps(jump_shift, ~small), axis=0)

    # rearrangement: N integral = Ntilde integral + nu ds integral, all with (tau_F - Id + F d)
    n_small = np.cumsum(at_jumps(jump_shift + jump_first, small), axis=0)
    ntilde_full_inc = at_jumps(jump_shift + jump_first, small)
    ntilde_full_inc[starts + 1] -= dt[:, None] * nu_full
    ntilde_full = np.cumsum(ntilde_full_inc, axis=0)
    order = p - 1.0
    rearrangement = float(np.max(norms_p((n_small - ntilde_full - nu_term)[pos], 1, order)))

    lhs = V[:, :L]
    rhs = phi.c[None, :L] + A_term + L_term + nu_term + ntilde_term + large_term

    cont, source = continuous_brackets(sim.decomposition, sim.brackets)
    ito = ito_terms(model.phi, sim.decomposition, cont, N_big, model.N_eval, cache)
    agreement = float(np.max(norms_p((rhs - ito.rhs)[pos], 1, order)))

    base = float(np.linalg.norm(phi.c)) or 1.0
    retention = np.linalg.norm(V, axis=1)[pos] / base
    F_small = path.jumps[small, 0]
    second_order = norms_p((jump_shift + jump_first)[small], 1, order) if small.any() else np.zeros(0)
    ratio = second_order / F_small ** 2 if small.any() else np.zeros(0)
    diff = (lhs - rhs)[pos]
    extra = {
        "nu_term": norms_p(nu_term[pos], 1, order),
        "ntilde_term": norms_p(ntilde_term[pos], 1, order),
        "large_term": norms_p(large_term[pos], 1, order),
        "rearrangement_error": rearrangement,
        "ito_agreement": agreement,
        "n_small_jumps": int(small.sum()),
        "n_large_jumps": int((~small).sum()),
        "max_small_jump": float(np.max(np.abs(F_small))) if small.any() else 0.0,
        "small_F2_sum": float(np.sum(F_small ** 2)),
        "second_order_ratio_max": float(np.max(ratio)) if ratio.size else 0.0,
        "tail_second_moment": model.small.tail_second_moment(),
        "compensator_quadrature_error": compensator_quadrature_error(model),
        "order_label": f"S_{{p-1}} with p={p:g}",
    }
    return ItoReport(
        times=path.times,
        residual=norms_p(diff, 1, order),
        residual_half=norms_p(diff, 1, order + 0.5),
        first_order=norms_p(A_term[pos], 1, order),
        bracket=norms_p(L_term[pos], 1, order),
        jump=norms_p((nu_term + ntilde_term + large_term)[pos], 1, order),
        retention=retention,
        N_big=N_big, N_eval=model.N_eval, p=p, order=order,
        n_jumps=path.n_jumps, bracket_source=source,
        lhs=lhs[pos], rhs=rhs[pos], extra=extra, label=label,
    )
