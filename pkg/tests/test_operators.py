import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.linalg import expm

from hermite_ito.errors import ConfigurationError
from hermite_ito.hermite_core import basis_size, gauss_hermite_rule, hermite_functions, index_table
from hermite_ito.operators import (
    delta_coeffs,
    derivative_matrix,
    mass_retention,
    second_derivative_matrix,
    translate,
    translate_batch,
    translation_1d,
    translation_matrix,
)
from hermite_ito.sobolev import HermiteCoeffs, norm_p, pairing


def random_coeffs(rng, d, N, decay=0.0):
    w = np.exp(-decay * index_table(d, N).sum(axis=1))
    return HermiteCoeffs(d, N, rng.standard_normal(basis_size(d, N)) * w)


def test_derivative_of_low_modes():
    D = derivative_matrix(1, 0, 3).dense()
    assert np.allclose(D[:, 0], [0, -math.sqrt(0.5), 0, 0, 0], rtol=0, atol=1e-16)
    assert np.allclose(D[:, 1], [math.sqrt(0.5), 0, -1.0, 0, 0], rtol=0, atol=1e-16)


@pytest.mark.parametrize("d,axis", [(1, 0), (2, 0), (2, 1), (3, 2)])
def test_derivative_sparsity(d, axis):
    D = derivative_matrix(d, axis, 8).dense()
    assert D.shape == (basis_size(d, 9), basis_size(d, 8))
    assert np.max(np.count_nonzero(D, axis=0)) <= 2


def test_derivative_axis_validated():
    with pytest.raises(ConfigurationError):
        derivative_matrix(2, 2, 4)


def test_derivative_matches_pointwise_derivative():
    rng = np.random.default_rng(0)
    phi = random_coeffs(rng, 1, 10)
    x = np.linspace(-3, 3, 13)
    eps = 1e-6
    fd = (phi.evaluate(x + eps) - phi.evaluate(x - eps)) / (2 * eps)
    assert np.allclose(derivative_matrix(1, 0, 10)(phi).evaluate(x), fd, atol=1e-7)


def test_second_derivative_composes():
    rng = np.random.default_rng(1)
    phi = random_coeffs(rng, 2, 6)
    D2 = second_derivative_matrix(2, 0, 1, 6)
    two = derivative_matrix(2, 0, 7)(derivative_matrix(2, 1, 6)(phi))
    assert np.allclose(D2(phi).c, two.c, rtol=0, atol=1e-14)
    # mixed partials commute
    other = second_derivative_matrix(2, 1, 0, 6)(phi)
    assert np.allclose(D2(phi).c, other.c, rtol=0, atol=1e-13)


@pytest.mark.parametrize("d", [1, 2])
def test_duality_sign(d):
    rng = np.random.default_rng(2)
    N = 20
    for axis in range(d):
        phi, psi = random_coeffs(rng, d, N), random_coeffs(rng, d, N - 2)
        D_phi = derivative_matrix(d, axis, N)(phi)
        D_psi = derivative_matrix(d, axis, N - 2)(psi)
        scale = np.linalg.norm(phi.c) * np.linalg.norm(psi.c)
        assert abs(pairing(D_phi, psi) + pairing(phi, D_psi)) <= 1e-10 * scale


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_bounded_operator_probe(p):
    rng = np.random.default_rng(3)
    ratios = []
    for N in (16, 32, 64):
        D = derivative_matrix(1, 0, N)
        worst = 0.0
        for _ in range(200):
            phi = random_coeffs(rng, 1, N)
            worst = max(worst, norm_p(D(phi), p - 0.5) / norm_p(phi, p))
        ratios.append(worst)
    assert max(ratios) <= 2.0
    assert all(b <= a * (1 + 0.02) for a, b in zip(ratios, ratios[1:]))


def test_translation_at_zero_is_identity():
    for d in (1, 2):
        T = translation_matrix(np.zeros(d), 24).dense()
        assert np.max(np.abs(T - np.eye(T.shape[0]))) < 1e-12


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_gaussian_overlap(x):
    T = translation_1d(x, 16)
    assert T[0, 0] == pytest.approx(math.exp(-x * x / 4), rel=1e-13)
    # independent high-resolution quadrature of int h_0(y - x) h_0(y) dy on a wide grid
    y = np.linspace(-20, 20, 40001)
    h0 = hermite_functions(0, y)[0]
    h0s = hermite_functions(0, y - x)[0]
    assert T[0, 0] == pytest.approx(trapezoid(h0 * h0s, y), rel=1e-10)


def test_translation_entries_by_brute_quadrature():
    x = 0.8
    T = translation_1d(x, 10)
    rule = gauss_hermite_rule(150)
    y = rule.nodes
    Hy = hermite_functions(10, y)
    Hs = hermite_functions(10, y - x)
    brute = (Hy * rule.scaled_weights) @ Hs.T
    assert np.max(np.abs(T - brute)) < 1e-12


def test_translation_moves_functions():
    rng = np.random.default_rng(4)
    phi = random_coeffs(rng, 1, 8)
    moved = translate(phi.pad(40), 1.3)
    y = np.linspace(-3, 3, 9)
    assert np.allclose(moved.evaluate(y), phi.evaluate(y - 1.3), atol=1e-10)


def test_translation_tensor_product_in_two_dimensions():
    rng = np.random.default_rng(5)
    phi = random_coeffs(rng, 2, 6).pad(30)
    shift = np.array([0.4, -0.9])
    moved = translate(phi, shift)
    pts = np.array([[0.1, 0.2], [-1.0, 0.5], [1.5, -1.2]])
    assert np.allclose(moved.evaluate(pts), phi.evaluate(pts - shift), atol=1e-10)
    dense = translation_matrix(shift, 30)(phi)
    assert np.allclose(dense.c, moved.c, atol=1e-13)


def test_batch_translation_matches_single():
    rng = np.random.default_rng(6)
    phi = random_coeffs(rng, 1, 20)
    xs = np.array([-2.0, 0.0, 0.3, 1.7])
    batch = translate_batch(phi.c, 1, xs)
    for x, row in zip(xs, batch):
        assert np.allclose(row, translation_1d(x, 20) @ phi.c, atol=1e-14)


def test_group_property_holds_with_a_larger_internal_cap():
    # T(x)T(-x) truncates the intermediate sum; with room above N_eval it is the identity
    N_eval, x = 26, 0.7
    L = N_eval + 1
    T = translation_1d(x, 50) @ translation_1d(-x, 50)
    assert np.max(np.abs(T[:L, :L] - np.eye(L))) < 1e-12
    T32 = translation_1d(x, 32) @ translation_1d(-x, 32)
    assert np.max(np.abs(T32[:23, :23] - np.eye(23))) < 1e-6


def test_group_property_at_cap_32_is_limited_by_truncation():
    # the composed cap-32 matrices miss sum_{k>32} T_nk(x) T_km(-x); at N_eval = 28 this is not small
    T = translation_1d(0.7, 32) @ translation_1d(-0.7, 32)
    err = np.max(np.abs(T[:29, :29] - np.eye(29)))
    assert 1e-3 < err < 1.0


def test_expm_cross_check_at_small_cap():
    M = 60
    D = derivative_matrix(1, 0, M).dense()[: M + 1]
    for x in (0.5, -1.0):
        E = expm(-x * D)[:13, :13]
        assert np.max(np.abs(E - translation_1d(x, 12))) < 1e-8


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("x", [0.5, -0.5, 1.5, -1.5])
def test_commutation_with_derivative(d, x):
    N = 32 if d == 1 else 20
    rng = np.random.default_rng(7)
    phi = random_coeffs(rng, d, N - 8).pad(N)
    shift = np.full(d, x)
    for axis in range(d):
        D = derivative_matrix(d, axis, N)
        a = translate(D(phi), shift).truncate(N - 6)
        b = D(translate(phi, shift)).truncate(N - 6)
        assert norm_p(a - b, 0) <= 1e-6 * norm_p(phi, 1)


def test_polynomial_growth_probe():
    rng = np.random.default_rng(8)
    for p in (-1.0, 0.0, 1.0):
        exponent = 2 * (math.floor(abs(p)) + 1) + 1
        for x in (0.5, 1.0, 2.0, 4.0):
            for _ in range(20):
                phi = random_coeffs(rng, 1, 10).pad(60)
                ratio = norm_p(translate(phi, x), p) / norm_p(phi, p)
                assert ratio <= (1 + abs(x)) ** exponent


def test_shift_limit():
    with pytest.raises(ConfigurationError):
        translation_matrix(20.5, 4)
    with pytest.raises(ConfigurationError):
        delta_coeffs(-21.0, 4)


def test_mass_retention():
    phi = HermiteCoeffs.basis((0,), 32)
    assert mass_retention(phi, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert mass_retention(phi, 2.0) > 0.999
    assert mass_retention(phi, 9.0) < 0.999


def test_delta_coefficients():
    assert delta_coeffs(0.0, 5).c[1] == 0.0
    for x in (-1.2, 0.0, 2.5):
        assert delta_coeffs(x, 3).c[0] == pytest.approx(math.pi ** -0.25 * math.exp(-x * x / 2), rel=1e-14)
    assert "delta" in delta_coeffs(0.5, 2).label


def test_dirac_reproduces_values():
    rng = np.random.default_rng(9)
    for d in (1, 2):
        psi = random_coeffs(rng, d, 8)
        x = np.array([0.7, -0.4])[:d]
        assert pairing(delta_coeffs(x, 12), psi) == pytest.approx(float(psi.evaluate(x[None, :])[0]), abs=1e-9)


def test_delta_norm_growth_probe():
    # ||delta_0||_{-p}^2 = sum (2k+1)^{-2p} h_k(0)^2 with h_{2j}(0)^2 ~ (pi^2 j)^{-1/2}
    def norm(p, N):
        return norm_p(delta_coeffs(0.0, N), -p)

    caps = (200, 400, 800)
    # p = 0.3: increments per doubling shrink geometrically (convergent series)
    n = [norm(0.3, N) for N in caps + (1600,)]
    inc = np.diff(n)
    assert np.all(inc > 0) and np.all(inc[1:] < inc[:-1])
    # p = 0.5: growth below 1% per doubling
    m = [norm(0.5, N) for N in caps]
    assert all(b / a - 1 < 0.01 for a, b in zip(m, m[1:]))
    # p = 1/4: the squared norm grows by a roughly constant amount per doubling (log divergence)
    sq = np.diff([norm(0.25, N) ** 2 for N in caps + (1600,)])
    assert np.all(sq > 0.05) and np.max(sq) / np.min(sq) < 1.1


def test_operator_composition_and_csv():
    D0 = derivative_matrix(1, 0, 4)
    D1 = derivative_matrix(1, 0, 5)
    comp = D1 @ D0
    assert comp.shape == (basis_size(1, 6), basis_size(1, 4))
    rows = D0.to_csv().strip().splitlines()
    assert len(rows) == 6 and len(rows[0].split(",")) == 5
