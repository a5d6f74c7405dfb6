import numpy as np
import pytest

from hermite_ito.errors import ResourceError, SimulationError, UsageError
from hermite_ito.paths import (
    JumpDiffusionModel,
    RcllPath,
    coarsen_increments,
    realized_bracket,
    scaled_walk,
    simulate_brownian,
    simulate_jump_diffusion,
    uniform_grid,
)


def jump_model(rate=2.0, vol=0.0, drift=0.0, sd=0.5):
    return JumpDiffusionModel(d=1, drift=lambda x: drift, vol=lambda x: vol, intensity=rate,
                              jump_sampler=lambda r, n: r.normal(0, sd, n))


def test_brownian_starts_at_zero_and_has_no_jumps():
    path, dec = simulate_brownian(2, uniform_grid(1.0, 32), 3)
    assert np.all(path.values[0] == 0)
    assert path.n_jumps == 0
    assert np.all(dec.fv.values == 0)
    assert np.allclose(dec.predictable_bracket[:, 0, 0], path.times)


def test_brownian_terminal_variance():
    vals = np.array([simulate_brownian(1, uniform_grid(1.0, 8), (5, "bm", i))[0].values[-1, 0]
                     for i in range(10_000)])
    sq = vals ** 2
    se = sq.std(ddof=1) / np.sqrt(sq.size)
    assert abs(sq.mean() - 1.0) <= 3 * se


def test_realized_quadratic_variation_refines():
    top = 14
    fine = np.random.default_rng(6).standard_normal((2 ** top, 1)) * 2.0 ** (-top / 2)
    for level in range(6, top + 1, 2):
        inc = coarsen_increments(fine, 2 ** (top - level))
        path, _ = simulate_brownian(1, uniform_grid(1.0, 2 ** level), None, inc)
        qv = realized_bracket(path, path).full[-1]
        assert abs(qv - 1.0) <= 5 * np.sqrt(2 * 2.0 ** -level)


def test_constant_model_gives_constant_path():
    sim = simulate_jump_diffusion(jump_model(rate=0.0), uniform_grid(1.0, 10), 1)
    assert np.all(sim.path.values == 0) and sim.path.n_jumps == 0


def test_poisson_jump_count():
    counts = np.array([simulate_jump_diffusion(jump_model(), uniform_grid(1.0, 4), (1, i)).path.n_jumps
                       for i in range(10_000)])
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - 2.0) <= 3 * se


def test_pure_jump_brackets():
    sim = simulate_jump_diffusion(jump_model(rate=5.0), uniform_grid(1.0, 16), 2)
    b = sim.brackets[(0, 0)]
    assert sim.path.n_jumps > 0
    assert np.all(b.continuous == 0)
    assert b.full[-1] == pytest.approx(sim.path.jump_square_sum(), rel=1e-15)
    assert np.allclose(b.full - b.continuous, np.cumsum(np.r_[0, sim.path.jumps_on_grid()[1:, 0] ** 2]))


def test_jump_times_are_grid_points_with_exact_records():
    sim = simulate_jump_diffusion(jump_model(rate=4.0, vol=0.3), uniform_grid(1.0, 16), 9)
    p = sim.path
    assert p.n_steps == 16 + p.n_jumps
    assert np.array_equal(p.values[p.jump_index], p.left_limits + p.jumps)
    left = p.left_limit_values()
    off = np.setdiff1d(np.arange(p.times.size), p.jump_index)
    assert np.array_equal(left[off], p.values[off])


def test_decomposition_reproduces_path():
    sim = simulate_jump_diffusion(jump_model(rate=3.0, vol=0.7, drift=0.4), uniform_grid(2.0, 64), 4)
    dec = sim.decomposition
    dec.check()
    assert dec.consistency_error() <= 1e-13
    cont = sim.brackets[(0, 0)].continuous
    assert np.all(np.diff(cont) >= 0)
    assert np.allclose(cont, 0.49 * sim.path.times, rtol=1e-12)


def test_bracket_split_identity_on_simulated_paths():
    model = JumpDiffusionModel(d=2, vol=lambda x: np.array([0.5, 0.2]), intensity=3.0,
                               jump_sampler=lambda r, n: r.normal(0, 0.4, (n, 2)))
    sim = simulate_jump_diffusion(model, uniform_grid(1.0, 32), 8)
    jumps = sim.path.jumps_on_grid()
    for (i, j), b in sim.brackets.items():
        expect = np.cumsum(np.r_[0, jumps[1:, i] * jumps[1:, j]])
        assert np.allclose(b.full - b.continuous, expect, rtol=1e-14, atol=1e-16)


def test_non_finite_state_reports_seed_and_time():
    model = JumpDiffusionModel(d=1, drift=lambda x: np.inf)
    with pytest.raises(SimulationError) as err:
        simulate_jump_diffusion(model, uniform_grid(1.0, 4), 77)
    assert "seed=77" in str(err.value) and "t=0.25" in str(err.value)


def test_determinism():
    a = simulate_jump_diffusion(jump_model(vol=0.5), uniform_grid(1.0, 20), (3, "x", 1))
    b = simulate_jump_diffusion(jump_model(vol=0.5), uniform_grid(1.0, 20), (3, "x", 1))
    assert a.path.to_csv() == b.path.to_csv()


def test_bridge_coupling_keeps_coarse_increments():
    grid = uniform_grid(1.0, 8)
    inc = np.random.default_rng(2).standard_normal((8, 1)) * np.sqrt(1 / 8)
    sim = simulate_jump_diffusion(jump_model(rate=6.0, vol=1.0), grid, 5, increments=inc)
    assert sim.path.n_jumps > 0
    pos = np.searchsorted(sim.path.times, grid)
    cum = np.r_[0, np.cumsum(sim.dB[:, 0])][pos]
    assert np.allclose(np.diff(cum), inc[:, 0], atol=1e-14)


def test_realized_bracket_of_pure_jump_path():
    times = np.linspace(0, 1, 6)
    values = np.array([0.0, 0.0, 0.3, 0.3, -0.2, -0.2])
    idx = np.array([2, 4])
    p = RcllPath(times, values, idx, values[idx - 1], values[idx] - values[idx - 1])
    b = realized_bracket(p, p)
    assert np.max(np.abs(b.continuous)) <= 1e-15
    assert b.full[-1] == pytest.approx(0.09 + 0.25)


def test_realized_bracket_symmetry_and_grid_check():
    path, _ = simulate_brownian(2, uniform_grid(1.0, 16), 4)
    a = realized_bracket(path.component(0), path.component(1))
    b = realized_bracket(path.component(1), path.component(0))
    assert np.array_equal(a.full, b.full) and np.array_equal(a.continuous, b.continuous)
    other, _ = simulate_brownian(1, uniform_grid(1.0, 8), 4)
    with pytest.raises(UsageError):
        realized_bracket(path.component(0), other)


def test_walk_k1():
    ens = scaled_walk(1, exhaustive=True)
    assert sorted(p.values[-1, 0] for p in ens.paths) == [-1.0, 1.0]


def test_walk_moments_by_enumeration():
    ens = scaled_walk(10, exhaustive=True)
    assert len(ens.paths) == 1024
    terminal = [p.values[-1, 0] for p in ens.paths]
    assert abs(ens.expectation(terminal)) < 1e-15
    assert ens.expectation(np.square(terminal)) == pytest.approx(1.0, abs=1e-14)


def test_walk_jump_records():
    ens = scaled_walk(3, exhaustive=True)
    assert len(ens.paths) == 8
    for p, dec in zip(ens.paths, ens.decompositions):
        assert p.n_jumps == 3
        assert p.jump_square_sum() == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(dec.predictable_bracket[:, 0, 0], [0, 1 / 3, 2 / 3, 1])
        assert np.all(dec.fv.values == 0)


def test_walk_limits():
    with pytest.raises(ResourceError):
        scaled_walk(21, exhaustive=True)
    sampled = scaled_walk(30, seed=1, n_paths=4)
    assert len(sampled.paths) == 4


def test_path_validation():
    with pytest.raises(UsageError):
        RcllPath([0.0, 1.0, 1.0], [0, 1, 2])
    with pytest.raises(UsageError):
        RcllPath([0.0, 1.0], [0.0, 1.0], [1], [0.0], [0.5])


def test_node_expansion():
    times = np.linspace(0, 1, 5)
    values = np.array([0.0, 0.1, 1.1, 1.0, 0.0])
    idx = np.array([2, 4])
    left = np.array([0.1, 1.0])
    p = RcllPath(times, values, idx, left, values[idx] - left)
    nodes = p.nodes()
    assert nodes.values[:, 0].tolist() == [0.0, 0.1, 0.1, 1.1, 1.0, 1.0, 0.0]
    assert nodes.is_left.tolist() == [False, False, True, False, False, True, False]
    assert nodes.times.tolist() == [0, 0.25, 0.5, 0.5, 0.75, 1.0, 1.0]
    assert nodes.grid_pos.tolist() == [0, 1, 3, 4, 6]


def test_csv_roundtrip():
    sim = simulate_jump_diffusion(jump_model(rate=4.0, vol=0.2), uniform_grid(1.0, 8), 12)
    text = sim.path.to_csv()
    assert text.splitlines()[0] == "time,x1,jump,left1"
    back = RcllPath.from_csv(text)
    assert np.array_equal(back.values, sim.path.values)
    assert np.array_equal(back.left_limits, sim.path.left_limits)
    assert np.array_equal(back.jump_index, sim.path.jump_index)
