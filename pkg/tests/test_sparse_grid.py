"""Nested 1-d rules, combination technique, union grid, point evaluation."""

import numpy as np
import pytest
from math import comb

from sgbasket.errors import ConfigError, ResourceCapError
from sgbasket.sparse_grid import (
    Interpolant,
    PointEvaluator,
    barycentric_weights,
    build_grid,
    combination_terms,
    full_tensor_inner_count,
    level_size,
    node_rule,
)


class TestNodes1D:
    def test_level_sizes(self):
        assert [level_size(l) for l in range(1, 7)] == [1, 3, 5, 9, 17, 33]

    @pytest.mark.parametrize("level", range(1, 8))
    def test_nested_bitwise(self, level):
        # node set at each level is a bitwise subset of the next level's
        a = node_rule(level).nodes
        b = node_rule(level + 1).nodes
        assert set(a.tolist()) <= set(b.tolist())

    def test_center_is_positive_zero(self):
        for level in (1, 3, 5):
            nodes = node_rule(level).nodes
            mid = nodes[(nodes.size - 1) // 2]
            assert mid == 0.0
            assert not np.signbit(mid)

    def test_sign_symmetric(self):
        nodes = node_rule(5).nodes
        assert np.array_equal(nodes, -nodes[::-1])

    def test_endpoints(self):
        nodes = node_rule(4).nodes
        assert nodes[0] == -1.0 and nodes[-1] == 1.0
        assert np.all(np.diff(nodes) > 0)

    def test_chebyshev_extrema(self):
        n = level_size(4)
        expected = np.sort(np.cos(np.pi * np.arange(n) / (n - 1)))
        assert np.allclose(node_rule(4).nodes, expected, atol=1e-15)

    def test_barycentric_pattern(self):
        w = barycentric_weights(5)
        ref = np.array([0.5, -1.0, 1.0, -1.0, 0.5])
        assert np.allclose(w, ref)


class TestCombination:
    @pytest.mark.parametrize("dim", range(1, 13))
    @pytest.mark.parametrize("interp_level", range(1, 7))
    def test_coefficients_sum_to_one(self, dim, interp_level):
        total = sum(coef for _, coef in combination_terms(dim, interp_level))
        assert total == 1

    def test_multi_index_window(self):
        q = 3 + 2
        for ml, coef in combination_terms(2, 3):
            assert q - 2 + 1 <= sum(ml) <= q
            assert coef == (-1) ** (q - sum(ml)) * comb(1, q - sum(ml))

    def test_defining_level_sums_bounded(self):
        for d, li in ((2, 5), (3, 4), (5, 3)):
            grid = build_grid(d, li)
            sums = grid.defining_levels().sum(axis=1)
            assert sums.max() <= li + d
            # the bound is attained: some point uses the full budget
            assert sums.max() == li + d

    def test_counts_against_full_tensor(self):
        grid = build_grid(2, 3)
        assert grid.n_inner < full_tensor_inner_count(2, 3)
        # d = 1 sparse grid degenerates to the dense rule
        g1 = build_grid(1, 4)
        assert g1.n_points == level_size(5)
        assert g1.n_inner == level_size(5) - 2


class TestGrid:
    def test_origin_lookup(self):
        grid = build_grid(3, 4)
        assert np.all(grid.points[grid.origin_id] == 0.0)
        assert not np.signbit(grid.points[grid.origin_id]).any()
        pos = grid.origin_inner_pos
        assert np.all(grid.inner_points[pos] == 0.0)

    def test_points_unique_and_symmetric(self):
        grid = build_grid(2, 4)
        view = {tuple(p) for p in grid.points.tolist()}
        assert len(view) == grid.n_points
        for p in grid.points.tolist():
            assert tuple(-c for c in p) in view

    def test_inner_mask(self):
        grid = build_grid(2, 3)
        on_boundary = (np.abs(grid.points) == 1.0).any(axis=1)
        assert np.array_equal(grid.inner_mask, ~on_boundary)

    def test_point_cap(self):
        with pytest.raises(ResourceCapError):
            build_grid(6, 5, point_cap=1000)

    def test_validation(self):
        with pytest.raises(ConfigError):
            build_grid(0, 3)
        with pytest.raises(ConfigError):
            build_grid(2, 0)


def poly_mix(z):
    # inside the level-3 tensor space in each term used below
    return 1.0 + 0.5 * z[:, 0] - 0.25 * z[:, 1] + 0.75 * z[:, 0] * z[:, 1]


class TestEvaluation:
    def test_exact_at_grid_nodes(self):
        grid = build_grid(2, 4)
        rng = np.random.default_rng(0)
        vals = rng.standard_normal(grid.n_points)
        ev = PointEvaluator(grid, grid.points)
        out = ev.evaluate(vals)
        assert np.allclose(out, vals, atol=1e-12)

    def test_reproduces_low_degree_polynomial(self):
        grid = build_grid(2, 3)
        vals = poly_mix(grid.points)
        rng = np.random.default_rng(1)
        probes = rng.uniform(-1.0, 1.0, size=(200, 2))
        out = PointEvaluator(grid, probes).evaluate(vals)
        assert np.allclose(out, poly_mix(probes), atol=1e-12)

    def test_convergence_on_smooth_function(self):
        f = lambda z: np.exp(0.7 * z[:, 0] - 0.4 * z[:, 1])
        rng = np.random.default_rng(2)
        probes = rng.uniform(-0.95, 0.95, size=(500, 2))
        errs = []
        for li in (2, 4, 6):
            grid = build_grid(2, li)
            out = PointEvaluator(grid, probes).evaluate(f(grid.points))
            errs.append(np.max(np.abs(out - f(probes))))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-6

    def test_thread_count_bit_identical(self):
        grid = build_grid(3, 4)
        rng = np.random.default_rng(3)
        vals = rng.standard_normal(grid.n_points)
        probes = rng.uniform(-1.0, 1.0, size=(40_000, 3))
        base = PointEvaluator(grid, probes, chunk=4096, threads=1).evaluate(vals)
        for threads in (4, 8):
            out = PointEvaluator(grid, probes, chunk=4096, threads=threads).evaluate(vals)
            assert np.array_equal(base, out)

    def test_chunk_size_bit_identical(self):
        # chunk boundaries fix the reduction grouping per chunk, but each
        # chunk is independent, so any chunking gives the same bits
        grid = build_grid(2, 3)
        rng = np.random.default_rng(4)
        vals = rng.standard_normal(grid.n_points)
        probes = rng.uniform(-1.0, 1.0, size=(1000, 2))
        a = PointEvaluator(grid, probes, chunk=64).evaluate(vals)
        b = PointEvaluator(grid, probes, chunk=1000).evaluate(vals)
        assert np.array_equal(a, b)

    def test_cache_off_matches(self):
        grid = build_grid(2, 4)
        rng = np.random.default_rng(5)
        vals = rng.standard_normal(grid.n_points)
        probes = rng.uniform(-1.0, 1.0, size=(300, 2))
        cached = PointEvaluator(grid, probes)
        uncached = PointEvaluator(grid, probes, memory_budget=0)
        assert cached.cache_enabled and not uncached.cache_enabled
        assert np.array_equal(cached.evaluate(vals), uncached.evaluate(vals))

    def test_rejects_points_outside_cube(self):
        grid = build_grid(2, 2)
        with pytest.raises(ConfigError):
            PointEvaluator(grid, np.array([[1.5, 0.0]]))

    def test_interpolant_pins_boundary(self):
        grid = build_grid(2, 3)
        interp = Interpolant.from_inner(grid, np.ones(grid.n_inner))
        boundary = ~grid.inner_mask
        assert np.all(interp.values[boundary] == 0.0)
        assert np.all(interp.values[grid.inner_mask] == 1.0)

    def test_repeated_evaluation_identical(self):
        grid = build_grid(2, 3)
        rng = np.random.default_rng(6)
        vals = rng.standard_normal(grid.n_points)
        ev = PointEvaluator(grid, rng.uniform(-1, 1, size=(500, 2)))
        assert np.array_equal(ev.evaluate(vals), ev.evaluate(vals))
