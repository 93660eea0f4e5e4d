import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparselab.dyadic import DyadicLattice, shifted_lattices
from sparselab.sample import GridFunction
from sparselab.weights import (BmoFunction, Weight, a1_constant, ainfty_constant, ap_constant, bmo_norm,
                               exp_oscillation_constant, moment_oscillation_ratio, power_weight, step_weight)

from conftest import grid_functions, positive_grids

DYADIC = lambda L: [DyadicLattice(1, L)]  # noqa: E731


def brute_cube_cells(lattices):
    for lat in lattices:
        for cube in lat.cubes():
            yield lat, cube, lat.cell_indices(cube)


def brute_ap(w, p, lattices):
    best = 0.0
    for _, _, cells in brute_cube_cells(lattices):
        v = w.values[cells]
        best = max(best, np.mean(v) * np.mean(v ** (-1.0 / (p - 1))) ** (p - 1))
    return best


def brute_ainfty(w, lattices):
    best = 0.0
    for lat, Q, cells in brute_cube_cells(lattices):
        sub = np.zeros(w.values.size)
        sub[cells] = w.values[cells]
        mx = np.zeros(w.values.size)
        for cube in lat.cubes():
            if Q.contains(cube):
                inner = lat.cell_indices(cube)
                mx[inner] = np.maximum(mx[inner], np.mean(sub[inner]))
        best = max(best, np.sum(mx[cells]) / np.sum(w.values[cells]))
    return best


def brute_bmo(b, lattices):
    return max(np.mean(np.abs(b.values[c] - np.mean(b.values[c]))) for _, _, c in brute_cube_cells(lattices))


class TestAp:
    def test_constant_weight(self):
        for p in (1.5, 2.0, 4.0):
            assert ap_constant(Weight(1, 4, np.ones(16)), p) == pytest.approx(1.0)

    def test_two_values_dyadic(self):
        assert ap_constant(Weight(1, 1, np.array([1.0, 4.0])), 2, DYADIC(1)) == pytest.approx(25 / 16)

    def test_power_weight_against_brute_scan(self):
        w = power_weight(0.5, 0.5, 1, 10)
        lats = shifted_lattices(1, 10)
        assert ap_constant(w, 2, lats) == pytest.approx(brute_ap(w, 2, lats), rel=1e-12)

    def test_p_at_most_one_rejected(self):
        with pytest.raises(ValueError):
            ap_constant(Weight(1, 2, np.ones(4)), 1.0)

    @given(positive_grids(max_level=5))
    def test_at_least_one(self, g):
        w = Weight(1, g.L, g.values)
        assert ap_constant(w, 2.0) >= 1 - 1e-12

    @given(positive_grids(max_level=5))
    def test_nonincreasing_in_p(self, g):
        w = Weight(1, g.L, g.values)
        vals = [ap_constant(w, p) for p in (1.5, 2, 3, 4)]
        assert all(a >= b * (1 - 1e-12) for a, b in zip(vals, vals[1:]))

    @given(positive_grids(max_level=4))
    def test_matches_brute_force(self, g):
        w = Weight(1, g.L, g.values)
        lats = shifted_lattices(1, g.L)
        assert ap_constant(w, 3.0, lats) == pytest.approx(brute_ap(w, 3.0, lats), rel=1e-10)

    def test_power_exponent_raises_constant(self):
        vals = [ap_constant(power_weight(a, 0.5, 1, 8), 2) for a in (0, 0.25, 0.5, 0.75)]
        assert vals == sorted(vals) and vals[0] == pytest.approx(1.0)

    def test_equals_one_only_for_constants(self, rng):
        assert ap_constant(Weight(1, 8, np.full(256, 3.7)), 2) == pytest.approx(1.0)
        v = np.ones(256)
        v[rng.integers(256)] = 1.01
        assert ap_constant(Weight(1, 8, v), 2) > 1.0


class TestAinftyA1:
    def test_constant(self):
        assert ainfty_constant(Weight(1, 5, np.ones(32))) == pytest.approx(1.0)
        assert a1_constant(Weight(1, 5, np.ones(32))) == pytest.approx(1.0)

    @pytest.mark.parametrize("L", [1, 2, 3, 4])
    def test_two_values_brute(self, L):
        w = step_weight([1.0, 4.0], 1, L)
        assert ainfty_constant(w, DYADIC(L)) == pytest.approx(brute_ainfty(w, DYADIC(L)), rel=1e-12)
        assert ainfty_constant(w, DYADIC(L)) >= 1.0

    @given(positive_grids(max_level=4))
    def test_ainfty_brute(self, g):
        w = Weight(1, g.L, g.values)
        lats = shifted_lattices(1, g.L)
        assert ainfty_constant(w, lats) == pytest.approx(brute_ainfty(w, lats), rel=1e-10)

    @given(positive_grids(max_level=5))
    def test_ainfty_below_ap(self, g):
        # dyadic-model constant c = 2 (measured maximum on random weights is about 1.12)
        w = Weight(1, g.L, g.values)
        a_inf = ainfty_constant(w)
        for p in (1.5, 2, 3, 4):
            assert a_inf <= 2.0 * ap_constant(w, p)

    def test_a1_two_values(self):
        assert a1_constant(Weight(1, 1, np.array([1.0, 2.0])), DYADIC(1)) == pytest.approx(1.5)

    @given(positive_grids(max_level=5))
    def test_ap_below_a1(self, g):
        w = Weight(1, g.L, g.values)
        a1 = a1_constant(w)
        for p in (1.5, 2, 4):
            assert ap_constant(w, p) <= a1 * (1 + 1e-12)


class TestBmo:
    def test_constant_zero(self):
        assert bmo_norm(GridFunction.constant(3.0, 1, 4)) == 0.0
        assert BmoFunction(GridFunction.constant(3.0, 1, 4)).norm == 0.0

    def test_halves(self):
        assert bmo_norm(GridFunction(1, 1, np.array([0.0, 1.0])), DYADIC(1)) == pytest.approx(0.5)

    @given(grid_functions(max_level=5), st.floats(-100, 100))
    def test_shift_invariant(self, b, c):
        assert bmo_norm(b + GridFunction.constant(c, 1, b.L)) == pytest.approx(bmo_norm(b), rel=1e-9, abs=1e-9)

    @given(grid_functions(max_level=4))
    def test_brute(self, b):
        lats = shifted_lattices(1, b.L)
        assert bmo_norm(b, lats) == pytest.approx(brute_bmo(b, lats), rel=1e-10, abs=1e-12)

    def test_moment_bound(self, rng):
        for _ in range(20):
            b = GridFunction(1, 7, np.cumsum(rng.standard_normal(128)))
            for s in (1, 2, 4):
                assert moment_oscillation_ratio(b, s) <= 1.0

    def test_exp_oscillation_measured(self, rng):
        consts = [exp_oscillation_constant(GridFunction(1, 7, rng.standard_cauchy(128))) for _ in range(20)]
        assert all(np.isfinite(consts)) and max(consts) <= 4.0


class TestGenerators:
    def test_power_zero_is_one(self):
        assert np.array_equal(power_weight(0, 0.5, 1, 4).values, np.ones(16))

    def test_power_one_cell_values(self):
        assert np.allclose(power_weight(1, 0.5, 1, 2).values, [3 / 8, 1 / 8, 1 / 8, 3 / 8])

    def test_power_exponent_bound(self):
        with pytest.raises(ValueError):
            power_weight(-1.0, 0.5, 1, 4)

    def test_weight_must_be_positive(self):
        with pytest.raises(ValueError):
            Weight(1, 1, np.array([1.0, 0.0]))

    def test_json_marker(self):
        obj = Weight(1, 1, np.array([1.0, 2.0])).to_json()
        assert obj["positive"] is True
        assert np.array_equal(Weight.from_json(json.loads(json.dumps(obj))).values, [1.0, 2.0])
