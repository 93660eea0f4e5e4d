import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparselab.dyadic import (DyadicCube, DyadicLattice, LevelOverflowError, SparseFamily, block_reduce,
                              build_sparse_family, carleson_ratio, carleson_ratios, children, cores_disjoint,
                              covering_cube, cubes_at_level, root, shifted_lattices, upsample, verify_sparsity)
from sparselab.sample import GridFunction, average
from sparselab.sparse import stopping_family
from sparselab.weights import ainfty_constant, power_weight


def interval(c: DyadicCube):
    return (c.coords[0] * c.side, (c.coords[0] + 1) * c.side)


def chain_family(K, L=None):
    L = K if L is None else L
    lat = DyadicLattice(1, L)
    f = GridFunction.indicator(0.0, 2.0 ** -K, 1, L)
    return build_sparse_family(lambda Q: average(f, Q, 1.0, lat), lat, 2.0)


class TestChildren:
    def test_unit_interval_splits_in_halves(self):
        kids = children(root(1), 3)
        assert sorted(map(interval, kids)) == [(0.0, 0.5), (0.5, 1.0)]

    def test_right_half_splits(self):
        kids = children(DyadicCube(1, (1,)), 3)
        assert sorted(map(interval, kids)) == [(0.5, 0.75), (0.75, 1.0)]

    def test_square_has_four_quadrants(self):
        kids = children(root(2), 2)
        assert sorted(k.coords for k in kids) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert all(k.level == 1 for k in kids)

    def test_finest_level_overflows(self):
        with pytest.raises(LevelOverflowError):
            children(DyadicCube(3, (0,)), 3)

    def test_parent_child_consistency(self):
        for cube in cubes_at_level(2, 2):
            kids = children(cube, 4)
            assert len(kids) == 4
            assert all(k.parent() == cube for k in kids)


class TestLatticeStructure:
    @pytest.mark.parametrize("n,L", [(1, 8), (2, 4)])
    def test_levels_partition_domain(self, n, L):
        for lat in shifted_lattices(n, L):
            for k in range(L + 1):
                counts = np.zeros(2 ** (n * L), dtype=int)
                for cube in cubes_at_level(n, k):
                    counts[lat.cell_indices(cube)] += 1
                assert np.all(counts == 1)

    def test_nesting_exhaustive(self):
        L = 5
        for lat in shifted_lattices(1, L):
            cubes = list(lat.cubes())
            cells = {c: set(lat.cell_indices(c).tolist()) for c in cubes}
            for a, b in itertools.combinations(cubes, 2):
                inter = cells[a] & cells[b]
                assert inter in (set(), cells[a], cells[b])
                if inter == cells[b] and a != b:
                    assert a.contains(b)

    def test_shift_counts(self):
        assert [lat.shift for lat in shifted_lattices(1, 4)] == [(0.0,), (1 / 3,), (2 / 3,)]
        assert len(shifted_lattices(2, 3)) == 9

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError):
            shifted_lattices(3, 4)
        with pytest.raises(ValueError):
            shifted_lattices(1, 0)

    def test_three_lattice_cover_example(self):
        hit = covering_cube([0.4], [0.45], shifted_lattices(1, 8))
        assert hit is not None and hit[2] <= 9.0

    @given(st.integers(2, 40), st.integers(0, 255))
    def test_three_lattice_cover_dyadic_intervals(self, k, start):
        # intervals of length 2^-k aligned to the 2^-8 grid
        length = 2.0 ** -min(k, 8)
        lo = (start / 256.0) % 1.0
        if lo + length > 1.0 or length > 0.25:
            return
        hit = covering_cube([lo], [lo + length], shifted_lattices(1, 8))
        assert hit is not None and hit[2] <= 9.0

    def test_json_roundtrip(self):
        lat = DyadicLattice(2, 3, (1 / 3, 2 / 3))
        assert DyadicLattice.from_json(json.loads(json.dumps(lat.to_json()))) == lat


class TestSparseFamilies:
    def test_constant_tau_gives_root(self):
        lat = DyadicLattice(1, 6)
        f = GridFunction.constant(1.0, 1, 6)
        S = build_sparse_family(lambda Q: average(f, Q), lat, 2.0)
        assert S.cubes == (root(1),) and S.eta == 1.0

    def test_zero_tau_gives_root(self):
        S = build_sparse_family(lambda Q: 0.0, DyadicLattice(1, 4), 2.0)
        assert S.cubes == (root(1),)

    def test_indicator_chain(self):
        S = chain_family(4, 6)
        assert sorted(S.cubes) == [DyadicCube(k, (0,)) for k in range(5)]
        assert S.eta == pytest.approx(0.5)

    def test_chain_min_ratio(self):
        ok, ratio = verify_sparsity(chain_family(6), 0.5)
        assert ok and ratio == 0.5

    def test_singleton_ratio_one(self):
        lat = DyadicLattice(1, 3)
        S = SparseFamily(lat, (root(1),), (np.arange(8),))
        assert verify_sparsity(S, 1.0) == (True, 1.0)

    def test_duplicate_cube_breaks_disjointness(self):
        lat = DyadicLattice(1, 3)
        S = SparseFamily(lat, (root(1), root(1)), (np.arange(8), np.arange(8)))
        ok, _ = verify_sparsity(S, 0.5)
        assert not ok and not cores_disjoint(S)

    def test_threshold_must_exceed_one(self):
        with pytest.raises(ValueError):
            build_sparse_family(lambda Q: 1.0, DyadicLattice(1, 3), 1.0)

    def test_random_drivers_are_half_sparse(self, rng):
        for trial in range(100):
            n = 1 if trial % 4 else 2
            L = 8 if n == 1 else 4
            f = GridFunction(n, L, rng.standard_cauchy(2 ** (n * L)))
            lat = DyadicLattice(n, L, tuple(rng.choice([0, 1 / 3, 2 / 3], n)))
            S = stopping_family([f], lat, 2.0)
            ok, ratio = verify_sparsity(S, 0.5)
            assert ok, ratio

    def test_serialization_roundtrip(self, rng):
        f = GridFunction(1, 6, rng.exponential(size=64))
        S = stopping_family([f], DyadicLattice(1, 6, (1 / 3,)), 2.0)
        obj = json.loads(S.dumps())
        assert {"level", "coords", "coreCells"} <= set(obj["cubes"][0])
        back = SparseFamily.from_json(obj)
        assert back.cubes == S.cubes and back.lattice == S.lattice
        assert all(np.array_equal(a, b) for a, b in zip(back.cores, S.cores))


class TestCarleson:
    def test_chain_geometric_sum(self):
        S = chain_family(10)
        ratio = carleson_ratio(S, np.ones(2 ** 10), root(1))
        assert ratio == pytest.approx(sum(2.0 ** -k for k in range(11)), rel=1e-12)
        assert ratio <= 2.0

    def test_root_only(self, rng):
        lat = DyadicLattice(1, 4)
        S = SparseFamily(lat, (root(1),), (np.arange(16),))
        assert carleson_ratio(S, rng.uniform(0.1, 3, 16), root(1)) == 1.0

    def test_power_weight_chain(self):
        S = chain_family(8)
        w = power_weight(0.5, 0.5, 1, 8)
        bound = ainfty_constant(w, shifted_lattices(1, 8)) / S.eta
        assert max(carleson_ratios(S, w.values).values()) <= bound

    def test_nonmember_rejected(self):
        with pytest.raises(ValueError):
            carleson_ratio(chain_family(3), np.ones(8), DyadicCube(1, (1,)))


@given(st.integers(0, 6), st.integers(0, 2))
def test_block_reduce_upsample_preserve_mean(k, seed):
    grid = np.random.default_rng(seed).normal(size=(64,))
    coarse = block_reduce(grid, k)
    assert coarse.shape == (2 ** k,)
    assert np.mean(upsample(coarse, 6)) == pytest.approx(np.mean(grid))
