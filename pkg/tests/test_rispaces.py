import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparselab.rispaces import (SpaceSpec, associate_pairing_check, boyd_indices, numeric_boyd_indices,
                                p_convexity_constant, product_hypothesis_check, quasi_triangle_constant,
                                space_norm)
from sparselab.sample import GridFunction
from sparselab.weights import Weight, power_weight
from sparselab.young import YoungFunction

from conftest import grid_functions

F = GridFunction(1, 2, np.array([3.0, 1.0, 2.0, 2.0]))
KINDS = [SpaceSpec.lebesgue(2.5), SpaceSpec.lorentz(3, 1.5), SpaceSpec.weak(2),
         SpaceSpec.orlicz(YoungFunction.zygmund(1.0)), SpaceSpec.orlicz(YoungFunction.power(3))]


def lorentz_direct(f, p, q):
    """Direct integral of (t^{1/p} f*(t))^q dt/t over the sorted cells."""
    v = np.sort(np.abs(f.values))[::-1]
    h = f.cell_volume
    total = 0.0
    for j, val in enumerate(v):
        a, b = j * h, (j + 1) * h
        total += val ** q * p * (b ** (q / p) - a ** (q / p)) / q
    return total ** (1 / q)


class TestSpaceNorm:
    def test_l2_hand(self):
        assert space_norm(F, SpaceSpec.lebesgue(2)) == pytest.approx(math.sqrt(18 / 4))

    def test_lorentz_diagonal(self, rng):
        for _ in range(1000):
            L = int(rng.integers(1, 8))
            f = GridFunction(1, L, rng.standard_normal(2 ** L))
            p = float(rng.uniform(0.5, 6))
            assert space_norm(f, SpaceSpec.lorentz(p, p)) == pytest.approx(
                space_norm(f, SpaceSpec.lebesgue(p)), rel=1e-9)

    @given(grid_functions(max_level=5), st.floats(1.1, 5), st.floats(0.5, 5))
    def test_lorentz_direct_integral(self, f, p, q):
        assert space_norm(f, SpaceSpec.lorentz(p, q)) == pytest.approx(lorentz_direct(f, p, q), rel=1e-9,
                                                                        abs=1e-300)

    def test_weak_hand(self):
        # sup over achieved values of lam * d(lam)^{1/2}: levels 3 (1/4), 2 (3/4), 1 (1)
        assert space_norm(F, SpaceSpec.weak(2)) == pytest.approx(max(3 * 0.5, 2 * math.sqrt(0.75), 1.0))

    @pytest.mark.parametrize("X", KINDS)
    def test_zero(self, X):
        assert space_norm(GridFunction.constant(0.0, 1, 4), X) == 0.0

    @pytest.mark.parametrize("X", KINDS)
    def test_rearrangement_invariant(self, X, rng):
        f = GridFunction(1, 6, rng.standard_cauchy(64))
        g = GridFunction(1, 6, rng.permutation(f.values))
        assert space_norm(f, X) == space_norm(g, X)

    @pytest.mark.parametrize("X", KINDS)
    def test_lattice_property(self, X, rng):
        f = GridFunction(1, 6, rng.standard_normal(64))
        g = GridFunction(1, 6, np.abs(f.values) * rng.uniform(1, 2, 64))
        assert space_norm(f, X) <= space_norm(g, X) * (1 + 1e-9)

    @pytest.mark.parametrize("X", KINDS[:2] + KINDS[3:])
    def test_homogeneous(self, X, rng):
        f = GridFunction(1, 6, rng.standard_normal(64))
        assert space_norm(f * -3.5, X) == pytest.approx(3.5 * space_norm(f, X), rel=1e-9)

    def test_weak_quasi_triangle_measured(self, rng):
        consts = [quasi_triangle_constant(SpaceSpec.weak(2), GridFunction(1, 6, rng.standard_normal(64)),
                                          GridFunction(1, 6, rng.standard_normal(64))) for _ in range(50)]
        assert 0 < max(consts) <= 2.0

    @given(grid_functions(max_level=5), st.floats(1.0, 4.0), st.sampled_from([0.5, 2.0, 3.0]))
    def test_power_space_law(self, f, p, r):
        lhs = space_norm(f, SpaceSpec.lebesgue(p).power(r))
        g = GridFunction(f.n, f.L, np.abs(f.values) ** r)
        assert lhs == pytest.approx(space_norm(g, SpaceSpec.lebesgue(p)) ** (1 / r), rel=1e-9, abs=1e-300)

    def test_weighted_uses_weighted_rearrangement(self):
        w = Weight(1, 2, np.array([2.0, 1.0, 1.0, 4.0]))
        assert space_norm(F, SpaceSpec.lebesgue(1), w) == pytest.approx((3 * 2 + 1 + 2 + 8) / 4)

    def test_p_convexity_measured(self, rng):
        X = SpaceSpec.weak(2, 0.5)
        fs = [GridFunction(1, 6, rng.standard_normal(64)) for _ in range(4)]
        assert 0 < p_convexity_constant(X, fs) <= 1.0 + 1e-12

    def test_json_roundtrip(self):
        for X in KINDS + [SpaceSpec.weak(2, 0.5).power(2)]:
            back = SpaceSpec.from_json(json.loads(json.dumps(X.to_json())))
            assert back.boyd == X.boyd and back.kind == X.kind


class TestBoyd:
    def test_lebesgue(self):
        assert boyd_indices(SpaceSpec.lebesgue(3)) == (3, 3)

    def test_orlicz_square(self):
        assert boyd_indices(SpaceSpec.orlicz(YoungFunction.power(2))) == (2, 2)

    @pytest.mark.parametrize("X", KINDS + [SpaceSpec.lorentz(2, 1), SpaceSpec.orlicz(YoungFunction.exp_minus_one()),
                                           SpaceSpec.orlicz(YoungFunction.zygmund(2.0))])
    def test_numeric_matches_closed_form(self, X):
        closed = boyd_indices(X)
        numeric = numeric_boyd_indices(X)
        for a, b in zip(closed, numeric):
            assert (a == b == math.inf) or abs(a - b) <= 0.05

    @pytest.mark.parametrize("r", [0.5, 2.0])
    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_exponent_law(self, p, r):
        X = SpaceSpec.lebesgue(p)
        assert boyd_indices(X.power(r)) == (p * r, p * r)


class TestAssociate:
    def test_cauchy_schwarz_equality(self, rng):
        f = GridFunction(1, 5, rng.standard_normal(32))
        assert associate_pairing_check(f, f, SpaceSpec.lebesgue(2)) == pytest.approx(1.0, rel=1e-12)

    def test_holder_random(self, rng):
        for _ in range(200):
            p = float(rng.uniform(1.1, 6))
            f = GridFunction(1, 6, rng.standard_cauchy(64))
            g = GridFunction(1, 6, rng.standard_normal(64))
            w = power_weight(float(rng.uniform(-0.5, 1)), 0.5, 1, 6)
            assert associate_pairing_check(f, g, SpaceSpec.lebesgue(p), w) <= 1 + 1e-9

    def test_disjoint(self):
        f = GridFunction.indicator(0, 0.5, 1, 4)
        g = GridFunction.indicator(0.5, 1, 1, 4)
        assert associate_pairing_check(f, g, SpaceSpec.lebesgue(3)) == 0.0

    def test_lorentz_budget(self, rng):
        X = SpaceSpec.lorentz(3, 2)
        worst = max(associate_pairing_check(GridFunction(1, 6, rng.standard_normal(64)),
                                            GridFunction(1, 6, rng.standard_normal(64)), X) for _ in range(50))
        assert worst <= 1 + 1e-9

    def test_orlicz_budget_two(self, rng):
        X = SpaceSpec.orlicz(YoungFunction.zygmund(1.0))
        worst = max(associate_pairing_check(GridFunction(1, 5, rng.standard_cauchy(32)),
                                            GridFunction(1, 5, rng.standard_normal(32)), X) for _ in range(30))
        assert worst <= 2.0


class TestProductHypothesis:
    def test_constants(self):
        res = product_hypothesis_check([SpaceSpec.lebesgue(4)] * 2, SpaceSpec.lebesgue(2), trials=0, L=4)
        assert res["scaling"][0] == pytest.approx(1.0)

    def test_holder(self):
        res = product_hypothesis_check([SpaceSpec.lebesgue(4)] * 2, SpaceSpec.lebesgue(2), trials=100, L=8)
        assert res["holderExponents"] and res["maxRatio"] <= 1 + 1e-9 and not res["growth"]

    def test_incompatible_exponents_grow(self):
        res = product_hypothesis_check([SpaceSpec.lebesgue(4)] * 2, SpaceSpec.lebesgue(1), trials=10, L=8)
        assert not res["holderExponents"]
        res = product_hypothesis_check([SpaceSpec.lebesgue(4)] * 2, SpaceSpec.lebesgue(4), trials=10, L=8)
        assert res["growth"]

    def test_needs_two_factors(self):
        with pytest.raises(ValueError):
            product_hypothesis_check([SpaceSpec.lebesgue(2)], SpaceSpec.lebesgue(2))
