import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from sparselab.dyadic import DyadicLattice
from sparselab.estimators import (DyadicMaximalTransformer, LuxemburgNormTransformer, RearrangementTransformer,
                                  SparseOperatorTransformer)
from sparselab.maximal import dyadic_maximal, hl_maximal
from sparselab.sample import GridFunction
from sparselab.sparse import sparse_apply, stopping_family


@pytest.fixture
def X(rng):
    return rng.standard_normal((5, 32))


def test_maximal_rows(X):
    out = DyadicMaximalTransformer(r=2).fit_transform(X)
    for row, got in zip(X, out):
        assert np.array_equal(got, dyadic_maximal(GridFunction(1, 5, row), r=2).values)
    shifted = DyadicMaximalTransformer(shifted=True).fit_transform(X)
    assert np.array_equal(shifted[0], hl_maximal(GridFunction(1, 5, X[0])).values)


def test_sparse_rows(X):
    out = SparseOperatorTransformer().fit_transform(X)
    f = GridFunction(1, 5, X[2])
    want = sparse_apply(stopping_family([f], DyadicLattice(1, 5)), [f]).values
    assert np.array_equal(out[2], want)


def test_rearrangement_sorted(X):
    out = RearrangementTransformer().fit_transform(X)
    assert np.array_equal(out, -np.sort(-np.abs(X), axis=1))


def test_luxemburg_power_two(X):
    out = LuxemburgNormTransformer(phi={"kind": "power", "p": 2.0}).fit_transform(X)
    assert out.shape == (5, 1)
    assert np.allclose(out[:, 0], np.sqrt(np.mean(X ** 2, axis=1)), rtol=1e-9)


def test_two_dimensional(rng):
    X = rng.standard_normal((3, 64))
    out = DyadicMaximalTransformer(n=2).fit(X).transform(X)
    assert np.array_equal(out[1], dyadic_maximal(GridFunction(2, 3, X[1])).values)


def test_bad_width(rng):
    with pytest.raises(ValueError):
        DyadicMaximalTransformer().fit(rng.standard_normal((2, 30)))


def test_level_mismatch(X, rng):
    est = DyadicMaximalTransformer().fit(X)
    with pytest.raises(ValueError):
        est.transform(rng.standard_normal((2, 64)))


def test_unfitted(X):
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        RearrangementTransformer().transform(X)


def test_clone_and_pipeline(X):
    est = DyadicMaximalTransformer(r=1.5)
    assert clone(est).get_params() == est.get_params()
    pipe = make_pipeline(DyadicMaximalTransformer(), LuxemburgNormTransformer())
    assert pipe.fit_transform(X).shape == (5, 1)
