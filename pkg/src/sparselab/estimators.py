"""scikit-learn adapters over the grid operators.

Each row of ``X`` is one sampled function in row-major cell order on the
grid ``(n, L)`` (``2**(n L)`` columns).  ``fit`` only validates the shape;
the operators themselves are parameter-free.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dyadic import DyadicLattice, root
from .maximal import dyadic_maximal, hl_maximal
from .sample import GridFunction, rearrangement
from .sparse import sparse_apply, stopping_family
from .young import YoungFunction, luxemburg_norm


class _GridTransformer(TransformerMixin, BaseEstimator):
    def _grid_shape(self, X):
        X = check_array(X, dtype=float)
        cols = X.shape[1]
        n = self.n
        L = int(round(np.log2(cols) / n))
        if 2 ** (n * L) != cols:
            raise ValueError(f"{cols} columns do not form a 2^L grid in dimension {n}")
        return X, L

    def fit(self, X, y=None):
        X, L = self._grid_shape(X)
        self.n_features_in_ = X.shape[1]
        self.level_ = L
        return self

    def _rows(self, X):
        check_is_fitted(self, "level_")
        X, L = self._grid_shape(X)
        if L != self.level_:
            raise ValueError(f"fitted on L={self.level_}, got L={L}")
        return [GridFunction(self.n, L, row) for row in X]


class DyadicMaximalTransformer(_GridTransformer):
    """Row-wise ``M^D_r f`` (or the shifted-lattice surrogate when ``shifted``)."""

    def __init__(self, n: int = 1, r: float = 1.0, shifted: bool = False):
        self.n = n
        self.r = r
        self.shifted = shifted

    def transform(self, X):
        fs = self._rows(X)
        op = (lambda f: hl_maximal(f, self.r)) if self.shifted else (lambda f: dyadic_maximal(f, r=self.r))
        return np.array([op(f).values for f in fs])


class SparseOperatorTransformer(_GridTransformer):
    """Row-wise linear sparse operator ``A_S f`` with the stopping family of ``f``."""

    def __init__(self, n: int = 1, threshold: float = 2.0, shift=None):
        self.n = n
        self.threshold = threshold
        self.shift = shift

    def transform(self, X):
        out = []
        for f in self._rows(X):
            lat = DyadicLattice(self.n, f.L, tuple(self.shift or ()))
            out.append(sparse_apply(stopping_family([f], lat, self.threshold), [f]).values)
        return np.array(out)


class RearrangementTransformer(_GridTransformer):
    """Row-wise decreasing rearrangement sampled at cell midpoints of ``(0, 1)``."""

    def __init__(self, n: int = 1):
        self.n = n

    def transform(self, X):
        fs = self._rows(X)
        if not fs:
            return np.empty((0, self.n_features_in_))
        N = fs[0].values.size
        t = (np.arange(N) + 0.5) / N
        return np.array([rearrangement(f)(t) for f in fs])


class LuxemburgNormTransformer(_GridTransformer):
    """Row-wise Luxemburg norm over the unit cube; ``phi`` is a Young-function JSON spec."""

    def __init__(self, n: int = 1, phi=None):
        self.n = n
        self.phi = phi

    def transform(self, X):
        phi = self.phi if isinstance(self.phi, YoungFunction) else YoungFunction.from_json(
            self.phi or {"kind": "power", "p": 2.0})
        return np.array([[luxemburg_norm(f, phi, root(self.n))] for f in self._rows(X)])
