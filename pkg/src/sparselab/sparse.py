"""Multilinear sparse operators and their commutator variants.

Sums over the cubes of a family are accumulated level by level (coarsest
first), so results are bit-reproducible.  Repeated cubes count with
multiplicity.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .dyadic import DyadicLattice, SparseFamily, block_reduce, build_sparse_family, upsample
from .sample import GridFunction, check_same_grid


def _tuple(fs) -> tuple[GridFunction, ...]:
    if isinstance(fs, GridFunction):
        return (fs,)
    fs = tuple(fs)
    if not fs:
        raise ValueError("need at least one function")
    check_same_grid(*fs)
    return fs


def _check_family_grid(S: SparseFamily, f: GridFunction) -> None:
    if S.lattice.n != f.n or S.lattice.max_level != f.L:
        raise ValueError("family lattice and function grid differ")


def product_average_pyramid(fs, lattice: DyadicLattice, r: float = 1.0) -> list[np.ndarray]:
    """Per level, ``prod_i <|f_i|^r>_Q^{1/r}`` for every cube of ``lattice``."""
    fs = _tuple(fs)
    # powers of |f| / max|f| keep tiny inputs from underflowing
    scales = [float(np.max(np.abs(f.values))) or 1.0 for f in fs]
    grids = [lattice.to_lattice_coords((np.abs(f.grid) / c) ** r) for f, c in zip(fs, scales)]
    out = []
    for k in range(lattice.max_level + 1):
        prod = np.full((2 ** k,) * lattice.n, float(np.prod(scales)))
        for g in grids:
            prod = prod * block_reduce(g, k) ** (1.0 / r)
        out.append(prod)
    return out


def stopping_family(fs, lattice: DyadicLattice, threshold: float = 2.0, r: float = 1.0) -> SparseFamily:
    """Stopping-time family driven by the product of averages of ``fs``."""
    return build_sparse_family(product_average_pyramid(fs, lattice, r), lattice, threshold)


def _accumulate(S: SparseFamily, coefs: list[np.ndarray], cellwise=None) -> np.ndarray:
    L = S.max_level
    counts = S.level_counts()
    out = np.zeros((2 ** L,) * S.lattice.n)
    for k in range(L + 1):
        if not counts[k].any():
            continue
        term = upsample(coefs[k] * counts[k], L)
        if cellwise is not None:
            term = term * cellwise(k)
        out = out + term
    return out


def sparse_apply(S: SparseFamily, fs, r: float = 1.0) -> GridFunction:
    """``A_{r,S}(f) = sum_{Q in S} prod_i <|f_i|^r>_Q^{1/r} chi_Q``."""
    fs = _tuple(fs)
    _check_family_grid(S, fs[0])
    out = _accumulate(S, product_average_pyramid(fs, S.lattice, r))
    f0 = fs[0]
    return GridFunction(f0.n, f0.L, S.lattice.from_lattice_coords(out).ravel())


def sparse_commutator(S: SparseFamily, fs, b: GridFunction, slot: int,
                      starred: bool = False) -> GridFunction:
    """Commutator-type sparse operators in the ``slot``-th entry (1-based).

    Unstarred: ``sum_Q |b(x) - b_Q| prod_i <|f_i|>_Q chi_Q(x)``.
    Starred: the ``slot`` factor becomes ``<|b - b_Q| |f_slot|>_Q``.
    """
    fs = _tuple(fs)
    bfun = b if isinstance(b, GridFunction) else b.b
    check_same_grid(fs[0], bfun)
    _check_family_grid(S, fs[0])
    m = len(fs)
    if not 1 <= slot <= m:
        raise IndexError(f"slot {slot} outside 1..{m}")
    lat, L = S.lattice, S.max_level
    bg = lat.to_lattice_coords(np.asarray(bfun.grid, dtype=float))
    fgrids = [lat.to_lattice_coords(np.abs(f.grid)) for f in fs]

    def deviation(k):
        return np.abs(bg - upsample(block_reduce(bg, k), L))

    coefs = []
    for k in range(L + 1):
        prod = np.ones((2 ** k,) * lat.n)
        for i, g in enumerate(fgrids, start=1):
            if starred and i == slot:
                prod = prod * block_reduce(deviation(k) * g, k)
            else:
                prod = prod * block_reduce(g, k)
        coefs.append(prod)
    out = _accumulate(S, coefs, None if starred else deviation)
    f0 = fs[0]
    return GridFunction(f0.n, f0.L, lat.from_lattice_coords(out).ravel())


def sparse_sum(families: Sequence[SparseFamily], fs, r: float = 1.0) -> GridFunction:
    """``sum_j A_{r,S_j}(f)`` over several families (one per lattice)."""
    total = None
    for S in families:
        term = sparse_apply(S, fs, r)
        total = term if total is None else total + term
    return total


def stopping_consistency_ratio(S: SparseFamily, fs) -> float:
    """``max A_S(f) / M(f)`` over the cells of selected cubes (``M`` = lattice maximal)."""
    from .maximal import multilinear_maximal

    fs = _tuple(fs)
    a = sparse_apply(S, fs).values
    mm = multilinear_maximal(fs, 1.0, [S.lattice]).values
    mask = np.zeros(a.size, dtype=bool)
    for core in S.cores:
        mask[np.asarray(core, dtype=np.int64)] = True
    mask &= mm > 0
    if not mask.any():
        return 0.0
    return float(np.max(a[mask] / mm[mask]))
