"""Dyadic maximal operators evaluated level by level.

Each operator computes a per-cube quantity for every level of a lattice,
broadcasts it back to the cells and keeps the running maximum, which costs
``O(N log N)`` for ``N`` cells.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .dyadic import DyadicLattice, block_reduce, shifted_lattices, upsample
from .sample import GridFunction, check_same_grid
from .young import YoungFunction, luxemburg_level_norms


def _as_tuple(fs) -> tuple[GridFunction, ...]:
    if isinstance(fs, GridFunction):
        return (fs,)
    fs = tuple(fs)
    if not fs:
        raise ValueError("need at least one function")
    check_same_grid(*fs)
    return fs


def _lattice_max(f: GridFunction, lattice: DyadicLattice,
                 cube_value: Callable[[int, list[np.ndarray]], np.ndarray],
                 grids: list[np.ndarray]) -> np.ndarray:
    """Running max over levels of ``cube_value(k, grids)`` (lattice coordinates)."""
    L = f.L
    local = [lattice.to_lattice_coords(g) for g in grids]
    out = np.zeros((2 ** L,) * f.n)
    for k in range(L + 1):
        out = np.maximum(out, upsample(cube_value(k, local), L))
    return lattice.from_lattice_coords(out)


def _scale(f: GridFunction) -> float:
    # powers are taken of |f| / max|f| so tiny or huge inputs keep their precision
    m = float(np.max(np.abs(f.values)))
    return m if m > 0 else 1.0


def _default_lattice(f: GridFunction, lattice: DyadicLattice | None) -> DyadicLattice:
    return lattice if lattice is not None else DyadicLattice(f.n, f.L)


def dyadic_maximal(f: GridFunction, lattice: DyadicLattice | None = None, r: float = 1.0) -> GridFunction:
    """``M^D_r f(x) = sup_{Q ni x} <|f|^r>_Q^{1/r}`` over one lattice."""
    if r < 1:
        raise ValueError("r must be at least 1")
    lattice = _default_lattice(f, lattice)
    scale = _scale(f)
    powered = (np.abs(f.grid) / scale) ** r
    out = _lattice_max(f, lattice, lambda k, g: block_reduce(g[0], k), [powered])
    return GridFunction(f.n, f.L, (scale * out ** (1.0 / r)).ravel())


def hl_maximal(f: GridFunction, r: float = 1.0) -> GridFunction:
    """Hardy-Littlewood surrogate: cellwise max over the ``3**n`` shifted lattices."""
    lattices = shifted_lattices(f.n, f.L) if f.L >= 1 else [DyadicLattice(f.n, 0)]
    vals = np.max([dyadic_maximal(f, lat, r).values for lat in lattices], axis=0)
    return GridFunction(f.n, f.L, vals)


def multilinear_maximal(fs: Sequence[GridFunction], r: float = 1.0,
                        lattices: Sequence[DyadicLattice] | None = None) -> GridFunction:
    """``sup_{Q ni x} prod_i <|f_i|^r>_Q^{1/r}`` over the given lattices (default: shifted)."""
    fs = _as_tuple(fs)
    if r < 1:
        raise ValueError("r must be at least 1")
    f0 = fs[0]
    if lattices is None:
        lattices = shifted_lattices(f0.n, f0.L) if f0.L >= 1 else [DyadicLattice(f0.n, f0.L)]
    scales = [_scale(f) for f in fs]
    powered = [(np.abs(f.grid) / c) ** r for f, c in zip(fs, scales)]

    def value(k, grids):
        prod = np.full((2 ** k,) * f0.n, float(np.prod(scales)))
        for g in grids:
            prod = prod * block_reduce(g, k) ** (1.0 / r)
        return prod

    vals = np.max([_lattice_max(f0, lat, value, powered) for lat in lattices], axis=0)
    return GridFunction(f0.n, f0.L, vals.ravel())


def weighted_dyadic_maximal(fs, w: GridFunction, alpha: float = 1.0,
                            lattice: DyadicLattice | None = None) -> GridFunction:
    """``sup_{Q ni x} prod_i (w(Q)^{-1} int_Q |f_i|^alpha w)^{1/alpha}``.

    The ``alpha > 1`` variant is linear-only (one function).
    """
    fs = _as_tuple(fs)
    check_same_grid(fs[0], w)
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if alpha > 1 and len(fs) > 1:
        raise ValueError("alpha > 1 is only defined for a single function")
    f0 = fs[0]
    lattice = _default_lattice(f0, lattice)
    wg = np.asarray(w.grid, dtype=float)
    grids = [wg] + [np.abs(f.grid) ** alpha * wg for f in fs]

    def value(k, g):
        wq = block_reduce(g[0], k)
        prod = np.ones_like(wq)
        for fw in g[1:]:
            prod = prod * (block_reduce(fw, k) / wq) ** (1.0 / alpha)
        return prod

    out = _lattice_max(f0, lattice, value, grids)
    return GridFunction(f0.n, f0.L, out.ravel())


def orlicz_maximal(f: GridFunction, phi: YoungFunction,
                   lattice: DyadicLattice | None = None) -> GridFunction:
    """``M_phi f(x) = sup_{Q ni x} ||f||_{phi, Q}`` over one lattice."""
    lattice = _default_lattice(f, lattice)
    out = _lattice_max(f, lattice, lambda k, g: luxemburg_level_norms(g[0], phi, k), [np.abs(f.grid)])
    return GridFunction(f.n, f.L, out.ravel())


def iterated_maximal(f: GridFunction, times: int, lattice: DyadicLattice | None = None) -> GridFunction:
    """``M^D`` applied ``times`` times."""
    out = f
    for _ in range(times):
        out = dyadic_maximal(out, lattice)
    return out
