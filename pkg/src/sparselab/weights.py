"""Muckenhoupt-type constants and dyadic BMO in the dyadic model.

Every supremum runs over all cubes (levels ``0..L``) of the supplied lattices.
By default that is the family of ``3**n`` shifted lattices, which is the
standard dyadic surrogate for "all cubes"; constants reported here are
therefore dyadic-model constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import DyadicLattice, block_reduce, shifted_lattices, upsample
from .sample import GridFunction


class Weight(GridFunction):
    """A strictly positive, finite grid function."""

    def __post_init__(self):
        super().__post_init__()
        if np.iscomplexobj(self.values) or np.min(self.values) <= 0:
            raise ValueError("weights must be real and strictly positive")

    @classmethod
    def from_function(cls, f: GridFunction) -> "Weight":
        return cls(f.n, f.L, f.values)

    def measure(self) -> float:
        return float(np.sum(self.values) * self.cell_volume)

    def to_json(self) -> dict:
        obj = super().to_json()
        obj["positive"] = True
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Weight":
        return cls.from_function(GridFunction.from_json(obj))


@dataclass(frozen=True, eq=False)
class BmoFunction:
    """A real grid function ``b`` with its dyadic BMO norm computed eagerly."""

    b: GridFunction
    lattices: tuple | None = None
    norm: float = field(init=False)

    def __post_init__(self):
        if self.b.is_complex:
            raise ValueError("BMO functions are real-valued")
        object.__setattr__(self, "norm", bmo_norm(self.b, self.lattices))

    @property
    def values(self) -> np.ndarray:
        return self.b.values


def default_lattices(n: int, L: int) -> list[DyadicLattice]:
    return shifted_lattices(n, L) if L >= 1 else [DyadicLattice(n, L)]


def _lattices(f: GridFunction, lattices) -> Sequence[DyadicLattice]:
    if lattices is None or lattices == "shifted":
        return default_lattices(f.n, f.L)
    if lattices == "dyadic":
        return [DyadicLattice(f.n, f.L)]
    return lattices


def conjugate_exponent(p: float) -> float:
    if p <= 1:
        raise ValueError("conjugate exponent needs p > 1")
    return math.inf if p == math.inf else p / (p - 1.0)


def ap_constant(w: GridFunction, p: float, lattices=None) -> float:
    """``sup_Q <w>_Q <w^{1-p'}>_Q^{p-1}`` by exhaustive scan."""
    if p <= 1:
        raise ValueError(f"A_p needs p > 1, got {p}")
    sigma_exp = 1.0 - conjugate_exponent(p)
    best = 0.0
    for lat in _lattices(w, lattices):
        grid = lat.to_lattice_coords(w.grid)
        dual = grid ** sigma_exp
        for k in range(w.L + 1):
            vals = block_reduce(grid, k) * block_reduce(dual, k) ** (p - 1.0)
            best = max(best, float(vals.max()))
    return best


def _ainfty_lattice(grid: np.ndarray, L: int) -> float:
    # M_k(x) = max over dyadic subcubes of level >= k containing x of <w>;
    # built from the finest level upwards, integrated over each level-k cube.
    running = grid.copy()
    best = 0.0
    for k in range(L, -1, -1):
        avg = block_reduce(grid, k)
        running = np.maximum(running, upsample(avg, L))
        ratio = block_reduce(running, k) / avg
        best = max(best, float(ratio.max()))
    return best


def ainfty_constant(w: GridFunction, lattices=None) -> float:
    """Fujii-Wilson constant ``sup_Q w(Q)^{-1} int_Q M(w chi_Q)``."""
    return max(
        _ainfty_lattice(lat.to_lattice_coords(w.grid), w.L) for lat in _lattices(w, lattices)
    )


def a1_constant(w: GridFunction, lattices=None) -> float:
    """``sup_Q <w>_Q / min_Q w``."""
    best = 0.0
    for lat in _lattices(w, lattices):
        grid = lat.to_lattice_coords(w.grid)
        for k in range(w.L + 1):
            best = max(best, float((block_reduce(grid, k) / block_reduce(grid, k, "min")).max()))
    return best


def oscillation_pyramid(b: GridFunction, lattice: DyadicLattice, s: float = 1.0) -> list[np.ndarray]:
    """Per level, ``<|b - b_Q|^s>_Q^{1/s}`` for every cube of ``lattice``."""
    grid = lattice.to_lattice_coords(np.asarray(b.grid, dtype=float))
    out = []
    for k in range(b.L + 1):
        dev = np.abs(grid - upsample(block_reduce(grid, k), b.L))
        out.append(block_reduce(dev ** s, k) ** (1.0 / s))
    return out


def bmo_norm(b: GridFunction, lattices=None) -> float:
    """``sup_Q <|b - b_Q|>_Q``."""
    if b.is_complex:
        raise ValueError("BMO norm needs a real function")
    best = 0.0
    for lat in _lattices(b, lattices):
        for level in oscillation_pyramid(b, lat):
            best = max(best, float(level.max()))
    return best


def power_weight(a: float, center, n: int, L: int) -> Weight:
    """``max(|x - center|, 2^{-L-1})^a`` at cell centers (non-periodic distance)."""
    if a <= -n:
        raise ValueError(f"power weight exponent must exceed -{n}")
    center = np.broadcast_to(np.asarray(center, dtype=float), (n,))
    floor = 2.0 ** (-L - 1)

    def fn(*xs):
        dist = np.sqrt(sum((x - c) ** 2 for x, c in zip(xs, center)))
        return np.maximum(dist, floor) ** a

    return Weight.from_function(GridFunction.from_callable(fn, n, L))


def step_weight(values: Sequence[float], n: int, L: int) -> Weight:
    """Piecewise-constant weight taking ``values[i]`` on the i-th equal slab along axis 0."""
    vals = np.asarray(values, dtype=float)
    N = 2 ** L
    slab = np.repeat(vals, int(np.ceil(N / vals.size)))[:N]
    grid = slab.reshape((N,) + (1,) * (n - 1)) * np.ones((N,) * n)
    return Weight(n, L, grid.ravel())


def moment_oscillation_ratio(b: GridFunction, s: float, lattices=None) -> float:
    """``sup_Q <|b-b_Q|^s>^{1/s} / (2^{n+1} e^3 s ||b||_BMO)``; zero for constant ``b``."""
    norm = bmo_norm(b, lattices)
    if norm == 0:
        return 0.0
    best = 0.0
    for lat in _lattices(b, lattices):
        for level in oscillation_pyramid(b, lat, s):
            best = max(best, float(level.max()))
    return best / (2.0 ** (b.n + 1) * math.e ** 3 * s * norm)


def exp_oscillation_constant(b: GridFunction, lattices=None) -> float:
    """``sup_Q ||b - b_Q||_{exp L, Q} / ||b||_BMO`` with ``exp L`` from ``e^t - 1``."""
    from .young import YoungFunction, luxemburg_level_norms

    norm = bmo_norm(b, lattices)
    if norm == 0:
        return 0.0
    phi = YoungFunction.exp_minus_one(1.0)
    best = 0.0
    for lat in _lattices(b, lattices):
        grid = lat.to_lattice_coords(np.asarray(b.grid, dtype=float))
        for k in range(b.L + 1):
            dev = np.abs(grid - upsample(block_reduce(grid, k), b.L))
            best = max(best, float(luxemburg_level_norms(dev, phi, k).max()))
    return best / norm
