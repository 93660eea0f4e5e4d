"""Piecewise-constant grid functions and their rearrangements.

A :class:`GridFunction` holds ``2**(n*L)`` cell values in row-major order on
the periodic unit cube.  Measures are always exact finite sums: the Lebesgue
cell volume is ``2**(-n*L)`` and a weight ``w`` turns it into ``w * cellVol``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyadic import DyadicCube, DyadicLattice, SUPPORTED_DIMS


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell values of a function on ``[0,1)^n`` at resolution ``2**L``."""

    n: int
    L: int
    values: np.ndarray

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {self.n}")
        vals = np.array(self.values).ravel()
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if vals.size != 2 ** (self.n * self.L):
            raise ValueError(f"expected {2 ** (self.n * self.L)} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # construction -------------------------------------------------------
    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "GridFunction":
        grid = np.asarray(grid)
        L = int(grid.shape[0]).bit_length() - 1
        return cls(grid.ndim, L, grid.ravel())

    @classmethod
    def constant(cls, c: float, n: int, L: int) -> "GridFunction":
        return cls(n, L, np.full(2 ** (n * L), c, dtype=float))

    @classmethod
    def from_callable(cls, fn, n: int, L: int) -> "GridFunction":
        """Sample ``fn`` at cell centers (``fn`` takes one coordinate array per axis)."""
        centers = (np.arange(2 ** L) + 0.5) / 2 ** L
        mesh = np.meshgrid(*([centers] * n), indexing="ij")
        return cls(n, L, np.asarray(fn(*mesh), dtype=float).ravel())

    @classmethod
    def indicator(cls, lo, hi, n: int, L: int) -> "GridFunction":
        """Indicator of the box ``[lo, hi)`` evaluated at cell centers."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))

        def fn(*xs):
            inside = np.ones_like(xs[0], dtype=bool)
            for x, a, b in zip(xs, lo, hi):
                inside &= (x >= a) & (x < b)
            return inside.astype(float)

        return cls.from_callable(fn, n, L)

    # views --------------------------------------------------------------
    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def cells_per_axis(self) -> int:
        return 2 ** self.L

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.n * self.L)

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape((self.cells_per_axis,) * self.n)

    def abs(self) -> "GridFunction":
        return GridFunction(self.n, self.L, np.abs(self.values))

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.n, self.L, fn(self.values))

    def same_grid(self, other: "GridFunction") -> bool:
        return self.n == other.n and self.L == other.L

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            check_same_grid(self, c)
            return GridFunction(self.n, self.L, self.values * c.values)
        return GridFunction(self.n, self.L, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self, other)
            return GridFunction(self.n, self.L, self.values + other.values)
        return GridFunction(self.n, self.L, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self, other)
            return GridFunction(self.n, self.L, self.values - other.values)
        return GridFunction(self.n, self.L, self.values - other)

    def __neg__(self):
        return GridFunction(self.n, self.L, -self.values)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        if self.is_complex:
            vals = [[float(v.real), float(v.imag)] for v in self.values]
            return {"n": self.n, "L": self.L, "values": vals, "complex": True}
        return {"n": self.n, "L": self.L, "values": [float(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj: dict) -> "GridFunction":
        vals = obj["values"]
        if obj.get("complex"):
            arr = np.array([complex(a, b) for a, b in vals])
        else:
            arr = np.asarray(vals, dtype=float)
        return cls(int(obj["n"]), int(obj["L"]), arr)

    @classmethod
    def from_csv(cls, path: str | Path, n: int = 1) -> "GridFunction":
        """One value per line, row-major; the level is inferred from the count."""
        arr = np.loadtxt(path, dtype=float, ndmin=1)
        L = (int(arr.size).bit_length() - 1) // n
        if 2 ** (n * L) != arr.size:
            raise ValueError(f"{arr.size} values do not form a 2^L grid in dimension {n}")
        return cls(n, L, arr)

    @classmethod
    def load(cls, path: str | Path) -> "GridFunction":
        path = Path(path)
        if path.suffix.lower() == ".csv":
            return cls.from_csv(path)
        return cls.from_json(json.loads(path.read_text()))


def check_same_grid(*fns: GridFunction) -> None:
    first = fns[0]
    for g in fns[1:]:
        if not first.same_grid(g):
            raise ValueError(f"grid mismatch: (n={first.n}, L={first.L}) vs (n={g.n}, L={g.L})")


def cell_measures(f: GridFunction, w: GridFunction | None = None) -> np.ndarray:
    """Lebesgue or ``w``-measure of each cell."""
    if w is None:
        return np.full(f.values.size, f.cell_volume)
    check_same_grid(f, w)
    return np.asarray(w.values, dtype=float) * f.cell_volume


def average(
    f: GridFunction,
    Q: DyadicCube,
    r: float = 1.0,
    lattice: DyadicLattice | None = None,
) -> float:
    """``<|f|^r>_Q^{1/r}`` over the cells of ``Q`` (standard lattice by default)."""
    if r <= 0:
        raise ValueError("r must be positive")
    lattice = lattice or DyadicLattice(f.n, f.L)
    cells = lattice.cell_indices(Q)
    vals = np.abs(f.values[cells])
    scale = float(vals.max()) if vals.size and vals.max() > 0 else 1.0
    return float(scale * np.mean((vals / scale) ** r) ** (1.0 / r))


def distribution(f: GridFunction, lam: float, w: GridFunction | None = None) -> float:
    """Measure of ``{|f| > lam}`` (strict inequality)."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    mask = np.abs(f.values) > lam
    return float(np.sum(cell_measures(f, w)[mask]))


@dataclass(frozen=True, eq=False)
class RearrangementProfile:
    """Step function ``f*`` equal to ``levels[j]`` on ``[breakpoints[j], breakpoints[j+1])``."""

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if bp.size != lv.size + 1:
            raise ValueError("need one more breakpoint than levels")
        if bp.size and bp[0] != 0:
            raise ValueError("breakpoints must start at 0")
        if np.any(np.diff(bp) < 0):
            raise ValueError("breakpoints must be nondecreasing")
        if np.any(np.diff(lv) > 0):
            raise ValueError("levels must be nonincreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)

    @property
    def total_measure(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, t) -> np.ndarray:
        """Evaluate ``f*(t)`` (zero beyond the total measure)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        padded = np.append(self.levels, 0.0)
        idx = np.where((idx >= 0) & (idx < self.levels.size), idx, self.levels.size)
        return padded[idx]

    def distribution(self, lam: float) -> float:
        return float(np.sum(self.widths[self.levels > lam]))

    def compress(self) -> "RearrangementProfile":
        """Merge adjacent steps with equal level and drop empty steps."""
        keep = self.widths > 0
        lv, wd = self.levels[keep], self.widths[keep]
        if lv.size == 0:
            return RearrangementProfile(np.array([0.0, self.total_measure]), np.array([0.0]))
        starts = np.concatenate([[True], lv[1:] != lv[:-1]])
        groups = np.cumsum(starts) - 1
        merged_w = np.bincount(groups, weights=wd)
        bp = np.concatenate([[0.0], np.cumsum(merged_w)])
        return RearrangementProfile(bp, lv[starts])

    def dilate(self, s: float) -> "RearrangementProfile":
        """The profile of ``f*(t / s)`` i.e. every width multiplied by ``s``."""
        return RearrangementProfile(self.breakpoints * s, self.levels)


def rearrangement(f: GridFunction, w: GridFunction | None = None) -> RearrangementProfile:
    """Decreasing rearrangement with respect to Lebesgue measure or ``w``.

    Cells are sorted by ``|f|`` descending, ties by cell index ascending; each
    cell contributes one step whose width is its measure.
    """
    mags = np.abs(f.values)
    order = np.lexsort((np.arange(mags.size), -mags))
    widths = cell_measures(f, w)[order]
    bp = np.concatenate([[0.0], np.cumsum(widths)])
    return RearrangementProfile(bp, mags[order])


def pairing(f: GridFunction, g: GridFunction, w: GridFunction | None = None) -> float:
    """``sum f g w cellVol`` (real part when complex values are involved)."""
    check_same_grid(f, g)
    total = np.sum(f.values * g.values * cell_measures(f, w))
    return float(np.real(total))
