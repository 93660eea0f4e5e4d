"""Dyadic cubes on the periodic unit cube, shifted lattices and sparse families.

The domain is ``[0, 1)^n`` (n = 1 or 2) sampled by ``2**L`` cells per axis.
A lattice is the standard dyadic grid translated by a whole number of finest
cells (periodically), so every lattice cube of level ``k <= L`` is an exact
union of grid cells.  All per-cube work goes through "pyramids": one array per
level ``k`` of shape ``(2**k,) * n`` holding a reduction of the cells of each
cube, computed in the lattice's own (rolled) coordinates.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SUPPORTED_DIMS = (1, 2)


class LevelOverflowError(ValueError):
    """Raised when asking for children of a finest-level cube."""


@dataclass(frozen=True, order=True)
class DyadicCube:
    """A cube of side ``2**-level``; ``coords`` index it within its level."""

    level: int
    coords: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"negative level {self.level}")
        coords = tuple(int(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        side = 2 ** self.level
        if any(c < 0 or c >= side for c in coords):
            raise ValueError(f"coords {coords} outside [0, {side}) at level {self.level}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.level * self.n)

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise ValueError("the root cube has no parent")
        return DyadicCube(self.level - 1, tuple(c >> 1 for c in self.coords))

    def contains(self, other: "DyadicCube") -> bool:
        """Nesting test within a single lattice (``other`` subset of ``self``)."""
        if other.level < self.level or other.n != self.n:
            return False
        shift = other.level - self.level
        return all((c >> shift) == s for c, s in zip(other.coords, self.coords))

    def to_json(self) -> dict:
        return {"level": self.level, "coords": list(self.coords)}


def root(n: int) -> DyadicCube:
    return DyadicCube(0, (0,) * n)


def children(cube: DyadicCube, max_level: int) -> list[DyadicCube]:
    """The ``2**n`` cubes of level ``cube.level + 1`` partitioning ``cube``."""
    if cube.level >= max_level:
        raise LevelOverflowError(f"cube at level {cube.level} is at the finest level {max_level}")
    offsets = itertools.product((0, 1), repeat=cube.n)
    return [
        DyadicCube(cube.level + 1, tuple(2 * c + o for c, o in zip(cube.coords, off)))
        for off in offsets
    ]


def cubes_at_level(n: int, k: int):
    """All cubes of level ``k``, coordinate-minor order."""
    for coords in itertools.product(range(2 ** k), repeat=n):
        yield DyadicCube(k, coords)


# ---------------------------------------------------------------------------
# array helpers (grids are arrays of shape (2**L,) * n)


def grid_level(shape: Sequence[int]) -> int:
    size = shape[0]
    L = int(size).bit_length() - 1
    if 2 ** L != size or any(s != size for s in shape):
        raise ValueError(f"grid shape {tuple(shape)} is not a power-of-two hypercube")
    return L


def _blocks(grid: np.ndarray, k: int) -> np.ndarray:
    L = grid_level(grid.shape)
    s, b = 2 ** k, 2 ** (L - k)
    shape = []
    for _ in range(grid.ndim):
        shape += [s, b]
    return grid.reshape(shape)


def _block_axes(n: int) -> tuple[int, ...]:
    return tuple(range(1, 2 * n, 2))


def block_reduce(grid: np.ndarray, k: int, how: str = "mean") -> np.ndarray:
    """Reduce every level-``k`` block of ``grid``; ``how`` in mean/sum/max/min."""
    blocks = _blocks(grid, k)
    axes = _block_axes(grid.ndim)
    return getattr(blocks, how)(axis=axes)


def upsample(coarse: np.ndarray, L: int) -> np.ndarray:
    """Broadcast a level array back to cell resolution ``2**L``."""
    k = grid_level(coarse.shape)
    b = 2 ** (L - k)
    out = coarse
    for ax in range(coarse.ndim):
        out = np.repeat(out, b, axis=ax)
    return out


def pyramid(grid: np.ndarray, how: str = "mean") -> list[np.ndarray]:
    """Block reductions at every level ``0..L`` (index = level)."""
    L = grid_level(grid.shape)
    return [block_reduce(grid, k, how) for k in range(L + 1)]


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class DyadicLattice:
    """A periodic dyadic lattice on ``[0,1)^n`` with finest level ``max_level``.

    ``shift`` is the nominal translation in ``[0,1)^n``; the realised
    translation is rounded to the nearest finest cell (see ``offset``).
    """

    n: int
    max_level: int
    shift: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {self.n}")
        if self.max_level < 0:
            raise ValueError("max_level must be non-negative")
        shift = tuple(float(s) for s in self.shift) if self.shift else (0.0,) * self.n
        if len(shift) != self.n or any(not 0.0 <= s < 1.0 for s in shift):
            raise ValueError(f"shift {shift} must be a length-{self.n} vector in [0,1)")
        object.__setattr__(self, "shift", shift)

    @property
    def cells_per_axis(self) -> int:
        return 2 ** self.max_level

    @property
    def offset(self) -> tuple[int, ...]:
        N = self.cells_per_axis
        return tuple(int(round(s * N)) % N for s in self.shift)

    @property
    def realised_shift(self) -> tuple[float, ...]:
        return tuple(o / self.cells_per_axis for o in self.offset)

    def to_lattice_coords(self, grid: np.ndarray) -> np.ndarray:
        """Roll a cell grid so this lattice's cubes become standard blocks."""
        return np.roll(grid, tuple(-o for o in self.offset), axis=tuple(range(self.n)))

    def from_lattice_coords(self, grid: np.ndarray) -> np.ndarray:
        return np.roll(grid, self.offset, axis=tuple(range(self.n)))

    def pyramid(self, grid: np.ndarray, how: str = "mean") -> list[np.ndarray]:
        return pyramid(self.to_lattice_coords(grid), how)

    def cell_indices(self, cube: DyadicCube) -> np.ndarray:
        """Flat (row-major) indices of the grid cells making up ``cube``."""
        if cube.n != self.n:
            raise ValueError("cube dimension does not match lattice")
        if cube.level > self.max_level:
            raise LevelOverflowError(f"level {cube.level} finer than lattice level {self.max_level}")
        N = self.cells_per_axis
        b = 2 ** (self.max_level - cube.level)
        axes = [(o + c * b + np.arange(b)) % N for o, c in zip(self.offset, cube.coords)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.sort(np.ravel_multi_index(tuple(m.ravel() for m in mesh), (N,) * self.n))

    def cubes(self, max_level: int | None = None):
        top = self.max_level if max_level is None else max_level
        for k in range(top + 1):
            yield from cubes_at_level(self.n, k)

    def contains_box(self, cube: DyadicCube, lo: Sequence[float], hi: Sequence[float]) -> bool:
        """Whether ``cube`` (of this lattice) contains the box ``[lo, hi)`` mod 1."""
        if cube.level == 0:
            return all(b - a <= 1.0 for a, b in zip(lo, hi))
        side = cube.side
        for s, c, a, b in zip(self.realised_shift, cube.coords, lo, hi):
            length = b - a
            if length > side:
                return False
            u = (a - s - c * side) % 1.0
            if u + length > side + 1e-15:
                return False
        return True

    def to_json(self) -> dict:
        return {"n": self.n, "maxLevel": self.max_level, "shift": list(self.shift)}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicLattice":
        return cls(int(obj["n"]), int(obj["maxLevel"]), tuple(obj.get("shift") or ()))


def standard_lattice(n: int, L: int) -> DyadicLattice:
    return DyadicLattice(n, L)


def shifted_lattices(n: int, L: int) -> list[DyadicLattice]:
    """The ``3**n`` lattices with shifts in ``{0, 1/3, 2/3}**n``."""
    if n not in SUPPORTED_DIMS:
        raise ValueError(f"unsupported dimension {n}")
    if L < 1:
        raise ValueError("need L >= 1")
    thirds = (0.0, 1.0 / 3.0, 2.0 / 3.0)
    return [DyadicLattice(n, L, shift) for shift in itertools.product(thirds, repeat=n)]


def covering_cube(lo: Sequence[float], hi: Sequence[float], lattices: Sequence[DyadicLattice]):
    """Smallest lattice cube containing the tripled box ``3[lo, hi)``.

    Returns ``(lattice_index, cube, volume_ratio)`` where ``volume_ratio`` is
    ``|R| / |Q|``; ``None`` when the tripled box is longer than the domain.
    """
    lengths = [b - a for a, b in zip(lo, hi)]
    big_lo = [a - l for a, l in zip(lo, lengths)]
    big_hi = [b + l for b, l in zip(hi, lengths)]
    vol_q = float(np.prod(lengths))
    best = None
    for j, lat in enumerate(lattices):
        for k in range(lat.max_level, -1, -1):
            side = 2.0 ** -k
            coords = tuple(
                int(((a - s) % 1.0) // side) % 2 ** k for a, s in zip(big_lo, lat.realised_shift)
            )
            cube = DyadicCube(k, coords)
            if lat.contains_box(cube, big_lo, big_hi):
                ratio = cube.volume / vol_q
                if best is None or ratio < best[2]:
                    best = (j, cube, ratio)
                break
    return best


# ---------------------------------------------------------------------------
# sparse families


@dataclass(frozen=True)
class SparseFamily:
    """Cubes of one lattice with their cores ``E(Q)`` (flat cell indices)."""

    lattice: DyadicLattice
    cubes: tuple[DyadicCube, ...]
    cores: tuple[np.ndarray, ...]
    eta: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.cubes) != len(self.cores):
            raise ValueError("every cube needs a core")

    def __len__(self):
        return len(self.cubes)

    @property
    def max_level(self) -> int:
        return self.lattice.max_level

    def level_masks(self) -> list[np.ndarray]:
        """Per level, a boolean array (lattice coordinates) of member cubes."""
        masks = [np.zeros((2 ** k,) * self.lattice.n, dtype=bool) for k in range(self.max_level + 1)]
        for q in self.cubes:
            masks[q.level][q.coords] = True
        return masks

    def level_counts(self) -> list[np.ndarray]:
        """Like ``level_masks`` but counting repeated cubes."""
        counts = [np.zeros((2 ** k,) * self.lattice.n, dtype=np.int64) for k in range(self.max_level + 1)]
        for q in self.cubes:
            counts[q.level][q.coords] += 1
        return counts

    def to_json(self) -> dict:
        return {
            "lattice": self.lattice.to_json(),
            "eta": self.eta,
            "cubes": [
                {"level": q.level, "coords": list(q.coords), "coreCells": [int(i) for i in core]}
                for q, core in zip(self.cubes, self.cores)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "SparseFamily":
        lattice = DyadicLattice.from_json(obj["lattice"])
        cubes, cores = [], []
        for item in obj["cubes"]:
            cubes.append(DyadicCube(int(item["level"]), tuple(item["coords"])))
            cores.append(np.asarray(item.get("coreCells", []), dtype=np.int64))
        return cls(lattice, tuple(cubes), tuple(cores), obj.get("eta"))


TauLike = Callable[[DyadicCube], float] | Sequence[np.ndarray]


def _tau_pyramid(tau: TauLike, lattice: DyadicLattice) -> list[np.ndarray]:
    if callable(tau):
        levels = []
        for k in range(lattice.max_level + 1):
            arr = np.empty((2 ** k,) * lattice.n)
            for q in cubes_at_level(lattice.n, k):
                arr[q.coords] = tau(q)
            levels.append(arr)
        return levels
    levels = [np.asarray(t, dtype=float) for t in tau]
    if len(levels) != lattice.max_level + 1:
        raise ValueError(f"tau pyramid has {len(levels)} levels, lattice needs {lattice.max_level + 1}")
    return levels


def build_sparse_family(tau: TauLike, lattice: DyadicLattice, threshold: float = 2.0) -> SparseFamily:
    """Stopping-time family: root plus maximal cubes with ``tau >= threshold * tau(anchor)``.

    ``tau`` is either a callable on cubes or a per-level pyramid in the
    lattice's coordinates.  A cube is selected when it is positive and its
    value reaches ``threshold`` times that of its nearest selected ancestor.
    The returned ``eta`` is the certified minimum core ratio.
    """
    if threshold <= 1:
        raise ValueError("threshold must exceed 1")
    levels = _tau_pyramid(tau, lattice)
    if np.any(levels[0] < 0) or not np.all(np.isfinite(levels[0])):
        raise ValueError("tau must be finite and non-negative")
    n, L = lattice.n, lattice.max_level
    selected = [np.ones((1,) * n, dtype=bool)]
    anchor = levels[0].astype(float)
    for k in range(1, L + 1):
        up = anchor
        for ax in range(n):
            up = np.repeat(up, 2, axis=ax)
        tk = levels[k]
        sel = (tk > 0) & (tk >= threshold * up)
        selected.append(sel)
        anchor = np.where(sel, tk, up)

    cubes: list[DyadicCube] = []
    owner = np.zeros((2 ** L,) * n, dtype=np.int64)
    for k in range(L + 1):
        idx = np.argwhere(selected[k])
        ids = np.full(selected[k].shape, -1, dtype=np.int64)
        for coords in idx:
            ids[tuple(coords)] = len(cubes)
            cubes.append(DyadicCube(k, tuple(int(c) for c in coords)))
        up_ids = upsample(ids, L)
        owner = np.where(up_ids >= 0, up_ids, owner)

    owner = lattice.from_lattice_coords(owner).ravel()
    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(len(cubes) + 1))
    cores = tuple(np.sort(order[bounds[i]:bounds[i + 1]]) for i in range(len(cubes)))
    family = SparseFamily(lattice, tuple(cubes), cores, meta={"threshold": threshold})
    _, eta = verify_sparsity(family, 0.0)
    return SparseFamily(lattice, family.cubes, cores, eta, family.meta)


def cores_disjoint(family: SparseFamily) -> bool:
    """Exact pairwise disjointness of the cores (as cell sets)."""
    if not family.cores:
        return True
    allcells = np.concatenate([np.asarray(c, dtype=np.int64) for c in family.cores])
    return len(np.unique(allcells)) == len(allcells)


def verify_sparsity(family: SparseFamily, eta: float) -> tuple[bool, float]:
    """Check ``|E(Q)| >= eta |Q|`` for every cube and disjointness of the cores.

    Returns ``(passed, min_ratio)``; ``passed`` is false when any ratio is
    below ``eta`` or two cores share a cell.
    """
    L = family.max_level
    n = family.lattice.n
    if not family.cubes:
        return True, 1.0
    ratios = [
        len(core) / 2 ** (n * (L - q.level)) for q, core in zip(family.cubes, family.cores)
    ]
    min_ratio = float(min(ratios))
    return (min_ratio >= eta and cores_disjoint(family)), min_ratio


def cube_measures(family: SparseFamily, weight_values: np.ndarray | None = None) -> list[np.ndarray]:
    """Per-level pyramid of cube measures (Lebesgue or weighted) in lattice coords."""
    lat = family.lattice
    N = lat.cells_per_axis
    cell = float(N) ** -lat.n
    if weight_values is None:
        grid = np.full((N,) * lat.n, cell)
    else:
        grid = np.asarray(weight_values, dtype=float).reshape((N,) * lat.n) * cell
    return lat.pyramid(grid, "sum")


def carleson_ratio(family: SparseFamily, weight_values: np.ndarray, R: DyadicCube) -> float:
    """``sum_{Q in S, Q subset R} w(Q) / w(R)``; ``R`` must belong to ``family``."""
    if R not in family.cubes:
        raise ValueError(f"{R} is not a member of the family")
    sums = cube_measures(family, weight_values)
    total = 0.0
    for q in sorted(family.cubes):
        if R.contains(q):
            total += float(sums[q.level][q.coords])
    return total / float(sums[R.level][R.coords])


def carleson_ratios(family: SparseFamily, weight_values: np.ndarray) -> dict[DyadicCube, float]:
    """``carleson_ratio`` for every member of the family in one pass."""
    sums = cube_measures(family, weight_values)
    members = sorted(family.cubes)
    out = {}
    for R in members:
        total = 0.0
        for q in members:
            if R.contains(q):
                total += float(sums[q.level][q.coords])
        out[R] = total / float(sums[R.level][R.coords])
    return out
