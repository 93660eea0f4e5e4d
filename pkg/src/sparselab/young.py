"""Young functions, complementary functions, indices and Luxemburg norms.

Four kinds are supported:

``power``        ``c * t**p``
``zygmund``      ``t * log(e + t)**alpha``
``expMinusOne``  ``exp(t**(1/alpha)) - 1``
``table``        samples ``(t_j, phi(t_j))`` interpolated log-log

Everything that has to survive extreme arguments (dilation indices, the
Luxemburg bisection) works with ``log phi`` so that ``t`` can range over
``e**(+-120)`` without overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from .dyadic import DyadicCube, DyadicLattice, _blocks, _block_axes

KINDS = ("power", "zygmund", "expMinusOne", "table")

# sampling grids shared by the numeric estimators
INDEX_S_GRID = np.linspace(math.log(1e-6), math.log(1e6), 1201)
INDEX_T_EXTREME = 120.0
DELTA2_LAMBDAS = np.geomspace(2.0, 1e3, 60)
DELTA2_T_GRID = np.geomspace(1e-6, 1e6, 400)
DELTA2_SLACK = 1.05
QUASI_CONVEX_BOUND = 2.0
ALPHA_GRID = np.round(np.arange(0.02, 1.0001, 0.02), 2)


class BracketError(ArithmeticError):
    """The Luxemburg bisection bracket does not contain the root."""


class NotConvexError(ValueError):
    """A Young function failed the convexity check."""


@dataclass(frozen=True)
class Delta2Result:
    C1: float
    satisfied: bool
    lambdas: tuple[float, float]
    t_range: tuple[float, float]


def _log_expm1(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        small = np.log(np.expm1(np.minimum(u, 30.0)))
        large = u + np.log1p(-np.exp(-np.maximum(u, 30.0)))
    return np.where(u > 30.0, large, small)


@dataclass(frozen=True, eq=False)
class YoungFunction:
    """A Young function described by ``kind`` and ``params``.

    Derived data (convexity, dilation indices, the Delta_2 constant and the
    submultiplicativity flag) is computed once at construction.
    """

    kind: str
    params: dict = field(default_factory=dict)
    indices: tuple[float, float] = field(init=False, repr=False)
    delta2: Delta2Result = field(init=False, repr=False)
    submultiplicative: bool = field(init=False, repr=False)
    convex: bool = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Young function kind {self.kind!r}")
        params = dict(self.params)
        if self.kind == "power":
            params.setdefault("coef", 1.0)
            if params["p"] < 1 or params["coef"] <= 0:
                raise NotConvexError("power kind needs p >= 1 and coef > 0")
        elif self.kind == "zygmund":
            if params.get("alpha", 1.0) < 0:
                raise ValueError("zygmund alpha must be non-negative")
            params.setdefault("alpha", 1.0)
        elif self.kind == "expMinusOne":
            params.setdefault("alpha", 1.0)
            if not 0 < params["alpha"] <= 1:
                raise NotConvexError("exp(t^(1/alpha)) - 1 is convex only for 0 < alpha <= 1")
        else:
            t = np.asarray(params["t"], dtype=float)
            v = np.asarray(params["values"], dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise ValueError("table kind needs matching 1-D t and values arrays")
            if np.any(np.diff(t) <= 0) or t[0] <= 0 or np.any(v < 0) or np.any(np.diff(v) < 0):
                raise ValueError("table needs increasing positive t and nondecreasing values >= 0")
            params["t"], params["values"] = t, v
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "convex", self._check_convex())
        if not self.convex and self.kind != "table":
            raise NotConvexError(f"{self.kind} with {params} is not convex")
        object.__setattr__(self, "indices", self._dilation_indices())
        object.__setattr__(self, "delta2", self._delta2())
        object.__setattr__(self, "submultiplicative", self._submultiplicative())

    # constructors -------------------------------------------------------
    @classmethod
    def power(cls, p: float, coef: float = 1.0) -> "YoungFunction":
        return cls("power", {"p": float(p), "coef": float(coef)})

    @classmethod
    def zygmund(cls, alpha: float = 1.0) -> "YoungFunction":
        return cls("zygmund", {"alpha": float(alpha)})

    @classmethod
    def exp_minus_one(cls, alpha: float = 1.0) -> "YoungFunction":
        return cls("expMinusOne", {"alpha": float(alpha)})

    @classmethod
    def table(cls, t, values) -> "YoungFunction":
        return cls("table", {"t": np.asarray(t, dtype=float), "values": np.asarray(values, dtype=float)})

    # evaluation ---------------------------------------------------------
    def log_phi(self, lt) -> np.ndarray:
        """``log phi(e**lt)`` evaluated without forming ``e**lt`` where possible."""
        lt = np.asarray(lt, dtype=float)
        k, prm = self.kind, self.params
        if k == "power":
            return math.log(prm["coef"]) + prm["p"] * lt
        if k == "zygmund":
            return lt + prm["alpha"] * np.log(np.logaddexp(1.0, lt))
        if k == "expMinusOne":
            with np.errstate(over="ignore"):
                return _log_expm1(np.exp(lt / prm["alpha"]))
        return self._table_log(lt)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k, prm = self.kind, self.params
        with np.errstate(over="ignore", invalid="ignore"):
            if k == "power":
                out = prm["coef"] * t ** prm["p"]
            elif k == "zygmund":
                out = t * np.log(np.e + t) ** prm["alpha"]
            elif k == "expMinusOne":
                out = np.expm1(t ** (1.0 / prm["alpha"]))
            else:
                out = self._table_eval(t)
        return out

    def _table_log(self, lt: np.ndarray) -> np.ndarray:
        """``log phi`` for the table kind, interpolated log-log, from ``log t``."""
        tt, vv = self.params["t"], self.params["values"]
        lt = np.asarray(lt, dtype=float)
        lt_tab = np.log(tt)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lv_tab = np.log(vv)
            idx = np.clip(np.searchsorted(lt_tab, lt, side="right") - 1, 0, tt.size - 2)
            v0, v1 = vv[idx], vv[idx + 1]
            both = (v0 > 0) & (v1 > 0)
            frac = (lt - lt_tab[idx]) / (lt_tab[idx + 1] - lt_tab[idx])
            loglog = lv_tab[idx] + frac * (lv_tab[idx + 1] - lv_tab[idx])
            # linear in t across the segment where the table leaves zero
            t = np.exp(np.clip(lt, lt_tab[0], lt_tab[-1]))
            t0, t1 = tt[idx], tt[idx + 1]
            linear = np.log(np.maximum(v0 + (t - t0) / (t1 - t0) * (v1 - v0), 0.0))
            inner = np.where(both, loglog, linear)
            if vv[0] > 0:
                slope = (lv_tab[1] - lv_tab[0]) / (lt_tab[1] - lt_tab[0])
                low = lv_tab[0] + slope * (lt - lt_tab[0])
            else:
                low = np.full_like(lt, -np.inf)
            slope = (lv_tab[-1] - lv_tab[-2]) / (lt_tab[-1] - lt_tab[-2]) if vv[-2] > 0 else 1.0
            high = lv_tab[-1] + slope * (lt - lt_tab[-1])
        return np.where(lt < lt_tab[0], low, np.where(lt > lt_tab[-1], high, inner))

    def _table_eval(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, np.exp(self._table_log(np.log(np.maximum(t, 1e-320)))), 0.0)

    def log_inverse(self, ly) -> np.ndarray:
        """``log`` of the generalised inverse at ``y = e**ly``."""
        ly = np.asarray(ly, dtype=float)
        if self.kind == "power":
            return (ly - math.log(self.params["coef"])) / self.params["p"]
        lo = np.full(ly.shape, -2000.0)
        hi = np.full(ly.shape, 2000.0)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            with np.errstate(invalid="ignore"):
                ok = self.log_phi(mid) <= ly
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return 0.5 * (lo + hi)

    def inverse(self, y) -> np.ndarray:
        """Generalised inverse ``sup{t >= 0 : phi(t) <= y}``."""
        y = np.asarray(y, dtype=float)
        if self.kind == "power":
            return (y / self.params["coef"]) ** (1.0 / self.params["p"])
        with np.errstate(divide="ignore"):
            return np.exp(self.log_inverse(np.log(y)))

    # structure checks ---------------------------------------------------
    def _check_convex(self) -> bool:
        t = np.geomspace(1e-6, 1e6, 2001)
        v = self(t)
        ok = np.isfinite(v) & (v < 1e300)
        t, v = np.concatenate([[0.0], t[ok]]), np.concatenate([[0.0], v[ok]])
        slopes = np.diff(v) / np.diff(t)
        return bool(np.all(np.diff(slopes) >= -1e-9 * np.maximum(np.abs(slopes[1:]), 1e-300)))

    def is_n_function(self) -> bool:
        """``phi(t)/t`` small at ``t = 1e-6`` and large at ``t = 1e6`` (sampled ends)."""
        lo = math.exp(float(self.log_phi(math.log(1e-6)))) / 1e-6
        hi = math.exp(min(float(self.log_phi(math.log(1e6))), 700.0)) / 1e6
        return lo < 1e-2 and hi > 1e2

    def _dilation_indices(self) -> tuple[float, float]:
        k, prm = self.kind, self.params
        if k == "power":
            return (prm["p"], prm["p"])
        if k == "zygmund":
            return (1.0, 1.0)
        if k == "expMinusOne":
            return (1.0 / prm["alpha"], math.inf)
        return self.numeric_dilation_indices()

    def log_h(self, lt: float) -> float:
        """``log h_phi(e**lt)`` with ``s`` sampled on ``[1e-6, 1e6]``."""
        base = self.log_phi(INDEX_S_GRID)
        ok = np.isfinite(base)
        with np.errstate(invalid="ignore"):
            diff = self.log_phi(INDEX_S_GRID[ok] + lt) - base[ok]
        return float(np.max(diff))

    def numeric_dilation_indices(self) -> tuple[float, float]:
        lo = self.log_h(-INDEX_T_EXTREME) / -INDEX_T_EXTREME
        hi = self.log_h(INDEX_T_EXTREME) / INDEX_T_EXTREME
        if not np.isfinite(hi) or hi > 1e6:
            hi = math.inf
        return (float(lo), float(hi))

    @property
    def i_phi(self) -> float:
        return self.indices[0]

    @property
    def I_phi(self) -> float:
        return self.indices[1]

    def numeric_delta2(self, t_grid: np.ndarray = DELTA2_T_GRID) -> float:
        """Grid-minimal ``C`` with ``phi(lam t) <= slack 2^C lam^C phi(t)``."""
        lam = DELTA2_LAMBDAS[:, None]
        lt = np.log(t_grid)[None, :]
        base = self.log_phi(lt)
        with np.errstate(invalid="ignore"):
            need = (self.log_phi(lt + np.log(lam)) - base - math.log(DELTA2_SLACK)) / np.log(2 * lam)
        need = np.where(np.isfinite(base), need, -np.inf)
        if np.any(np.isnan(need)) or np.any(np.isposinf(need)):
            return math.inf
        return float(max(np.max(need), 0.0))

    def _delta2(self) -> Delta2Result:
        lam_range = (float(DELTA2_LAMBDAS[0]), float(DELTA2_LAMBDAS[-1]))
        t_range = (float(DELTA2_T_GRID[0]), float(DELTA2_T_GRID[-1]))
        if self.kind == "power":
            return Delta2Result(self.params["p"], True, lam_range, t_range)
        if self.I_phi == math.inf:
            return Delta2Result(math.inf, False, lam_range, t_range)
        c = self.numeric_delta2()
        wider = self.numeric_delta2(np.geomspace(1e-8, 1e9, 500))
        ok = math.isfinite(c) and wider <= 1.1 * c + 1e-12
        return Delta2Result(c if ok else math.inf, ok, lam_range, t_range)

    @property
    def C1(self) -> float:
        return self.delta2.C1

    def _submultiplicative(self) -> bool:
        if self.kind == "power":
            return self.params["coef"] >= 1.0
        lt = np.linspace(math.log(1e-4), math.log(1e4), 161)
        a, b = np.meshgrid(lt, lt)
        lhs = self.log_phi(a + b)
        with np.errstate(invalid="ignore"):
            rhs = self.log_phi(a) + self.log_phi(b)
            bad = lhs > rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))
        return not bool(np.any(bad))

    # complementary functions -------------------------------------------
    @cached_property
    def complement(self) -> "YoungFunction":
        return complementary(self)

    def quasi_convexity_ratio(self, alpha: float) -> float:
        """``sup_{s<t} (g(s)/s) / (g(t)/t)`` for ``g = phi**alpha`` on a log grid."""
        lt = np.linspace(math.log(1e-6), math.log(1e6), 1201)
        lg = alpha * self.log_phi(lt) - lt
        lg = lg[np.isfinite(lg)]
        if lg.size == 0:
            return math.inf
        running = np.maximum.accumulate(lg)
        return float(math.exp(np.max(running - lg)))

    def quasi_convex_alpha(self) -> float:
        """Smallest grid ``alpha`` in ``(0, 1]`` with ``complement**alpha`` quasi-convex."""
        comp = self.complement
        for a in ALPHA_GRID:
            if comp.quasi_convexity_ratio(a) <= QUASI_CONVEX_BOUND:
                return float(a)
        return 1.0

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        if self.kind == "table":
            with np.errstate(divide="ignore"):
                lv = np.log(self.params["values"])
            return {
                "kind": "table",
                "tLog": [float(x) for x in np.log(self.params["t"])],
                "phiLog": [float(x) if np.isfinite(x) else None for x in lv],
            }
        return {"kind": self.kind, "params": {k: float(v) for k, v in self.params.items()}}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "YoungFunction":
        kind = obj["kind"]
        if kind == "table":
            t = np.exp(np.asarray(obj["tLog"], dtype=float))
            v = np.array([0.0 if x is None else math.exp(x) for x in obj["phiLog"]])
            return cls.table(t, v)
        params = dict(obj.get("params", {}))
        for key in ("p", "alpha", "coef"):
            if key in obj:
                params[key] = obj[key]
        return cls(kind, params)

    def __repr__(self):
        if self.kind == "table":
            return f"YoungFunction(table, {self.params['t'].size} samples)"
        return f"YoungFunction({self.kind}, {self.params})"


def dilation_indices(phi: YoungFunction) -> tuple[float, float]:
    """``(i_phi, I_phi)``: closed form for built-ins, numeric for tables."""
    return phi.indices


def delta2_constant(phi: YoungFunction) -> float:
    """Grid-minimal ``C_1`` with ``phi(lam t) <= 2^C1 lam^C1 phi(t)``; ``inf`` when Delta_2 fails."""
    return phi.delta2.C1 if phi.delta2.satisfied else math.inf


def _legendre_table(phi: YoungFunction, n_t: int = 4000) -> YoungFunction:
    """Numeric ``sup_s (s t - phi(s))`` tabulated on a log grid of ``t``."""
    ls_all = np.linspace(-40.0, 700.0, 7401)
    lp = phi.log_phi(ls_all)
    finite = np.isfinite(lp) & (lp < 650.0)
    ls_max = float(ls_all[finite][-1]) if finite.any() else 0.0
    ls_min = -40.0
    slope0 = math.exp(float(phi.log_phi(ls_min)) - ls_min)
    slope_hi = math.exp(float(phi.log_phi(ls_max)) - ls_max)
    t_lo = min(1e-8, 0.5 * slope0) if slope0 > 0 else 1e-8
    t = np.geomspace(t_lo, slope_hi, n_t)
    if slope0 > 0:
        # resolve the corner where the complement leaves zero
        t = np.unique(np.concatenate([t, slope0 * (1.0 + np.geomspace(1e-9, 1.0, n_t // 2))]))
        n_t = t.size

    s_coarse = np.exp(np.linspace(ls_min, ls_max, 1500))
    phi_coarse = phi(s_coarse)
    best = np.empty(n_t, dtype=np.int64)
    for start in range(0, n_t, 256):
        chunk = t[start:start + 256, None] * s_coarse[None, :] - phi_coarse[None, :]
        best[start:start + 256] = np.argmax(chunk, axis=1)
    a = s_coarse[np.maximum(best - 1, 0)]
    b = s_coarse[np.minimum(best + 1, s_coarse.size - 1)]
    a = np.where(best == 0, 0.0, a)
    # vectorised golden-section search; s t - phi(s) is concave in s
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(90):
        c = b - g * (b - a)
        d = a + g * (b - a)
        fc = t * c - phi(c)
        fd = t * d - phi(d)
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    s_star = 0.5 * (a + b)
    vals = np.maximum(t * s_star - phi(s_star), 0.0)
    vals = np.maximum.accumulate(vals)
    return YoungFunction.table(t, vals)


def complementary(phi: YoungFunction) -> YoungFunction:
    """The complementary function ``sup_s (s t - phi(s))``.

    Power kinds use the closed form; every other kind gets a numeric Legendre
    table.  Non-convex input is rejected.
    """
    if not phi.convex:
        raise NotConvexError("complementary function requires a convex input")
    if phi.kind == "power":
        p, c = phi.params["p"], phi.params["coef"]
        if p == 1:
            raise ValueError("t -> c t has no finite complementary Young function")
        q = p / (p - 1.0)
        return YoungFunction.power(q, (1.0 / q) * (c * p) ** (-(q - 1.0)))
    return _legendre_table(phi)


def equivalent_complement(phi: YoungFunction) -> YoungFunction:
    """Closed-form function equivalent (up to constants) to the complement.

    For ``t log(e+t)^alpha`` this is ``exp(t^(1/alpha)) - 1``; for power kinds
    the exact complement.
    """
    if phi.kind == "zygmund":
        return YoungFunction.exp_minus_one(phi.params["alpha"])
    if phi.kind == "power":
        return complementary(phi)
    raise ValueError(f"no closed-form equivalent complement for kind {phi.kind}")


# ---------------------------------------------------------------------------
# Luxemburg norms


def _lux_solve(vals: np.ndarray, meas: np.ndarray, denom: np.ndarray, phi: YoungFunction,
               rtol: float = 1e-10) -> np.ndarray:
    """Row-wise ``inf{lam : sum phi(vals/lam) meas / denom <= 1}`` by log bisection."""
    vals = np.abs(np.atleast_2d(vals))
    meas = np.broadcast_to(meas, vals.shape)
    denom = np.broadcast_to(np.asarray(denom, dtype=float), vals.shape[:1])
    maxv = vals.max(axis=1)
    zero = maxv == 0
    scale = np.where(zero, 1.0, maxv)
    # solve for lam / max so tiny or huge rows neither underflow nor overflow
    rel = vals / scale[:, None]

    def modular(log_lam):
        with np.errstate(over="ignore", invalid="ignore"):
            vphi = phi(rel / np.exp(log_lam)[:, None])
            vphi = np.where(rel == 0, 0.0, vphi)
            return np.sum(vphi * meas, axis=1) / denom

    lo = np.full(scale.shape, -math.log(1e12))
    hi = np.full(scale.shape, math.log(1e12))
    live = ~zero
    if np.any(live & ~(modular(hi) <= 1.0)) or np.any(live & ~(modular(lo) > 1.0)):
        raise BracketError(f"Luxemburg bracket [max*1e-12, max*1e12] fails for {phi!r}")
    tol = math.log1p(rtol)
    while np.any(hi[live] - lo[live] > tol):
        mid = 0.5 * (lo + hi)
        above = modular(mid) > 1.0
        lo = np.where(above & live, mid, lo)
        hi = np.where(~above & live, mid, hi)
    return np.where(zero, 0.0, scale * np.exp(hi))


def luxemburg_norm(f, phi: YoungFunction, Q: DyadicCube, mu=None,
                   lattice: DyadicLattice | None = None, rtol: float = 1e-10) -> float:
    """``||f||_{phi, Q}`` averaged with respect to Lebesgue measure or ``mu``."""
    lattice = lattice or DyadicLattice(f.n, f.L)
    cells = lattice.cell_indices(Q)
    vals = np.abs(np.asarray(f.values)[cells])
    meas = np.ones_like(vals) if mu is None else np.asarray(mu.values, dtype=float)[cells]
    if meas.sum() <= 0:
        raise ValueError("cube has zero measure")
    return float(_lux_solve(vals[None, :], meas[None, :], np.array([meas.sum()]), phi, rtol)[0])


def luxemburg_level_norms(grid: np.ndarray, phi: YoungFunction, k: int,
                          mu_grid: np.ndarray | None = None, rtol: float = 1e-10) -> np.ndarray:
    """Luxemburg norms of ``grid`` over every level-``k`` block (lattice coordinates)."""
    n = grid.ndim
    blocks = _blocks(np.abs(grid), k)
    axes = _block_axes(n)
    outer = tuple(range(0, 2 * n, 2))
    vals = np.transpose(blocks, outer + axes).reshape(2 ** (n * k), -1)
    if mu_grid is None:
        meas = np.ones_like(vals)
    else:
        meas = np.transpose(_blocks(mu_grid, k), outer + axes).reshape(vals.shape)
    out = _lux_solve(vals, meas, meas.sum(axis=1), phi, rtol)
    return out.reshape((2 ** k,) * n)


def luxemburg_profile_norm(levels: np.ndarray, widths: np.ndarray, phi: YoungFunction,
                           rtol: float = 1e-10) -> float:
    """``inf{lam : sum phi(levels/lam) widths <= 1}`` for a step profile."""
    levels = np.asarray(levels, dtype=float)
    widths = np.asarray(widths, dtype=float)
    return float(_lux_solve(levels[None, :], widths[None, :], np.array([1.0]), phi, rtol)[0])


# ---------------------------------------------------------------------------
# identities


def n_function_identities(phi: YoungFunction, complement: YoungFunction | None = None,
                          n_points: int = 1000, t_range=(1e-3, 1e3)) -> dict:
    """Largest relative violations of the N-function identities on a log grid.

    ``twoSided``: ``t <= phi^-1(t) cphi^-1(t) <= 2t``; ``conjugateBound``:
    ``cphi(phi(t)/t) <= phi(t)``; ``young``: ``st <= phi(s) + cphi(t)`` on the
    product grid.
    """
    comp = complement if complement is not None else phi.complement
    t = np.geomspace(t_range[0], t_range[1], n_points)
    prod = phi.inverse(t) * comp.inverse(t)
    two_sided = float(np.max(np.maximum(0.0, np.maximum((t - prod) / t, (prod - 2 * t) / t))))
    pt = phi(t)
    conj = float(np.max(np.maximum(0.0, (comp(pt / t) - pt) / pt)))
    s = t[:, None]
    tt = t[None, :]
    st = s * tt
    young = float(np.max(np.maximum(0.0, (st - phi(s) - comp(tt)) / st)))
    closed = comp.kind != "table"
    tol = 1e-8 if closed else 1e-3
    return {
        "twoSided": two_sided,
        "conjugateBound": conj,
        "young": young,
        "tolerance": tol,
        "closedForm": closed,
        "points": int(n_points),
        "passed": max(two_sided, conj, young) <= tol,
    }
