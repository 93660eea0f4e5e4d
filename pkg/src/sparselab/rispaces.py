"""Rearrangement-invariant spaces evaluated through decreasing rearrangements.

A :class:`SpaceSpec` names a function norm on ``[0, inf)`` (the
representation space).  ``space_norm`` rearranges a grid function (with
respect to Lebesgue measure or a weight) and applies that norm to the
resulting step profile, which makes every evaluation an exact finite sum
except for Orlicz kinds (Luxemburg bisection).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sample import GridFunction, RearrangementProfile, check_same_grid, pairing, rearrangement
from .young import YoungFunction, luxemburg_profile_norm

KINDS = ("lebesgue", "lorentz", "orlicz", "weakLp")
# numeric index estimates beyond this are reported as infinite
INFINITE_INDEX = 100.0


def _conj(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True, eq=False)
class SpaceSpec:
    """Descriptor of an r.i. space, optionally raised to the power ``r``.

    ``exponent`` implements ``X^r`` with ``||f||_{X^r} = || |f|^r ||_X^{1/r}``.
    """

    kind: str
    p: float | None = None
    q: float | None = None
    phi: YoungFunction | None = None
    p_convex: float = 1.0
    exponent: float = 1.0
    boyd: tuple[float, float] = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "orlicz":
            if self.phi is None:
                raise ValueError("orlicz space needs a Young function")
        elif self.p is None or self.p <= 0:
            raise ValueError(f"{self.kind} space needs p > 0")
        if self.kind == "lorentz" and (self.q is None or self.q <= 0):
            raise ValueError("lorentz space needs q > 0")
        if not 0 < self.p_convex <= 1:
            raise ValueError("convexity exponent must lie in (0, 1]")
        if self.exponent <= 0:
            raise ValueError("power r must be positive")
        object.__setattr__(self, "boyd", self._closed_form_boyd())

    # constructors -------------------------------------------------------
    @classmethod
    def lebesgue(cls, p: float) -> "SpaceSpec":
        return cls("lebesgue", p=float(p))

    @classmethod
    def lorentz(cls, p: float, q: float) -> "SpaceSpec":
        return cls("lorentz", p=float(p), q=float(q))

    @classmethod
    def orlicz(cls, phi: YoungFunction) -> "SpaceSpec":
        return cls("orlicz", phi=phi)

    @classmethod
    def weak(cls, p: float, p_convex: float = 1.0) -> "SpaceSpec":
        return cls("weakLp", p=float(p), p_convex=p_convex)

    def power(self, r: float) -> "SpaceSpec":
        """The space ``X^r``."""
        return SpaceSpec(self.kind, self.p, self.q, self.phi, self.p_convex, self.exponent * r)

    # indices ------------------------------------------------------------
    def _closed_form_boyd(self) -> tuple[float, float]:
        if self.kind == "orlicz":
            lo, hi = self.phi.indices
        else:
            lo = hi = self.p
        return (lo * self.exponent, hi * self.exponent)

    @property
    def is_banach(self) -> bool:
        if self.exponent < 1:
            return False
        if self.kind == "lebesgue":
            return self.p >= 1
        if self.kind == "lorentz":
            return self.p > 1 and self.q >= 1 or (self.p == 1 and self.q == 1)
        if self.kind == "weakLp":
            return False
        return True

    def associate(self) -> "SpaceSpec":
        """The associate space ``X'`` (Orlicz kinds: norm-equivalent ``phi-bar``)."""
        if self.exponent != 1:
            raise NotImplementedError("associate of X^r is not implemented")
        if self.kind == "lebesgue":
            if self.p < 1:
                raise NotImplementedError("associate of L^p with p < 1 is trivial")
            return SpaceSpec.lebesgue(_conj(self.p))
        if self.kind == "lorentz":
            if self.p <= 1 or self.q < 1:
                raise NotImplementedError("associate needs p > 1 and q >= 1")
            return SpaceSpec.lorentz(_conj(self.p), _conj(self.q))
        if self.kind == "weakLp":
            if self.p <= 1:
                raise NotImplementedError("associate of weak L^p needs p > 1")
            return SpaceSpec.lorentz(_conj(self.p), 1.0)
        return SpaceSpec.orlicz(self.phi.complement)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.p is not None:
            out["p"] = self.p
        if self.q is not None:
            out["q"] = self.q
        if self.phi is not None:
            out["phi"] = self.phi.to_json()
        if self.p_convex != 1.0:
            out["pConvex"] = self.p_convex
        if self.exponent != 1.0:
            out["r"] = self.exponent
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SpaceSpec":
        phi = YoungFunction.from_json(obj["phi"]) if obj.get("phi") else None
        return cls(
            obj["kind"],
            p=obj.get("p"),
            q=obj.get("q"),
            phi=phi,
            p_convex=obj.get("pConvex", 1.0),
            exponent=obj.get("r", 1.0),
        )

    def __repr__(self):
        base = {"lebesgue": f"L^{self.p}", "lorentz": f"L^({self.p},{self.q})",
                "weakLp": f"L^({self.p},inf)", "orlicz": f"L^{self.phi!r}"}[self.kind]
        return base if self.exponent == 1 else f"({base})^{self.exponent}"


# ---------------------------------------------------------------------------
# norms on step profiles


def profile_norm(profile: RearrangementProfile, X: SpaceSpec) -> float:
    """The representation-space functional of ``X`` applied to ``profile``."""
    r = X.exponent
    levels = np.asarray(profile.levels, dtype=float) ** r
    bp = profile.breakpoints
    keep = (np.diff(bp) > 0) & (levels > 0)
    if not np.any(keep):
        return 0.0
    t0, t1, c = bp[:-1][keep], bp[1:][keep], levels[keep]
    kind = X.kind
    if kind == "lebesgue":
        if X.p == math.inf:
            val = float(c.max())
        else:
            val = float(np.sum(c ** X.p * (t1 - t0)) ** (1.0 / X.p))
    elif kind == "weakLp" or (kind == "lorentz" and X.q == math.inf):
        val = float(np.max(c * t1 ** (1.0 / X.p)))
    elif kind == "lorentz":
        p, q = X.p, X.q
        s = q / p
        val = float(np.sum(c ** q * (p / q) * (t1 ** s - t0 ** s)) ** (1.0 / q))
    else:
        val = luxemburg_profile_norm(c, t1 - t0, X.phi)
    return val ** (1.0 / r)


def space_norm(f: GridFunction, X: SpaceSpec, w: GridFunction | None = None) -> float:
    """``||f||_{X(w)}``: the ``X``-functional of the (weighted) rearrangement."""
    return profile_norm(rearrangement(f, w), X)


# ---------------------------------------------------------------------------
# Boyd indices


def _test_profiles(rng: np.random.Generator, count: int) -> list[RearrangementProfile]:
    profiles = []
    for a in np.geomspace(1e-6, 1e6, 49):
        profiles.append(RearrangementProfile(np.array([0.0, a]), np.array([1.0])))
    for _ in range(count):
        k = int(rng.integers(2, 12))
        widths = np.exp(rng.uniform(-8, 8, size=k))
        levels = np.sort(np.exp(rng.uniform(-8, 8, size=k)))[::-1]
        profiles.append(RearrangementProfile(np.concatenate([[0.0], np.cumsum(widths)]), levels))
    return profiles


def dilation_norm(X: SpaceSpec, t: float, profiles: Sequence[RearrangementProfile]) -> float:
    """Sampled lower bound of ``||D_t||`` with ``D_t f(s) = f(s / t)``."""
    best = 0.0
    for prof in profiles:
        base = profile_norm(prof, X)
        if base > 0:
            best = max(best, profile_norm(prof.dilate(t), X) / base)
    return best


def numeric_boyd_indices(X: SpaceSpec, seed: int = 0, count: int = 40,
                         t_extreme: float = 1e40) -> tuple[float, float]:
    """Boyd indices from ``log t / log h_X(t)`` at ``t = t_extreme`` and ``1/t_extreme``.

    Orlicz kinds use indicator profiles evaluated through ``phi^{-1}`` in log
    space, so much larger dilations are reachable.
    """
    if X.kind == "orlicz":
        return _orlicz_numeric_boyd(X)
    profiles = _test_profiles(np.random.default_rng(seed), count)
    big = dilation_norm(X, t_extreme, profiles)
    small = dilation_norm(X, 1.0 / t_extreme, profiles)
    lt = math.log(t_extreme)
    p_x = lt / math.log(big) if big > 1 else math.inf
    q_x = -lt / math.log(small) if 0 < small < 1 else math.inf
    return (p_x, q_x)


def _orlicz_numeric_boyd(X: SpaceSpec, lt: float = 300.0) -> tuple[float, float]:
    # ||chi_[0,a]||_phi = 1 / phi^{-1}(1/a) on the representation space
    phi, r = X.phi, X.exponent
    # log factors converge like log(lt)/lt, hence the large dilation
    la = np.linspace(-5 * lt, 5 * lt, 10 * int(lt) + 1)
    log_inv = phi.log_inverse

    def log_h(lt_):
        # log ||D_t chi_a|| - log ||chi_a|| = log phi^-1(1/a) - log phi^-1(1/(t a))
        return float(np.max(log_inv(-la) - log_inv(-la - lt_)))

    big, small = log_h(lt), log_h(-lt)
    p_x = lt / big if big > 0 else math.inf
    q_x = lt / -small if small < 0 else math.inf
    if p_x > INFINITE_INDEX:
        p_x = math.inf
    if q_x > INFINITE_INDEX:
        q_x = math.inf
    return (p_x * r, q_x * r)


def boyd_indices(X: SpaceSpec) -> tuple[float, float]:
    """Closed-form Boyd indices ``(p_X, q_X)``."""
    return X.boyd


# ---------------------------------------------------------------------------
# duality and products


def associate_pairing_check(f: GridFunction, g: GridFunction, X: SpaceSpec,
                            w: GridFunction | None = None) -> float:
    """``int |f g| w / (||f||_{X(w)} ||g||_{X'(w)})`` (0 when the pairing vanishes)."""
    check_same_grid(f, g)
    Xa = X.associate()
    num = pairing(f.abs(), g.abs(), w)
    if num == 0:
        return 0.0
    return num / (space_norm(f, X, w) * space_norm(g, Xa, w))


def product_hypothesis_check(Xs: Sequence[SpaceSpec], X: SpaceSpec, trials: int = 100,
                             n: int = 1, L: int = 8, seed: int = 0,
                             w: GridFunction | None = None) -> dict:
    """Measure ``||prod f_i||_X / prod ||f_i||_{X_i}`` on random tuples.

    Also runs indicators of the shrinking cubes ``[0, 2^-k)^n`` and flags
    growth: the ratio rising by more than a factor 2 from the coarsest to the
    finest level.
    """
    m = len(Xs)
    if m < 2:
        raise ValueError("need at least two factor spaces")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        fs = [GridFunction(n, L, rng.standard_normal(2 ** (n * L)) * rng.exponential(size=2 ** (n * L)))
              for _ in range(m)]
        best = max(best, _product_ratio(fs, Xs, X, w))
    scaling = []
    for k in range(0, L + 1):
        chi = GridFunction.indicator(0.0, 2.0 ** -k, n, L)
        scaling.append(_product_ratio([chi] * m, Xs, X, w))
    best = max(best, max(scaling))
    growth = scaling[-1] > 2.0 * scaling[0]
    holder = (
        X.kind == "lebesgue" and all(Y.kind == "lebesgue" for Y in Xs)
        and X.exponent == 1 and all(Y.exponent == 1 for Y in Xs)
        and abs(1.0 / X.p - sum(1.0 / Y.p for Y in Xs)) < 1e-12
    )
    return {"maxRatio": best, "scaling": scaling, "growth": bool(growth), "holderExponents": holder}


def _product_ratio(fs, Xs, X, w) -> float:
    prod = fs[0]
    for g in fs[1:]:
        prod = prod * g
    den = float(np.prod([space_norm(f, Y, w) for f, Y in zip(fs, Xs)]))
    return space_norm(prod, X, w) / den if den > 0 else 0.0


def p_convexity_constant(X: SpaceSpec, fs: Sequence[GridFunction],
                         w: GridFunction | None = None) -> float:
    """``||(sum |f_j|^s)^{1/s}|| / (sum ||f_j||^s)^{1/s}`` with ``s = X.p_convex``."""
    s = X.p_convex
    total = sum(np.abs(f.values) ** s for f in fs) ** (1.0 / s)
    lhs = space_norm(GridFunction(fs[0].n, fs[0].L, total), X, w)
    rhs = sum(space_norm(f, X, w) ** s for f in fs) ** (1.0 / s)
    return lhs / rhs if rhs > 0 else 0.0


def quasi_triangle_constant(X: SpaceSpec, f: GridFunction, g: GridFunction,
                            w: GridFunction | None = None) -> float:
    """``||f + g|| / (||f|| + ||g||)``."""
    den = space_norm(f, X, w) + space_norm(g, X, w)
    return space_norm(f + g, X, w) / den if den > 0 else 0.0
