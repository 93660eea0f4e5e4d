"""Experiment harness: both sides of each weighted inequality, ratio reports.

A run is described by an ``ExperimentConfig`` (parsed from JSON).  Every
target evaluates ``LHS / RHS`` on a deterministic random corpus of function
tuples and a family of weights, with the right-hand constant assembled from
measured dyadic-model weight constants.  Budgets are ratio ceilings frozen by
``calibrate`` in ``fixtures/budgets.json``; a run fails when any ratio is not
finite or exceeds its budget.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .dyadic import DyadicLattice, carleson_ratios, shifted_lattices
from .maximal import multilinear_maximal, weighted_dyadic_maximal
from .pdo import SymbolSpec, apply, builtin_symbol, commutator_apply
from .rispaces import SpaceSpec, boyd_indices, p_convexity_constant, product_hypothesis_check, space_norm
from .sample import GridFunction
from .sparse import sparse_apply, sparse_sum, stopping_family
from .weights import (BmoFunction, Weight, a1_constant, ainfty_constant, ap_constant, power_weight,
                      step_weight)
from .young import YoungFunction, n_function_identities

log = logging.getLogger(__name__)

TARGETS = (
    "T1.1", "T1.2", "T1.3", "T1.4", "T1.5", "T1.5-endpoint", "T1.6",
    "L-mod-max", "L-mod-Mr", "L-mod-sparse", "sparse-domination", "carleson", "product-hypothesis",
)
Q_GRID = (1.1, 1.5, 2.0)
MODULAR_Q_GRID = (1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0)
CALIBRATION_MARGIN = 1.1
CONSTANT_MODEL = "dyadic: sup over the 3^n shifted lattices"
BUDGET_FIXTURE = "budgets.json"


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


class HypothesisError(ValueError):
    """A target's hypotheses fail; the experiment is rejected before running."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed run configuration: grid, corpus and a list of target blocks."""

    n: int = 1
    L: int = 8
    seed: int = 0
    count: int = 100
    targets: tuple[dict, ...] = ()
    budgets: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: Any, source: str = "<config>") -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError(f"{source}: top level must be an object")
        grid = obj.get("grid", {})
        corpus = obj.get("corpus", {})
        targets = obj.get("targets", [])
        budgets = obj.get("budgets", {})
        if not isinstance(grid, dict) or not isinstance(corpus, dict):
            raise ConfigError(f"{source}: 'grid' and 'corpus' must be objects")
        if not isinstance(targets, list):
            raise ConfigError(f"{source}: 'targets' must be a list")
        if not isinstance(budgets, dict):
            raise ConfigError(f"{source}: 'budgets' must be an object")
        n, L = grid.get("n", 1), grid.get("L", 8)
        if n not in (1, 2) or not isinstance(L, int) or not 1 <= L <= 12:
            raise ConfigError(f"{source}: grid needs n in {{1, 2}} and 1 <= L <= 12")
        seed, count = corpus.get("seed", 0), corpus.get("count", 100)
        if not isinstance(seed, int) or not isinstance(count, int) or count < 0:
            raise ConfigError(f"{source}: corpus needs integer seed and count >= 0")
        seen = set()
        for i, t in enumerate(targets):
            where = f"{source}: targets[{i}]"
            if not isinstance(t, dict):
                raise ConfigError(f"{where} must be an object")
            if t.get("target") not in TARGETS:
                raise ConfigError(f"{where}: unknown target {t.get('target')!r}")
            tid = t.setdefault("id", f"{t['target']}#{i}")
            if tid in seen:
                raise ConfigError(f"{where}: duplicate id {tid!r}")
            seen.add(tid)
        for key, val in budgets.items():
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"{source}: budget {key!r} must be a number")
        return cls(n, L, seed, count, tuple(targets), dict(budgets))

    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return cls.from_json(obj, source)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        return cls.loads(path.read_text(), str(path))

    def to_json(self) -> dict:
        return {
            "grid": {"n": self.n, "L": self.L},
            "corpus": {"seed": self.seed, "count": self.count},
            "targets": list(self.targets),
            "budgets": dict(self.budgets),
        }


@dataclass
class RatioReport:
    """Per-trial rows plus the aggregate verdict for one target."""

    id: str
    target: str
    rows: list[dict] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    budget: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r["ratio"] for r in self.rows], dtype=float)

    @property
    def max_ratio(self) -> float:
        r = self.ratios
        return float(np.max(r)) if r.size else 0.0

    @property
    def median_ratio(self) -> float:
        r = self.ratios
        return float(np.median(r)) if r.size else 0.0

    @property
    def well_posed(self) -> bool:
        """``RHS > 0`` whenever ``LHS > 0`` and no NaN/inf anywhere."""
        for row in self.rows:
            for key in ("lhs", "rhs", "ratio"):
                if key in row and not math.isfinite(row[key]):
                    return False
            if row.get("lhs", 0.0) > 0 and row.get("rhs", 1.0) <= 0:
                return False
        return not self.constants.get("failed", False)

    @property
    def passed(self) -> bool:
        if not self.well_posed:
            return False
        return self.budget is None or self.max_ratio <= self.budget

    def summary(self) -> dict:
        return {
            "id": self.id,
            "target": self.target,
            "trials": len(self.rows),
            "maxRatio": self.max_ratio,
            "medianRatio": self.median_ratio,
            "budget": self.budget,
            "pass": self.passed,
            "constants": self.constants,
            "notes": self.notes,
        }

    def to_csv(self) -> str:
        keys: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in keys:
                    keys.append(k)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in keys})
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    if rhs <= 0:
        return math.inf
    return lhs / rhs


# ---------------------------------------------------------------------------
# corpus, weights, b and spaces from specs


def generate_corpus(n: int, L: int, seed: int, count: int, m: int) -> list[tuple[GridFunction, ...]]:
    """``count`` tuples of ``m`` functions mixing noise, steps, bumps, spikes and heavy tails."""
    rng = np.random.default_rng(seed)
    size = 2 ** (n * L)
    centers = (np.indices((2 ** L,) * n).reshape(n, -1).T + 0.5) / 2 ** L
    out = []
    for _ in range(count):
        fs = []
        for _ in range(m):
            kind = int(rng.integers(5))
            if kind == 0:
                v = rng.standard_normal(size)
            elif kind == 1:
                lo = rng.uniform(0, 1, n)
                wd = rng.uniform(0.02, 0.5, n)
                d = np.abs((centers - lo + 0.5) % 1.0 - 0.5)
                v = np.where(np.all(d < wd, axis=1), rng.uniform(0.5, 5), 0.0) + 0.01
            elif kind == 2:
                c = rng.uniform(0, 1, n)
                s = rng.uniform(0.01, 0.2)
                d = (centers - c + 0.5) % 1.0 - 0.5
                v = np.exp(-np.sum(d ** 2, axis=1) / s ** 2)
            elif kind == 3:
                v = np.full(size, 0.05)
                v[rng.integers(size)] = rng.uniform(1, 20)
            else:
                v = np.clip(rng.standard_cauchy(size), -50, 50)
            fs.append(GridFunction(n, L, v))
        out.append(tuple(fs))
    return out


def make_weight(spec: dict, n: int, L: int) -> tuple[str, Weight]:
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return "w=1", Weight(n, L, np.ones(2 ** (n * L)))
    if kind == "power":
        a = float(spec["a"])
        center = spec.get("center", 0.5)
        return f"power(a={a:g})", power_weight(a, center, n, L)
    if kind == "step":
        vals = [float(v) for v in spec["values"]]
        return "step(" + ",".join(f"{v:g}" for v in vals) + ")", step_weight(vals, n, L)
    if kind == "values":
        return spec.get("name", "values"), Weight(n, L, np.asarray(spec["values"], dtype=float))
    if kind == "file":
        return Path(spec["path"]).stem, Weight.from_function(GridFunction.load(spec["path"]))
    raise ConfigError(f"unknown weight kind {kind!r}")


def make_b(spec: dict, n: int, L: int) -> tuple[str, GridFunction]:
    kind = spec.get("kind", "constant")
    if kind == "constant":
        c = float(spec.get("c", 1.0))
        return f"const({c:g})", GridFunction.constant(c, n, L)
    if kind == "log":
        center = np.broadcast_to(np.asarray(spec.get("center", 0.5), dtype=float), (n,))
        floor = 0.5 / 2 ** L

        def fn(*xs):
            d2 = sum(np.minimum(np.abs(x - c), 1 - np.abs(x - c)) ** 2 for x, c in zip(xs, center))
            return 0.5 * np.log(np.maximum(d2, floor ** 2))

        return "log", GridFunction.from_callable(fn, n, L)
    if kind == "step":
        vals = [float(v) for v in spec["values"]]
        shift = 1.0 - min(vals)
        w = step_weight([v + shift for v in vals], n, L)
        return "step(" + ",".join(f"{v:g}" for v in vals) + ")", GridFunction(n, L, w.values - shift)
    if kind == "cos":
        k = int(spec.get("freq", 1))
        return f"cos({k})", GridFunction.from_callable(
            lambda *xs: np.cos(2 * np.pi * k * xs[0]), n, L)
    if kind == "values":
        return spec.get("name", "values"), GridFunction(n, L, np.asarray(spec["values"], dtype=float))
    raise ConfigError(f"unknown b kind {kind!r}")


def _space(obj) -> SpaceSpec:
    return obj if isinstance(obj, SpaceSpec) else SpaceSpec.from_json(obj)


def _phi(obj) -> YoungFunction:
    return obj if isinstance(obj, YoungFunction) else YoungFunction.from_json(obj)


def _symbol(obj, m_default: int = 2) -> SymbolSpec:
    if obj is None:
        return builtin_symbol("coifman_meyer", m_default)
    return obj if isinstance(obj, SymbolSpec) else SymbolSpec.from_json(obj)


class _Context:
    """Shared per-run state: grid, corpus cache and cached weight constants."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._corpora: dict[int, list] = {}
        self._consts: dict[tuple, float] = {}
        self.lattices = shifted_lattices(cfg.n, cfg.L)

    def corpus(self, m: int) -> list[tuple[GridFunction, ...]]:
        if m not in self._corpora:
            self._corpora[m] = generate_corpus(self.cfg.n, self.cfg.L, self.cfg.seed, self.cfg.count, m)
        return self._corpora[m]

    def weights(self, target: dict) -> list[tuple[str, Weight]]:
        specs = target.get("weights", [{"kind": "constant"}])
        return [make_weight(s, self.cfg.n, self.cfg.L) for s in specs]

    def const(self, name: str, w: Weight, wid: str, p: float | None = None) -> float:
        key = (name, wid, p)
        if key not in self._consts:
            if name == "Ap":
                val = ap_constant(w, p, self.lattices)
            elif name == "Ainf":
                val = ainfty_constant(w, self.lattices)
            else:
                val = a1_constant(w, self.lattices)
            self._consts[key] = float(val)
        return self._consts[key]


def _resolve(config, ctx: "_Context | None") -> tuple[dict, "_Context"]:
    """Accept a one-target ``ExperimentConfig`` or a target dict (default grid)."""
    if isinstance(config, ExperimentConfig):
        if len(config.targets) != 1:
            raise ConfigError("a single-check call needs exactly one target")
        return dict(config.targets[0]), ctx or _Context(config)
    target = dict(config)
    target.setdefault("id", target.get("target", "target"))
    return target, ctx or _Context(ExperimentConfig())


# ---------------------------------------------------------------------------
# hypothesis checks


def _check_symbol(sym: SymbolSpec, n: int) -> None:
    if sym.satisfies_decay_hypothesis(n):
        return
    if sym.name == "product":
        return  # pointwise product: dominated by the stopping cubes directly
    raise HypothesisError(f"symbol {sym.name or 'custom'} lacks certified r < mn(rho - 1)")


def _check_window(X: SpaceSpec, lo: float, label: str) -> tuple[float, float]:
    p, q = boyd_indices(X)
    if not (lo < p <= q < math.inf):
        raise HypothesisError(f"{label} = {X!r}: Boyd indices ({p:g}, {q:g}) outside {lo:g} < p <= q < inf")
    return p, q


def _check_product(Xs, X, cfg: ExperimentConfig) -> dict:
    res = product_hypothesis_check(Xs, X, trials=20, n=cfg.n, L=cfg.L, seed=cfg.seed)
    if res["growth"]:
        raise HypothesisError("product operator is not bounded between the representation spaces")
    return {"productMaxRatio": res["maxRatio"], "holderExponents": res["holderExponents"]}


def _require_ap(ctx: _Context, w: Weight, wid: str, p: float) -> float:
    val = ctx.const("Ap", w, wid, p)
    if not math.isfinite(val):
        raise HypothesisError(f"weight {wid} is not in A_{p:g}")
    return val


def _check_phi(phi: YoungFunction) -> None:
    if not phi.submultiplicative:
        raise HypothesisError(f"{phi!r} is not submultiplicative")
    ident = n_function_identities(phi)
    if not ident["passed"]:
        raise HypothesisError(f"{phi!r} fails the N-function identities")


# ---------------------------------------------------------------------------
# norm-type bounds


def _norm_setup(target: dict, ctx: _Context, quasi: bool, commutator: bool):
    cfg = ctx.cfg
    X = _space(target["X"])
    sym = _symbol(target.get("symbol"))
    Xs = [_space(s) for s in target.get("Xi", [target["X"]] * sym.m)]
    if len(Xs) != sym.m:
        raise HypothesisError(f"{len(Xs)} factor spaces for an {sym.m}-linear symbol")
    _check_symbol(sym, cfg.n)
    r = float(target.get("r", 1.0))
    lo = r if commutator else 1.0
    if commutator and r <= 1:
        raise HypothesisError("commutator bounds need r > 1")
    pX, _ = _check_window(X, lo, "X")
    ps = [_check_window(Y, lo, f"X_{i + 1}")[0] for i, Y in enumerate(Xs)]
    if not quasi:
        for label, Y in [("X", X)] + [(f"X_{i + 1}", Y) for i, Y in enumerate(Xs)]:
            if not Y.is_banach:
                raise HypothesisError(f"{label} = {Y!r} is not a Banach function space")
    info = _check_product(Xs, X, cfg)
    info.update({"pX": pX, "pXi": ps, "r": r if commutator else None})
    return X, Xs, sym, ps, r, info


def check_weighted_bound(config, ctx: _Context | None = None) -> RatioReport:
    """Norm inequalities for ``T_sigma`` and its commutators in ``X(w)``."""
    target, ctx = _resolve(config, ctx)
    kind = target["target"]
    quasi = kind in ("T1.3", "T1.4")
    commutator = kind in ("T1.2", "T1.4")
    X, Xs, sym, ps, r, info = _norm_setup(target, ctx, quasi, commutator)
    p = X.p_convex if quasi else 1.0
    weights = ctx.weights(target)
    p0 = min(ps)
    for wid, w in weights:
        _require_ap(ctx, w, wid, p0 / r if commutator else p0)
    rep = RatioReport(target["id"], kind, constants={"hypotheses": info, "pConvex": p, "model": CONSTANT_MODEL})
    corpus = _target_corpus(target, ctx, sym.m)
    bvecs = [[make_b(s, ctx.cfg.n, ctx.cfg.L) for s in vec] for vec in target.get("b", [])] if commutator else [None]
    if commutator and not bvecs:
        raise ConfigError(f"{target['id']}: commutator target needs 'b'")
    outputs = {}
    for wid, w in weights:
        ainf = ctx.const("Ainf", w, wid)
        aps = [ctx.const("Ap", w, wid, pi) for pi in ps]
        base = math.prod(a ** (1.0 / pi) for a, pi in zip(aps, ps))
        wc = {"Ainf": ainf, "Ap": aps, "A2": ctx.const("Ap", w, wid, 2.0)}
        for bvec in bvecs:
            if bvec is None:
                const = ainf ** (1.0 / p) * base
                bid, bnorm, qs = "", None, None
            else:
                bnorm = max(BmoFunction(b, tuple(ctx.lattices)).norm for _, b in bvec)
                bid = "+".join(name for name, _ in bvec)
                apr = [ctx.const("Ap", w, wid, pi / r) for pi in ps]
                const, qs = _commutator_constant(ainf, aps, apr, ps, r, p, bnorm)
            wc.setdefault("commutator", {})[bid] = {"bmo": bnorm, "q": qs, "constant": const} if bvec else None
            for t, fs in enumerate(corpus):
                key = (t, bid)
                if key not in outputs:
                    outputs[key] = (apply(sym, fs) if bvec is None
                                    else commutator_apply(sym, [b for _, b in bvec], fs))
                out = outputs[key]
                lhs = space_norm(out, X, w)
                norms = math.prod(space_norm(f, Y, w) for f, Y in zip(fs, Xs))
                rhs = const * norms
                row = {"trial": t, "weight": wid, "lhs": lhs, "rhs": rhs, "ratio": _ratio(lhs, rhs),
                       "constant": const}
                if bvec is not None:
                    row["b"] = bid
                rep.rows.append(row)
        rep.constants.setdefault("weights", {})[wid] = wc
    if quasi:
        sample = [apply(sym, fs) for fs in corpus[:5]]
        if sample:
            rep.constants["measuredConvexity"] = p_convexity_constant(X, sample)
    a2 = [c["A2"] for c in rep.constants.get("weights", {}).values()]
    if a2:
        rep.constants["A2Spread"] = max(a2) / min(a2)
    return rep


def _commutator_constant(ainf, aps, apr, ps, r, p, bnorm):
    """Most favorable ``q_i`` from ``Q_GRID`` for the commutator constant."""
    first = ainf ** p * math.prod(a ** (p / pi) for a, pi in zip(aps, ps))
    best, best_q = math.inf, None
    for q in Q_GRID:
        second = math.prod(a ** (p / (q * r)) for a in apr)
        val = bnorm * ainf ** (1.0 / p) * (first + second) ** (1.0 / p)
        if val < best:
            best, best_q = val, q
    return best, [best_q] * len(ps)


# ---------------------------------------------------------------------------
# sparse domination and Carleson


def check_sparse_domination(config, ctx: _Context | None = None) -> RatioReport:
    """``max_x |T f(x)| / sum_j A_{S_j} f(x)`` with stopping families on every lattice."""
    target, ctx = _resolve(config, ctx)
    sym = _symbol(target.get("symbol"))
    _check_symbol(sym, ctx.cfg.n)
    threshold = float(target.get("threshold", 2.0))
    rep = RatioReport(target["id"], target["target"],
                      constants={"threshold": threshold, "lattices": len(ctx.lattices)})
    for t, fs in enumerate(_target_corpus(target, ctx, sym.m)):
        Tf = np.abs(apply(sym, fs).values)
        fams = [stopping_family(fs, lat, threshold) for lat in ctx.lattices]
        dom = sparse_sum(fams, fs).values
        pos = dom > 0
        lhs = float(np.max(Tf[pos] / dom[pos])) if pos.any() else 0.0
        scale = 1.0 + float(np.max(np.abs([f.values for f in fs])))
        failed = bool(np.any(Tf[~pos] > 1e-12 * scale))
        rep.rows.append({"trial": t, "lhs": lhs, "rhs": 1.0, "ratio": math.inf if failed else lhs,
                         "cubes": sum(len(S.cubes) for S in fams)})
    return rep


def _target_corpus(target: dict, ctx: _Context, m: int):
    if "functions" in target:
        return [tuple(GridFunction.from_json(g) if isinstance(g, dict) else g for g in tup)
                for tup in target["functions"]]
    return ctx.corpus(m)


def check_carleson(config, ctx: _Context | None = None) -> RatioReport:
    """Subtree weight sums of every stopping family against ``[w]_{A_inf} / eta``."""
    target, ctx = _resolve(config, ctx)
    m = int(target.get("m", 2))
    threshold = float(target.get("threshold", 2.0))
    rep = RatioReport(target["id"], "carleson", constants={"threshold": threshold})
    corpus = _target_corpus(target, ctx, m)
    fams = [[stopping_family(fs, lat, threshold) for lat in ctx.lattices] for fs in corpus]
    for wid, w in ctx.weights(target):
        ainf = ctx.const("Ainf", w, wid)
        rep.constants.setdefault("Ainf", {})[wid] = ainf
        for t, per in enumerate(fams):
            worst, worst_rhs, eta_min = 0.0, 1.0, 1.0
            for S in per:
                if not S.cubes:
                    continue
                bound = ainf / S.eta
                vals = carleson_ratios(S, w.values)
                top = max(vals.values())
                if top / bound >= worst / worst_rhs:
                    worst, worst_rhs = top, bound
                eta_min = min(eta_min, S.eta)
            rep.rows.append({"trial": t, "weight": wid, "lhs": worst, "rhs": worst_rhs,
                             "ratio": _ratio(worst, worst_rhs), "eta": eta_min})
    return rep


def check_product_hypothesis(config, ctx: _Context | None = None) -> RatioReport:
    target, ctx = _resolve(config, ctx)
    X = _space(target["X"])
    Xs = [_space(s) for s in target["Xi"]]
    res = product_hypothesis_check(Xs, X, trials=ctx.cfg.count, n=ctx.cfg.n, L=ctx.cfg.L,
                                   seed=ctx.cfg.seed)
    rep = RatioReport(target["id"], "product-hypothesis",
                      constants={"growth": res["growth"], "holderExponents": res["holderExponents"]})
    for k, val in enumerate(res["scaling"]):
        rep.rows.append({"trial": k, "kind": "indicator", "lhs": val, "rhs": 1.0, "ratio": val})
    rep.rows.append({"trial": len(res["scaling"]), "kind": "corpus", "lhs": res["maxRatio"], "rhs": 1.0,
                     "ratio": res["maxRatio"]})
    if res["growth"]:
        rep.constants["failed"] = True
        rep.notes.append("ratio grows along shrinking indicators")
    return rep


# ---------------------------------------------------------------------------
# modular inequalities


def modular(phi: YoungFunction, values: np.ndarray, w: GridFunction, power: float = 1.0) -> float:
    """``int phi(|f|)^power w`` (finite sum over cells)."""
    with np.errstate(over="ignore"):
        vals = phi(np.abs(values)) ** power
    return float(np.sum(vals * w.values) * w.cell_volume)


def _smallest_constant(holds: Callable[[float], bool], hi: float = 1e8) -> float:
    """Smallest ``a >= 1`` (to 1e-9 relative) with ``holds(a)``; monotone in ``a``."""
    if holds(1.0):
        return 1.0
    if not holds(hi):
        return math.inf
    lo_l, hi_l = 0.0, math.log(hi)
    while hi_l - lo_l > 1e-9:
        mid = 0.5 * (lo_l + hi_l)
        if holds(math.exp(mid)):
            hi_l = mid
        else:
            lo_l = mid
    return math.exp(hi_l)


def _lemma_constant(lhs: Sequence[float], fvals: Sequence[Sequence[np.ndarray]], phi: YoungFunction,
                    w: GridFunction, inner: float) -> float:
    """Smallest ``a`` with ``lhs_t <= a (prod_i int phi^m(a inner |f_i|) w)^{1/m}`` for every ``t``."""
    m = len(fvals[0]) if fvals else 1

    def holds(a):
        for l_t, fs in zip(lhs, fvals):
            if l_t == 0:
                continue
            rhs = a * math.prod(modular(phi, a * inner * f, w, m) for f in fs) ** (1.0 / m)
            if not l_t <= rhs:
                return False
        return True

    return _smallest_constant(holds)


def _modular_rhs(phi, fs, w, m):
    return math.prod(modular(phi, f.values, w, m) for f in fs) ** (1.0 / m)


def _mr_constant(ctx, corpus, maxima, phi, w, wid, q, r) -> float:
    """Measured ``a_3`` for ``M_r`` with ``A_q`` weight ``w`` (``maxima``: ``M_r`` per tuple)."""
    aq = ctx.const("Ap", w, wid, q)
    lhs = [modular(phi, mv, w) for mv in maxima]
    return _lemma_constant(lhs, [[f.values for f in fs] for fs in corpus], phi, w, aq ** (1.0 / (q * r)))


def _maxima(ctx, corpus, r):
    return [multilinear_maximal(fs, r, ctx.lattices).values for fs in corpus]


def _modular_q_grid(phi: YoungFunction, r: float) -> list[float]:
    qs = [q for q in MODULAR_Q_GRID if 1 < q < phi.i_phi / r]
    if not qs:
        raise HypothesisError(f"no q in the grid lies in (1, i_phi / r) = (1, {phi.i_phi / r:g})")
    return qs


def check_modular(config, ctx: _Context | None = None) -> RatioReport:
    """Modular inequalities for ``T_sigma``, its commutators and the three lemmas."""
    target, ctx = _resolve(config, ctx)
    kind = target["target"]
    phi = _phi(target.get("phi", {"kind": "power", "p": 3.0}))
    m = int(target.get("m", 2))
    rep = RatioReport(target["id"], kind, constants={"phi": phi.to_json(), "model": CONSTANT_MODEL})
    if kind == "L-mod-max":
        corpus = _target_corpus(target, ctx, m)
        lat = DyadicLattice(ctx.cfg.n, ctx.cfg.L)
        for wid, w in ctx.weights(target):
            lhs = [modular(phi, weighted_dyadic_maximal(fs, w, 1.0, lat).values, w) for fs in corpus]
            a2 = _lemma_constant(lhs, [[f.values for f in fs] for fs in corpus], phi, w, 1.0)
            rep.constants.setdefault("a2prime", {})[wid] = a2
            rep.rows.append({"trial": 0, "weight": wid, "lhs": max(lhs, default=0.0), "rhs": 1.0, "ratio": a2})
        return rep
    _check_phi(phi)
    r = float(target.get("r", 1.0))
    if kind == "L-mod-Mr":
        if not r < phi.i_phi:
            raise HypothesisError(f"need r < i_phi = {phi.i_phi:g}")
        corpus = _target_corpus(target, ctx, m)
        qs = _modular_q_grid(phi, r)
        maxima = _maxima(ctx, corpus, r)
        for wid, w in ctx.weights(target):
            best, best_q = math.inf, None
            for q in qs:
                if not math.isfinite(ctx.const("Ap", w, wid, q)):
                    continue
                a3 = _mr_constant(ctx, corpus, maxima, phi, w, wid, q, r)
                if a3 < best:
                    best, best_q = a3, q
            rep.constants.setdefault("a3", {})[wid] = {"a3": best, "q": best_q}
            rep.rows.append({"trial": 0, "weight": wid, "lhs": best, "rhs": 1.0, "ratio": best})
        return rep
    alpha = phi.quasi_convex_alpha()
    C1 = phi.C1
    rep.constants.update({"alpha": alpha, "C1": C1})
    if kind == "L-mod-sparse":
        corpus = _target_corpus(target, ctx, m)
        lat = DyadicLattice(ctx.cfg.n, ctx.cfg.L)
        for wid, w in ctx.weights(target):
            factor = ctx.const("Ainf", w, wid) ** (1.0 + alpha * C1)
            for t, fs in enumerate(corpus):
                S = stopping_family(fs, lat, float(target.get("threshold", 2.0)))
                lhs = modular(phi, sparse_apply(S, fs).values, w)
                rhs = factor * modular(phi, multilinear_maximal(fs, 1.0, ctx.lattices).values, w)
                rep.rows.append({"trial": t, "weight": wid, "lhs": lhs, "rhs": rhs, "ratio": _ratio(lhs, rhs),
                                 "constant": factor})
        return rep
    sym = _symbol(target.get("symbol"), m)
    _check_symbol(sym, ctx.cfg.n)
    commutator = kind == "T1.6"
    if commutator and not r < phi.i_phi:
        raise HypothesisError(f"need r < i_phi = {phi.i_phi:g}")
    if not commutator and not 1 < phi.i_phi:
        raise HypothesisError("the modular bound needs i_phi > 1")
    if not commutator:
        r = 1.0
    qs = _modular_q_grid(phi, r)
    corpus = _target_corpus(target, ctx, sym.m)
    beta_corpus = corpus[: int(target.get("betaTrials", 20))]
    maxima = _maxima(ctx, beta_corpus, r)
    bvecs = ([[make_b(s, ctx.cfg.n, ctx.cfg.L) for s in vec] for vec in target.get("b", [])]
             if commutator else [None])
    outputs = {}
    for wid, w in ctx.weights(target):
        ainf = ctx.const("Ainf", w, wid)
        best = None
        for q in qs:
            aq = ctx.const("Ap", w, wid, q)
            if not math.isfinite(aq):
                continue
            beta = _mr_constant(ctx, beta_corpus, maxima, phi, w, wid, q, r)
            small = ainf ** (1.0 + alpha * C1)
            large = small * aq ** (sym.m * C1 / q)
            branch = "small" if beta * aq ** (1.0 / q) <= 2 else "large"
            c = small if branch == "small" else large
            if best is None or c < best["C"]:
                best = {"C": c, "q": q, "beta": beta, "Aq": aq, "branch": branch,
                        "smallBranch": small, "largeBranch": large}
        if best is None:
            raise HypothesisError(f"weight {wid} lies in no A_q with q in {qs}")
        best["Ainf"] = ainf
        rep.constants.setdefault("weights", {})[wid] = best
        for bvec in bvecs:
            if bvec is None:
                bid, bfac = "", 1.0
            else:
                bid = "+".join(name for name, _ in bvec)
                bnorm = max(BmoFunction(b, tuple(ctx.lattices)).norm for _, b in bvec)
                bfac = bnorm ** (1.0 + alpha * C1)
            for t, fs in enumerate(corpus):
                key = (t, bid)
                if key not in outputs:
                    outputs[key] = (apply(sym, fs) if bvec is None
                                    else commutator_apply(sym, [b for _, b in bvec], fs))
                lhs = modular(phi, outputs[key].values, w)
                rhs = best["C"] * bfac * _modular_rhs(phi, fs, w, sym.m)
                row = {"trial": t, "weight": wid, "lhs": lhs, "rhs": rhs, "ratio": _ratio(lhs, rhs)}
                if bvec is not None:
                    row["b"] = bid
                rep.rows.append(row)
    return rep


def weak_modular_sup(phi: YoungFunction, values: np.ndarray, w: GridFunction, m: int) -> float:
    """``sup_lambda phi(lambda) w({|g| > lambda})^m`` for a step function ``g``.

    Between consecutive achieved values the level set is constant and ``phi``
    increases, so the supremum is the limit ``lambda -> v^-`` at an achieved
    value ``v``: ``phi(v) w({|g| >= v})^m``.
    """
    a = np.abs(np.asarray(values, dtype=float))
    order = np.argsort(-a, kind="stable")
    v = a[order]
    mass = np.cumsum(w.values[order]) * w.cell_volume
    last = np.r_[v[1:] != v[:-1], True]
    v, mass = v[last], mass[last]
    pos = v > 0
    if not pos.any():
        return 0.0
    return float(np.max(phi(v[pos]) * mass[pos] ** m))


def _weak_sweep(phi, values, w, m) -> float:
    """Brute force over ``lambda`` just below and between the achieved values."""
    a = np.abs(np.asarray(values, dtype=float))
    v = np.unique(a[a > 0])
    if v.size == 0:
        return 0.0
    lams = np.concatenate([v * (1 - 1e-12), 0.5 * (v[1:] + v[:-1]), v])
    dist = np.array([np.sum(w.values[a > lam]) for lam in lams]) * w.cell_volume
    return float(np.max(phi(lams) * dist ** m))


def check_weak_endpoint(config, ctx: _Context | None = None) -> RatioReport:
    """Weak-type modular endpoint with ``i_phi = 1`` and ``w in A_1``."""
    target, ctx = _resolve(config, ctx)
    phi = _phi(target.get("phi", {"kind": "zygmund", "alpha": 1.0}))
    if abs(phi.i_phi - 1.0) > 1e-9:
        raise HypothesisError(f"endpoint needs i_phi = 1, got {phi.i_phi:g}")
    sym = _symbol(target.get("symbol"), int(target.get("m", 2)))
    _check_symbol(sym, ctx.cfg.n)
    rep = RatioReport(target["id"], "T1.5-endpoint", constants={"phi": phi.to_json()})
    corpus = _target_corpus(target, ctx, sym.m)
    outputs = [apply(sym, fs).values for fs in corpus]
    exact = True
    for wid, w in ctx.weights(target):
        a1 = ctx.const("A1", w, wid)
        if not math.isfinite(a1):
            raise HypothesisError(f"weight {wid} is not in A_1")
        rep.constants.setdefault("A1", {})[wid] = a1
        for t, (fs, out) in enumerate(zip(corpus, outputs)):
            lhs = weak_modular_sup(phi, out, w, sym.m)
            sweep = _weak_sweep(phi, out, w, sym.m)
            exact &= sweep <= lhs * (1 + 1e-9) + 1e-300 and sweep >= lhs * (1 - 1e-9)
            rhs = math.prod(modular(phi, f.values, w) for f in fs)
            rep.rows.append({"trial": t, "weight": wid, "lhs": lhs, "rhs": rhs, "ratio": _ratio(lhs, rhs),
                             "sweep": sweep})
    rep.constants["supExact"] = bool(exact)
    if not exact:
        rep.constants["failed"] = True
        rep.notes.append("supremum over lambda not attained on the value set")
    return rep


# ---------------------------------------------------------------------------
# suite


RUNNERS: dict[str, Callable[[dict, _Context], RatioReport]] = {
    "T1.1": check_weighted_bound,
    "T1.2": check_weighted_bound,
    "T1.3": check_weighted_bound,
    "T1.4": check_weighted_bound,
    "T1.5": check_modular,
    "T1.6": check_modular,
    "L-mod-max": check_modular,
    "L-mod-Mr": check_modular,
    "L-mod-sparse": check_modular,
    "T1.5-endpoint": check_weak_endpoint,
    "sparse-domination": check_sparse_domination,
    "carleson": check_carleson,
    "product-hypothesis": check_product_hypothesis,
}
FIXED_BUDGETS = {"carleson": 1.0}


def frozen_budgets() -> dict[str, float]:
    try:
        text = resources.files("sparselab").joinpath("fixtures", BUDGET_FIXTURE).read_text()
    except FileNotFoundError:
        return {}
    return json.loads(text)


def check_hypotheses(cfg: ExperimentConfig) -> None:
    """Reject configs whose norm targets violate their space hypotheses, before any run."""
    for target in cfg.targets:
        if target["target"] in ("T1.1", "T1.2", "T1.3", "T1.4"):
            X = _space(target["X"])
            sym_m = _symbol(target.get("symbol")).m
            Xs = [_space(s) for s in target.get("Xi", [target["X"]] * sym_m)]
            commutator = target["target"] in ("T1.2", "T1.4")
            lo = float(target.get("r", 1.0)) if commutator else 1.0
            _check_window(X, lo, f"{target['id']}: X")
            for i, Y in enumerate(Xs):
                _check_window(Y, lo, f"{target['id']}: X_{i + 1}")
        elif target["target"] in ("T1.5", "T1.6", "L-mod-Mr", "L-mod-sparse"):
            _check_phi(_phi(target.get("phi", {"kind": "power", "p": 3.0})))


def run_targets(cfg: ExperimentConfig, budgets: dict | None = None) -> list[RatioReport]:
    """Run every target (sorted by id); ``budgets`` overrides frozen and config budgets."""
    check_hypotheses(cfg)
    ctx = _Context(cfg)
    table = {**frozen_budgets(), **cfg.budgets, **(budgets or {})}
    reports = []
    for target in sorted(cfg.targets, key=lambda t: t["id"]):
        log.info("running %s (%s)", target["id"], target["target"])
        rep = RUNNERS[target["target"]](dict(target), ctx)
        rep.budget = table.get(target["id"], FIXED_BUDGETS.get(target["target"]))
        if rep.budget is None:
            rep.notes.append("no budget: only finiteness is checked")
        reports.append(rep)
    return reports


def write_reports(reports: Sequence[RatioReport], out: str | Path) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for rep in reports:
        (out / f"{_safe(rep.id)}.csv").write_text(rep.to_csv())
    summary = {
        "constantModel": CONSTANT_MODEL,
        "pass": all(r.passed for r in reports),
        "targets": [r.summary() for r in reports],
    }
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return summary


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_suite(config_path: str | Path, out: str | Path = "reports") -> int:
    """Run a config file, write ``<id>.csv`` per target and ``summary.json``; 0 on success."""
    cfg = ExperimentConfig.load(config_path)
    summary = write_reports(run_targets(cfg), out)
    return 0 if summary["pass"] else 1


def default_config(seed: int = 20240611, count: int = 100, L: int = 8) -> ExperimentConfig:
    """The acceptance suite: every target on the frozen corpus."""
    cm = {"builtinName": "coifman_meyer", "m": 2}
    product = {"builtinName": "product", "m": 2}
    def powers(*exps):
        return [{"kind": "constant"}] + [{"kind": "power", "a": a} for a in exps]

    # exponents above 1 leave A_2 but stay in A_4 (and A_{8/3} for a < 5/3)
    power_family = powers(0.25, 0.5, 0.9, 1.5, 2.0, -0.25, -0.5, -0.9)
    commutator_family = powers(0.25, 0.5, 1.5, -0.25, -0.5)
    test_weights = [{"kind": "constant"}] + [{"kind": "power", "a": a} for a in (0.25, 0.5, -0.25, -0.5)] + [
        {"kind": "step", "values": [1, 4]}, {"kind": "step", "values": [1, 10, 2, 5]}]
    a1_weights = [{"kind": "constant"}, {"kind": "power", "a": -0.25}, {"kind": "power", "a": -0.5}]
    L2, L4 = {"kind": "lebesgue", "p": 2}, {"kind": "lebesgue", "p": 4}
    bvecs = [[{"kind": "log"}, {"kind": "step", "values": [0, 1]}],
             [{"kind": "constant", "c": 1}, {"kind": "constant", "c": -2}]]
    cube = {"kind": "power", "p": 3.0}
    targets = [
        {"id": "sparse-domination", "target": "sparse-domination", "symbol": cm},
        {"id": "sparse-domination-product", "target": "sparse-domination", "symbol": product},
        {"id": "carleson", "target": "carleson", "weights": test_weights},
        {"id": "product-hypothesis", "target": "product-hypothesis", "X": L2, "Xi": [L4, L4]},
        {"id": "T1.1", "target": "T1.1", "symbol": cm, "X": L2, "Xi": [L4, L4], "weights": power_family},
        {"id": "T1.2", "target": "T1.2", "symbol": cm, "X": L2, "Xi": [L4, L4], "r": 1.5,
         "weights": commutator_family, "b": bvecs},
        {"id": "T1.3", "target": "T1.3", "symbol": cm, "X": {"kind": "weakLp", "p": 2, "pConvex": 0.5},
         "Xi": [L4, L4], "weights": power_family},
        {"id": "T1.4", "target": "T1.4", "symbol": cm, "X": {"kind": "weakLp", "p": 2, "pConvex": 0.5},
         "Xi": [L4, L4], "r": 1.5, "weights": commutator_family, "b": bvecs[:1]},
        {"id": "T1.5", "target": "T1.5", "symbol": cm, "phi": cube,
         "weights": [{"kind": "constant"}, {"kind": "power", "a": 0.25}, {"kind": "power", "a": -0.25}]},
        {"id": "T1.5-endpoint", "target": "T1.5-endpoint", "symbol": cm,
         "phi": {"kind": "zygmund", "alpha": 1.0}, "weights": a1_weights},
        {"id": "T1.6", "target": "T1.6", "symbol": cm, "phi": cube, "r": 1.25,
         "weights": [{"kind": "constant"}, {"kind": "power", "a": 0.25}], "b": bvecs[:1]},
        {"id": "L-mod-max", "target": "L-mod-max", "phi": {"kind": "power", "p": 2.0},
         "weights": [{"kind": "constant"}, {"kind": "power", "a": 0.5}, {"kind": "power", "a": -0.5}]},
        {"id": "L-mod-Mr", "target": "L-mod-Mr", "phi": cube, "r": 1.25,
         "weights": [{"kind": "constant"}, {"kind": "power", "a": 0.25}]},
        {"id": "L-mod-sparse", "target": "L-mod-sparse", "phi": cube, "weights": [{"kind": "constant"}]},
    ]
    return ExperimentConfig(1, L, seed, count, tuple(targets), {})


def calibrate(path: str | Path | None = None, margin: float = CALIBRATION_MARGIN,
              cfg: ExperimentConfig | None = None) -> dict[str, float]:
    """Run the default suite without budgets and freeze ``margin * maxRatio`` per target."""
    cfg = cfg or default_config()
    reports = run_targets(cfg, budgets={t["id"]: math.inf for t in cfg.targets})
    budgets = {}
    for rep in reports:
        if rep.target in FIXED_BUDGETS or not rep.well_posed:
            continue
        budgets[rep.id] = float(f"{margin * rep.max_ratio:.6g}")
    if path is None:
        path = Path(str(resources.files("sparselab").joinpath("fixtures", BUDGET_FIXTURE)))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(budgets, indent=2, sort_keys=True) + "\n")
    return budgets
