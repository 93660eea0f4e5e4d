"""Periodic discrete models of multilinear multipliers, pseudo-differential
operators, their commutators and a multilinear square function.

Transform convention: for a grid function on ``N`` cells of ``[0, 1)``,
``fhat(xi) = fft(f)[xi mod N] / N`` at the integer frequencies
``numpy.fft.fftfreq(N, 1/N)``, and ``f(x_j) = sum_xi fhat(xi) e^{2 pi i x_j xi}``
with ``x_j = j / N``.  The operators act in dimension one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .sample import GridFunction, check_same_grid

PDO_BUDGET = 2 ** 21  # max N**(m+1) evaluated by pdo_apply


class BudgetExceeded(RuntimeError):
    """The requested evaluation exceeds the dense-sum budget."""


@dataclass(frozen=True, eq=False)
class SymbolSpec:
    """A symbol ``sigma(x, xi_1, ..., xi_m)`` or multiplier ``m(xi_1, ..., xi_m)``.

    ``evaluator`` takes numpy arrays and broadcasts; for the multiplier kind
    it receives only the frequencies.  ``r, rho, delta`` are certified class
    parameters for built-ins (``None`` when unknown).
    """

    kind: str
    m: int
    evaluator: Callable
    r: float | None = None
    rho: float | None = None
    delta: float | None = None
    name: str | None = None
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("multiplier", "full"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("arity must be positive")

    def __call__(self, x, *xis):
        if self.kind == "multiplier":
            return self.evaluator(*xis) * np.ones_like(np.asarray(x, dtype=float))
        return self.evaluator(x, *xis)

    def multiplier_values(self, *xis):
        if self.kind != "multiplier":
            raise ValueError("symbol depends on x; use pdo_apply")
        return self.evaluator(*xis)

    @property
    def certified(self) -> bool:
        return None not in (self.r, self.rho, self.delta)

    def satisfies_decay_hypothesis(self, n: int = 1) -> bool:
        """Certified ``r < m n (rho - 1)``."""
        return self.certified and self.r < self.m * n * (self.rho - 1.0)

    # serialization ------------------------------------------------------
    def to_json(self) -> dict:
        out = {"kind": self.kind, "m": self.m}
        for key in ("r", "rho", "delta"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.name is not None:
            out["builtinName"] = self.name
        elif self.table is not None:
            out["values"] = np.asarray(self.table, dtype=float).tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SymbolSpec":
        m = int(obj.get("m", 2))
        if "builtinName" in obj:
            return builtin_symbol(obj["builtinName"], m)
        if "values" in obj:
            return tabulated_multiplier(np.asarray(obj["values"], dtype=float))
        raise ValueError("symbol JSON needs builtinName or values")


# ---------------------------------------------------------------------------
# built-in symbols


def _abs_sum(xis):
    return sum(np.abs(np.asarray(x, dtype=float)) for x in xis)


def _sq_sum(xis):
    return sum(np.asarray(x, dtype=float) ** 2 for x in xis)


def smooth_amplitude(x):
    return 1.0 + 0.5 * np.cos(2 * np.pi * np.asarray(x, dtype=float))


BUILTINS = ("product", "coifman_meyer", "separable", "growth")


def builtin_symbol(name: str, m: int = 2) -> SymbolSpec:
    """Built-in symbols with certified class parameters ``(r, rho, delta)``.

    ``product``        ``1`` (pointwise product), ``S^0_{1,0}``
    ``coifman_meyer``  ``(1 + sum |xi_i|^2)^{-1}``, ``S^{-2}_{1,0}``
    ``separable``      ``a(x) (1 + sum |xi_i|^2)^{-1}`` with ``a = 1 + cos(2 pi x)/2``
    ``growth``         ``(1 + sum |xi_i|)``, ``S^{1}_{1,0}``
    """
    if name == "product":
        return SymbolSpec("multiplier", m, lambda *xis: np.ones(np.broadcast(*xis).shape),
                          0.0, 1.0, 0.0, name)
    if name == "coifman_meyer":
        return SymbolSpec("multiplier", m, lambda *xis: 1.0 / (1.0 + _sq_sum(xis)), -2.0, 1.0, 0.0, name)
    if name == "separable":
        return SymbolSpec("full", m, lambda x, *xis: smooth_amplitude(x) / (1.0 + _sq_sum(xis)),
                          -2.0, 1.0, 0.0, name)
    if name == "growth":
        return SymbolSpec("multiplier", m, lambda *xis: 1.0 + _abs_sum(xis), 1.0, 1.0, 0.0, name)
    raise ValueError(f"unknown built-in symbol {name!r}; choose from {BUILTINS}")


def multiplier(fn: Callable, m: int) -> SymbolSpec:
    """Wrap an arbitrary x-independent multiplier (no certified class)."""
    return SymbolSpec("multiplier", m, fn)


def full_symbol(fn: Callable, m: int) -> SymbolSpec:
    return SymbolSpec("full", m, fn)


def tabulated_multiplier(values: np.ndarray) -> SymbolSpec:
    """Multiplier given on the frequency grid in ``fftfreq`` order, shape ``(N,)*m``."""
    values = np.asarray(values, dtype=float)
    N = values.shape[0]

    def fn(*xis):
        idx = tuple(np.asarray(np.rint(x), dtype=np.int64) % N for x in xis)
        return values[idx]

    return SymbolSpec("multiplier", values.ndim, fn, table=values)


# ---------------------------------------------------------------------------
# evaluation


def _prepare(fs) -> tuple[tuple[GridFunction, ...], int, np.ndarray, list[np.ndarray]]:
    fs = (fs,) if isinstance(fs, GridFunction) else tuple(fs)
    if not fs:
        raise ValueError("need at least one function")
    check_same_grid(*fs)
    if fs[0].n != 1:
        raise NotImplementedError("operators are implemented in dimension one")
    N = fs[0].values.size
    freqs = np.rint(np.fft.fftfreq(N, 1.0 / N)).astype(np.int64)
    hats = [np.fft.fft(f.values) / N for f in fs]
    return fs, N, freqs, hats


def _frequency_tuples(freqs: np.ndarray, m: int):
    grids = np.meshgrid(*([freqs] * m), indexing="ij")
    return grids


def _coefficient_product(hats: list[np.ndarray]) -> np.ndarray:
    out = hats[0]
    for h in hats[1:]:
        out = np.multiply.outer(out, h)
    return out


def _finish(fs, values: np.ndarray) -> GridFunction:
    real_inputs = not any(f.is_complex for f in fs)
    scale = 1.0 + float(np.max(np.abs(values)))
    if real_inputs and float(np.max(np.abs(values.imag))) <= 1e-12 * scale:
        values = values.real
    return GridFunction(fs[0].n, fs[0].L, values)


def multiplier_apply(symbol: SymbolSpec, fs) -> GridFunction:
    """``sum_xi m(xi) prod fhat_i(xi_i) e^{2 pi i x (xi_1 + ... + xi_m)}`` on the grid."""
    fs, N, freqs, hats = _prepare(fs)
    if len(fs) != symbol.m:
        raise ValueError(f"symbol has arity {symbol.m}, got {len(fs)} functions")
    xis = _frequency_tuples(freqs, symbol.m)
    weights = symbol.multiplier_values(*xis) * _coefficient_product(hats)
    total = np.mod(sum(xis), N).ravel()
    flat = weights.ravel()
    coef = np.bincount(total, flat.real, minlength=N) + 1j * np.bincount(total, flat.imag, minlength=N)
    return _finish(fs, np.fft.ifft(coef) * N)


def pdo_apply(symbol: SymbolSpec, fs, chunk: int = 16) -> GridFunction:
    """Dense per-point evaluation of ``T_sigma`` (cost ``N**(m+1)``)."""
    fs, N, freqs, hats = _prepare(fs)
    m = symbol.m
    if len(fs) != m:
        raise ValueError(f"symbol has arity {m}, got {len(fs)} functions")
    if N ** (m + 1) > PDO_BUDGET:
        raise BudgetExceeded(f"N={N}, m={m} needs {N ** (m + 1)} evaluations > {PDO_BUDGET}")
    xis = _frequency_tuples(freqs, m)
    coefs = _coefficient_product(hats).ravel()
    total = sum(xis).ravel()
    flat_xis = [x.ravel() for x in xis]
    xs = np.arange(N) / N
    out = np.empty(N, dtype=complex)
    for start in range(0, N, chunk):
        xc = xs[start:start + chunk, None]
        sig = symbol(xc, *[x[None, :] for x in flat_xis])
        phase = np.exp(2j * np.pi * ((xc * N).round().astype(np.int64) * total[None, :] % N) / N)
        out[start:start + chunk] = np.sum(sig * coefs[None, :] * phase, axis=1)
    return _finish(fs, out)


def apply(symbol: SymbolSpec, fs) -> GridFunction:
    """Route to ``multiplier_apply`` or ``pdo_apply`` by symbol kind."""
    if symbol.kind == "multiplier":
        return multiplier_apply(symbol, fs)
    return pdo_apply(symbol, fs)


def commutator_apply(symbol: SymbolSpec, bs: Sequence, fs) -> GridFunction:
    """``sum_j (b_j T(f) - T(f_1, ..., b_j f_j, ..., f_m))``.

    Each ``b_j`` is shifted by its first value first; the commutator is
    unchanged by constants and this makes constant symbols vanish exactly.
    """
    fs = (fs,) if isinstance(fs, GridFunction) else tuple(fs)
    bs = tuple(b if isinstance(b, GridFunction) else b.b for b in bs)
    if len(bs) != len(fs):
        raise ValueError(f"{len(bs)} BMO functions for {len(fs)} slots")
    check_same_grid(*fs, *bs)
    base = apply(symbol, fs)
    total = np.zeros(fs[0].values.size, dtype=complex)
    for j, b in enumerate(bs):
        shifted = b.values - b.values[0]
        if not np.any(shifted):
            continue
        bf = list(fs)
        bf[j] = GridFunction(fs[j].n, fs[j].L, shifted * fs[j].values)
        total = total + shifted * base.values - apply(symbol, bf).values
    return _finish(fs, total)


# ---------------------------------------------------------------------------
# square function


def _odd_kernel(u, order):
    return u / (1.0 + np.abs(u)) ** (order + 1.0)


def _even_kernel(u, order):
    return 1.0 / (1.0 + np.abs(u)) ** order


@dataclass(frozen=True)
class SquareFunctionSpec:
    """Translation-invariant product kernel ``psi(x, y) = prod_i k_i(x - y_i)``.

    ``k_1`` is odd with ``|k_1(u)| <= (1+|u|)^{-(m+delta)}`` and the other
    factors are ``(1+|u|)^{-(m+delta)}``, so the size condition holds with
    ``A = 1`` and ``int psi(x, y) dy = 0``.
    """

    m: int = 2
    lam: float = 5.0
    delta: float = 1.0
    A: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.lam <= 2 * self.m:
            raise ValueError(f"lambda must exceed 2m = {2 * self.m}")

    @property
    def order(self) -> float:
        return self.m + self.delta

    def factor(self, i: int, u: np.ndarray) -> np.ndarray:
        return _odd_kernel(u, self.order) if i == 0 else _even_kernel(u, self.order)

    def psi(self, x, *ys) -> np.ndarray:
        out = 1.0
        for i, y in enumerate(ys):
            out = out * self.factor(i, np.asarray(x) - np.asarray(y))
        return out

    def size_bound_holds(self, samples: int = 41) -> bool:
        u = np.linspace(-20.0, 20.0, samples)
        grids = np.meshgrid(*([u] * self.m), indexing="ij")
        val = np.abs(self.psi(0.0, *[-g for g in grids]))
        bound = self.A / (1.0 + sum(np.abs(g) for g in grids)) ** (self.m + self.delta)
        return bool(np.all(val <= bound * (1 + 1e-12)))


def _wrapped_offsets(N: int) -> np.ndarray:
    """Cell differences ``j/N`` wrapped to ``[-1/2, 1/2)``."""
    u = np.arange(N) / N
    return np.where(u >= 0.5, u - 1.0, u)


def square_function(spec: SquareFunctionSpec, fs) -> GridFunction:
    """Discrete ``g*_lambda`` on the periodic grid.

    Scales ``t = 2^-k`` for ``k = 0..L`` carry the weight ``ln 2 / t`` (the
    ``dt / t^2`` measure on a dyadic grid in ``log t``); ``y`` runs over cell
    centers with weight ``1/N``; distances are periodic.
    """
    fs = (fs,) if isinstance(fs, GridFunction) else tuple(fs)
    check_same_grid(*fs)
    if len(fs) != spec.m:
        raise ValueError(f"kernel arity {spec.m}, got {len(fs)} functions")
    if fs[0].n != 1:
        raise NotImplementedError("square function is implemented in dimension one")
    N, L = fs[0].values.size, fs[0].L
    u = _wrapped_offsets(N)
    fhat = [np.fft.fft(f.values) for f in fs]
    total = np.zeros(N)
    for k in range(L + 1):
        t = 2.0 ** -k
        prod = np.ones(N, dtype=complex)
        for i, fh in enumerate(fhat):
            kern = spec.factor(i, u / t) / t
            if i == 0:
                kern[N // 2] = 0.0  # u = -1/2 has no mirror image; keep the kernel exactly odd
            prod = prod * np.fft.ifft(fh * np.fft.fft(kern)) / N
        dens = np.abs(prod) ** 2
        poisson = (t / (t + np.abs(u))) ** (spec.lam)
        smoothed = np.real(np.fft.ifft(np.fft.fft(dens) * np.fft.fft(poisson))) / N
        total = total + math.log(2.0) / t * np.maximum(smoothed, 0.0)
    return GridFunction(1, L, np.sqrt(total))


# ---------------------------------------------------------------------------
# symbol class spot checks


def _difference(fn, var: int, h):
    def out(*args):
        plus, minus = list(args), list(args)
        plus[var] = plus[var] + h
        minus[var] = minus[var] - h
        return (fn(*plus) - fn(*minus)) / (2 * h)

    return out


def _partial(fn, point: list[np.ndarray], orders: Sequence[int], steps: Sequence[np.ndarray]):
    """Nested central differences of ``fn`` at ``point``."""
    for var, order in enumerate(orders):
        for _ in range(order):
            fn = _difference(fn, var, steps[var])
    return fn(*point)


def symbol_spot_check(symbol: SymbolSpec, orders: int = 2, r: float | None = None,
                      rho: float | None = None, delta: float | None = None,
                      seed: int = 0) -> dict:
    """Fit the smallest constants ``C_{alpha, beta}`` in the class decay bound.

    For every multi-index with ``|alpha| + sum |beta_i| <= orders`` the
    derivative is estimated by central differences at sample points whose
    frequency size runs over ``[1, 1e4]``.  A multi-index is flagged when the
    normalised derivative still grows along the largest frequencies
    (log-slope above 0.05).
    """
    r = symbol.r if r is None else r
    rho = symbol.rho if rho is None else rho
    delta = symbol.delta if delta is None else delta
    if None in (r, rho, delta):
        raise ValueError("class parameters (r, rho, delta) are required")
    m = symbol.m
    rng = np.random.default_rng(seed)
    mags = np.geomspace(1.0, 1e4, 25)
    dirs = rng.standard_normal((16, m))
    dirs /= np.abs(dirs).sum(axis=1, keepdims=True)
    xs = rng.uniform(0.0, 1.0, 16)
    constants, violations = {}, []
    for total in range(orders + 1):
        for idx in itertools.product(range(total + 1), repeat=m + 1):
            if sum(idx) != total:
                continue
            a, betas = idx[0], idx[1:]
            curve = []
            for s in mags:
                xi = [s * dirs[:, i][:, None] for i in range(m)]
                x = xs[None, :]
                steps = [1e-3] + [1e-3 * (1.0 + s)] * m
                point = [x * np.ones_like(xi[0])] + [xi_i * np.ones_like(x) for xi_i in xi]
                d = np.abs(_partial(symbol, point, idx, steps)) if total else np.abs(symbol(*point))
                size = 1.0 + sum(np.abs(p) for p in point[1:])
                expo = r - rho * sum(betas) + delta * a
                curve.append(float(np.max(d / size ** expo)))
            curve = np.asarray(curve)
            key = f"a{a}" + "".join(f"b{b}" for b in betas)
            constants[key] = float(curve.max())
            tail, mid = curve[-1], curve[len(curve) // 2]
            scale = max(curve.max(), 1e-300)
            if tail > 1e-9 * scale and mid > 0:
                slope = math.log(tail / mid) / math.log(mags[-1] / mags[len(mags) // 2])
                if slope > 0.05 and tail > 1e-8:
                    violations.append(key)
    return {
        "r": r, "rho": rho, "delta": delta, "orders": orders,
        "constants": constants, "violations": violations, "fits": not violations,
    }
