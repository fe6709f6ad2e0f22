"""Step-function calculus f(T) for self-adjoint operators, plus polynomials.

For a self-adjoint T with graded resolution E_1 <= ... <= E_m at breakpoints
b_1 < ... < b_m,

    f(T) = sum_k dE_k L_{f(b_k)} dE_k,      dE_k = E_k - E_{k-1},

where L_c is left multiplication by c on every entry.  For real f this is the
usual sum f(b_k) dE_k.  Polynomials keep their bracketing explicit, since
octonion products are not associative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cdnum import CdNumber, left_matrix
from .diagmodel import DiagSymbol, hat_add, hat_mul
from .errors import ValidationError
from .hmodule import ModuleVector, inner
from .jacobi import jacobi_eigh
from .qlop import QlOperator, require_self_adjoint
from .spectral import GradedResolution, is_positive, resolution_of_identity

__all__ = [
    "SNAP",
    "Cell",
    "StepFunction",
    "apply",
    "apply_matrix",
    "spectral_measure",
    "scalar_measure",
    "compose_check",
    "positive_sqrt",
    "sigma_normal_check",
    "Monomial",
    "Polynomial",
    "polynomial_apply",
    "polynomial_symbol",
    "GrowthReport",
    "growth_check",
    "builtin_function",
]

SNAP = 1e-9


@dataclass(frozen=True)
class Cell:
    """Half-open interval [lo, hi); endpoints within SNAP of x count as x."""

    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValidationError(f"empty cell [{self.lo}, {self.hi})")

    def contains(self, x: float) -> bool:
        if abs(x - self.hi) <= SNAP:
            return False
        if abs(x - self.lo) <= SNAP:
            return True
        return self.lo <= x < self.hi

    def overlaps(self, other: Cell) -> bool:
        return max(self.lo, other.lo) < min(self.hi, other.hi)

    def to_json(self) -> dict:
        return {"lo": _enc(self.lo), "hi": _enc(self.hi)}

    @classmethod
    def around(cls, x: float, width: float = 1e-6) -> Cell:
        return cls(x - width, x + width)


def _enc(x: float):
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return x


def _dec(x) -> float:
    if isinstance(x, str):
        return {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}[x]
    return float(x)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Finitely many disjoint cells with one cd-number per cell.

    ``default`` covers the complement; ``None`` there means the function is
    undefined off the cells, and evaluation there raises.
    """

    cells: tuple[Cell, ...]
    values: tuple[CdNumber, ...]
    default: CdNumber | None = None
    v: int = field(default=0)

    def __post_init__(self):
        if len(self.cells) != len(self.values):
            raise ValidationError("one value per cell")
        levels = {z.level for z in self.values}
        if self.default is not None:
            levels.add(self.default.level)
        if len(levels) > 1:
            raise ValidationError("mixed levels in step function values")
        if levels:
            object.__setattr__(self, "v", levels.pop())
        elif self.v == 0:
            raise ValidationError("empty step function needs an explicit level")
        cs = sorted(self.cells, key=lambda c: c.lo)
        for a, b in zip(cs, cs[1:]):
            if a.overlaps(b):
                raise ValidationError(f"cells overlap: {a} and {b}")

    @classmethod
    def constant(cls, c, v: int) -> StepFunction:
        z = c if isinstance(c, CdNumber) else CdNumber.real(float(c), v)
        return cls((), (), z, v)

    @classmethod
    def indicator(cls, cell: Cell, v: int) -> StepFunction:
        return cls((cell,), (CdNumber.real(1.0, v),), CdNumber.zero(v), v)

    @classmethod
    def tabulate(cls, func: Callable[[float], float | CdNumber], points, v: int,
                 default=None) -> StepFunction:
        """Step function agreeing with ``func`` at the given points (narrow cells)."""
        pts = sorted({float(p) for p in points})
        gaps = [b - a for a, b in zip(pts, pts[1:])]
        w = min([g / 4 for g in gaps] + [1e-6])
        vals = tuple(_as_cd(func(p), v) for p in pts)
        dflt = None if default is None else _as_cd(default, v)
        return cls(tuple(Cell(p - w, p + w) for p in pts), vals, dflt, v)

    def __call__(self, x: float) -> CdNumber:
        for c, z in zip(self.cells, self.values):
            if c.contains(x):
                return z
        if self.default is None:
            raise ValidationError(f"step function undefined at {x}")
        return self.default

    def is_real(self) -> bool:
        vals = list(self.values) + ([self.default] if self.default is not None else [])
        return all(z.is_real() for z in vals)

    def _refined(self, other: StepFunction) -> tuple[list[Cell], list[float]]:
        edges = sorted({e for f in (self, other) for c in f.cells for e in (c.lo, c.hi)
                        if math.isfinite(e)})
        bounds = [-math.inf] + edges + [math.inf]
        cells, mids = [], []
        for lo, hi in zip(bounds, bounds[1:]):
            if lo == hi:
                continue
            if math.isinf(lo) and math.isinf(hi):
                mid = 0.0
            elif math.isinf(lo):
                mid = hi - 1.0
            elif math.isinf(hi):
                mid = lo + 1.0
            else:
                mid = 0.5 * (lo + hi)
            cells.append(Cell(lo, hi))
            mids.append(mid)
        return cells, mids

    def _pointwise(self, other: StepFunction, op) -> StepFunction:
        if self.v != other.v:
            raise ValidationError("levels differ")
        cells, mids = self._refined(other)
        keep, vals = [], []
        for c, m in zip(cells, mids):
            try:
                vals.append(op(self(m), other(m)))
                keep.append(c)
            except ValidationError:
                pass
        return StepFunction(tuple(keep), tuple(vals), None, self.v)

    def __add__(self, other: StepFunction) -> StepFunction:
        return self._pointwise(other, lambda a, b: a + b)

    def __mul__(self, other: StepFunction) -> StepFunction:
        return self._pointwise(other, lambda a, b: a * b)

    def compose(self, g: StepFunction) -> StepFunction:
        """self o g; g must be real-valued."""
        if not g.is_real():
            raise ValidationError("inner function of a composition must be real-valued")
        vals = tuple(self(z.re) for z in g.values)
        dflt = None if g.default is None else self(g.default.re)
        return StepFunction(g.cells, vals, dflt, self.v)

    def to_json(self) -> dict:
        out = {"cells": [{**c.to_json(), "value": [float(x) for x in z.coeffs]}
                         for c, z in zip(self.cells, self.values)]}
        if self.default is not None:
            out["default"] = [float(x) for x in self.default.coeffs]
        else:
            out["v"] = self.v
        return out

    @classmethod
    def from_json(cls, obj: dict) -> StepFunction:
        cells, vals = [], []
        for c in obj.get("cells", []):
            cells.append(Cell(_dec(c["lo"]), _dec(c["hi"])))
            vals.append(CdNumber(c["value"]))
        dflt = CdNumber(obj["default"]) if obj.get("default") is not None else None
        v = int(obj.get("v", 0))
        return cls(tuple(cells), tuple(vals), dflt, v)


def _as_cd(z, v: int) -> CdNumber:
    if isinstance(z, CdNumber):
        if z.level != v:
            raise ValidationError("function value has the wrong level")
        return z
    if z is None:
        raise ValidationError("function undefined")
    z = float(z)
    if not math.isfinite(z):
        raise ValidationError(f"function value {z} is not finite")
    return CdNumber.real(z, v)


_BUILTINS: dict[str, Callable[[float], float]] = {
    "id": lambda x: x,
    "one": lambda x: 1.0,
    "square": lambda x: x * x,
    "cube": lambda x: x ** 3,
    "abs": abs,
    "sqrt": lambda x: math.sqrt(x) if x >= 0 else None,
    "exp": math.exp,
}


def builtin_function(name: str) -> Callable[[float], float]:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise ValidationError(f"unknown builtin function {name!r}; choose from {sorted(_BUILTINS)}")


def _value_at(f, b: float, v: int) -> CdNumber:
    if isinstance(f, StepFunction):
        if f.v != v:
            raise ValidationError("step function level does not match operator")
        return f(b)
    try:
        z = f(b)
    except (ValueError, ArithmeticError) as exc:
        raise ValidationError(f"function undefined at spectral point {b}: {exc}") from exc
    return _as_cd(z, v)


def _left_block(c: CdNumber, n: int) -> np.ndarray:
    return np.kron(np.eye(n), left_matrix(c.coeffs, c.level))


def apply(f, T: QlOperator, resolution: GradedResolution | None = None) -> QlOperator:
    """f(T) for self-adjoint T; f is a StepFunction or a real/cd-valued callable."""
    require_self_adjoint(T)
    R = resolution or resolution_of_identity(T)
    d = T.matrix.shape[0]
    out = np.zeros((d, d))
    for b, dE in zip(R.breakpoints, R.increments()):
        c = _value_at(f, float(b), T.v)
        if c.is_real():
            out += c.re * dE
        else:
            out += dE @ _left_block(c, T.n) @ dE
    return QlOperator(out, T.v, T.n)


def apply_matrix(f, M) -> np.ndarray:
    """Real f applied to a plain symmetric matrix by eigenvalue-wise evaluation."""
    w, V = jacobi_eigh(np.asarray(M, dtype=float))
    vals = []
    for x in w:
        z = f(float(x))
        z = z.re if isinstance(z, CdNumber) else z
        if z is None or not math.isfinite(z):
            raise ValidationError(f"function undefined at eigenvalue {x}")
        vals.append(z)
    return (V * np.array(vals)) @ V.T


def spectral_measure(T: QlOperator, cell: Cell) -> QlOperator:
    """E(V) = chi_V(T)."""
    return apply(StepFunction.indicator(cell, T.v), T)


def scalar_measure(T: QlOperator, x: ModuleVector, cell: Cell, h=None) -> CdNumber:
    """<E(V) h(T) x; x> summed over the breakpoints of T lying in V (h defaults to 1)."""
    require_self_adjoint(T)
    R = resolution_of_identity(T)
    total = CdNumber.zero(T.v)
    for b, dE in zip(R.breakpoints, R.increments()):
        if not cell.contains(float(b)):
            continue
        c = CdNumber.real(1.0, T.v) if h is None else _value_at(h, float(b), T.v)
        op = dE @ _left_block(c, T.n) @ dE
        total = total + inner(ModuleVector.from_flat(op @ x.flat, T.v), x)
    return total


def compose_check(f: StepFunction, g: StepFunction, T: QlOperator, tol: float = 1e-10) -> bool:
    """(f o g)(T) == f(g(T))."""
    R = resolution_of_identity(T)
    for b in R.breakpoints:
        if not g(float(b)).is_real():
            raise ValidationError("g must be real-valued on the spectrum")
    lhs = apply(f.compose(g), T, R)
    rhs = apply(f, apply(g, T, R))
    return bool(np.linalg.norm(lhs.matrix - rhs.matrix, 2) <= tol)


def positive_sqrt(T: QlOperator, tol: float = 1e-10) -> QlOperator:
    """The positive square root; tiny negative breakpoints from rounding clip to zero."""
    require_self_adjoint(T)
    if not is_positive(T, tol):
        raise ValidationError("operator has negative spectrum")
    return apply(lambda x: math.sqrt(max(x, 0.0)), T)


def sigma_normal_check(chain: Sequence[StepFunction], sup: StepFunction, T: QlOperator,
                       tol: float = 1e-10) -> int | None:
    """Index of the first f_k with f_k(T) = sup(T), after checking the chain increases.

    Returns None when the supremum is not reached within the chain.
    """
    R = resolution_of_identity(T)
    ops = [apply(f, T, R) for f in chain]
    for a, b in zip(ops, ops[1:]):
        diff = QlOperator(b.matrix - a.matrix, T.v, T.n)
        if not is_positive(diff, tol):
            raise ValidationError("chain is not increasing on the spectrum")
    target = apply(sup, T, R).matrix
    for k, op in enumerate(ops):
        if np.linalg.norm(op.matrix - target, 2) <= tol:
            return k
    return None


# ---------------------------------------------------------------- polynomials

@dataclass(frozen=True, eq=False)
class Monomial:
    """a_1 z^{n_1} a_2 z^{n_2} ... a_k z^{n_k} with an explicit bracketing.

    The 2k factors are merged 2k - 1 times; ``bracketing[s]`` is the position
    p of the adjacent pair (p, p + 1) merged at step s.  All zeros means left to
    right.
    """

    coeffs: tuple[CdNumber, ...]
    exponents: tuple[int, ...]
    bracketing: tuple[int, ...] | None = None

    def __post_init__(self):
        k = len(self.coeffs)
        if k == 0 or len(self.exponents) != k:
            raise ValidationError("monomial needs matching coefficient and exponent lists")
        if any(int(e) != e or e < 0 for e in self.exponents):
            raise ValidationError("exponents must be nonnegative integers")
        if len({c.level for c in self.coeffs}) != 1:
            raise ValidationError("coefficients of mixed level")
        q = self.bracketing
        if q is None:
            q = (0,) * (2 * k - 1)
        q = tuple(int(p) for p in q)
        if len(q) != 2 * k - 1:
            raise ValidationError(f"bracketing needs {2 * k - 1} entries, got {len(q)}")
        for s, p in enumerate(q):
            if not 0 <= p < 2 * k - 1 - s:
                raise ValidationError(f"bracketing step {s} merges invalid position {p}")
        object.__setattr__(self, "bracketing", q)

    @property
    def degree(self) -> int:
        return int(sum(self.exponents))

    @property
    def v(self) -> int:
        return self.coeffs[0].level

    def combine(self, coef_fn, power_fn, mul_fn):
        """Fold the factor list with the declared bracketing."""
        items = []
        for a, e in zip(self.coeffs, self.exponents):
            items.append(coef_fn(a))
            items.append(power_fn(int(e)))
        for p in self.bracketing:
            items[p:p + 2] = [mul_fn(items[p], items[p + 1])]
        return items[0]

    def to_json(self) -> dict:
        return {"coeffs": [[float(x) for x in a.coeffs] for a in self.coeffs],
                "exponents": list(self.exponents), "bracketing": list(self.bracketing)}

    @classmethod
    def from_json(cls, obj: dict) -> Monomial:
        q = obj.get("bracketing")
        return cls(tuple(CdNumber(c) for c in obj["coeffs"]),
                   tuple(int(e) for e in obj["exponents"]),
                   None if q is None else tuple(q))


@dataclass(frozen=True, eq=False)
class Polynomial:
    terms: tuple[Monomial, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("polynomial needs at least one term")
        if len({t.v for t in self.terms}) != 1:
            raise ValidationError("terms of mixed level")

    @property
    def v(self) -> int:
        return self.terms[0].v

    @property
    def degree(self) -> int:
        return max(t.degree for t in self.terms)

    def top(self) -> Polynomial:
        n = self.degree
        return Polynomial(tuple(t for t in self.terms if t.degree == n))

    @classmethod
    def power(cls, m: int, v: int, coef: CdNumber | None = None) -> Polynomial:
        a = coef or CdNumber.real(1.0, v)
        return cls((Monomial((a,), (m,)),))

    def __call__(self, z: CdNumber) -> CdNumber:
        v = self.v
        one = CdNumber.real(1.0, v)

        def zpow(m: int) -> CdNumber:
            out = one
            for _ in range(m):
                out = z * out
            return out

        total = CdNumber.zero(v)
        for t in self.terms:
            total = total + t.combine(lambda a: a, zpow, lambda x, y: x * y)
        return total

    def to_json(self) -> dict:
        return {"v": self.v, "terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, obj: dict) -> Polynomial:
        return cls(tuple(Monomial.from_json(t) for t in obj["terms"]))


def polynomial_apply(P: Polynomial, T: QlOperator) -> QlOperator:
    """P(T): coefficients act as left multiplications, powers as T^m, merged as declared."""
    if P.v != T.v:
        raise ValidationError("polynomial and operator levels differ")
    ident = QlOperator.identity(T.v, T.n)

    def tpow(m: int) -> QlOperator:
        out = ident
        for _ in range(m):
            out = T @ out
        return out

    def coef(a: CdNumber) -> QlOperator:
        return QlOperator(_left_block(a, T.n), T.v, T.n)

    out = None
    for t in P.terms:
        term = t.combine(coef, tpow, lambda x, y: x @ y)
        out = term if out is None else out + term
    return out


def polynomial_symbol(P: Polynomial, T: DiagSymbol) -> DiagSymbol:
    """Symbol of P applied to a diagonal operator, combined with *^ and +^."""
    if P.v != T.v:
        raise ValidationError("polynomial and symbol levels differ")
    one = DiagSymbol.constant(CdNumber.real(1.0, T.v))

    def spow(m: int) -> DiagSymbol:
        out = one
        for _ in range(m):
            out = hat_mul(T, out)
        return out

    out = None
    for t in P.terms:
        term = t.combine(DiagSymbol.constant, spow, hat_mul)
        out = term if out is None else hat_add(out, term)
    return out


@dataclass(frozen=True)
class GrowthReport:
    """Empirical constants c with c |z|^n <= |P(z)| on the sampled shell."""

    ok: bool
    c_top: float
    c_full: float
    radius: float
    samples: int

    def __bool__(self) -> bool:
        return self.ok


def growth_check(P: Polynomial, samples: int = 200, radius: float = 2.0, seed: int = 0,
                 c_min: float = 0.0) -> GrowthReport:
    """Sample |z| in (R, 10R] on random directions.

    ``c_top`` bounds the top-degree part, ``c_full`` the whole polynomial;
    the check passes when ``c_top > c_min``.
    """
    rng = np.random.default_rng(seed)
    n = P.degree
    top = P.top()
    v = P.v
    c_top = c_full = math.inf
    for _ in range(samples):
        d = rng.standard_normal(1 << v)
        d /= np.linalg.norm(d)
        r = radius * (1.0 + 9.0 * (1.0 - rng.random()))
        z = CdNumber(r * d)
        scale = r ** n
        c_top = min(c_top, top(z).norm() / scale)
        c_full = min(c_full, P(z).norm() / scale)
    return GrowthReport(bool(c_top > c_min), float(c_top), float(c_full), radius, samples)
