"""Unbounded diagonal operators T e_n = t_n e_n on a separable A_v-module.

A symbol is an explicit head t_1..t_N followed by a finite sum of power terms

    t_n = sum_i c_i * n**alpha_i * xi_i(n),      n > N,

where each phase xi_i is a periodic sequence of cd-numbers.  This class is
closed under pointwise sums, products and conjugation, so the closed operations
+^ and *^ and adjoints stay symbolic.  Domain questions reduce to the tail
exponent of sum |x_n|^2 |t_n|^2, decided per residue class of the common phase
period, with numeric partial sums reported alongside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .cdnum import CdNumber, VMAX, kappa, structure_tensor
from .errors import ComputationError, ValidationError
from .hmodule import ModuleVector
from .qlop import QlOperator

__all__ = [
    "Phase",
    "PowerTerm",
    "DiagSymbol",
    "PowerVector",
    "DomainVerdict",
    "BoundingProjection",
    "BoundingSequence",
    "SpectrumDescription",
    "domain_contains",
    "hat_add",
    "hat_mul",
    "naive_add_domain",
    "naive_mul_domain",
    "bounding_sequence",
    "adjoint_symbol",
    "adjoint_laws_check",
    "quasi_commutation_check",
    "symbols_equal",
    "is_affiliated_normal",
    "affiliation_report",
    "spectrum_closure",
    "positive_sum_check",
    "example52_symbols",
    "example52_report",
    "CHECKPOINTS",
]

CHECKPOINTS = (10**3, 10**4, 10**5, 10**6)
_CHUNK = 1 << 17
_SCAN_CAP = 10**7


def _cd_mul_rows(a: np.ndarray, b: np.ndarray, v: int) -> np.ndarray:
    """Row-wise cd products a[k] * b[k]."""
    return np.einsum("ka,kb,abl->kl", a, b, structure_tensor(v))


def _conj_rows(a: np.ndarray) -> np.ndarray:
    out = -a
    out[..., 0] = a[..., 0]
    return out


# ---------------------------------------------------------------- phases

def _mix_alphabet(v: int) -> list[np.ndarray]:
    n = 1 << v
    if v < 2:
        raise ValidationError("the 'mix' phase rule needs v >= 2")
    out = []
    e = np.zeros(n); e[1] = 1.0
    out.append(e)
    e = np.zeros(n); e[2] = e[n - 1] = 1.0 / math.sqrt(2.0)
    out.append(e)
    e = np.zeros(n); e[0] = 0.5; e[3 if v >= 3 else 1] = 0.5; e[n // 2] = -0.5; e[n - 1] = 0.5
    out.append(e)
    e = np.zeros(n); e[n // 2 if v >= 3 else 3] = -1.0
    out.append(e)
    return out


def _parse_indices(spec: str, v: int) -> list[np.ndarray]:
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        sign = -1.0 if tok.startswith("-") else 1.0
        j = int(tok.lstrip("+-"))
        if not 0 <= j < (1 << v):
            raise ValidationError(f"generator {j} out of range for v={v}")
        e = np.zeros(1 << v)
        e[j] = sign
        out.append(e)
    return out


@dataclass(frozen=True, eq=False)
class Phase:
    """Periodic sequence xi(n) = values[(n - 1) % period], n >= 1.

    Stored with its minimal period so that equal sequences compare equal.
    Rule ids: ``one``, ``gen:<j>``, ``cycle:<j1>,<j2>,...`` (``-j`` for -i_j)
    and ``mix`` (a fixed period-4 alphabet of unit quaternions/octonions).
    """

    values: np.ndarray
    rule: str | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] == 0:
            raise ValueError("phase values must have shape (period, 2**v)")
        p = vals.shape[0]
        for q in range(1, p + 1):
            if p % q == 0 and np.array_equal(vals, np.tile(vals[:q], (p // q, 1))):
                vals = vals[:q].copy()
                break
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def period(self) -> int:
        return self.values.shape[0]

    @property
    def v(self) -> int:
        return self.values.shape[1].bit_length() - 1

    @classmethod
    def from_rule(cls, rule: str, v: int) -> Phase:
        if rule == "one":
            vals = [CdNumber.real(1.0, v).coeffs]
        elif rule == "mix":
            vals = _mix_alphabet(v)
        elif rule.startswith("gen:"):
            vals = _parse_indices(rule[4:], v)
            if len(vals) != 1:
                raise ValidationError(f"gen rule takes one index: {rule!r}")
        elif rule.startswith("cycle:"):
            vals = _parse_indices(rule[6:], v)
        else:
            raise ValidationError(f"unknown phase rule {rule!r}")
        return cls(np.array(vals), rule)

    @classmethod
    def constant(cls, b: CdNumber) -> Phase:
        return cls(b.coeffs[None, :])

    def key(self) -> bytes:
        return self.values.tobytes() + bytes([self.period % 256])

    def expanded(self, period: int) -> np.ndarray:
        return np.tile(self.values, (period // self.period, 1))

    def at(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        return self.values[(ns - 1) % self.period]

    def __mul__(self, other: Phase) -> Phase:
        p = math.lcm(self.period, other.period)
        return Phase(_cd_mul_rows(self.expanded(p), other.expanded(p), self.v))

    def conj(self) -> Phase:
        return Phase(_conj_rows(self.values))

    def is_unit(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.values, axis=1) - 1.0) <= tol))

    def to_json(self):
        if self.rule is not None:
            return self.rule
        return {"values": [[float(c) for c in row] for row in self.values]}

    @classmethod
    def from_json(cls, obj, v: int) -> Phase:
        if isinstance(obj, str):
            return cls.from_rule(obj, v)
        vals = np.asarray(obj["values"], dtype=float)
        if vals.ndim != 2 or vals.shape[1] != (1 << v):
            raise ValidationError("phase values do not match level")
        return cls(vals)


@dataclass(frozen=True, eq=False)
class PowerTerm:
    coef: float
    alpha: float
    phase: Phase

    def to_json(self) -> dict:
        return {"c": self.coef, "alpha": self.alpha, "phase": self.phase.to_json()}


@dataclass(frozen=True)
class _Lead:
    alpha: float            # -inf when the residue class vanishes beyond the head
    vector: np.ndarray      # leading coefficient (a cd-number)
    rest: tuple[tuple[float, float], ...]  # (norm, alpha) of lower-order groups

    @property
    def K(self) -> float:
        return float(np.linalg.norm(self.vector))

    def upper(self, n: float) -> float:
        if self.alpha == -math.inf:
            return 0.0
        return self.K * n ** self.alpha + sum(c * n ** a for c, a in self.rest)

    def lower(self, n: float) -> float:
        if self.alpha == -math.inf:
            return 0.0
        return self.K * n ** self.alpha - sum(c * n ** a for c, a in self.rest)


def _normalize_terms(terms) -> tuple[PowerTerm, ...]:
    acc: dict[tuple[float, bytes], list] = {}
    for t in terms:
        if t.coef == 0.0:
            continue
        k = (float(t.alpha), t.phase.key())
        if k in acc:
            acc[k][0] += t.coef
        else:
            acc[k] = [t.coef, t.phase]
    out = [PowerTerm(c, a, ph) for (a, _), (c, ph) in acc.items() if c != 0.0]
    out.sort(key=lambda t: -t.alpha)
    return tuple(out)


# ---------------------------------------------------------------- symbols

@dataclass(frozen=True, eq=False)
class DiagSymbol:
    """Symbol of a diagonal operator; ``head[k]`` is t_{k+1}."""

    v: int
    head: np.ndarray = field(default=None)
    terms: tuple[PowerTerm, ...] = ()

    def __post_init__(self):
        if not 1 <= self.v <= VMAX:
            raise ValidationError(f"level v={self.v} out of range")
        h = np.zeros((0, 1 << self.v)) if self.head is None else np.array(self.head, dtype=float)
        if h.size == 0:
            h = np.zeros((0, 1 << self.v))
        if h.ndim != 2 or h.shape[1] != (1 << self.v):
            raise ValidationError(f"head must have shape (N, {1 << self.v})")
        h.flags.writeable = False
        object.__setattr__(self, "head", h)
        for t in self.terms:
            if t.phase.v != self.v:
                raise ValidationError("phase level does not match symbol level")
            if not (math.isfinite(t.coef) and math.isfinite(t.alpha)):
                raise ValidationError("power terms need finite coefficient and exponent")
        object.__setattr__(self, "terms", _normalize_terms(self.terms))

    # constructors
    @classmethod
    def power(cls, c: float, alpha: float, phase: Phase | str = "one", v: int = 3,
              head=None) -> DiagSymbol:
        if isinstance(phase, str):
            phase = Phase.from_rule(phase, v)
        return cls(phase.v, head, (PowerTerm(float(c), float(alpha), phase),))

    @classmethod
    def constant(cls, b: CdNumber) -> DiagSymbol:
        return cls(b.level, None, (PowerTerm(1.0, 0.0, Phase.constant(b)),))

    @classmethod
    def zero(cls, v: int) -> DiagSymbol:
        return cls(v)

    @classmethod
    def from_head(cls, values, v: int) -> DiagSymbol:
        """Finitely supported symbol (zero beyond the head)."""
        return cls(v, np.asarray(values, dtype=float).reshape(-1, 1 << v))

    @property
    def head_len(self) -> int:
        return self.head.shape[0]

    @property
    def period(self) -> int:
        return reduce(math.lcm, (t.phase.period for t in self.terms), 1)

    def tail_values(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        out = np.zeros((ns.size, 1 << self.v))
        nf = ns.astype(float)
        for t in self.terms:
            out += (t.coef * nf ** t.alpha)[:, None] * t.phase.at(ns)
        return out

    def values(self, ns) -> np.ndarray:
        """Coefficient rows of t_n for the given indices (n >= 1)."""
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        if np.any(ns < 1):
            raise ValueError("indices start at 1")
        out = self.tail_values(ns)
        in_head = ns <= self.head_len
        if in_head.any():
            out[in_head] = self.head[ns[in_head] - 1]
        return out

    def __getitem__(self, n: int) -> CdNumber:
        return CdNumber(self.values([n])[0])

    def moduli(self, ns) -> np.ndarray:
        return np.linalg.norm(self.values(ns), axis=1)

    def leads(self) -> list[_Lead]:
        """Leading asymptotics |t_n| ~ K_r n^alpha_r for each residue r = (n-1) mod period."""
        P = self.period
        out = []
        alphas = sorted({t.alpha for t in self.terms}, reverse=True)
        for r in range(P):
            groups = []
            for a in alphas:
                vec = sum(t.coef * t.phase.values[r % t.phase.period]
                          for t in self.terms if t.alpha == a)
                scale = sum(abs(t.coef) * np.linalg.norm(t.phase.values[r % t.phase.period])
                            for t in self.terms if t.alpha == a)
                if np.linalg.norm(vec) > 1e-13 * scale:
                    groups.append((a, np.asarray(vec, dtype=float)))
            if not groups:
                out.append(_Lead(-math.inf, np.zeros(1 << self.v), ()))
            else:
                a0, vec0 = groups[0]
                rest = tuple((float(np.linalg.norm(vec)), a) for a, vec in groups[1:])
                out.append(_Lead(a0, vec0, rest))
        return out

    @property
    def leading_exponent(self) -> float:
        return max((ld.alpha for ld in self.leads()), default=-math.inf)

    @property
    def is_bounded(self) -> bool:
        return self.leading_exponent <= 0

    def is_real(self, tol: float = 0.0) -> bool:
        if np.any(np.abs(self.head[:, 1:]) > tol):
            return False
        return all(np.all(np.abs(t.phase.values[:, 1:]) <= tol) for t in self.terms)

    def is_nonnegative(self, horizon: int = 1000) -> bool:
        if not self.is_real():
            return False
        if np.any(self.values(np.arange(1, horizon + 1))[:, 0] < 0):
            return False
        return all(ld.alpha == -math.inf or ld.vector[0] > 0 for ld in self.leads())

    def truncate(self, N: int) -> QlOperator:
        """The diagonal operator restricted to span{e_1..e_N} (left multiplication)."""
        from .qlop import CdMatrixOperator
        vals = self.values(np.arange(1, N + 1))
        e = np.zeros((N, N, 1 << self.v))
        e[np.arange(N), np.arange(N)] = vals
        return CdMatrixOperator(e).to_operator()

    def to_json(self) -> dict:
        tail = [t.to_json() for t in self.terms]
        return {"v": self.v, "head": [[float(c) for c in row] for row in self.head],
                "tail": tail[0] if len(tail) == 1 else tail}

    @classmethod
    def from_json(cls, obj: dict) -> DiagSymbol:
        head = obj.get("head") or []
        v = int(obj["v"]) if "v" in obj else (len(head[0]).bit_length() - 1 if head else None)
        if v is None:
            raise ValidationError("symbol JSON needs 'v' when the head is empty")
        tail = obj.get("tail", [])
        if isinstance(tail, dict):
            tail = [tail]
        terms = [PowerTerm(float(t["c"]), float(t["alpha"]), Phase.from_json(t.get("phase", "one"), v))
                 for t in tail]
        return cls(v, np.asarray(head, dtype=float).reshape(-1, 1 << v), tuple(terms))


@dataclass(frozen=True, eq=False)
class PowerVector:
    """x = sum_n x_n e_n with an explicit head and tail x_n = d n^beta zeta_n."""

    v: int
    d: float
    beta: float
    phase: Phase
    head: np.ndarray = field(default=None)

    def __post_init__(self):
        h = np.zeros((0, 1 << self.v)) if self.head is None else np.array(self.head, dtype=float)
        if h.size == 0:
            h = np.zeros((0, 1 << self.v))
        h.flags.writeable = False
        object.__setattr__(self, "head", h)
        if not self.phase.is_unit():
            raise ValidationError("vector phases must have unit modulus")
        if self.d != 0.0 and not 2.0 * self.beta < -1.0:
            raise ValidationError(f"not square-summable: 2*beta = {2 * self.beta} >= -1")

    @classmethod
    def power(cls, d: float, beta: float, phase: Phase | str = "one", v: int = 3, head=None):
        if isinstance(phase, str):
            phase = Phase.from_rule(phase, v)
        return cls(phase.v, float(d), float(beta), phase, head)

    @property
    def head_len(self) -> int:
        return self.head.shape[0]

    def values(self, ns) -> np.ndarray:
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        out = (self.d * ns.astype(float) ** self.beta)[:, None] * self.phase.at(ns)
        in_head = ns <= self.head_len
        if in_head.any():
            out[in_head] = self.head[ns[in_head] - 1]
        return out

    def moduli(self, ns) -> np.ndarray:
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        out = np.abs(self.d) * ns.astype(float) ** self.beta
        in_head = ns <= self.head_len
        if in_head.any():
            out[in_head] = np.linalg.norm(self.head[ns[in_head] - 1], axis=1)
        return out

    def truncate(self, N: int) -> ModuleVector:
        return ModuleVector(self.values(np.arange(1, N + 1)))

    def to_json(self) -> dict:
        return {"v": self.v, "head": [[float(c) for c in row] for row in self.head],
                "tail": {"d": self.d, "beta": self.beta, "phase": self.phase.to_json()}}

    @classmethod
    def from_json(cls, obj: dict) -> PowerVector:
        v = int(obj["v"])
        t = obj["tail"]
        head = np.asarray(obj.get("head") or [], dtype=float).reshape(-1, 1 << v)
        return cls(v, float(t["d"]), float(t["beta"]), Phase.from_json(t.get("phase", "one"), v), head)


# ---------------------------------------------------------------- domains

@dataclass(frozen=True)
class DomainVerdict:
    """Whether sum_n |x_n|^2 |t_n|^2 converges.

    ``exponent`` is the decisive tail exponent 2(alpha + beta) (``-inf`` when
    the tail vanishes); ``partial_sums`` pairs each checkpoint N with S_N.
    """

    member: bool
    exponent: float
    partial_sums: tuple[tuple[int, float], ...]
    borderline: bool = False
    limit_bracket: tuple[float, float] | None = None
    bracket_exact: bool = False
    crossing: int | None = None
    crossing_estimated: bool = False
    parts: tuple[tuple[str, DomainVerdict], ...] = ()

    def __bool__(self) -> bool:
        return self.member

    def to_json(self) -> dict:
        out = {"member": self.member, "exponent": _jnum(self.exponent),
               "borderline": self.borderline,
               "partial_sums": [[n, s] for n, s in self.partial_sums]}
        if self.limit_bracket is not None:
            out["limit_bracket"] = list(self.limit_bracket)
            out["bracket_exact"] = self.bracket_exact
        if self.crossing is not None:
            out["crossing_1e3"] = self.crossing
            out["crossing_estimated"] = self.crossing_estimated
        if self.parts:
            out["parts"] = {k: p.to_json() for k, p in self.parts}
        return out


def _jnum(x: float):
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "inf"
    return x


def _weights(T: DiagSymbol, x: PowerVector, lo: int, hi: int) -> np.ndarray:
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    return (T.moduli(ns) * x.moduli(ns)) ** 2


def _partial_sums(T: DiagSymbol, x: PowerVector, checkpoints) -> list[tuple[int, float]]:
    out, total, start = [], 0.0, 1
    for N in sorted(checkpoints):
        while start <= N:
            stop = min(N, start + _CHUNK - 1)
            total += float(np.sum(_weights(T, x, start, stop)))
            start = stop + 1
        out.append((N, total))
    return out


def _crossing(T: DiagSymbol, x: PowerVector, exponent: float, amp: float,
              bound: float = 1e3, cap: int = _SCAN_CAP) -> tuple[int | None, bool]:
    """First N with S_N > bound: searched numerically up to ``cap``, else estimated."""
    total, start = 0.0, 1
    while start <= cap:
        stop = min(cap, start + _CHUNK - 1)
        w = _weights(T, x, start, stop)
        cs = total + np.cumsum(w)
        hit = np.flatnonzero(cs > bound)
        if hit.size:
            return int(start + hit[0]), False
        total = float(cs[-1])
        start = stop + 1
    if amp <= 0:
        return None, True
    if exponent > -1:
        q = exponent + 1.0
        return int(math.ceil(((bound - total) * q / amp + cap ** q) ** (1.0 / q))), True
    return None, True  # harmonic growth: exp(bound/amp) overflows any index type


def domain_contains(T: DiagSymbol, x: PowerVector, checkpoints=CHECKPOINTS,
                    crossing_bound: float = 1e3) -> DomainVerdict:
    """Decide x in D(T) from the tail exponent; partial sums are evidence only."""
    if T.v != x.v:
        raise ValidationError("symbol and vector levels differ")
    leads = T.leads()
    if x.d == 0.0:
        exps = [-math.inf]
    else:
        exps = [2.0 * (ld.alpha + x.beta) for ld in leads]
    exponent = max(exps)
    member = exponent < -1.0
    borderline = exponent == -1.0
    sums = tuple(_partial_sums(T, x, checkpoints))
    bracket, exact = None, False
    crossing, estimated = None, False
    P = T.period
    if member and sums:
        N, S = sums[-1]
        N = max(N, T.head_len, x.head_len)
        lo = hi = 0.0
        for ld, p in zip(leads, exps):
            if p == -math.inf:
                continue
            amp = (ld.K * x.d) ** 2 / P
            q = p + 1.0
            hi += amp * N ** q / -q
            lo += amp * (N + P) ** q / -q
        exact = len({t.alpha for t in T.terms}) <= 1 and len({round(ld.K, 14) for ld in leads}) == 1
        bracket = (S + lo, S + hi)
    elif not member:
        amp = sum((ld.K * x.d) ** 2 / P for ld, p in zip(leads, exps) if p == exponent)
        cap = min(_SCAN_CAP, 10 * max(checkpoints))
        crossing, estimated = _crossing(T, x, exponent, amp, crossing_bound, cap)
    return DomainVerdict(member, exponent, sums, borderline, bracket, exact, crossing, estimated)


def _combine(parts: dict[str, DomainVerdict]) -> DomainVerdict:
    items = tuple(parts.items())
    vs = [p for _, p in items]
    Ns = [n for n, _ in vs[0].partial_sums]
    sums = tuple((n, sum(dict(p.partial_sums)[n] for p in vs)) for n in Ns)
    crossings = [p.crossing for p in vs if not p.member and p.crossing is not None]
    crossing = min(crossings) if crossings else None
    estimated = any(p.crossing_estimated for p in vs if p.crossing == crossing)
    return DomainVerdict(all(p.member for p in vs), max(p.exponent for p in vs), sums,
                         any(p.borderline for p in vs), crossing=crossing,
                         crossing_estimated=estimated, parts=items)


# ---------------------------------------------------------------- closed operations

def hat_add(T: DiagSymbol, B: DiagSymbol) -> DiagSymbol:
    """Symbol of the closure of T + B: the pointwise sum."""
    if T.v != B.v:
        raise ValidationError("levels differ")
    N = max(T.head_len, B.head_len)
    ns = np.arange(1, N + 1)
    head = T.values(ns) + B.values(ns) if N else None
    return DiagSymbol(T.v, head, T.terms + B.terms)


def hat_mul(T: DiagSymbol, B: DiagSymbol) -> DiagSymbol:
    """Symbol of the closure of T B: the pointwise product t_n b_n (T on the left)."""
    if T.v != B.v:
        raise ValidationError("levels differ")
    N = max(T.head_len, B.head_len)
    ns = np.arange(1, N + 1)
    head = _cd_mul_rows(T.values(ns), B.values(ns), T.v) if N else None
    terms = [PowerTerm(a.coef * b.coef, a.alpha + b.alpha, a.phase * b.phase)
             for a in T.terms for b in B.terms]
    return DiagSymbol(T.v, head, tuple(terms))


def scale_symbol(b: CdNumber, T: DiagSymbol, side: str = "left") -> DiagSymbol:
    c = DiagSymbol.constant(b)
    return hat_mul(c, T) if side == "left" else hat_mul(T, c)


def naive_add_domain(T: DiagSymbol, B: DiagSymbol, x: PowerVector, **kw) -> DomainVerdict:
    """x in D(T + B) = D(T) n D(B)."""
    return _combine({"T": domain_contains(T, x, **kw), "B": domain_contains(B, x, **kw)})


def naive_mul_domain(T: DiagSymbol, B: DiagSymbol, x: PowerVector, **kw) -> DomainVerdict:
    """x in D(T B) = {x in D(B) : B x in D(T)}; the second condition is x in D(T *^ B)."""
    return _combine({"B": domain_contains(B, x, **kw),
                     "TB": domain_contains(hat_mul(T, B), x, **kw)})


# ---------------------------------------------------------------- bounding projections

def _settle_index(ld: _Lead, m: float) -> tuple[int, bool]:
    """(L, included): beyond L, |t_n| <= m holds for every n of the class iff ``included``."""
    if ld.alpha == -math.inf:
        return 1, m >= 0
    limit = ld.K if ld.alpha == 0 else (0.0 if ld.alpha < 0 else math.inf)
    if limit > m:
        test, included = (lambda n: ld.lower(n) > m), False
    elif limit < m:
        test, included = (lambda n: ld.upper(n) <= m), True
    elif not ld.rest:
        return 1, True
    else:
        # limit == m: the sign of the lower-order correction decides; scan far out
        return _SCAN_CAP // 10, bool(ld.upper(_SCAN_CAP) <= m)
    n = 1
    while not test(n):
        n *= 2
        if n > _SCAN_CAP:
            raise ComputationError("symbol does not settle below the scan cap")
    return n, included


@dataclass(frozen=True, eq=False)
class BoundingProjection:
    """Projection onto {e_n : |t_n| <= m}: explicit indices up to ``settle``, then residues."""

    threshold: float
    settle: int
    indices: np.ndarray
    tail_residues: frozenset
    period: int
    norm: float

    @property
    def finite(self) -> bool:
        return not self.tail_residues

    @property
    def rank(self) -> float:
        return self.indices.size if self.finite else math.inf

    def contains(self, n: int) -> bool:
        if n <= self.settle:
            return bool(np.isin(n, self.indices))
        return (n - 1) % self.period in self.tail_residues

    def mask(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        out = np.isin(ns, self.indices)
        far = ns > self.settle
        if far.any():
            out[far] = np.isin((ns[far] - 1) % self.period, list(self.tail_residues))
        return out


@dataclass(frozen=True, eq=False)
class BoundingSequence:
    symbol: DiagSymbol
    projections: tuple[BoundingProjection, ...]

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(p.threshold for p in self.projections)

    def norms_bounded(self) -> bool:
        return all(p.norm <= p.threshold for p in self.projections)

    def increasing(self) -> bool:
        ps = self.projections
        for a, b in zip(ps, ps[1:]):
            if not a.tail_residues <= b.tail_residues:
                return False
            hi = max(a.settle, b.settle)
            ns = np.arange(1, hi + 1)
            if np.any(a.mask(ns) & ~b.mask(ns)):
                return False
        return True

    def core_residuals(self, x: PowerVector, horizon: int = 10**5) -> list[tuple[float, float, float]]:
        """(m, |x - F_m x|^2, |T(x - F_m x)|^2) summed over n <= horizon."""
        ns = np.arange(1, horizon + 1)
        xm = x.moduli(ns) ** 2
        tm = self.symbol.moduli(ns) ** 2
        out = []
        for p in self.projections:
            outside = ~p.mask(ns)
            out.append((p.threshold, float(np.sum(xm[outside])), float(np.sum((tm * xm)[outside]))))
        return out


def bounding_sequence(T: DiagSymbol, thresholds) -> BoundingSequence:
    """Bounding projections F_m onto {e_n : |t_n| <= m} for increasing thresholds.

    Supports are enumerated explicitly up to the index where every residue
    class has settled; a symbol that settles only past 10**7 raises
    ComputationError (e.g. n**0.25 with m = 1000).
    """
    th = [float(m) for m in thresholds]
    if any(b <= a for a, b in zip(th, th[1:])):
        raise ValidationError("thresholds must be strictly increasing")
    leads = T.leads()
    P = T.period
    projs = []
    for m in th:
        settle, residues = T.head_len + P, set()
        for r, ld in enumerate(leads):
            L, inc = _settle_index(ld, m)
            settle = max(settle, L + P)
            if inc:
                residues.add(r)
        ns = np.arange(1, settle + 1)
        mods = T.moduli(ns)
        keep = mods <= m
        idx = ns[keep]
        norm = float(np.max(mods[keep], initial=0.0))
        for r in residues:
            norm = max(norm, min(m, leads[r].upper(settle)))
        projs.append(BoundingProjection(m, settle, idx, frozenset(residues), P, norm))
    return BoundingSequence(T, tuple(projs))


# ---------------------------------------------------------------- adjoints, affiliation

def adjoint_symbol(T: DiagSymbol) -> DiagSymbol:
    """Pointwise conjugate."""
    head = _conj_rows(T.head) if T.head_len else None
    return DiagSymbol(T.v, head, tuple(PowerTerm(t.coef, t.alpha, t.phase.conj()) for t in T.terms))


def symbols_equal(S1: DiagSymbol, S2: DiagSymbol, tol: float = 1e-12) -> bool:
    """Equality for every n: explicit heads, then term groups per residue."""
    if S1.v != S2.v:
        return False
    N = max(S1.head_len, S2.head_len)
    if N and np.max(np.abs(S1.values(np.arange(1, N + 1)) - S2.values(np.arange(1, N + 1)))) > tol:
        return False
    P = math.lcm(S1.period, S2.period)
    alphas = {t.alpha for t in S1.terms} | {t.alpha for t in S2.terms}
    for a in alphas:
        for r in range(P):
            g1 = sum((t.coef * t.phase.values[r % t.phase.period] for t in S1.terms if t.alpha == a),
                     np.zeros(1 << S1.v))
            g2 = sum((t.coef * t.phase.values[r % t.phase.period] for t in S2.terms if t.alpha == a),
                     np.zeros(1 << S1.v))
            if np.max(np.abs(g1 - g2)) > tol:
                return False
    return True


def _pointwise_residual(S1: DiagSymbol, S2: DiagSymbol, horizon: int) -> float:
    ns = np.arange(1, horizon + 1)
    a, b = S1.values(ns), S2.values(ns)
    scale = np.maximum(1.0, np.linalg.norm(a, axis=1))[:, None]
    return float(np.max(np.abs(a - b) / scale))


def adjoint_laws_check(T: DiagSymbol, B: DiagSymbol, b: CdNumber, horizon: int = 1000,
                       tol: float = 1e-12) -> dict:
    """((bI)B +^ T)* = B*(b*I) +^ T*  and  (B *^ T)* = T* *^ B*, pointwise and symbolically."""
    bs = DiagSymbol.constant(b)
    bcs = DiagSymbol.constant(b.conj())
    lhs5 = adjoint_symbol(hat_add(hat_mul(bs, B), T))
    rhs5 = hat_add(hat_mul(adjoint_symbol(B), bcs), adjoint_symbol(T))
    lhs6 = adjoint_symbol(hat_mul(B, T))
    rhs6 = hat_mul(adjoint_symbol(T), adjoint_symbol(B))
    # pointwise from raw cd arithmetic, independent of the symbolic operations
    ns = np.arange(1, horizon + 1)
    tv, bv = T.values(ns), B.values(ns)
    bb = np.broadcast_to(b.coeffs, tv.shape)
    raw5l = _conj_rows(_cd_mul_rows(bb, bv, T.v) + tv)
    raw5r = _cd_mul_rows(_conj_rows(bv), _conj_rows(bb), T.v) + _conj_rows(tv)
    raw6l = _conj_rows(_cd_mul_rows(bv, tv, T.v))
    raw6r = _cd_mul_rows(_conj_rows(tv), _conj_rows(bv), T.v)
    scale5 = np.maximum(1.0, np.linalg.norm(raw5l, axis=1))
    scale6 = np.maximum(1.0, np.linalg.norm(raw6l, axis=1))
    r5 = float(np.max(np.linalg.norm(raw5l - raw5r, axis=1) / scale5))
    r6 = float(np.max(np.linalg.norm(raw6l - raw6r, axis=1) / scale6))
    report = {
        "law5_pointwise_residual": r5,
        "law6_pointwise_residual": r6,
        "law5_symbolic": symbols_equal(lhs5, rhs5, tol),
        "law6_symbolic": symbols_equal(lhs6, rhs6, tol),
        "law5_exponents": (lhs5.leading_exponent, rhs5.leading_exponent),
        "law6_exponents": (lhs6.leading_exponent, rhs6.leading_exponent),
        "symbol_vs_raw_residual": max(_pointwise_residual(lhs5, rhs5, horizon),
                                      _pointwise_residual(lhs6, rhs6, horizon)),
    }
    report["ok"] = bool(r5 <= tol and r6 <= tol and report["law5_symbolic"]
                        and report["law6_symbolic"]
                        and report["law5_exponents"][0] == report["law5_exponents"][1]
                        and report["law6_exponents"][0] == report["law6_exponents"][1])
    return report


def single_grade(S: DiagSymbol) -> int | None:
    """The grade j if every t_n is a real multiple of i_j."""
    cols = set(np.flatnonzero(np.any(S.head != 0, axis=0)))
    for t in S.terms:
        cols |= set(np.flatnonzero(np.any(t.phase.values != 0, axis=0)))
    if len(cols) == 1:
        return int(next(iter(cols)))
    return 0 if not cols else None


def quasi_commutation_check(B: DiagSymbol, T: DiagSymbol, horizon: int = 1000,
                            tol: float = 1e-12) -> bool:
    """B *^ T = (-1)^kappa(j,k) T *^ B for symbols of single grades j and k."""
    j, k = single_grade(B), single_grade(T)
    if j is None or k is None:
        raise ValidationError("symbols must each be supported on a single grade")
    sign = -1.0 if kappa(j, k) else 1.0
    lhs = hat_mul(B, T)
    rhs = hat_mul(T, B)
    rhs = DiagSymbol(rhs.v, sign * rhs.head if rhs.head_len else None,
                     tuple(PowerTerm(sign * t.coef, t.alpha, t.phase) for t in rhs.terms))
    return symbols_equal(lhs, rhs, tol) and _pointwise_residual(lhs, rhs, horizon) <= tol


def is_affiliated_normal(T: DiagSymbol, horizon: int = 1000, tol: float = 1e-12) -> bool:
    """T* *^ T == T *^ T*; holds for every diagonal symbol since a conj(a) = conj(a) a."""
    Ts = adjoint_symbol(T)
    a, b = hat_mul(Ts, T), hat_mul(T, Ts)
    return symbols_equal(a, b, tol) and _pointwise_residual(a, b, horizon) <= tol


def affiliation_report(T: DiagSymbol, thresholds=(1.0, 10.0, 100.0), horizon: int = 1000) -> dict:
    normal = is_affiliated_normal(T, horizon)
    seq = bounding_sequence(T, thresholds)
    Ts = adjoint_symbol(T)
    seq_adj = bounding_sequence(Ts, thresholds)
    ns = np.arange(1, horizon + 1)
    same_support = all(np.array_equal(p.mask(ns), q.mask(ns))
                       for p, q in zip(seq.projections, seq_adj.projections))
    # diagonal projections commute with diagonal T entrywise: F t_n = t_n F on each e_n
    return {
        "normal": normal,
        "bounding_commutes": True,
        "bounding_for_adjoint": same_support,
        "bounding_norms_ok": seq.norms_bounded(),
        "thresholds": list(seq.thresholds),
    }


# ---------------------------------------------------------------- spectrum

@dataclass(frozen=True, eq=False)
class SpectrumDescription:
    symbol: DiagSymbol
    head_values: np.ndarray
    limit_points: tuple[CdNumber, ...]
    unbounded: bool

    def contains(self, z: CdNumber, tol: float = 1e-9) -> bool:
        T = self.symbol
        if any(np.linalg.norm(z.coeffs - p.coeffs) <= tol for p in self.limit_points):
            return True
        m = z.norm() + tol
        settle = T.head_len + T.period
        for ld in T.leads():
            if ld.alpha > 0:
                L, _ = _settle_index(ld, m)
            elif ld.alpha == -math.inf:
                L = 1
            else:
                # past L the class stays closer than delta to its limit point,
                # so it cannot come within tol of z there
                lim = ld.vector if ld.alpha == 0 else np.zeros(1 << T.v)
                delta = np.linalg.norm(z.coeffs - lim) - tol
                if ld.alpha == 0:
                    dev = lambda n: sum(c * n ** a for c, a in ld.rest)
                else:
                    dev = ld.upper
                L = 1
                while dev(L) >= delta and L <= _SCAN_CAP:
                    L *= 2
                L = min(L, _SCAN_CAP)
            settle = max(settle, L + T.period)
        ns = np.arange(1, settle + 1)
        d = np.linalg.norm(T.values(ns) - z.coeffs, axis=1)
        return bool(np.min(d) <= tol)

    def to_json(self) -> dict:
        return {"head": [[float(c) for c in row] for row in self.head_values],
                "tail": [t.to_json() for t in self.symbol.terms],
                "limit_points": [p.to_json() for p in self.limit_points],
                "unbounded": self.unbounded}


def spectrum_closure(T: DiagSymbol) -> SpectrumDescription:
    """Closure of {t_n}: head values, the tail curve, its finite limit points, and
    an unbounded flag standing for the point at infinity."""
    lims = []
    unbounded = False
    for r, ld in enumerate(T.leads()):
        if ld.alpha > 0:
            unbounded = True
        elif ld.alpha == 0:
            lims.append(CdNumber(ld.vector))
        else:
            lims.append(CdNumber.zero(T.v))
    uniq: list[CdNumber] = []
    for p in lims:
        if not any(p.close_to(q, 1e-12) for q in uniq):
            uniq.append(p)
    return SpectrumDescription(T, T.head.copy(), tuple(uniq), unbounded)


# ---------------------------------------------------------------- positive operators

def random_power_vector(rng: np.random.Generator, v: int, beta_range=(-3.0, -0.55)) -> PowerVector:
    beta = float(rng.uniform(*beta_range))
    return PowerVector.power(float(rng.uniform(0.5, 2.0)), beta, "one", v)


def positive_sum_check(T: DiagSymbol, Q: DiagSymbol, samples=50, seed: int = 0) -> bool:
    """For positive T, Q: x in D(T +^ Q) implies x in D(T) and x in D(Q)."""
    for S, name in ((T, "T"), (Q, "Q")):
        if not S.is_nonnegative():
            raise ValidationError(f"{name} must be a real nonnegative symbol")
    if isinstance(samples, int):
        rng = np.random.default_rng(seed)
        samples = [random_power_vector(rng, T.v) for _ in range(samples)]
    S = hat_add(T, Q)
    for x in samples:
        cps = (1000,)
        if domain_contains(S, x, cps).member and not (
                domain_contains(T, x, cps).member and domain_contains(Q, x, cps).member):
            return False
    return True


# ---------------------------------------------------------------- the worked example

def example52_symbols(v: int = 3) -> dict:
    """Q: n xi_n, B: (n^{1/4} - n) xi_n, C: n^{-3/4} xi_n, and x = sum n^{-1} z_n e_n."""
    xi = Phase.from_rule("mix", v)
    Q = DiagSymbol(v, None, (PowerTerm(1.0, 1.0, xi),))
    B = DiagSymbol(v, None, (PowerTerm(1.0, 0.25, xi), PowerTerm(-1.0, 1.0, xi)))
    C = DiagSymbol(v, None, (PowerTerm(1.0, -0.75, xi),))
    # z_n cycles through 1, xi_n, xi_n*, -1, -xi_n, -xi_n*
    p = math.lcm(6, xi.period)
    xs = xi.expanded(p)
    one = np.zeros(1 << v); one[0] = 1.0
    choices = [lambda a: one, lambda a: a, _conj_rows,
               lambda a: -one, lambda a: -a, lambda a: -_conj_rows(a)]
    z = np.array([choices[k % 6](xs[k]) for k in range(p)])
    x = PowerVector(v, 1.0, -1.0, Phase(z))
    return {"Q": Q, "B": B, "C": C, "x": x}


EXAMPLE52_EXPECTED = {"D(Q)": False, "D(Q+^B)": True, "D(C*^Q)": True, "D(CQ)": False}


def example52_report(v: int = 3, horizon: int = 10**6) -> dict:
    if horizon < 10**3:
        raise ValidationError("horizon must be at least 1000")
    s = example52_symbols(v)
    Q, B, C, x = s["Q"], s["B"], s["C"], s["x"]
    cps = tuple(c for c in CHECKPOINTS if c <= horizon)
    if horizon not in cps:
        cps = cps + (horizon,)
    QB = hat_add(Q, B)
    CQ = hat_mul(C, Q)
    verdicts = {
        "D(Q)": domain_contains(Q, x, cps),
        "D(Q+^B)": domain_contains(QB, x, cps),
        "D(C*^Q)": domain_contains(CQ, x, cps),
        "D(CQ)": naive_mul_domain(C, Q, x, checkpoints=cps),
    }
    extra = {
        "D(Q+B)": naive_add_domain(Q, B, x, checkpoints=cps),
        "D(QC)": naive_mul_domain(Q, C, x, checkpoints=cps),
        "D(Q*^C)": domain_contains(hat_mul(Q, C), x, cps),
    }
    membership = {k: bool(vd.member) for k, vd in verdicts.items()}
    matches = membership == EXAMPLE52_EXPECTED
    return {
        "v": v,
        "horizon": horizon,
        "symbols": {"Q": Q.to_json(), "B": B.to_json(), "C": C.to_json(),
                    "Q+^B": QB.to_json(), "C*^Q": CQ.to_json()},
        "vector": x.to_json(),
        "verdicts": verdicts,
        "extra": extra,
        "membership": membership,
        "expected": dict(EXAMPLE52_EXPECTED),
        "matches_expected": matches,
        "Q+B != Q+^B": membership["D(Q+^B)"] and not extra["D(Q+B)"].member,
        "CQ != C*^Q": membership["D(C*^Q)"] and not membership["D(CQ)"],
        "QC closed": extra["D(QC)"].member == extra["D(Q*^C)"].member,
    }
