"""Cayley-Dickson algebras A_v of dimension 2**v over the reals.

Generators i_0 = 1, i_1, ..., i_{2^v - 1}.  Multiplication follows the doubling
rule

    (a, b) * (c, d) = (a c - conj(d) b,  d a + b conj(c)),

with i_{2^(v-1)} = (0, 1).  Basis products are computed with integers only; the
coefficient-level arithmetic is ordinary double precision.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "VMAX",
    "CdNumber",
    "BasisProduct",
    "basis_mul",
    "kappa",
    "mul",
    "conjugate",
    "norm",
    "inverse",
    "real_part",
    "find_zero_divisor",
    "kappa_violations",
    "identity_residuals",
    "structure_tables",
    "structure_tensor",
    "left_matrix",
    "right_matrix",
]


def _vmax_from_env() -> int:
    raw = os.environ.get("OCTSPEC_VMAX")
    if raw is None:
        return 6
    v = int(raw)
    if v < 4:
        raise ValueError(f"OCTSPEC_VMAX must be >= 4, got {v}")
    return v


VMAX = _vmax_from_env()


class BasisProduct(NamedTuple):
    sign: int
    index: int


def _check_level(v: int) -> None:
    if not 0 <= v <= VMAX:
        raise ValueError(f"level v={v} outside [0, {VMAX}]")


@lru_cache(maxsize=None)
def _basis_mul(j: int, k: int, v: int) -> BasisProduct:
    if v == 0:
        return BasisProduct(1, 0)
    h = 1 << (v - 1)
    if j < h and k < h:
        return _basis_mul(j, k, v - 1)
    if j < h:
        # (i_j, 0)(0, i_k') = (0, i_k' i_j)
        s, i = _basis_mul(k - h, j, v - 1)
        return BasisProduct(s, i + h)
    if k < h:
        # (0, i_j')(i_k, 0) = (0, i_j' conj(i_k))
        s, i = _basis_mul(j - h, k, v - 1)
        return BasisProduct(s if k == 0 else -s, i + h)
    # (0, i_j')(0, i_k') = (-conj(i_k') i_j', 0)
    s, i = _basis_mul(k - h, j - h, v - 1)
    return BasisProduct(-s if k == h else s, i)


def basis_mul(j: int, k: int, v: int) -> BasisProduct:
    """Product i_j * i_k in A_v as ``(sign, index)``."""
    _check_level(v)
    n = 1 << v
    if not (0 <= j < n and 0 <= k < n):
        raise IndexError(f"generator index out of range for v={v}: ({j}, {k})")
    return _basis_mul(j, k, v)


def kappa(j: int, k: int) -> int:
    """Sign exponent of generator commutation: i_j i_k = (-1)**kappa i_k i_j."""
    return 0 if (j == 0 or k == 0 or j == k) else 1


@lru_cache(maxsize=None)
def structure_tables(v: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer (sign, index) tables of shape (2^v, 2^v), read-only."""
    _check_level(v)
    n = 1 << v
    sign = np.empty((n, n), dtype=np.int64)
    index = np.empty((n, n), dtype=np.int64)
    for j in range(n):
        for k in range(n):
            sign[j, k], index[j, k] = _basis_mul(j, k, v)
    sign.flags.writeable = False
    index.flags.writeable = False
    return sign, index


@lru_cache(maxsize=None)
def structure_tensor(v: int) -> np.ndarray:
    """C[j, k, l] = coefficient of i_l in i_j i_k."""
    sign, index = structure_tables(v)
    n = 1 << v
    c = np.zeros((n, n, n))
    jj, kk = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    c[jj, kk, index] = sign
    c.flags.writeable = False
    return c


def _mul_coeffs(a: np.ndarray, b: np.ndarray, v: int) -> np.ndarray:
    sign, index = structure_tables(v)
    w = sign * np.multiply.outer(a, b)
    return np.bincount(index.ravel(), weights=w.ravel(), minlength=1 << v)


def left_matrix(a: np.ndarray, v: int) -> np.ndarray:
    """Real matrix of x -> a x acting on coefficient vectors."""
    sign, index = structure_tables(v)
    n = 1 << v
    m = np.zeros((n, n))
    cols = np.broadcast_to(np.arange(n), (n, n))
    np.add.at(m, (index, cols), sign * np.asarray(a, dtype=float)[:, None])
    return m


def right_matrix(b: np.ndarray, v: int) -> np.ndarray:
    """Real matrix of x -> x b acting on coefficient vectors."""
    sign, index = structure_tables(v)
    n = 1 << v
    m = np.zeros((n, n))
    rows = np.broadcast_to(np.arange(n)[:, None], (n, n))
    np.add.at(m, (index, rows), sign * np.asarray(b, dtype=float)[None, :])
    return m


@dataclass(frozen=True, eq=False)
class CdNumber:
    """An element of A_v stored as its 2**v real coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0 or c.size & (c.size - 1):
            raise ValueError(f"coefficient count must be a power of two, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        _check_level(self.level)

    @property
    def level(self) -> int:
        return self.coeffs.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @classmethod
    def basis(cls, j: int, v: int, scale: float = 1.0) -> CdNumber:
        c = np.zeros(1 << v)
        c[j] = scale
        return cls(c)

    @classmethod
    def real(cls, x: float, v: int) -> CdNumber:
        return cls.basis(0, v, x)

    @classmethod
    def zero(cls, v: int) -> CdNumber:
        return cls(np.zeros(1 << v))

    def _coerce(self, other) -> CdNumber | None:
        if isinstance(other, CdNumber):
            if other.level != self.level:
                raise ValueError(f"level mismatch: {self.level} vs {other.level}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return CdNumber.real(float(other), self.level)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else CdNumber(self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else CdNumber(self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else CdNumber(o.coeffs - self.coeffs)

    def __neg__(self):
        return CdNumber(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, CdNumber):
            return mul(self, other)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return CdNumber(self.coeffs * float(other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return CdNumber(self.coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return CdNumber(self.coeffs / float(other))
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, CdNumber):
            return NotImplemented
        return self.level == other.level and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.level, self.coeffs.tobytes()))

    def __repr__(self):
        terms = [f"{c:+g}" + ("" if j == 0 else f"*i{j}")
                 for j, c in enumerate(self.coeffs) if c != 0]
        return f"CdNumber[v={self.level}]({' '.join(terms) or '0'})"

    def conj(self) -> CdNumber:
        return conjugate(self)

    def norm(self) -> float:
        return norm(self)

    def inverse(self) -> CdNumber:
        return inverse(self)

    @property
    def re(self) -> float:
        return float(self.coeffs[0])

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[1:]) <= tol))

    def close_to(self, other: CdNumber, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)

    def to_json(self) -> dict:
        return {"v": self.level, "c": [float(x) for x in self.coeffs]}

    @classmethod
    def from_json(cls, obj: dict) -> CdNumber:
        out = cls(np.asarray(obj["c"], dtype=float))
        if "v" in obj and int(obj["v"]) != out.level:
            raise ValueError(f"declared v={obj['v']} but {out.dim} coefficients given")
        return out


def mul(a: CdNumber, b: CdNumber) -> CdNumber:
    if a.level != b.level:
        raise ValueError(f"level mismatch: {a.level} vs {b.level}")
    return CdNumber(_mul_coeffs(a.coeffs, b.coeffs, a.level))


def conjugate(a: CdNumber) -> CdNumber:
    c = -a.coeffs
    c[0] = a.coeffs[0]
    return CdNumber(c)


def norm(a: CdNumber) -> float:
    return float(np.sqrt(np.dot(a.coeffs, a.coeffs)))


def real_part(a: CdNumber) -> float:
    return float(a.coeffs[0])


def inverse(a: CdNumber, tol: float = 1e-12) -> CdNumber:
    """Two-sided inverse conj(a)/|a|^2.

    For v >= 4 the candidate is only returned after a * candidate == 1 has been
    checked to ``tol``.
    """
    n2 = float(np.dot(a.coeffs, a.coeffs))
    if n2 == 0.0:
        raise ZeroDivisionError("inverse of zero")
    cand = conjugate(a) / n2
    if a.level >= 4:
        one = CdNumber.real(1.0, a.level)
        if not (mul(a, cand).close_to(one, tol) and mul(cand, a).close_to(one, tol)):
            raise ArithmeticError(f"element has no verified inverse at v={a.level}")
    return cand


def find_zero_divisor(v: int) -> tuple[CdNumber, CdNumber] | None:
    """Search i_j +/- i_k pairs for a, b with a b = 0 exactly.

    Candidates are scanned in a fixed lexicographic order, so the returned pair
    is deterministic.  Division algebras (v <= 3) are rejected up front.
    """
    if v <= 3:
        raise ValueError(f"A_{v} is a division algebra; zero divisors need v >= 4")
    _check_level(v)
    n = 1 << v
    cands = []
    for j, k in itertools.combinations(range(n), 2):
        for s in (1, -1):
            c = np.zeros(n, dtype=np.int64)
            c[j], c[k] = 1, s
            cands.append(c)
    b_mat = np.array(cands).T  # n x m
    sign, index = structure_tables(v)
    for a in cands:
        la = np.zeros((n, n), dtype=np.int64)
        cols = np.broadcast_to(np.arange(n), (n, n))
        np.add.at(la, (index, cols), sign * a[:, None])
        prod = la @ b_mat
        hits = np.flatnonzero(~prod.any(axis=0))
        if hits.size:
            return CdNumber(a.astype(float)), CdNumber(b_mat[:, hits[0]].astype(float))
    return None


def kappa_violations(v: int) -> list[tuple[int, int]]:
    """Generator pairs breaking i_j i_k = (-1)^kappa(j,k) i_k i_j (integer check)."""
    _check_level(v)
    sign, index = structure_tables(v)
    n = 1 << v
    bad = []
    for j in range(n):
        for k in range(n):
            want = -1 if kappa(j, k) else 1
            if index[j, k] != index[k, j] or sign[j, k] != want * sign[k, j]:
                bad.append((j, k))
    return bad


def _batch_mul(a: np.ndarray, b: np.ndarray, v: int) -> np.ndarray:
    return np.einsum("ka,kb,abl->kl", a, b, structure_tensor(v))


def identity_residuals(v: int, trials: int = 1000, seed: int = 0) -> dict[str, float]:
    """Max residuals of standard identities over random triples (a, b, c).

    Associativity is only expected for v <= 2; alternativity, flexibility,
    the Moufang law and trace-associativity Re((ab)c) = Re(a(bc)) for v <= 3.
    Norm multiplicativity fails from v = 4 on.
    """
    _check_level(v)
    rng = np.random.default_rng(seed)
    n = 1 << v
    a, b, c = (rng.uniform(-1.0, 1.0, (trials, n)) for _ in range(3))

    def m(x, y):
        return _batch_mul(x, y, v)

    def worst(x, y):
        return float(np.max(np.abs(x - y))) if trials else 0.0

    ab = m(a, b)
    bc = m(b, c)
    aa = m(a, a)
    bb = m(b, b)
    return {
        "associativity": worst(m(ab, c), m(a, bc)),
        "left_alternativity": worst(m(aa, b), m(a, m(a, b))),
        "right_alternativity": worst(m(ab, b), m(a, bb)),
        "flexibility": worst(m(ab, a), m(a, m(b, a))),
        "moufang": worst(m(m(a, b), m(c, a)), m(m(a, m(b, c)), a)),
        "trace_associativity": worst(m(ab, c)[:, 0], m(a, bc)[:, 0]),
        "norm_multiplicativity": worst(np.linalg.norm(ab, axis=1),
                                       np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)),
    }
