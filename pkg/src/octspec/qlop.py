"""Quasi-linear operators on A_v^n, represented by real matrices on the flat layout."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cdnum import CdNumber, left_matrix, structure_tensor
from .errors import NoFullAdjointError, NotSelfAdjointError, ValidationError
from .hmodule import ModuleVector, inner, scalar_action_matrix

__all__ = [
    "QlOperator",
    "CdMatrixOperator",
    "load_operator",
    "real_adjoint",
    "has_full_adjoint",
    "component_project",
    "left_generator",
    "SelfAdjointReport",
    "check_selfadjoint_criteria",
    "is_normal",
    "is_graded_projection",
    "commutant_check",
    "op_norm",
    "frobenius_distance",
    "require_self_adjoint",
]

STRUCT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class QlOperator:
    """An R-linear operator on A_v^n, stored as a (2^v n) x (2^v n) real matrix."""

    matrix: np.ndarray
    v: int
    n: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        d = (1 << self.v) * self.n
        if m.shape != (d, d):
            raise ValueError(f"matrix must be {d}x{d} for v={self.v}, n={self.n}; got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    # constructors
    @classmethod
    def identity(cls, v: int, n: int) -> QlOperator:
        return cls(np.eye((1 << v) * n), v, n)

    @classmethod
    def zeros(cls, v: int, n: int) -> QlOperator:
        d = (1 << v) * n
        return cls(np.zeros((d, d)), v, n)

    @classmethod
    def real_diag(cls, values, v: int) -> QlOperator:
        """diag(values) with real entries acting entrywise."""
        values = np.asarray(values, dtype=float)
        return cls(np.kron(np.diag(values), np.eye(1 << v)), v, values.size)

    @classmethod
    def from_real_matrix(cls, m, v: int) -> QlOperator:
        m = np.asarray(m, dtype=float)
        return cls(np.kron(m, np.eye(1 << v)), v, m.shape[0])

    @classmethod
    def scalar(cls, a: CdNumber, n: int, side: str = "right") -> QlOperator:
        return cls(scalar_action_matrix(a, n, side), a.level, n)

    def _like(self, m: np.ndarray) -> QlOperator:
        return QlOperator(m, self.v, self.n)

    def _check(self, other: QlOperator) -> None:
        if (self.v, self.n) != (other.v, other.n):
            raise ValueError(f"operator shapes differ: {(self.v, self.n)} vs {(other.v, other.n)}")

    def __add__(self, other: QlOperator) -> QlOperator:
        self._check(other)
        return self._like(self.matrix + other.matrix)

    def __sub__(self, other: QlOperator) -> QlOperator:
        self._check(other)
        return self._like(self.matrix - other.matrix)

    def __neg__(self) -> QlOperator:
        return self._like(-self.matrix)

    def __mul__(self, r: float) -> QlOperator:
        return self._like(self.matrix * float(r))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, QlOperator):
            self._check(other)
            return self._like(self.matrix @ other.matrix)
        if isinstance(other, ModuleVector):
            return self.apply(other)
        return NotImplemented

    def apply(self, x: ModuleVector) -> ModuleVector:
        if x.level != self.v or x.n != self.n:
            raise ValueError("vector shape does not match operator")
        return ModuleVector.from_flat(self.matrix @ x.flat, self.v)

    def adjoint(self) -> QlOperator:
        return real_adjoint(self)

    def allclose(self, other: QlOperator, tol: float = STRUCT_TOL) -> bool:
        return frobenius_distance(self, other) <= tol

    # cached flags
    @cached_property
    def is_symmetric(self) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.T), initial=0.0) <= STRUCT_TOL)

    @cached_property
    def has_full_adjoint(self) -> bool:
        return has_full_adjoint(self)

    @cached_property
    def is_graded_projection(self) -> bool:
        return is_graded_projection(self)

    @cached_property
    def is_unitary(self) -> bool:
        d = self.dim
        return bool(np.linalg.norm(self.matrix.T @ self.matrix - np.eye(d)) <= STRUCT_TOL)

    @property
    def is_self_adjoint(self) -> bool:
        return self.is_symmetric and self.has_full_adjoint

    def to_json(self) -> dict:
        return {"kind": "real", "v": self.v, "n": self.n,
                "matrix": [[float(c) for c in row] for row in self.matrix]}


@dataclass(frozen=True, eq=False)
class CdMatrixOperator:
    """n x n matrix of cd-numbers acting by (A x)_k = sum_l a_kl x_l."""

    entries: np.ndarray  # shape (n, n, 2**v)

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 3 or e.shape[0] != e.shape[1] or e.shape[2] & (e.shape[2] - 1):
            raise ValueError(f"entries must have shape (n, n, 2**v), got {e.shape}")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def v(self) -> int:
        return self.entries.shape[2].bit_length() - 1

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, kl) -> CdNumber:
        return CdNumber(self.entries[kl])

    @classmethod
    def random(cls, n: int, v: int, rng: np.random.Generator, hermitian: bool = False):
        e = rng.standard_normal((n, n, 1 << v))
        if hermitian:
            conj_t = np.transpose(e, (1, 0, 2)).copy()
            conj_t[..., 1:] *= -1
            e = 0.5 * (e + conj_t)
        return cls(e)

    def conj_transpose(self) -> CdMatrixOperator:
        e = np.transpose(self.entries, (1, 0, 2)).copy()
        e[..., 1:] *= -1
        return CdMatrixOperator(e)

    def grade(self, j: int) -> CdMatrixOperator:
        """Entrywise coefficient extraction a_kl -> (a_kl)_j i_j."""
        e = np.zeros_like(self.entries)
        e[..., j] = self.entries[..., j]
        return CdMatrixOperator(e)

    def to_operator(self) -> QlOperator:
        n, v = self.n, self.v
        N = 1 << v
        m = np.zeros((n * N, n * N))
        for k in range(n):
            for l in range(n):
                m[k * N:(k + 1) * N, l * N:(l + 1) * N] = left_matrix(self.entries[k, l], v)
        return QlOperator(m, v, n)

    def to_json(self) -> dict:
        return {"kind": "cdmatrix", "v": self.v, "n": self.n,
                "entries": [[[float(c) for c in a] for a in row] for row in self.entries]}


def load_operator(obj: dict) -> QlOperator:
    kind = obj.get("kind")
    if kind == "real":
        return QlOperator(np.asarray(obj["matrix"], dtype=float), int(obj["v"]), int(obj["n"]))
    if kind == "cdmatrix":
        op = CdMatrixOperator(np.asarray(obj["entries"], dtype=float))
        if op.v != int(obj["v"]) or op.n != int(obj["n"]):
            raise ValidationError("declared v/n do not match entries")
        return op.to_operator()
    raise ValidationError(f"unknown operator kind {kind!r}")


def real_adjoint(T: QlOperator) -> QlOperator:
    """Transpose with respect to Re<.;.>, i.e. the flat Euclidean product."""
    return QlOperator(T.matrix.T, T.v, T.n)


def _sign_vector(N: int) -> np.ndarray:
    s = -np.ones(N)
    s[0] = 1.0
    return s


def has_full_adjoint(T: QlOperator, trials: int | None = None, tol: float = 1e-10,
                     seed: int = 0) -> bool:
    """Whether <T x; y> = <x; T^dagger y> holds as an A_v-valued identity.

    Both sides are R-bilinear in (x, y), so with ``trials=None`` the identity is
    checked on all pairs of real basis vectors, which decides it exactly up to
    ``tol``.  A positive ``trials`` samples random Gaussian pairs instead.
    """
    N, n, d = 1 << T.v, T.n, T.dim
    if trials is not None:
        rng = np.random.default_rng(seed)
        Td = real_adjoint(T)
        for _ in range(trials):
            x = ModuleVector.random(n, T.v, rng)
            y = ModuleVector.random(n, T.v, rng)
            lhs, rhs = inner(T.apply(x), y), inner(x, Td.apply(y))
            if not lhs.close_to(rhs, tol * max(1.0, x.norm() * y.norm())):
                return False
        return True
    C = structure_tensor(T.v)
    s = _sign_vector(N)
    M = T.matrix
    # lhs[p, k, a, l] = <T e_p; e_(k,a)>_l
    lhs = np.einsum("abl,kbp,a->pkal", C, M.reshape(n, N, d), s).reshape(d, d, N)
    # rhs[k, b, q, l] = <e_(k,b); T^dagger e_q>_l
    rhs = np.einsum("abl,qka,a->kbql", C, M.reshape(d, n, N), s).reshape(d, d, N)
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    return bool(np.max(np.abs(lhs - rhs), initial=0.0) <= tol * scale)


def left_generator(j: int, v: int, n: int) -> QlOperator:
    return QlOperator.scalar(CdNumber.basis(j, v), n, side="left")


def component_project(A: QlOperator, j: int) -> QlOperator:
    """Grade-j component of A built only from generator compositions.

    With L_k the entrywise left action of i_k and
    S = (2^v - 2)^{-1} (-A + sum_{k>=1} L_k A L_k^*):

        j = 0:  (A + S) / 2
        j >= 1: (-L_j A L_j - S) / 2
    """
    v, n = A.v, A.n
    N = 1 << v
    if v < 2:
        raise ValidationError("component projections need v >= 2")
    if not 0 <= j < N:
        raise IndexError(f"grade {j} out of range for v={v}")
    M = A.matrix
    gens = [left_generator(k, v, n).matrix for k in range(N)]
    acc = -M.copy()
    for k in range(1, N):
        # L_k^* = L_{conj(i_k)} = -L_k
        acc -= gens[k] @ M @ gens[k]
    S = acc / (N - 2)
    if j == 0:
        out = 0.5 * (M + S)
    else:
        out = 0.5 * (-(gens[j] @ M @ gens[j]) - S)
    return QlOperator(out, v, n)


def require_self_adjoint(T: QlOperator) -> None:
    if not T.is_symmetric:
        raise NotSelfAdjointError("operator is not symmetric")
    if not T.has_full_adjoint:
        raise NoFullAdjointError("operator has no full A_v-valued adjoint")


@dataclass(frozen=True)
class SelfAdjointReport:
    generator: int
    kernel_dims: tuple[int, int]      # dim ker(T^dagger + M), dim ker(T^dagger - M)
    range_full: tuple[bool, bool]     # R(T + M) = X, R(T - M) = X
    range_dense: tuple[bool, bool]    # R(T +/- M) has trivial orthogonal complement
    min_lower_bound: float            # min over x of |(T +/- M)x| / |x|
    self_adjoint: bool

    @property
    def statements(self) -> tuple[bool, bool, bool, bool]:
        return (self.self_adjoint,
                self.kernel_dims == (0, 0),
                all(self.range_full),
                all(self.range_dense))

    @property
    def agree(self) -> bool:
        return len(set(self.statements)) == 1

    @property
    def passed(self) -> bool:
        return all(self.statements)


def check_selfadjoint_criteria(T: QlOperator, M: int, tol: float = 1e-10) -> SelfAdjointReport:
    """Evaluate the four equivalent self-adjointness statements for T +/- M I.

    The scalar M = i_M acts from the right, which commutes with module maps.
    """
    if M < 1 or M >= (1 << T.v):
        raise ValidationError(f"generator index must be in [1, {(1 << T.v) - 1}]")
    require_self_adjoint(T)
    R = scalar_action_matrix(CdNumber.basis(M, T.v), T.n, side="right")
    A, Ad = T.matrix, T.matrix.T
    d = T.dim
    kern, full, dense, lower = [], [], [], []
    for s in (1.0, -1.0):
        sv_adj = np.linalg.svd(Ad + s * R, compute_uv=False)
        sv = np.linalg.svd(A + s * R, compute_uv=False)
        sv_t = np.linalg.svd((A + s * R).T, compute_uv=False)
        kern.append(int(np.sum(sv_adj <= tol * max(1.0, sv_adj[0]))))
        full.append(bool(np.sum(sv > tol * max(1.0, sv[0])) == d))
        dense.append(bool(np.sum(sv_t <= tol * max(1.0, sv_t[0])) == 0))
        lower.append(float(sv[-1]))
    return SelfAdjointReport(M, (kern[0], kern[1]), (full[0], full[1]),
                             (dense[0], dense[1]), min(lower),
                             bool(np.allclose(A, Ad, atol=tol)))


def frobenius_distance(A: QlOperator, B: QlOperator) -> float:
    return float(np.linalg.norm(A.matrix - B.matrix))


def op_norm(T, method: str = "svd", iters: int = 500, seed: int = 0) -> float:
    """Operator norm; ``method='power'`` runs power iteration on T^t T."""
    m = T.matrix if isinstance(T, QlOperator) else np.asarray(T, dtype=float)
    if method == "svd":
        return float(np.linalg.norm(m, 2)) if m.size else 0.0
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    g = m.T @ m
    x = np.random.default_rng(seed).standard_normal(m.shape[1])
    lam = 0.0
    for _ in range(iters):
        y = g @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        new = float(x @ y / (x @ x))
        x = y / ny
        if abs(new - lam) <= 1e-15 * max(new, 1.0):
            lam = new
            break
        lam = new
    return float(np.sqrt(max(lam, 0.0)))


def is_normal(T: QlOperator, tol: float = 1e-10) -> bool:
    if not T.has_full_adjoint:
        raise NoFullAdjointError("normality needs a full adjoint")
    m = T.matrix
    return bool(np.linalg.norm(m.T @ m - m @ m.T) <= tol * max(1.0, np.linalg.norm(m) ** 2))


def is_graded_projection(E: QlOperator, tol: float = STRUCT_TOL,
                         right_linear: bool = False) -> bool:
    """Idempotent, symmetric, with 2E - I orthogonal.

    With ``right_linear`` the projection must also commute with every right
    generator action, i.e. its range is an A_v-submodule.
    """
    m = E.matrix
    d = E.dim
    if np.linalg.norm(m @ m - m) > tol * max(1.0, np.sqrt(d)):
        return False
    if np.max(np.abs(m - m.T), initial=0.0) > tol:
        return False
    u = 2 * m - np.eye(d)
    if np.linalg.norm(u.T @ u - np.eye(d)) > 4 * tol * max(1.0, np.sqrt(d)):
        return False
    if right_linear:
        for j in range(1, 1 << E.v):
            r = scalar_action_matrix(CdNumber.basis(j, E.v), E.n, side="right")
            if np.linalg.norm(m @ r - r @ m) > tol * max(1.0, np.sqrt(d)):
                return False
    return True


def commutant_check(T: QlOperator, U: QlOperator, tol: float = 1e-10) -> bool:
    """U^dagger T U == T for a unitary U."""
    T._check(U)
    u = U.matrix
    if np.linalg.norm(u.T @ u - np.eye(U.dim)) > tol * max(1.0, np.sqrt(U.dim)):
        raise ValidationError("U is not unitary")
    return bool(np.linalg.norm(u.T @ T.matrix @ u - T.matrix) <= tol * max(1.0, np.linalg.norm(T.matrix)))
