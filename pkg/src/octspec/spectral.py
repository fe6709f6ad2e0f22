"""Spectral resolutions of finite-dimensional self-adjoint and normal operators."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .cdnum import CdNumber
from .errors import ComputationError, GradingError, NoFullAdjointError, ValidationError
from .hmodule import ModuleVector, inner, scalar_action_matrix
from .jacobi import jacobi_eigh
from .qlop import QlOperator, is_graded_projection, is_normal, op_norm, require_self_adjoint

__all__ = [
    "GradedResolution",
    "Resolvents",
    "complexify",
    "imaginary_unit",
    "resolvents",
    "shifted_power_eigh",
    "resolution_of_identity",
    "riemann_partition",
    "riemann_reconstruct",
    "spectrum",
    "in_spectrum",
    "is_positive",
    "UniquenessReport",
    "resolution_uniqueness_check",
]

GAP = 1e-8


@dataclass(frozen=True, eq=False)
class GradedResolution:
    """Right-continuous step family b -> E(b) with jumps at ``breakpoints``.

    ``projections[k]`` is E(b) for b in [breakpoints[k], breakpoints[k+1]);
    E(b) = 0 below the first breakpoint and the last projection is I.
    """

    breakpoints: tuple[float, ...]
    projections: tuple[QlOperator, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        if len(b) != len(self.projections) or not b:
            raise ValueError("need one projection per breakpoint")
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "projections", tuple(self.projections))

    @property
    def v(self) -> int:
        return self.projections[0].v

    @property
    def n(self) -> int:
        return self.projections[0].n

    @property
    def ranks(self) -> list[int]:
        return [int(round(np.trace(E.matrix))) for E in self.projections]

    def at(self, b: float) -> np.ndarray:
        k = int(np.searchsorted(self.breakpoints, b, side="right")) - 1
        if k < 0:
            d = self.projections[0].dim
            return np.zeros((d, d))
        return self.projections[k].matrix

    def increments(self) -> list[np.ndarray]:
        prev = np.zeros_like(self.projections[0].matrix)
        out = []
        for E in self.projections:
            out.append(E.matrix - prev)
            prev = E.matrix
        return out

    def operator(self) -> QlOperator:
        """sum_k b_k (E_k - E_{k-1})."""
        m = sum(b * dE for b, dE in zip(self.breakpoints, self.increments()))
        return QlOperator(m, self.v, self.n)

    def check_invariants(self, tol: float = 1e-10) -> None:
        d = self.projections[0].dim
        for E in self.projections:
            if not is_graded_projection(E, tol):
                raise GradingError("resolution member is not a graded projection")
        for E1, E2 in zip(self.projections, self.projections[1:]):
            a, b = E1.matrix, E2.matrix
            if np.linalg.norm(a @ b - a) > tol * d or np.linalg.norm(b @ a - a) > tol * d:
                raise GradingError("resolution is not monotone")
        if np.linalg.norm(self.projections[-1].matrix - np.eye(d)) > tol * d:
            raise GradingError("top projection is not the identity")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["b", "rank"])
        for b, r in zip(self.breakpoints, self.ranks):
            w.writerow([repr(b), r])
        return buf.getvalue()

    def to_json(self, full: bool = False) -> dict:
        out = {"v": self.v, "n": self.n, "breakpoints": list(self.breakpoints),
               "ranks": self.ranks}
        if full:
            out["projections"] = [[[float(c) for c in row] for row in E.matrix]
                                  for E in self.projections]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> GradedResolution:
        if "projections" not in obj:
            raise ValidationError("resolution JSON lacks projection matrices")
        v, n = int(obj["v"]), int(obj["n"])
        return cls(tuple(obj["breakpoints"]),
                   tuple(QlOperator(np.asarray(m), v, n) for m in obj["projections"]))


def complexify(T: QlOperator, s: float = 1.0) -> np.ndarray:
    """Real matrix of T + s*i on Y = X + X i, with [[T, -sI], [sI, T]]."""
    d = T.dim
    eye = np.eye(d)
    return np.block([[T.matrix, -s * eye], [s * eye, T.matrix]])


def imaginary_unit(d: int) -> np.ndarray:
    z, eye = np.zeros((d, d)), np.eye(d)
    return np.block([[z, -eye], [eye, z]])


@dataclass(frozen=True, eq=False)
class Resolvents:
    T: QlOperator
    plus: np.ndarray
    minus: np.ndarray

    @property
    def unit(self) -> np.ndarray:
        return imaginary_unit(self.T.dim)

    def _tc(self) -> np.ndarray:
        m = self.T.matrix
        z = np.zeros_like(m)
        return np.block([[m, z], [z, m]])

    def identity_residuals(self) -> tuple[float, float]:
        """Frobenius residuals of 2 i B+ B- = B- - B+ and T B+ B- = (B+ + B-)/2."""
        bp, bm = self.plus, self.minus
        r2 = np.linalg.norm(2.0 * self.unit @ bp @ bm - (bm - bp))
        r3 = np.linalg.norm(self._tc() @ bp @ bm - 0.5 * (bp + bm))
        return float(r2), float(r3)

    def norms(self) -> tuple[float, float]:
        return op_norm(self.plus), op_norm(self.minus)

    def adjoint_residual(self) -> float:
        return float(np.linalg.norm(self.minus - self.plus.T))

    def normality_residual(self) -> float:
        bp = self.plus
        return float(np.linalg.norm(bp.T @ bp - bp @ bp.T))


def resolvents(T: QlOperator) -> Resolvents:
    """B+- = (T +- i I)^{-1} on the complexification."""
    require_self_adjoint(T)
    eye = np.eye(2 * T.dim)
    try:
        bp = np.linalg.solve(complexify(T, 1.0), eye)
        bm = np.linalg.solve(complexify(T, -1.0), eye)
    except np.linalg.LinAlgError as exc:
        raise ComputationError("T +- iI is not invertible; T is not self-adjoint") from exc
    return Resolvents(T, bp, bm)


def shifted_power_eigh(a, tol: float = 1e-13, max_iter: int = 200, seed: int = 0):
    """Eigenpairs of a symmetric matrix by shifted inverse power iteration.

    Each eigenvector is found by iterating x <- (A - mu I)^{-1} x with the
    Rayleigh quotient mu as the shift, restricted to the orthogonal complement of
    the vectors already found.  Independent of the Jacobi path.
    """
    a = 0.5 * (np.asarray(a, dtype=float) + np.asarray(a, dtype=float).T)
    d = a.shape[0]
    rng = np.random.default_rng(seed)
    scale = max(np.linalg.norm(a), 1.0)
    q = np.zeros((d, 0))
    vals = []
    eye = np.eye(d)
    while q.shape[1] < d:
        x = rng.standard_normal(d)
        for _ in range(2):
            x -= q @ (q.T @ x)
        x /= np.linalg.norm(x)
        mu = float(x @ a @ x)
        for _ in range(max_iter):
            if np.linalg.norm(a @ x - mu * x) <= tol * scale:
                break
            try:
                y = np.linalg.solve(a - mu * eye, x)
            except np.linalg.LinAlgError:
                # shift landed exactly on an eigenvalue
                y = np.linalg.solve(a - (mu + 1e3 * tol * scale) * eye, x)
            for _ in range(2):
                y -= q @ (q.T @ y)
            ny = np.linalg.norm(y)
            if not np.isfinite(ny) or ny == 0.0:
                break
            x = y / ny
            mu = float(x @ a @ x)
        for _ in range(2):
            x -= q @ (q.T @ x)
        x /= np.linalg.norm(x)
        q = np.column_stack([q, x])
        vals.append(float(x @ a @ x))
    vals = np.array(vals)
    order = np.argsort(vals, kind="stable")
    return vals[order], q[:, order]


def _cluster(w: np.ndarray, gap: float) -> list[tuple[int, int]]:
    """Index ranges [start, end) of eigenvalue clusters in ascending ``w``."""
    thresh = gap * max(float(np.max(np.abs(w), initial=0.0)), np.finfo(float).tiny)
    groups, start = [], 0
    for i in range(1, w.size):
        if w[i] - w[i - 1] > thresh:
            groups.append((start, i))
            start = i
    groups.append((start, w.size))
    return groups


def _default_structure(T: QlOperator) -> list[np.ndarray]:
    """Right generator actions, if T commutes with all of them (a module map)."""
    mats = [scalar_action_matrix(CdNumber.basis(j, T.v), T.n, "right")
            for j in range(1, 1 << T.v)]
    m = T.matrix
    tol = 1e-10 * max(1.0, np.linalg.norm(m))
    if all(np.linalg.norm(m @ r - r @ m) <= tol for r in mats):
        return mats
    return []


def resolution_of_identity(T: QlOperator, method: str = "jacobi", gap: float = GAP,
                           structure: list[np.ndarray] | None = None) -> GradedResolution:
    """Graded resolution of the identity of a self-adjoint T.

    Breakpoints are the distinct eigenvalues (clusters closer than ``gap``
    relative to the spectral radius are merged).  Every projection is checked to
    commute with the ``structure`` operators; by default these are the right
    generator actions whenever T itself commutes with them.
    """
    require_self_adjoint(T)
    if method == "jacobi":
        w, vec = jacobi_eigh(T.matrix)
    elif method == "power":
        w, vec = shifted_power_eigh(T.matrix)
    else:
        raise ValueError(f"unknown method {method!r}")
    if structure is None:
        structure = _default_structure(T)
    breakpoints, projections = [], []
    for start, end in _cluster(w, gap):
        breakpoints.append(float(np.mean(w[start:end])))
        basis = vec[:, :end]
        E = basis @ basis.T
        projections.append(QlOperator(0.5 * (E + E.T), T.v, T.n))
    for E in projections:
        for r in structure:
            if np.linalg.norm(E.matrix @ r - r @ E.matrix) > 1e-8:
                raise GradingError("eigenprojection does not commute with the module structure")
    res = GradedResolution(tuple(breakpoints), tuple(projections))
    res.check_invariants()
    return res


def riemann_partition(R: GradedResolution, mesh: float) -> np.ndarray:
    """Uniform partition of [b_1 - 1, b_m] with step ``mesh``; last point clamped to b_m."""
    if not mesh > 0:
        raise ValidationError("mesh must be positive")
    lo, hi = R.breakpoints[0] - 1.0, R.breakpoints[-1]
    k = int(math.ceil((hi - lo) / mesh))
    pts = lo + mesh * np.arange(k + 1)
    pts[-1] = hi
    return pts


def riemann_reconstruct(R: GradedResolution, x: ModuleVector, mesh: float | None = None,
                        points=None) -> ModuleVector:
    """Riemann sum sum_k (E(p_k) - E(p_{k-1})) p_k x over a partition p.

    Right endpoints are the tags.  Only cells containing a breakpoint
    contribute, so the sum is evaluated breakpoint by breakpoint in ascending
    order.
    """
    pts = riemann_partition(R, mesh) if points is None else np.sort(np.asarray(points, float))
    b = np.asarray(R.breakpoints)
    if pts[0] >= b[0] or pts[-1] < b[-1]:
        raise ValidationError("partition must start below the first and end at or above the last breakpoint")
    cell = np.searchsorted(pts, b, side="left")
    tags = pts[cell]
    out = np.zeros_like(x.flat)
    for t, dE in zip(tags, R.increments()):
        out = out + t * (dE @ x.flat)
    return ModuleVector.from_flat(out, x.level)


def in_spectrum(T: QlOperator, z: CdNumber, tol: float = 1e-8) -> bool:
    """Whether T - z I is singular, with z acting from the right."""
    m = T.matrix - scalar_action_matrix(z, T.n, "right")
    sv = np.linalg.svd(m, compute_uv=False)
    return bool(sv[-1] <= tol * max(1.0, sv[0]))


def spectrum(T: QlOperator, generator: QlOperator | None = None, func=None,
             tol: float = 1e-8) -> list[CdNumber]:
    """Spectrum of a normal operator with full adjoint.

    * self-adjoint T: the distinct real eigenvalues;
    * ``generator`` S and ``func`` f given (T = f(S)): the values f(lambda);
    * otherwise each conjugate pair a +- b i of eigenvalues of the real matrix
      gives the class {a + b u : u unit imaginary}, reported as a + b i_1.

    Every reported value is checked to make T - z I singular.
    """
    if not T.has_full_adjoint:
        raise NoFullAdjointError("spectrum needs a full adjoint")
    if generator is not None:
        if func is None:
            raise ValueError("func is required with generator")
        res = resolution_of_identity(generator)
        vals = []
        for b in res.breakpoints:
            z = func(b)
            vals.append(z if isinstance(z, CdNumber) else CdNumber.real(float(z), T.v))
    elif T.is_symmetric:
        res = resolution_of_identity(T)
        vals = [CdNumber.real(b, T.v) for b in res.breakpoints]
    else:
        if not is_normal(T):
            raise ValidationError("operator is not normal")
        ev = np.linalg.eigvals(T.matrix)
        pts = sorted({(float(e.real), float(abs(e.imag))) for e in ev})
        scale = max(1.0, float(np.max(np.abs(ev), initial=0.0)))
        classes: list[tuple[float, float]] = []
        for a, b in pts:
            if not classes or max(abs(a - classes[-1][0]), abs(b - classes[-1][1])) > 1e-7 * scale:
                classes.append((a, b))
        vals = []
        for a, b in classes:
            c = np.zeros(1 << T.v)
            c[0] = a
            if T.v >= 1:
                c[1] = b
            vals.append(CdNumber(c))
    out = []
    for z in vals:
        if not any(z.close_to(w, 1e-9) for w in out):
            out.append(z)
    for z in out:
        if not in_spectrum(T, z, tol):
            raise ComputationError(f"reported spectral value {z} does not make T - zI singular")
    return out


def quadratic_form_nonnegative(T: QlOperator, tol: float, trials: int = 64, seed: int = 0) -> bool:
    """Re<Tx;x> >= -tol |x|^2 for all x, decided by a shifted Cholesky factorization.

    Random probes are evaluated through the module scalar product as a
    consistency check; a probe violation overrides the factorization.
    """
    scale = max(1.0, op_norm(T))
    try:
        np.linalg.cholesky(T.matrix + tol * scale * np.eye(T.dim))
        ok = True
    except np.linalg.LinAlgError:
        ok = False
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = ModuleVector.random(T.n, T.v, rng)
        if inner(T.apply(x), x).re < -tol * scale * x.norm() ** 2:
            return False
    return ok


def is_positive(T: QlOperator, tol: float = 1e-10, trials: int = 64, seed: int = 0) -> bool:
    """Nonnegative spectrum, cross-checked against the quadratic form."""
    require_self_adjoint(T)
    w, _ = jacobi_eigh(T.matrix)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    by_spectrum = bool(w.size == 0 or w[0] >= -tol * scale)
    by_form = quadratic_form_nonnegative(T, tol, trials, seed)
    if by_spectrum != by_form:
        raise ComputationError(
            f"positivity criteria disagree (spectrum: {by_spectrum}, quadratic form: {by_form}); "
            f"min eigenvalue {w[0]:.3e}")
    return by_spectrum


@dataclass(frozen=True)
class UniquenessReport:
    ok: bool
    max_difference: float
    offending: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def resolution_uniqueness_check(R1: GradedResolution, R2: GradedResolution,
                                tol: float = 1e-8) -> UniquenessReport:
    """Compare two step families at every (merged) breakpoint."""
    if (R1.v, R1.n) != (R2.v, R2.n):
        return UniquenessReport(False, math.inf, None)
    pts = sorted(set(R1.breakpoints) | set(R2.breakpoints))
    scale = max(1.0, max(abs(p) for p in pts))
    merged: list[float] = []
    for p in pts:
        if merged and p - merged[-1] <= GAP * scale:
            merged[-1] = p
        else:
            merged.append(p)
    worst, where = 0.0, None
    for p in merged:
        diff = float(np.linalg.norm(R1.at(p) - R2.at(p)))
        if diff > worst:
            worst = diff
            if diff > tol:
                where = where if where is not None else p
    return UniquenessReport(worst <= tol, worst, where)
