"""The finite-dimensional module A_v^n with its A_v-valued scalar product.

Vectors are stored flat, entry-major: entry k occupies slots
``[k * 2**v, (k + 1) * 2**v)``.  Every operator matrix in the package acts on
this layout.

The scalar product is ``<x; y> = sum_k conj(y_k) x_k``.  It is conjugate-linear
in ``y`` and makes left-multiplication operators (the natural module maps for
scalars acting on the right) adjointable over the quaternions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdnum import CdNumber, left_matrix, right_matrix, structure_tensor

__all__ = [
    "ModuleVector",
    "inner",
    "grade_project",
    "scalar_action",
    "scalar_action_matrix",
]


@dataclass(frozen=True, eq=False)
class ModuleVector:
    """An element of A_v^n; ``entries`` has shape (n, 2**v)."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[1] == 0 or e.shape[1] & (e.shape[1] - 1):
            raise ValueError(f"entries must have shape (n, 2**v), got {e.shape}")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def level(self) -> int:
        return self.entries.shape[1].bit_length() - 1

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.entries.reshape(-1)

    @classmethod
    def from_flat(cls, flat, v: int) -> ModuleVector:
        return cls(np.asarray(flat, dtype=float).reshape(-1, 1 << v))

    @classmethod
    def from_numbers(cls, numbers) -> ModuleVector:
        return cls(np.array([z.coeffs for z in numbers]))

    @classmethod
    def unit(cls, k: int, n: int, v: int, value: CdNumber | None = None) -> ModuleVector:
        e = np.zeros((n, 1 << v))
        e[k] = value.coeffs if value is not None else CdNumber.real(1.0, v).coeffs
        return cls(e)

    @classmethod
    def random(cls, n: int, v: int, rng: np.random.Generator) -> ModuleVector:
        return cls(rng.standard_normal((n, 1 << v)))

    def __getitem__(self, k: int) -> CdNumber:
        return CdNumber(self.entries[k])

    def __add__(self, other: ModuleVector) -> ModuleVector:
        _check_shapes(self, other)
        return ModuleVector(self.entries + other.entries)

    def __sub__(self, other: ModuleVector) -> ModuleVector:
        _check_shapes(self, other)
        return ModuleVector(self.entries - other.entries)

    def __mul__(self, r: float) -> ModuleVector:
        return ModuleVector(self.entries * float(r))

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))

    def to_json(self) -> dict:
        return {"v": self.level, "n": self.n,
                "entries": [[float(c) for c in row] for row in self.entries]}

    @classmethod
    def from_json(cls, obj: dict) -> ModuleVector:
        x = cls(np.asarray(obj["entries"], dtype=float))
        if x.level != int(obj["v"]) or x.n != int(obj["n"]):
            raise ValueError("declared v/n do not match entries")
        return x


def _check_shapes(x: ModuleVector, y: ModuleVector) -> None:
    if x.entries.shape != y.entries.shape:
        raise ValueError(f"shape mismatch: {x.entries.shape} vs {y.entries.shape}")


def inner(x: ModuleVector, y: ModuleVector) -> CdNumber:
    """<x; y> = sum_k conj(y_k) x_k."""
    _check_shapes(x, y)
    yc = y.entries.copy()
    yc[:, 1:] *= -1
    c = structure_tensor(x.level)
    return CdNumber(np.einsum("ka,kb,abl->l", yc, x.entries, c))


def grade_project(x: ModuleVector, j: int) -> ModuleVector:
    """Keep only the i_j component of every entry."""
    if not 0 <= j < x.entries.shape[1]:
        raise IndexError(f"grade {j} out of range for v={x.level}")
    e = np.zeros_like(x.entries)
    e[:, j] = x.entries[:, j]
    return ModuleVector(e)


def scalar_action_matrix(a: CdNumber, n: int, side: str = "right") -> np.ndarray:
    """Flat-layout matrix of x -> (a x_k)_k (``side='left'``) or (x_k a)_k."""
    if side == "left":
        block = left_matrix(a.coeffs, a.level)
    elif side == "right":
        block = right_matrix(a.coeffs, a.level)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return np.kron(np.eye(n), block)


def scalar_action(a: CdNumber, x: ModuleVector, side: str = "right") -> ModuleVector:
    if a.level != x.level:
        raise ValueError("level mismatch")
    block = scalar_action_matrix(a, 1, side)
    return ModuleVector(x.entries @ block.T)
