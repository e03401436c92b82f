"""Vector arithmetic, parameter records, and the per-step solver trace.

Everything here treats a point of the ambient space as a dense 1-D float64
array.  The ambient dimension is finite and fixed per experiment; tests
confirm that padding a problem with inactive coordinates does not change
any result.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

#: columns of the trace CSV, one row per solver step
TRACE_CSV_HEADER = "k,E_k,e_k,dist_to_min,selected_index,grad_coeff,grad_sup,stopped"


def as_point(x, dim: int | None = None) -> Vector:
    """Coerce to a finite 1-D float64 vector, optionally checking its length."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-D point, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("point has non-finite entries")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {a.shape[0]}")
    return a


def inner(a: Vector, b: Vector) -> float:
    """Euclidean inner product; raises on dimension mismatch."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def norm(a: Vector) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


@dataclass(frozen=True)
class SparseSupport:
    """Strictly increasing dictionary indices of a sparse representation."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError("support indices must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("support indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices) -> "SparseSupport":
        return cls(tuple(sorted({int(i) for i in indices})))

    @classmethod
    def from_coefficients(cls, coeffs: Vector, tol: float = 1e-10) -> "SparseSupport":
        """Indices whose coefficient magnitude exceeds tol (relative to the largest)."""
        c = np.abs(np.asarray(coeffs, dtype=np.float64))
        cut = tol * max(1.0, float(c.max(initial=0.0)))
        return cls(tuple(int(i) for i in np.flatnonzero(c > cut)))

    @property
    def size(self) -> int:
        return len(self.indices)

    def __contains__(self, j: int) -> bool:
        return int(j) in self.indices

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class SmoothnessParams:
    """Upper power bound on the Bregman gap.

    gap(x, x') <= alpha * ||x' - x||**exponent whenever x is in the level set
    and ||x' - x|| <= radius; grad_bound bounds the gradient norm over the
    level set.
    """

    alpha: float
    exponent: float
    radius: float
    grad_bound: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 1.0 < self.exponent <= 2.0:
            raise ValueError(f"smoothness exponent {self.exponent} outside (1, 2]")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.grad_bound > 0:
            raise ValueError("grad_bound must be positive")


@dataclass(frozen=True)
class ConvexityParams:
    """Lower power bound on the Bregman gap: gap >= beta * ||x' - x||**exponent."""

    beta: float
    exponent: float
    radius: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.exponent >= 2.0:
            raise ValueError(f"convexity exponent {self.exponent} below 2")
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass
class TraceStep:
    """One row of a greedy-solver run.

    ``grad_coeff`` and ``grad_sup`` are selection-time data, i.e. gradient
    coefficients at the previous iterate; the row for step 0 carries the
    gradient sup at the start point and no selection.
    """

    k: int
    x: Vector
    value: float
    error: float | None          # value - min value, when the minimizer is known
    dist: float | None           # distance to the known minimizer
    selected: int | None         # atom chosen at this step
    grad_coeff: float | None     # gradient coefficient of the chosen atom
    grad_sup: float              # sup of |gradient coefficients| at selection
    stopped: bool                # stopping rule fired at this iterate


def _csv_num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


class IterateTrace:
    """Ordered per-step records of a single greedy run."""

    def __init__(self, steps: Sequence[TraceStep]):
        self.steps = list(steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[TraceStep]:
        return iter(self.steps)

    def __getitem__(self, i) -> TraceStep:
        return self.steps[i]

    @property
    def support(self) -> list[int]:
        """Selected atom indices in selection order."""
        return [s.selected for s in self.steps if s.selected is not None]

    @property
    def final(self) -> TraceStep:
        return self.steps[-1]

    @property
    def has_errors(self) -> bool:
        return all(s.error is not None for s in self.steps)

    def values(self) -> Vector:
        return np.array([s.value for s in self.steps], dtype=np.float64)

    def errors(self) -> Vector:
        if not self.has_errors:
            raise ValueError("trace has no error data (minimizer unknown)")
        return np.array([s.error for s in self.steps], dtype=np.float64)

    def to_csv(self, path) -> None:
        """Write the trace; floats at 17 significant digits, one row per step."""
        lines = [TRACE_CSV_HEADER]
        for s in self.steps:
            lines.append(",".join([
                str(s.k),
                _csv_num(s.value),
                _csv_num(s.error),
                _csv_num(s.dist),
                "" if s.selected is None else str(s.selected),
                _csv_num(s.grad_coeff),
                _csv_num(s.grad_sup),
                "true" if s.stopped else "false",
            ]))
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
