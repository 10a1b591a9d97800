"""Domain types: graphs, signals, partitions, step graphons and permutations.

Norm conventions used throughout the package:

* graph signals live in C^n with ``<x, y> = sum x_i conj(y_i)``;
* a feature map (d signals) has norm ``max_k ||x^k||``;
* step signals on a partition with cell lengths ``mu`` have
  ``||psi||_{L2}^2 = sum mu_i |v_i|^2``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SYMMETRY_WARN_TOL = 1e-9
MERGE_TOL = 1e-14


class DimensionError(ValueError):
    """Raised when array shapes or sizes do not agree."""


def _symmetrize(m: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_WARN_TOL * max(1.0, np.max(np.abs(m)) if m.size else 0.0):
        logger.warning("%s asymmetric by %.3g; symmetrizing", what, asym)
    out = 0.5 * (m + m.T)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted undirected graph given by its graph shift operator."""

    gso: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gso", _symmetrize(self.gso, "GSO"))
        if self.gso.shape[0] < 1:
            raise DimensionError("graph needs at least one node")

    @property
    def n(self) -> int:
        return self.gso.shape[0]

    def gwm(self) -> np.ndarray:
        """Graph weight matrix ``A = n * gso``."""
        return self.n * self.gso

    @classmethod
    def from_gwm(cls, a) -> "Graph":
        a = np.asarray(a, dtype=float)
        return cls(a / a.shape[0])


@dataclass(frozen=True, eq=False)
class GraphSignal:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "GraphSignal") -> complex:
        return complex(np.sum(self.values * np.conj(other.values)))


def feature_norm(x) -> float:
    """Max over features of the per-feature l2 norm of a (d, n) array."""
    x = np.atleast_2d(np.asarray(x))
    return float(np.max(np.sqrt(np.sum(np.abs(x) ** 2, axis=1))))


@dataclass(frozen=True, eq=False)
class Partition:
    """Partition of [0, 1] into consecutive intervals."""

    breakpoints: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        if b.size < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        b.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)

    @classmethod
    def uniform(cls, n: int) -> "Partition":
        b = np.arange(n + 1, dtype=float) / n
        b[-1] = 1.0
        return cls(b)

    @property
    def k(self) -> int:
        return self.breakpoints.size - 1

    @property
    def measures(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def cell_index(self, u) -> np.ndarray:
        """Index of the cell containing each point (cells are left-closed)."""
        idx = np.searchsorted(self.breakpoints, np.asarray(u, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.k - 1)

    def same_as(self, other: "Partition") -> bool:
        return self.k == other.k and np.allclose(
            self.breakpoints, other.breakpoints, rtol=0, atol=MERGE_TOL
        )

    def is_uniform(self) -> bool:
        return self.same_as(Partition.uniform(self.k))


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Graphon constant (value ``values[i, j]``) on each cell ``P_i x P_j``."""

    partition: Partition
    values: np.ndarray

    def __post_init__(self):
        v = _symmetrize(self.values, "step graphon values")
        if v.shape[0] != self.partition.k:
            raise DimensionError(
                f"{v.shape[0]} value rows for a partition with {self.partition.k} cells"
            )
        object.__setattr__(self, "values", v)

    def bound(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __call__(self, u, v) -> np.ndarray:
        return self.values[self.partition.cell_index(u), self.partition.cell_index(v)]


@dataclass(frozen=True, eq=False)
class GraphonEvaluator:
    """Symmetric graphon given as a vectorized callable ``f(u, v)``."""

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bound: float
    name: str = "graphon"

    def __call__(self, u, v) -> np.ndarray:
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        return np.asarray(self.func(u, v), dtype=float)

    def check(self, probes: int = 10_000, seed: int = 0, tol: float = 1e-12) -> None:
        """Probe symmetry and the declared bound; raises ``ValueError`` on failure."""
        rng = np.random.default_rng(seed)
        u, v = rng.random(probes), rng.random(probes)
        a, b = self(u, v), self(v, u)
        if np.max(np.abs(a - b)) > tol:
            raise ValueError(f"{self.name} is not symmetric")
        if np.max(np.abs(a)) > self.bound + tol:
            raise ValueError(f"{self.name} exceeds its declared bound {self.bound}")


@dataclass(frozen=True, eq=False)
class StepSignal:
    partition: Partition
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if v.size != self.partition.k:
            raise DimensionError(f"{v.size} values for {self.partition.k} cells")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.partition.measures * np.abs(self.values) ** 2)))

    def inner(self, other: "StepSignal") -> complex:
        if not self.partition.same_as(other.partition):
            raise DimensionError("inner product needs a shared partition; refine first")
        return complex(np.sum(self.partition.measures * self.values * np.conj(other.values)))

    def __call__(self, u) -> np.ndarray:
        return self.values[self.partition.cell_index(u)]


@dataclass(frozen=True, eq=False)
class Permutation:
    """Node relabeling ``i -> perm[i]`` (0-based)."""

    perm: np.ndarray = field()

    def __post_init__(self):
        p = np.asarray(self.perm, dtype=np.intp).reshape(-1)
        if not np.array_equal(np.sort(p), np.arange(p.size)):
            raise ValueError("not a permutation of 0..n-1")
        p.setflags(write=False)
        object.__setattr__(self, "perm", p)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    def __len__(self) -> int:
        return self.perm.size

    def inverse(self) -> "Permutation":
        return Permutation(np.argsort(self.perm))

    def matrix(self) -> np.ndarray:
        """Permutation matrix ``P`` with ``P[i, perm[i]] = 1``."""
        n = self.perm.size
        m = np.zeros((n, n))
        m[np.arange(n), self.perm] = 1.0
        return m

    def apply_signal(self, x) -> np.ndarray:
        return np.asarray(x)[..., self.perm]


def relabel(g: Graph, p: Permutation) -> Graph:
    """Relabeled graph with GSO ``(gso[p[i], p[j]])_{ij}``, i.e. ``P gso P^T``.

    Signals follow the same rule (``x -> x[p]``) so that
    ``relabel(g, p).gso @ x[p] == (g.gso @ x)[p]``.
    """
    if len(p) != g.n:
        raise DimensionError(f"permutation of length {len(p)} for a graph with {g.n} nodes")
    return Graph(g.gso[np.ix_(p.perm, p.perm)])


def graph_norms(g: Graph) -> tuple[float, float]:
    """Spectral norms of the GSO and of the GWM ``n * gso``."""
    op = float(np.max(np.abs(np.linalg.eigvalsh(g.gso))))
    return op, g.n * op


# "gso v1" text format: first line n, then n rows of n floats.

def write_gso(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"{g.n}\n")
        for row in g.gso:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_gso(path: str | os.PathLike) -> Graph:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty gso file")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise ValueError(f"{path}:1: expected integer node count") from None
    if len(lines) - 1 != n:
        raise DimensionError(f"{path}: expected {n} matrix rows, found {len(lines) - 1}")
    rows: list[Sequence[float]] = []
    for lineno, ln in enumerate(lines[1:], start=2):
        vals = [float(t) for t in ln.split()]
        if len(vals) != n:
            raise DimensionError(f"{path}:{lineno}: expected {n} values, found {len(vals)}")
        rows.append(vals)
    return Graph(np.array(rows))
