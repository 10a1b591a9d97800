"""Functional calculus on GSOs and on step-kernel integral operators.

A step kernel ``B`` on a partition with cell lengths ``mu`` defines the
integral operator ``(T psi)(u) = int W(u, v) psi(v) dv``.  On step functions it
acts as ``B diag(mu)``; in the orthonormal basis ``chi_i / sqrt(mu_i)`` it is
the symmetric matrix ``S = D^{1/2} B D^{1/2}`` with ``D = diag(mu)``, and it
vanishes on the orthogonal complement of the step functions.  Every norm and
filter below is computed from ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import DimensionError, Graph, Partition, StepGraphon, StepSignal
from .filters import FilterSpec, RegularityError
from .induction import common_refinement, induce_graphon

MIN_MEASURE = 1e-14


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def of(cls, m) -> "EigenDecomposition":
        lam, q = np.linalg.eigh(np.asarray(m, dtype=float))
        return cls(lam, q)

    def apply(self, values) -> np.ndarray:
        """``Q diag(values) Q^T``."""
        q = self.eigenvectors
        return (q * values) @ q.conj().T


@dataclass(frozen=True, eq=False)
class StepOperator:
    """Integral operator with a step kernel."""

    kernel: StepGraphon

    @classmethod
    def from_values(cls, partition: Partition, values) -> "StepOperator":
        return cls(StepGraphon(partition, values))

    @classmethod
    def from_graph(cls, g: Graph) -> "StepOperator":
        return cls(induce_graphon(g))

    @property
    def partition(self) -> Partition:
        return self.kernel.partition

    @property
    def values(self) -> np.ndarray:
        return self.kernel.values

    @cached_property
    def _active(self) -> np.ndarray:
        return self.partition.measures >= MIN_MEASURE

    @cached_property
    def _sqrt_mu(self) -> np.ndarray:
        return np.sqrt(self.partition.measures[self._active])

    @cached_property
    def sym(self) -> np.ndarray:
        """``D^{1/2} B D^{1/2}`` restricted to cells of non-negligible measure."""
        a, r = self._active, self._sqrt_mu
        return r[:, None] * self.values[np.ix_(a, a)] * r[None, :]

    @cached_property
    def eig(self) -> EigenDecomposition:
        return EigenDecomposition.of(self.sym)

    def from_sym(self, s_new: np.ndarray) -> "StepOperator":
        """Step operator on the same partition whose symmetrized matrix is ``s_new``."""
        a, r = self._active, self._sqrt_mu
        vals = np.zeros_like(self.values)
        vals[np.ix_(a, a)] = s_new / r[:, None] / r[None, :]
        return StepOperator.from_values(self.partition, vals)

    def __sub__(self, other: "StepOperator") -> "StepOperator":
        a, b = common_refinement(self.kernel, other.kernel)
        return StepOperator.from_values(a.partition, a.values - b.values)


def _as_operator(t) -> StepOperator:
    if isinstance(t, StepOperator):
        return t
    if isinstance(t, StepGraphon):
        return StepOperator(t)
    if isinstance(t, Graph):
        return StepOperator.from_graph(t)
    raise TypeError(f"cannot make a step operator from {type(t).__name__}")


def filter_graph(h: FilterSpec, g: Graph) -> Graph:
    """Graph with GSO ``h(gso) = Q diag(h(lambda)) Q^T``."""
    e = EigenDecomposition.of(g.gso)
    return Graph(e.apply(h.on_spectrum(e.eigenvalues)))


def filter_matrix(h: FilterSpec, m) -> np.ndarray:
    e = EigenDecomposition.of(m)
    return e.apply(h.on_spectrum(e.eigenvalues))


def grso_apply(t: StepOperator, s: StepSignal) -> StepSignal:
    """``(T psi)_i = sum_j B_ij mu_j psi_j`` on a shared partition."""
    t = _as_operator(t)
    if not t.partition.same_as(s.partition):
        raise DimensionError("signal and operator partitions differ; refine first")
    return StepSignal(t.partition, t.values @ (t.partition.measures * s.values))


def filter_step_operator(h: FilterSpec, t: StepOperator, strict: bool = True) -> StepOperator:
    """Step operator realizing ``h(T)``.

    ``h(T)`` is again an integral operator only when ``h(0) = 0``: otherwise it
    acts as ``h(0)`` times the identity on the kernel of ``T``.  With
    ``strict=False`` the returned operator is the compression of ``h(T)`` to
    step functions on the partition, which is exact for signals living there.
    """
    t = _as_operator(t)
    if strict and not h.zero_at_zero:
        raise RegularityError(
            f"{h.name}: h(0) = {h.value_at_zero:g} != 0, so h(T) is not an integral "
            "operator (it is h(0) on the kernel of T); pass strict=False to restrict "
            "to step functions on the operator's partition"
        )
    e = t.eig
    return t.from_sym(e.apply(h.on_spectrum(e.eigenvalues)))


def filter_apply(h: FilterSpec, t: StepOperator, s: StepSignal) -> StepSignal:
    """``h(T) psi`` for a step signal on ``T``'s partition (any continuous h)."""
    return grso_apply(filter_step_operator(h, t, strict=False), s)


def operator_norm(t) -> float:
    t = _as_operator(t)
    if t.sym.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(t.sym))))


def schatten_norm(t, p) -> float:
    """l_p norm of the eigenvalues; ``p = inf`` is the operator norm."""
    if p < 1:
        raise ValueError(f"Schatten index p={p} must be >= 1")
    if np.isinf(p):
        return operator_norm(t)
    lam = np.abs(np.linalg.eigvalsh(_as_operator(t).sym))
    top = lam.max() if lam.size else 0.0
    if top == 0.0:
        return 0.0
    return float(top * np.sum((lam / top) ** p) ** (1.0 / p))


def unitary_exp(a: float, m) -> np.ndarray:
    """``exp(i a M)`` for real symmetric ``M``."""
    e = EigenDecomposition.of(m)
    return e.apply(np.exp(1j * a * e.eigenvalues))


def operator_distance(t1, t2, norm="op") -> float:
    d = _as_operator(t1) - _as_operator(t2)
    if norm == "op":
        return operator_norm(d)
    if isinstance(norm, tuple) and norm[0] == "schatten":
        return schatten_norm(d, norm[1])
    return schatten_norm(d, float(norm))


def filter_distance(h: FilterSpec, t1, t2, norm="op") -> float:
    """Norm of ``h(T1) - h(T2)``; ``norm`` is ``"op"``, ``("schatten", p)`` or ``p``."""
    return operator_distance(
        filter_step_operator(h, _as_operator(t1)), filter_step_operator(h, _as_operator(t2)), norm
    )
