"""Embedding graphs and graph signals into graphon space."""

from __future__ import annotations

import numpy as np

from .core import (
    MERGE_TOL,
    Graph,
    GraphSignal,
    Partition,
    StepGraphon,
    StepSignal,
)


def induce_graphon(g: Graph) -> StepGraphon:
    """Step graphon on the standard partition P_n with values equal to the GWM."""
    return StepGraphon(Partition.uniform(g.n), g.gwm())


def induce_signal(x) -> StepSignal:
    """Step signal on P_n taking value ``x_j`` on the j-th cell."""
    if isinstance(x, GraphSignal):
        x = x.values
    x = np.asarray(x, dtype=complex).reshape(-1)
    return StepSignal(Partition.uniform(x.size), x)


def induce_feature_map(x) -> list[StepSignal]:
    """Induce every row of a (features, n) array."""
    return [induce_signal(row) for row in np.atleast_2d(x)]


def merge_breakpoints(*parts: Partition) -> Partition:
    b = np.unique(np.concatenate([p.breakpoints for p in parts]))
    keep = np.concatenate([[True], np.diff(b) > MERGE_TOL])
    b = b[keep]
    b[0], b[-1] = 0.0, 1.0
    return Partition(b)


def refinement_map(coarse: Partition, fine: Partition) -> np.ndarray:
    """For each cell of ``fine``, the index of the ``coarse`` cell containing it."""
    mids = 0.5 * (fine.breakpoints[:-1] + fine.breakpoints[1:])
    return coarse.cell_index(mids)


def refine_graphon(w: StepGraphon, target: Partition) -> StepGraphon:
    idx = refinement_map(w.partition, target)
    return StepGraphon(target, w.values[np.ix_(idx, idx)])


def refine_signal(s: StepSignal, target: Partition) -> StepSignal:
    return StepSignal(target, s.values[refinement_map(s.partition, target)])


def common_refinement(a: StepGraphon, b: StepGraphon) -> tuple[StepGraphon, StepGraphon]:
    if a.partition.same_as(b.partition):
        return a, b
    p = merge_breakpoints(a.partition, b.partition)
    return refine_graphon(a, p), refine_graphon(b, p)


def signal_refinement(a: StepSignal, b: StepSignal) -> tuple[StepSignal, StepSignal]:
    if a.partition.same_as(b.partition):
        return a, b
    p = merge_breakpoints(a.partition, b.partition)
    return refine_signal(a, p), refine_signal(b, p)


def signal_distance(a: StepSignal, b: StepSignal) -> float:
    """L2 distance between two step signals on possibly different partitions."""
    a, b = signal_refinement(a, b)
    return float(np.sqrt(np.sum(a.partition.measures * np.abs(a.values - b.values) ** 2)))


def feature_map_distance(xs: list[StepSignal], ys: list[StepSignal]) -> float:
    """Max over features of the per-feature L2 distance."""
    if len(xs) != len(ys):
        raise ValueError(f"feature counts differ: {len(xs)} vs {len(ys)}")
    return max(signal_distance(a, b) for a, b in zip(xs, ys))
