import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphon_transfer.core import Graph, GraphSignal, Partition, StepGraphon, StepSignal
from graphon_transfer.induction import (
    common_refinement,
    feature_map_distance,
    induce_feature_map,
    induce_graphon,
    induce_signal,
    merge_breakpoints,
    signal_distance,
    signal_refinement,
)

from conftest import sym


def brute_density(edges, nodes, a):
    """t(F, G) by enumerating every node map with exact rationals."""
    n = len(a)
    total = Fraction(0)
    for psi in itertools.product(range(n), repeat=nodes):
        term = Fraction(1)
        for u, v in edges:
            term *= a[psi[u]][psi[v]]
        total += term
    return total / n**nodes


class TestInduceGraphon:
    def test_two_nodes(self):
        w = induce_graphon(Graph(np.array([[0.0, 1.0], [1.0, 0.0]])))
        np.testing.assert_array_equal(w.values, [[0, 2], [2, 0]])
        assert w.partition.same_as(Partition.uniform(2))

    def test_zero(self):
        assert not np.any(induce_graphon(Graph(np.zeros((4, 4)))).values)

    def test_triangle_edge_density(self):
        a = np.ones((3, 3)) - np.eye(3)
        w = induce_graphon(Graph.from_gwm(a))
        np.testing.assert_array_equal(w.values, a)
        # K2 density integrates W over the unit square
        exact = brute_density([(0, 1)], 2, [[Fraction(int(v)) for v in row] for row in a])
        assert exact == Fraction(2, 3)
        assert float(np.sum(w.values) / 9) == pytest.approx(float(exact), abs=1e-15)


class TestInduceSignal:
    def test_norm_example(self):
        s = induce_signal(np.array([1.0, 2.0]))
        assert s.norm() == pytest.approx(np.sqrt(2.5))

    def test_zero(self):
        assert induce_signal(np.zeros(3)).norm() == 0.0

    def test_accepts_graph_signal(self):
        s = induce_signal(GraphSignal(np.array([1.0, 2.0, 3.0])))
        np.testing.assert_array_equal(s.values, [1, 2, 3])

    def test_inner_product_by_quadrature(self, rng):
        x = rng.normal(size=7) + 1j * rng.normal(size=7)
        y = rng.normal(size=7) + 1j * rng.normal(size=7)
        px, py = induce_signal(x), induce_signal(y)
        # midpoint quadrature on a grid fine enough to resolve every cell
        u = (np.arange(7000) + 0.5) / 7000
        quad = np.mean(px(u) * np.conj(py(u)))
        assert px.inner(py) == pytest.approx(quad, abs=1e-12)
        assert px.inner(py) == pytest.approx(np.vdot(y, x) / 7, abs=1e-12)

    @settings(max_examples=60)
    @given(st.integers(1, 80), st.integers(0, 2**31))
    def test_norm_scaling(self, n, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert induce_signal(x).norm() == pytest.approx(np.linalg.norm(x) / np.sqrt(n), rel=1e-12)

    def test_feature_map(self):
        fm = induce_feature_map(np.arange(6.0).reshape(2, 3))
        assert len(fm) == 2 and fm[1].values[0] == 3


class TestRefinement:
    def test_p2_p3(self):
        a = StepGraphon(Partition.uniform(2), np.eye(2))
        b = StepGraphon(Partition.uniform(3), np.eye(3))
        a2, b2 = common_refinement(a, b)
        np.testing.assert_allclose(a2.partition.breakpoints, [0, 1 / 3, 1 / 2, 2 / 3, 1], atol=1e-15)
        assert a2.partition.k == 4 and b2.partition.same_as(a2.partition)

    def test_identical_unchanged(self, rng):
        a = StepGraphon(Partition.uniform(3), sym(rng, 3))
        a2, b2 = common_refinement(a, a)
        assert a2 is a and b2 is a

    def test_nested_by_pointwise_evaluation(self, rng):
        a = StepGraphon(Partition.uniform(2), sym(rng, 2))
        b = StepGraphon(Partition.uniform(4), sym(rng, 4))
        a2, b2 = common_refinement(a, b)
        assert a2.partition.k == 4
        np.testing.assert_array_equal(a2.values, np.repeat(np.repeat(a.values, 2, 0), 2, 1))
        u, v = rng.random(100), rng.random(100)
        np.testing.assert_array_equal(a2(u, v), a(u, v))
        np.testing.assert_array_equal(b2(u, v), b(u, v))

    def test_cell_count_bound(self, rng):
        pa = Partition(np.r_[0, np.sort(rng.random(4)), 1])
        pb = Partition(np.r_[0, np.sort(rng.random(6)), 1])
        assert merge_breakpoints(pa, pb).k <= pa.k + pb.k - 1

    def test_near_duplicate_breakpoints_merged(self):
        p = merge_breakpoints(Partition(np.array([0, 0.5, 1])), Partition(np.array([0, 0.5 + 1e-16, 1])))
        assert p.k == 2

    @settings(max_examples=40)
    @given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**31))
    def test_refinement_exact(self, ka, kb, seed):
        rng = np.random.default_rng(seed)
        pa = Partition(np.r_[0, np.sort(rng.uniform(0.01, 0.99, ka - 1)), 1]) if ka > 1 else Partition.uniform(1)
        a = StepGraphon(pa, sym(rng, pa.k))
        b = StepGraphon(Partition.uniform(kb), sym(rng, kb))
        a2, b2 = common_refinement(a, b)
        u, v = rng.random(300), rng.random(300)
        assert np.array_equal(a2(u, v), a(u, v)) and np.array_equal(b2(u, v), b(u, v))


class TestSignalDistance:
    def test_same_function_different_partitions(self):
        a = StepSignal(Partition.uniform(1), np.array([1.0]))
        b = StepSignal(Partition.uniform(2), np.array([1.0, 1.0]))
        assert signal_distance(a, b) == 0.0

    def test_swap(self):
        a = StepSignal(Partition.uniform(2), np.array([1.0, 0.0]))
        b = StepSignal(Partition.uniform(2), np.array([0.0, 1.0]))
        assert signal_distance(a, b) == pytest.approx(1.0)

    def test_self(self, rng):
        a = induce_signal(rng.normal(size=5))
        assert signal_distance(a, a) == 0.0

    def test_refined_pair_shares_partition(self):
        a2, b2 = signal_refinement(induce_signal(np.ones(2)), induce_signal(np.ones(3)))
        assert a2.partition.same_as(b2.partition) and a2.partition.k == 4

    def test_feature_map_distance_is_max(self):
        xs = induce_feature_map(np.array([[1.0, 0.0], [0.0, 0.0]]))
        ys = induce_feature_map(np.array([[0.0, 0.0], [0.0, 0.0]]))
        assert feature_map_distance(xs, ys) == pytest.approx(np.sqrt(0.5))

    def test_feature_count_mismatch(self):
        with pytest.raises(ValueError):
            feature_map_distance(induce_feature_map(np.ones((2, 2))), induce_feature_map(np.ones((1, 2))))


class TestHomDensityPreserved:
    MOTIFS = [
        ([(0, 1)], 2), ([(0, 1), (1, 2)], 3), ([(0, 1), (1, 2), (0, 2)], 3),
        ([(0, 1), (1, 2), (2, 3), (0, 3)], 4), ([(0, 1), (0, 2), (0, 3)], 4),
    ]

    @pytest.mark.parametrize("edges,nodes", MOTIFS)
    def test_graph_vs_induced_exact(self, edges, nodes):
        from graphon_transfer.motifs import Motif, hom_density_graph, hom_density_step

        rng = np.random.default_rng(nodes * 10 + len(edges))
        for n in (1, 3, 5):
            # dyadic weights are exact in floating point, so the rational oracle is exact too
            a_int = rng.integers(-4, 5, size=(n, n))
            a_int = np.triu(a_int) + np.triu(a_int, 1).T
            a = a_int / 4.0
            exact = brute_density(edges, nodes, [[Fraction(int(v), 4) for v in row] for row in a_int])
            f = Motif(nodes, tuple(edges))
            g = Graph.from_gwm(a)
            assert hom_density_graph(f, g, signed=True) == pytest.approx(float(exact), abs=1e-12)
            assert hom_density_step(f, induce_graphon(g)) == pytest.approx(float(exact), abs=1e-12)
