"""Spectral convolutional networks on graphs and on step graphons.

Layer ``l`` maps ``F_{l-1}`` features to ``F_l`` features by

    x_l^j = rho( sum_k M_l[j, k] h_l^{jk}(shift) x_{l-1}^k )

where the shift is a GSO (graph) or a step-kernel operator (graphon).  No
pooling, no biases.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DimensionError, Graph, StepSignal
from .filters import FilterSpec, RegularityError, parse_filter, stability_constant
from .induction import feature_map_distance, induce_feature_map
from .spectral import EigenDecomposition, StepOperator, filter_step_operator, grso_apply

SCHEMA = "scnn/1"


@dataclass(frozen=True)
class Activation:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float


ACTIVATIONS = {
    "relu": Activation("relu", lambda x: np.maximum(x, 0.0), 1.0),
    "tanh": Activation("tanh", np.tanh, 1.0),
    "identity": Activation("identity", lambda x: x, 1.0),
    "leaky-relu": Activation("leaky-relu", lambda x: np.where(x >= 0, x, 0.1 * x), 1.0),
}


def activate(act: Activation, x: np.ndarray) -> np.ndarray:
    # complex feature maps: real and imaginary parts separately
    if np.iscomplexobj(x):
        return act.func(x.real) + 1j * act.func(x.imag)
    return act.func(x)


@dataclass(frozen=True, eq=False)
class ScnnSpec:
    """``filters[l][j][k]`` and ``weights[l][j, k]`` for layers ``l = 0..L-1``."""

    widths: tuple
    filters: tuple
    weights: tuple
    activation: Activation

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        weights = tuple(np.asarray(m, dtype=float) for m in self.weights)
        filters = tuple(tuple(tuple(row) for row in layer) for layer in self.filters)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "filters", filters)
        if len(weights) != len(widths) - 1 or len(filters) != len(widths) - 1:
            raise DimensionError("need one filter bank and one weight matrix per layer")
        for l, (m, bank) in enumerate(zip(weights, filters)):
            shape = (widths[l + 1], widths[l])
            if m.shape != shape:
                raise DimensionError(f"layer {l + 1}: weights {m.shape}, expected {shape}")
            if len(bank) != shape[0] or any(len(r) != shape[1] for r in bank):
                raise DimensionError(f"layer {l + 1}: filter bank shape does not match {shape}")

    @property
    def layers(self) -> int:
        return len(self.weights)

    @classmethod
    def build(cls, widths, filters, weights, activation="relu") -> "ScnnSpec":
        act = ACTIVATIONS[activation] if isinstance(activation, str) else activation
        return cls(tuple(widths), tuple(filters), tuple(weights), act)

    def all_filters(self):
        for layer in self.filters:
            for row in layer:
                yield from row

    def weight_norm(self) -> float:
        """``max_l ||M_l||_inf`` with the max-row-sum norm."""
        return max(float(np.max(np.abs(m).sum(axis=1))) for m in self.weights)


def load_spec(path: str | os.PathLike, domain_bound: float = 1.0) -> ScnnSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh), domain_bound)


def spec_from_dict(d: dict, domain_bound: float = 1.0) -> ScnnSpec:
    if d.get("schema") != SCHEMA:
        raise ValueError(f"expected schema {SCHEMA!r}, got {d.get('schema')!r}")
    widths = d["widths"]
    if int(d["layers"]) != len(widths) - 1:
        raise ValueError(f"layers={d['layers']} but {len(widths)} widths given")
    filters = [
        [[parse_filter(s, domain_bound) for s in row] for row in layer] for layer in d["filters"]
    ]
    weights = []
    for l, flat in enumerate(d["weights"]):
        weights.append(np.asarray(flat, dtype=float).reshape(widths[l + 1], widths[l]))
    return ScnnSpec.build(widths, filters, weights, d.get("activation", "relu"))


def spec_to_dict(s: ScnnSpec) -> dict:
    return {
        "schema": SCHEMA,
        "layers": s.layers,
        "widths": list(s.widths),
        "activation": s.activation.name,
        "filters": [[[h.name for h in row] for row in layer] for layer in s.filters],
        "weights": [m.reshape(-1).tolist() for m in s.weights],
    }


def _check_input(s: ScnnSpec, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x))
    if x.shape[0] != s.widths[0]:
        raise DimensionError(f"input has {x.shape[0]} features, network expects {s.widths[0]}")
    return x


def scnn_forward_graph(s: ScnnSpec, g: Graph, x, return_preactivations: bool = False):
    """Run the network on a graph; ``x`` has shape ``(F_0, n)``."""
    x = _check_input(s, x)
    if x.shape[1] != g.n:
        raise DimensionError(f"signal length {x.shape[1]} != graph size {g.n}")
    e = EigenDecomposition.of(g.gso)
    q = e.eigenvectors
    pre = []
    for bank, m in zip(s.filters, s.weights):
        coords = q.T @ x.T  # (n, F_in)
        out = np.zeros((m.shape[0], g.n), dtype=np.result_type(x, float))
        for j in range(m.shape[0]):
            acc = np.zeros(g.n, dtype=coords.dtype)
            for k in range(m.shape[1]):
                acc = acc + m[j, k] * bank[j][k].on_spectrum(e.eigenvalues) * coords[:, k]
            out[j] = q @ acc
        pre.append(out)
        x = activate(s.activation, out)
    return (x, pre) if return_preactivations else x


def _as_rows(t: StepOperator, y) -> np.ndarray:
    if isinstance(y, StepSignal) or (isinstance(y, (list, tuple)) and y and isinstance(y[0], StepSignal)):
        sigs = [y] if isinstance(y, StepSignal) else list(y)
        for sig in sigs:
            if not sig.partition.same_as(t.partition):
                raise DimensionError("feature map is not on the operator's partition")
        return np.array([sig.values for sig in sigs])
    return np.atleast_2d(np.asarray(y))


def scnn_forward_graphon(s: ScnnSpec, t: StepOperator, y) -> list[StepSignal]:
    """Run the network on a step-kernel operator; ``y`` is a list of step signals."""
    rows = _check_input(s, _as_rows(t, y))
    if rows.shape[1] != t.partition.k:
        raise DimensionError("feature map is not on the operator's partition")
    cur = [StepSignal(t.partition, r) for r in rows]
    for bank, m in zip(s.filters, s.weights):
        nxt = []
        for j in range(m.shape[0]):
            acc = np.zeros(t.partition.k, dtype=complex)
            for k in range(m.shape[1]):
                ht = filter_step_operator(bank[j][k], t, strict=False)
                acc = acc + m[j, k] * grso_apply(ht, cur[k]).values
            nxt.append(StepSignal(t.partition, activate(s.activation, acc)))
        cur = nxt
    return cur


def transfer_constant_formula(m: float, layers: int, c: float) -> float:
    """``M^L (1 + L C)``."""
    return m**layers * (1.0 + layers * c)


def filter_gate(s: ScnnSpec) -> list[str]:
    """Names and reasons of filters failing the linear-stability requirements."""
    bad = []
    for h in s.all_filters():
        try:
            h.check_regular()
        except RegularityError as exc:
            bad.append(f"{h.name}: {exc}")
            continue
        if not h.zero_at_zero:
            bad.append(f"{h.name}: h(0) != 0")
        elif h.sup_norm() > 1.0 + 1e-12:
            bad.append(f"{h.name}: sup |h| > 1 on [-{h.domain_bound:g}, {h.domain_bound:g}]")
    return bad


def transfer_constant(s: ScnnSpec, n_max: int = 2048) -> float:
    """End-to-end constant ``M^L (1 + L C)``, ``C`` the largest per-filter stability constant."""
    bad = filter_gate(s)
    if bad:
        raise RegularityError("filters fail the stability gate: " + "; ".join(bad))
    cache: dict[tuple, float] = {}
    c = 0.0
    for h in s.all_filters():
        key = (h.kind, h.num, h.den, h.func, h.domain_bound)
        if key not in cache:
            cache[key] = stability_constant(h, n_max=n_max).lipschitz_bound
        c = max(c, cache[key])
    return transfer_constant_formula(s.weight_norm(), s.layers, c)


def scnn_repercussion(s: ScnnSpec, g1: Graph, x1, g2: Graph, x2) -> float:
    """Max-over-features L2 distance between the induced outputs on two graphs."""
    y1 = induce_feature_map(scnn_forward_graph(s, g1, x1))
    y2 = induce_feature_map(scnn_forward_graph(s, g2, x2))
    return feature_map_distance(y1, y2)


def random_spec(
    rng: np.random.Generator,
    widths: Sequence[int],
    filter_pool: Sequence[FilterSpec],
    activation: str = "relu",
    weight_norm: float | None = None,
) -> ScnnSpec:
    """Random network drawing filters from a pool; optionally rescale to a row-sum norm."""
    filters, weights = [], []
    for l in range(len(widths) - 1):
        fo, fi = widths[l + 1], widths[l]
        filters.append([[filter_pool[rng.integers(len(filter_pool))] for _ in range(fi)] for _ in range(fo)])
        m = rng.uniform(-1, 1, size=(fo, fi))
        if weight_norm is not None:
            m *= weight_norm / np.max(np.abs(m).sum(axis=1))
        weights.append(m)
    return ScnnSpec.build(widths, filters, weights, activation)
