"""Graphon sampling and the experiment runners behind the CLI.

Per-trial seeds are ``blake2b(master_seed, experiment, n, trial)`` truncated to
63 bits, so every trial is reproducible on its own and results do not depend
on execution order.  Rows are always emitted sorted by ``(n, trial)``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Graph, GraphonEvaluator, Partition, StepGraphon, graph_norms, read_gso
from .filters import FilterSpec, RegularityError, parse_filter, stability_constant
from .induction import feature_map_distance, induce_feature_map
from .scnn import ScnnSpec, filter_gate, scnn_forward_graph, transfer_constant
from .spectral import StepOperator, filter_matrix, operator_distance
from .unbounded import (
    approx_commutation_gap,
    band_dimension,
    laplace_model,
    laplace_operator,
    unbdd_convergence_gap,
)

CSV_COLUMNS = ["experiment", "graphon", "filter_or_scnn", "n", "m", "trial", "seed", "metric", "value"]
TRANSFER_SLACK = 1e-8
SCNN_SLACK = 1e-7


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class SeedPairingError(ValueError):
    """A signal was requested at node positions of a different graph sample."""


# -- graphon families --------------------------------------------------------


def _sbm(k: int, p_in: float, p_out: float) -> Callable:
    def f(u, v):
        bu = np.minimum(np.floor(u * k), k - 1)
        bv = np.minimum(np.floor(v * k), k - 1)
        return np.where(bu == bv, p_in, p_out)

    return f


def _step_from_file(path: str) -> GraphonEvaluator:
    g = read_gso(path)
    w = StepGraphon(Partition.uniform(g.n), g.gso)
    return GraphonEvaluator(lambda u, v: w(u, v), w.bound(), f"step:{path}")


def parse_graphon(text: str) -> GraphonEvaluator:
    """``const:p | product | min | expdist:s | sbm:k,p_in,p_out | step:FILE``."""
    name, _, arg = text.partition(":")
    try:
        if name == "const":
            p = float(arg)
            return GraphonEvaluator(lambda u, v: np.full(np.shape(u), p), abs(p), text)
        if name == "product" and not arg:
            return GraphonEvaluator(lambda u, v: u * v, 1.0, text)
        if name == "min" and not arg:
            return GraphonEvaluator(np.minimum, 1.0, text)
        if name == "expdist":
            s = float(arg)
            return GraphonEvaluator(lambda u, v: np.exp(-s * np.abs(u - v)), 1.0, text)
        if name == "sbm":
            k, p_in, p_out = arg.split(",")
            k, p_in, p_out = int(k), float(p_in), float(p_out)
            return GraphonEvaluator(_sbm(k, p_in, p_out), max(abs(p_in), abs(p_out)), text)
        if name == "step":
            return _step_from_file(arg)
    except ValueError as exc:
        raise ConfigError(f"bad graphon spec {text!r}: {exc}") from None
    raise ConfigError(f"unknown graphon spec {text!r}")


SIGNALS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one": np.ones_like,
    "u": lambda u: u,
    "cos": lambda u: np.cos(2 * np.pi * u),
    "sin": lambda u: np.sin(2 * np.pi * u),
    "bump": lambda u: np.exp(-20 * (u - 0.5) ** 2),
}


# -- sampling ----------------------------------------------------------------


def trial_seed(master_seed: int, experiment: str, n: int, trial: int) -> int:
    h = hashlib.blake2b(f"{master_seed}|{experiment}|{n}|{trial}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big") >> 1


def sample_nodes(n: int, mode: str, seed: int) -> np.ndarray:
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if mode == "grid":
        return (np.arange(n) + 0.5) / n
    if mode == "iid":
        return np.sort(np.random.default_rng(seed).random(n))
    raise ConfigError(f"unknown sampling mode {mode!r}")


@dataclass(frozen=True, eq=False)
class GraphSample:
    graph: Graph
    nodes: np.ndarray
    n: int
    mode: str
    seed: int


def sample_graph(w: GraphonEvaluator, n: int, mode: str = "grid", seed: int = 0) -> GraphSample:
    """GWM ``A_ij = W(u_i, u_j)`` at grid or sorted i.i.d. node positions; GSO ``A / n``."""
    u = sample_nodes(n, mode, seed)
    a = w(u[:, None], u[None, :])
    return GraphSample(Graph(a / n), u, n, mode, seed)


def sample_signal(
    f: Callable | str, n: int, mode: str = "grid", seed: int = 0, pair: GraphSample | None = None
) -> np.ndarray:
    """Evaluate ``f`` at the node positions of the graph drawn with the same seed."""
    f = SIGNALS[f] if isinstance(f, str) else f
    if pair is not None:
        if (pair.n, pair.mode, pair.seed) != (n, mode, seed):
            raise SeedPairingError(
                f"signal (n={n}, mode={mode}, seed={seed}) does not match graph "
                f"(n={pair.n}, mode={pair.mode}, seed={pair.seed})"
            )
        u = pair.nodes
    else:
        u = sample_nodes(n, mode, seed)
    return np.asarray(f(u), dtype=float)


# -- operators ---------------------------------------------------------------


def filtered_operator(h: FilterSpec, g: Graph) -> StepOperator:
    """Step operator with kernel ``n h(gso)`` on P_n."""
    return StepOperator.from_values(Partition.uniform(g.n), g.n * filter_matrix(h, g.gso))


def reference_operator(w: GraphonEvaluator, h: FilterSpec, size: int) -> StepOperator:
    return filtered_operator(h, sample_graph(w, size, "grid").graph)


def domain_bound(w: GraphonEvaluator) -> float:
    """Integer bound on ``||T_W||`` used for filter constants (at least 1)."""
    return float(max(1, math.ceil(w.bound - 1e-12)))


# -- configs and rows --------------------------------------------------------


@dataclass
class ExperimentConfig:
    experiment: str
    graphon: str = "product"
    filter: str = "sq"
    sizes: list = field(default_factory=lambda: [16, 32, 64, 128])
    sampling: str = "grid"
    trials: int = 1
    seed: int = 0
    out: str | None = None
    scnn: str | None = None
    signal: str = "cos"

    def validate(self) -> None:
        if not self.sizes:
            raise ConfigError("sizes: empty")
        if any(int(s) < 2 for s in self.sizes):
            raise ConfigError(f"sizes: every size must be >= 2, got {self.sizes}")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError(f"sizes: must be strictly increasing, got {self.sizes}")
        if int(self.trials) < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.sampling not in ("grid", "iid"):
            raise ConfigError(f"sampling: expected grid or iid, got {self.sampling!r}")

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown field(s) {unknown}")
        if "experiment" not in data:
            raise ConfigError(f"{path}: missing field 'experiment'")
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class Row:
    experiment: str
    graphon: str
    filter_or_scnn: str
    n: int
    m: int
    trial: int
    seed: int
    metric: str
    value: float

    def cells(self) -> list[str]:
        return [
            self.experiment, self.graphon, self.filter_or_scnn, str(self.n), str(self.m),
            str(self.trial), str(self.seed), self.metric, f"{self.value:.17g}",
        ]


def rows_to_csv(rows: Iterable[Row], timestamp: bool = True) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=lambda r: (r.n, r.trial, r.metric)):
        wr.writerow(r.cells())
    return buf.getvalue()


def write_csv(rows: Iterable[Row], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


# -- experiments -------------------------------------------------------------


def run_convergence(cfg: ExperimentConfig) -> list[Row]:
    """Operator distance of ``T_{W_{n h(Delta_n)}}`` to a grid reference at twice the largest size."""
    cfg.validate()
    w = parse_graphon(cfg.graphon)
    h = parse_filter(cfg.filter, domain_bound(w))
    ref_size = 2 * max(cfg.sizes)
    ref = reference_operator(w, h, ref_size)
    trials = 1 if cfg.sampling == "grid" else cfg.trials
    rows = []
    for n in cfg.sizes:
        for t in range(trials):
            seed = trial_seed(cfg.seed, cfg.experiment, n, t)
            g = sample_graph(w, n, cfg.sampling, seed).graph
            d = operator_distance(filtered_operator(h, g), ref)
            rows.append(Row(cfg.experiment, cfg.graphon, h.name, n, ref_size, t, seed, "op_distance", d))
    return rows


def median_by_size(rows: Sequence[Row], metric: str = "op_distance") -> dict[int, float]:
    out: dict[int, list[float]] = {}
    for r in rows:
        if r.metric == metric:
            out.setdefault(r.n, []).append(r.value)
    return {n: float(np.median(v)) for n, v in sorted(out.items())}


def strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def monotone_with_noise(values: Sequence[float], allowed: int = 1) -> bool:
    """Non-increasing except for at most ``allowed`` upward steps."""
    return sum(1 for a, b in zip(values, values[1:]) if b >= a) <= allowed


def empirical_rate(sizes: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of ``-log(value)`` against ``log(n)``."""
    x, y = np.log(np.asarray(sizes, float)), np.log(np.asarray(values, float))
    return float(-np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class TransferReport:
    n1: int
    n2: int
    trial: int
    seeds: tuple
    lhs: float
    rhs_raw: float
    constant: float
    holds: bool


def run_transfer_bound(
    graphon: str, filter_text: str, n1: int, n2: int, trials: int = 20, seed: int = 0,
    sampling: str = "iid", experiment: str = "transfer",
) -> list[TransferReport]:
    """Check ``||T_{W_{n1 h(D1)}} - T_{W_{n2 h(D2)}}|| <= C ||T_{W_{A1}} - T_{W_{A2}}||`` per trial."""
    w = parse_graphon(graphon)
    gamma = domain_bound(w)
    h = parse_filter(filter_text, gamma)
    if not h.zero_at_zero:
        raise RegularityError(f"{h.name}: h(0) != 0")
    c = stability_constant(h).lipschitz_bound
    out = []
    for t in range(trials):
        s1 = trial_seed(seed, experiment, n1, t)
        s2 = trial_seed(seed, experiment, n2, t)
        g1 = sample_graph(w, n1, sampling, s1).graph
        g2 = sample_graph(w, n2, sampling, s2).graph
        for g in (g1, g2):
            if graph_norms(g)[0] > gamma + 1e-12:
                raise RegularityError(f"||gso|| = {graph_norms(g)[0]:.4g} exceeds the domain bound {gamma:g}")
        lhs = operator_distance(filtered_operator(h, g1), filtered_operator(h, g2))
        rhs = operator_distance(StepOperator.from_graph(g1), StepOperator.from_graph(g2))
        out.append(TransferReport(n1, n2, t, (s1, s2), lhs, rhs, c, lhs <= c * rhs + TRANSFER_SLACK))
    return out


def transfer_rows(reports: Sequence[TransferReport], graphon: str, filt: str, experiment="transfer") -> list[Row]:
    rows = []
    for r in reports:
        for metric, v in (("lhs", r.lhs), ("rhs_raw", r.rhs_raw), ("constant", r.constant), ("holds", float(r.holds))):
            rows.append(Row(experiment, graphon, filt, r.n1, r.n2, r.trial, r.seeds[0], metric, v))
    return rows


@dataclass(frozen=True)
class ScnnReport:
    n1: int
    n2: int
    trial: int
    seeds: tuple
    op_distance: float
    signal_distance: float
    epsilon: float
    repercussion: float
    constant: float
    holds: bool


def input_features(names: Sequence[str], width: int) -> list[str]:
    names = list(names) or ["cos"]
    return [names[i % len(names)] for i in range(width)]


def run_scnn_transfer(
    spec: ScnnSpec, graphon: str, n1: int, n2: int, trials: int = 20, seed: int = 0,
    sampling: str = "iid", signals: Sequence[str] = ("cos", "sin"), experiment: str = "scnn",
) -> list[ScnnReport]:
    """End-to-end bound ``repercussion <= C_L * eps`` on pairs of sampled graphs and signals."""
    w = parse_graphon(graphon)
    c_l = transfer_constant(spec)
    feats = input_features(signals, spec.widths[0])
    out = []
    for t in range(trials):
        s1 = trial_seed(seed, experiment, n1, t)
        s2 = trial_seed(seed, experiment, n2, t)
        smp1 = sample_graph(w, n1, sampling, s1)
        smp2 = sample_graph(w, n2, sampling, s2)
        x1 = np.array([sample_signal(f, n1, sampling, s1, pair=smp1) for f in feats])
        x2 = np.array([sample_signal(f, n2, sampling, s2, pair=smp2) for f in feats])
        y1, y2 = induce_feature_map(x1), induce_feature_map(x2)
        if max(s.norm() for s in y1 + y2) > 1 + 1e-12:
            raise ConfigError("input feature maps are not normalized (max induced norm > 1)")
        op = operator_distance(StepOperator.from_graph(smp1.graph), StepOperator.from_graph(smp2.graph))
        sig = feature_map_distance(y1, y2)
        eps = max(op, sig)
        rep = feature_map_distance(
            induce_feature_map(scnn_forward_graph(spec, smp1.graph, x1)),
            induce_feature_map(scnn_forward_graph(spec, smp2.graph, x2)),
        )
        out.append(ScnnReport(n1, n2, t, (s1, s2), op, sig, eps, rep, c_l, rep <= c_l * eps + SCNN_SLACK))
    return out


def scnn_rows(reports: Sequence[ScnnReport], graphon: str, label: str, experiment="scnn") -> list[Row]:
    rows = []
    for r in reports:
        for metric in ("op_distance", "signal_distance", "epsilon", "repercussion", "constant"):
            rows.append(Row(experiment, graphon, label, r.n1, r.n2, r.trial, r.seeds[0], metric, getattr(r, metric)))
        rows.append(Row(experiment, graphon, label, r.n1, r.n2, r.trial, r.seeds[0], "holds", float(r.holds)))
    return rows


@dataclass(frozen=True)
class LaplaceResult:
    rows: list
    band_dimension: int
    convergence: list
    commutation: list
    decreasing: bool


def run_laplace(lam: float = 50.0, k: int = 2, sizes: Sequence[int] = (64, 128, 256, 512), sign: float = -1.0, scale="n2") -> LaplaceResult:
    """Band gaps of finite-difference operators against the circle Laplacian."""
    if lam <= 0 or k < 1:
        raise ConfigError("need lambda > 0 and k >= 1")
    model = laplace_model()
    conv, comm, rows = [], [], []
    for n in sizes:
        t = laplace_operator(n, scale)
        a = unbdd_convergence_gap(model, lam, t, sign)
        b = approx_commutation_gap(model, lam, t, k)
        conv.append(a)
        comm.append(b)
        rows.append(Row("laplace", "laplace", f"x^{k}", n, 0, 0, 0, "convergence_gap", a))
        rows.append(Row("laplace", "laplace", f"x^{k}", n, 0, 0, 0, "commutation_gap", b))
    dec = monotone_with_noise(conv) and (k == 1 or monotone_with_noise(comm))
    return LaplaceResult(rows, band_dimension(model, lam), conv, comm, dec)
