"""Homomorphism densities, cut norm and aligned cut distance."""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass

import numpy as np

from .core import Graph, GraphonEvaluator, Partition, StepGraphon

logger = logging.getLogger(__name__)

MAX_MOTIF_NODES = 6
HOM_BUDGET = 10**9
CUT_EXACT_MAX_CELLS = 20
CUT_EXACT_MAX_ALIGN = 8


class BudgetError(RuntimeError):
    """Exact enumeration would exceed its budget."""


@dataclass(frozen=True)
class Motif:
    """Simple graph on nodes ``0..nodes-1``."""

    nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not 1 <= self.nodes <= MAX_MOTIF_NODES:
            raise ValueError(f"motif must have 1..{MAX_MOTIF_NODES} nodes")
        seen = set()
        norm = []
        for u, v in self.edges:
            if not (0 <= u < self.nodes and 0 <= v < self.nodes):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            if u == v:
                raise ValueError("loops are not allowed in a simple motif")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    @classmethod
    def complete(cls, k: int) -> "Motif":
        return cls(k, tuple(itertools.combinations(range(k), 2)))

    @classmethod
    def path(cls, k: int) -> "Motif":
        return cls(k, tuple((i, i + 1) for i in range(k - 1)))

    @classmethod
    def cycle(cls, k: int) -> "Motif":
        return cls(k, tuple((i, (i + 1) % k) for i in range(k)))


def parse_motif(text: str) -> Motif:
    """``K<k>``, ``P<k>`` (path on k nodes), ``C<k>`` or ``edges:0-1,1-2,...``."""
    m = re.fullmatch(r"([KPC])(\d)", text)
    if m:
        k = int(m.group(2))
        return {"K": Motif.complete, "P": Motif.path, "C": Motif.cycle}[m.group(1)](k)
    if text.startswith("edges:"):
        pairs = []
        for tok in text[6:].split(","):
            a, b = tok.split("-")
            pairs.append((int(a), int(b)))
        return Motif(max(max(p) for p in pairs) + 1, tuple(pairs))
    raise ValueError(f"unknown motif spec {text!r}")


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _contract(f: Motif, node_weights: np.ndarray, b: np.ndarray) -> float:
    k = b.shape[0]
    if k ** f.nodes > HOM_BUDGET:
        raise BudgetError(
            f"{k}^{f.nodes} node maps exceed the exact budget; use hom_density_mc instead"
        )
    idx = _LETTERS[: f.nodes]
    terms = [idx[v] for v in range(f.nodes)] + [idx[u] + idx[v] for u, v in f.edges]
    ops = [node_weights] * f.nodes + [b] * f.m
    return float(np.einsum(",".join(terms) + "->", *ops, optimize=True))


def hom_number(f: Motif, g: Graph) -> float:
    """``sum over maps psi: V(F) -> V(G)`` of ``prod_{uv in E(F)} A[psi(u), psi(v)]``."""
    return _contract(f, np.ones(g.n), g.gwm())


def hom_density_graph(f: Motif, g: Graph, signed: bool = False) -> float:
    """``|hom(F, G)| / n^{|V(F)|}``; ``signed=True`` drops the absolute value."""
    t = hom_number(f, g) / float(g.n) ** f.nodes
    return t if signed else abs(t)


def hom_density_step(f: Motif, w: StepGraphon) -> float:
    """Signed integral ``int prod W(u_a, u_b) prod du`` for a step graphon."""
    return _contract(f, w.partition.measures, w.values)


def hom_density_mc(f: Motif, w: GraphonEvaluator, samples: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo estimate and standard error of ``t(F, W)``."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    u = rng.random((samples, f.nodes))
    vals = np.ones(samples)
    for a, b in f.edges:
        vals = vals * w(u[:, a], u[:, b])
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


# -- cut norm ----------------------------------------------------------------


def _mask_bits(masks: np.ndarray, k: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(k)) & 1).astype(float)


def _weighted(w: StepGraphon) -> np.ndarray:
    mu = w.partition.measures
    return mu[:, None] * w.values * mu[None, :]


def _best_for_rows(bits: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For row sets ``S`` (0/1 rows of ``bits``) the best positive and negative column sums."""
    col = bits @ m
    return np.maximum(col, 0).sum(axis=1), np.maximum(-col, 0).sum(axis=1)


def _cells(mask: int, k: int) -> frozenset:
    return frozenset(i for i in range(k) if mask >> i & 1)


def cut_norm_exact(w: StepGraphon, chunk: int = 1 << 16) -> tuple[float, frozenset, frozenset]:
    """Exact cut norm of a step graphon and maximizing cell sets ``(S, T)``.

    For fixed ``S`` the optimal ``T`` takes exactly the columns whose
    ``S``-restricted weighted sums have the chosen sign, so only the ``2^k``
    row sets are enumerated.  Ties go to the smallest subset encoding.
    """
    m = _weighted(w)
    k = m.shape[0]
    if k > CUT_EXACT_MAX_CELLS:
        raise BudgetError(f"{k} cells > {CUT_EXACT_MAX_CELLS}; use cut_norm_heuristic")
    best, best_mask, best_sign = -1.0, 0, 1
    for start in range(0, 1 << k, chunk):
        masks = np.arange(start, min(1 << k, start + chunk))
        pos, neg = _best_for_rows(_mask_bits(masks, k), m)
        for vals, sign in ((pos, 1), (neg, -1)):
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, best_mask, best_sign = float(vals[i]), int(masks[i]), sign
    col = _mask_bits(np.array([best_mask]), k)[0] @ m
    t_cells = frozenset(np.flatnonzero(sign_sel(col, best_sign)).tolist())
    return best, _cells(best_mask, k), t_cells


def sign_sel(col: np.ndarray, sign: int) -> np.ndarray:
    return col > 0 if sign > 0 else col < 0


def rectangle_integral(w: StepGraphon, s_cells, t_cells) -> float:
    """``int_{S x T} W`` for unions of cells."""
    m = _weighted(w)
    s = np.zeros(m.shape[0])
    t = np.zeros(m.shape[0])
    s[list(s_cells)] = 1
    t[list(t_cells)] = 1
    return float(s @ m @ t)


def cut_norm_heuristic(w: StepGraphon, restarts: int = 20, seed: int = 0) -> float:
    """Lower bound on the cut norm from alternating best responses plus single-cell flips."""
    m = _weighted(w)
    k = m.shape[0]
    if k == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for sign in (1, -1):
        sm = sign * m
        starts = [np.ones(k, bool)] + [rng.random(k) < 0.5 for _ in range(restarts)]
        for s in starts:
            val = _local_search(sm, s.copy())
            best = max(best, val)
    return best


def _value(sm: np.ndarray, s: np.ndarray) -> float:
    return float(np.maximum(s.astype(float) @ sm, 0).sum())


def _local_search(sm: np.ndarray, s: np.ndarray) -> float:
    k = sm.shape[0]
    cur = _value(sm, s)
    improved = True
    while improved:
        improved = False
        # best response for S given T, then T is implied by S
        t = (s.astype(float) @ sm) > 0
        s_new = (sm @ t.astype(float)) > 0
        v = _value(sm, s_new)
        if v > cur + 1e-15:
            s, cur, improved = s_new, v, True
            continue
        for i in range(k):
            s[i] = ~s[i]
            v = _value(sm, s)
            if v > cur + 1e-15:
                cur, improved = v, True
                break
            s[i] = ~s[i]
    return cur


# -- aligned cut distance ----------------------------------------------------


def _check_aligned_pair(a: StepGraphon, b: StepGraphon) -> int:
    if a.partition.k != b.partition.k:
        raise ValueError(
            f"size mismatch ({a.partition.k} vs {b.partition.k}); fractional overlays are not supported"
        )
    if not (a.partition.is_uniform() and b.partition.is_uniform()):
        raise ValueError("aligned cut distance needs uniform partitions")
    return a.partition.k


def cut_distance_aligned(a: StepGraphon, b: StepGraphon, mode: str = "exact") -> float:
    """``min_pi ||a - pi(b)||_cut`` over node permutations; an upper bound on the cut distance."""
    n = _check_aligned_pair(a, b)
    if mode == "exact":
        return _cut_distance_exact(a.values, b.values, n)
    if mode == "heuristic":
        return _cut_distance_descent(a.values, b.values, n)
    raise ValueError(f"unknown mode {mode!r}")


def _cut_distance_exact(va: np.ndarray, vb: np.ndarray, n: int, chunk: int = 2048) -> float:
    if n > CUT_EXACT_MAX_ALIGN:
        raise BudgetError(f"exact alignment needs n <= {CUT_EXACT_MAX_ALIGN}")
    bits = _mask_bits(np.arange(1 << n), n)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    scale = 1.0 / n**2
    best = np.inf
    for start in range(0, len(perms), chunk):
        p = perms[start : start + chunk]
        pb = vb[p[:, :, None], p[:, None, :]]
        d = (va[None] - pb) * scale
        col = np.einsum("mi,pij->pmj", bits, d)
        val = np.maximum(
            np.maximum(col, 0).sum(axis=2), np.maximum(-col, 0).sum(axis=2)
        ).max(axis=1)
        best = min(best, float(val.min()))
    return best


def _cut(values: np.ndarray, n: int) -> float:
    w = StepGraphon(Partition.uniform(n), values)
    if n <= CUT_EXACT_MAX_CELLS:
        return cut_norm_exact(w)[0]
    return cut_norm_heuristic(w, restarts=10, seed=0)


def _cut_distance_descent(va: np.ndarray, vb: np.ndarray, n: int) -> float:
    if n > CUT_EXACT_MAX_CELLS:
        logger.warning("n=%d: cut norms are heuristic, result is an estimate only", n)
    oa = np.argsort(va.sum(axis=1), kind="stable")
    ob = np.argsort(vb.sum(axis=1), kind="stable")
    # node oa[r] of a is matched with node ob[r] of b
    perm = np.empty(n, dtype=np.intp)
    perm[oa] = ob
    cur = _cut(va - vb[np.ix_(perm, perm)], n)
    improved = True
    while improved and cur > 0:
        improved = False
        for i, j in itertools.combinations(range(n), 2):
            perm[i], perm[j] = perm[j], perm[i]
            v = _cut(va - vb[np.ix_(perm, perm)], n)
            if v < cur - 1e-15:
                cur, improved = v, True
            else:
                perm[i], perm[j] = perm[j], perm[i]
    return cur
