"""Self-verification suite: every structural identity and inequality of the
library, checked on seeded random instances.

Each check returns a :class:`CheckResult`; :func:`verify_suite` runs them all
and assembles a JSON-serializable report whose bytes depend only on the seed.
The per-check functions take an instance count so the acceptance tests can run
them at full size while ``verify`` stays fast.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import harness
from .core import Graph, GraphSignal, Partition, Permutation, StepGraphon, relabel
from .filters import FilterSpec, parse_filter, periodic_extension, stability_constant
from .induction import common_refinement, induce_feature_map, induce_signal
from .motifs import Motif, cut_distance_aligned, cut_norm_exact, hom_density_graph, hom_density_step
from .scnn import ACTIVATIONS, ScnnSpec, random_spec, scnn_forward_graph, scnn_forward_graphon
from .spectral import (
    StepOperator,
    filter_apply,
    filter_matrix,
    filter_step_operator,
    operator_norm,
    schatten_norm,
    unitary_exp,
)
from .unbounded import (
    ModelError,
    SpectralModel,
    approx_commutation_gap,
    band_dimension,
    band_projection,
    filter_commutation_gap,
    laplace_model,
    laplace_operator,
)

EXACT_TOL = 1e-8
INEQ_SLACK = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    property: str
    passed: bool
    instances: int
    worst: float  # largest observed error (identities) or violation margin (inequalities)
    tolerance: float

    def as_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinities; unbounded tolerances are reported as null
        d["worst"] = float(f"{self.worst:.6g}") if math.isfinite(self.worst) else None
        d["tolerance"] = self.tolerance if math.isfinite(self.tolerance) else None
        return d


# -- random instances ----------------------------------------------------------


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    m = rng.uniform(-1, 1, size=(n, n))
    return scale * (m + m.T) / 2


def random_gso(rng, n: int, norm: float = 1.0) -> np.ndarray:
    """Symmetric matrix with spectral norm exactly ``norm``."""
    m = random_symmetric(rng, n)
    return norm * m / np.max(np.abs(np.linalg.eigvalsh(m)))


def random_polynomial(rng, degree: int, zero_at_zero: bool = True) -> FilterSpec:
    c = rng.uniform(-1, 1, size=degree + 1)
    if zero_at_zero:
        c[0] = 0.0
    return FilterSpec.polynomial(c, name="random-poly")


def random_partition(rng, k: int) -> Partition:
    inner = np.sort(rng.uniform(0.02, 0.98, size=k - 1))
    inner = inner[np.diff(np.r_[0.0, inner]) > 1e-3]
    return Partition(np.r_[0.0, inner, 1.0])


def random_step_graphon(rng, k: int, uniform: bool = True, bound: float = 1.0) -> StepGraphon:
    p = Partition.uniform(k) if uniform else random_partition(rng, k)
    return StepGraphon(p, random_symmetric(rng, p.k, bound))


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = np.max(np.abs(b)) if b.size else 0.0
    err = np.max(np.abs(a - b)) if a.size else 0.0
    return float(err / scale) if scale > 0 else float(err)


def _identity(name, prop, errors, tol) -> CheckResult:
    worst = max(errors) if errors else 0.0
    return CheckResult(name, prop, bool(worst <= tol), len(errors), worst, tol)


def _inequality(name, prop, margins, slack) -> CheckResult:
    """``margins`` are ``lhs - rhs``; the check passes when all are ``<= slack``."""
    worst = max(margins) if margins else -math.inf
    return CheckResult(name, prop, bool(worst <= slack), len(margins), worst, slack)


# -- exact identities ------------------------------------------------------------


def check_filter_induction(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(2, 65))
        g = Graph(random_gso(rng, n))
        h = random_polynomial(rng, int(rng.integers(1, 7)))
        got = filter_step_operator(h, StepOperator.from_graph(g)).values
        errs.append(_rel(got, n * filter_matrix(h, g.gso)))
    return _identity(
        "filter_induction_identity",
        "filtering the induced operator equals inducing n*h(gso), for h(0)=0",
        errs, EXACT_TOL,
    )


def check_filtered_signal(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(2, 65))
        g = Graph(random_gso(rng, n))
        h = random_polynomial(rng, int(rng.integers(0, 7)), zero_at_zero=False)
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        want = induce_signal(filter_matrix(h, g.gso) @ x).values
        got = filter_apply(h, StepOperator.from_graph(g), induce_signal(x)).values
        errs.append(_rel(got, want))
    return _identity(
        "filtered_signal_identity",
        "inducing h(gso)x equals the graphon filter applied to the induced signal",
        errs, EXACT_TOL,
    )


def check_norm_scaling(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(1, 65))
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        y = rng.normal(size=n) + 1j * rng.normal(size=n)
        px, py = induce_signal(x), induce_signal(y)
        errs.append(_rel(px.norm(), GraphSignal(x).norm() / math.sqrt(n)))
        errs.append(_rel(px.inner(py), GraphSignal(x).inner(GraphSignal(y)) / n))
    return _identity(
        "induced_norm_scaling",
        "induced signals scale norms by 1/sqrt(n) and inner products by 1/n",
        errs, EXACT_TOL,
    )


def check_induced_spectrum(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(2, 65))
        g = Graph(random_gso(rng, n, rng.uniform(0.1, 3)))
        got = np.linalg.eigvalsh(StepOperator.from_graph(g).sym)
        errs.append(_rel(got, np.linalg.eigvalsh(g.gso)))
    return _identity(
        "induced_spectrum", "the induced operator has the spectrum of the gso", errs, EXACT_TOL
    )


def _random_scnn(rng, layers: int, max_width: int, zero_at_zero: bool) -> ScnnSpec:
    widths = [int(w) for w in rng.integers(1, max_width + 1, size=layers + 1)]
    filters, weights = [], []
    for l in range(layers):
        fo, fi = widths[l + 1], widths[l]
        filters.append(
            [[random_polynomial(rng, int(rng.integers(1, 4)), zero_at_zero) for _ in range(fi)] for _ in range(fo)]
        )
        weights.append(rng.uniform(-1, 1, size=(fo, fi)))
    act = sorted(ACTIVATIONS)[int(rng.integers(len(ACTIVATIONS)))]
    return ScnnSpec.build(widths, filters, weights, act)


def check_scnn_commutation(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        s = _random_scnn(rng, int(rng.integers(1, 4)), 4, zero_at_zero=False)
        n = int(rng.integers(2, 33))
        g = Graph(random_gso(rng, n))
        x = rng.normal(size=(s.widths[0], n))
        want = np.array([p.values for p in induce_feature_map(scnn_forward_graph(s, g, x))])
        got = scnn_forward_graphon(s, StepOperator.from_graph(g), induce_feature_map(x))
        errs.append(_rel(np.array([p.values for p in got]), want))
    return _identity(
        "scnn_commutation",
        "the network on the induced operator and signals equals inducing the graph network output",
        errs, EXACT_TOL,
    )


def check_relabel_spectrum(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(1, 33))
        g = Graph(random_symmetric(rng, n))
        p = Permutation(rng.permutation(n))
        errs.append(_rel(np.linalg.eigvalsh(relabel(g, p).gso), np.linalg.eigvalsh(g.gso)))
    return _identity("relabel_spectrum", "relabeling preserves the gso spectrum", errs, 1e-12)


def check_refinement_exact(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        a = random_step_graphon(rng, int(rng.integers(1, 9)), uniform=bool(rng.integers(2)))
        b = random_step_graphon(rng, int(rng.integers(1, 9)), uniform=bool(rng.integers(2)))
        a2, b2 = common_refinement(a, b)
        u, v = rng.random(200), rng.random(200)
        errs.append(float(max(np.max(np.abs(a2(u, v) - a(u, v))), np.max(np.abs(b2(u, v) - b(u, v))))))
    return _identity("refinement_exact", "common refinement does not change the kernels", errs, 0.0)


SMALL_MOTIFS = [
    Motif.complete(2), Motif.path(3), Motif.complete(3), Motif.path(4), Motif.cycle(4),
    Motif(4, ((0, 1), (0, 2), (0, 3))), Motif.complete(4), Motif(3, ()),
]


def check_hom_induced(rng, instances: int = 20) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(1, 7))
        g = Graph(random_symmetric(rng, n))
        w = StepGraphon(Partition.uniform(n), g.gwm())
        for f in SMALL_MOTIFS:
            errs.append(_rel(hom_density_step(f, w), hom_density_graph(f, g, signed=True)))
    return _identity(
        "hom_density_induced", "graph and induced-graphon homomorphism densities agree", errs, 1e-12
    )


def check_functional_norm(rng, instances: int = 50) -> CheckResult:
    errs = []
    for _ in range(instances):
        n = int(rng.integers(1, 33))
        m = random_symmetric(rng, n)
        h = random_polynomial(rng, int(rng.integers(0, 5)), zero_at_zero=False)
        want = np.max(np.abs(h(np.linalg.eigvalsh(m))))
        errs.append(_rel(np.linalg.norm(filter_matrix(h, m), 2), want))
    return _identity(
        "functional_calculus_norm", "the norm of h(A) is the max of |h| over the spectrum", errs, EXACT_TOL
    )


# -- inequalities ------------------------------------------------------------------


def check_sandwich(rng, instances: int = 100, ps=(3, 4, 6)) -> CheckResult:
    margins = []
    for _ in range(instances):
        w = random_step_graphon(rng, int(rng.integers(1, 13)), uniform=bool(rng.integers(2)))
        cut = cut_norm_exact(w)[0]
        op = operator_norm(StepOperator(w))
        margins.append(cut - op)
        for p in ps:
            sp = schatten_norm(StepOperator(w), p)
            margins.append(op - sp)
            margins.append(sp - math.sqrt(2) * cut ** (0.5 - 1.0 / p))
    return _inequality(
        "cut_operator_schatten_sandwich",
        "cut <= op <= schatten_p <= sqrt(2) cut^(1/2-1/p) for kernels bounded by 1",
        margins, INEQ_SLACK,
    )


def check_counting_lemma(rng, instances: int = 5, n: int = 6) -> CheckResult:
    motifs = [Motif.complete(2), Motif.path(3), Motif.path(4), Motif.complete(3), Motif(4, ((0, 1), (0, 2), (0, 3)))]
    margins = []
    for _ in range(instances):
        u = StepGraphon(Partition.uniform(n), random_symmetric(rng, n))
        w = StepGraphon(Partition.uniform(n), random_symmetric(rng, n))
        d = cut_distance_aligned(u, w, "exact")
        for f in motifs:
            margins.append(abs(hom_density_step(f, u) - hom_density_step(f, w)) - 4 * f.m * d)
    return _inequality(
        "counting_lemma",
        "|t(F,U) - t(F,W)| <= 4 e(F) times the aligned cut distance",
        margins, INEQ_SLACK,
    )


def check_exp_lipschitz(rng, instances: int = 200) -> CheckResult:
    margins = []
    for _ in range(instances):
        n = int(rng.integers(1, 33))
        a = random_symmetric(rng, n, rng.uniform(0.1, 3))
        b = a + random_symmetric(rng, n, 10 ** rng.uniform(-3, 0))
        t = rng.uniform(-10, 10)
        lhs = np.linalg.norm(unitary_exp(t, a) - unitary_exp(t, b), 2)
        margins.append(lhs - abs(t) * np.linalg.norm(a - b, 2))
    return _inequality(
        "exponential_lipschitz", "|exp(itA) - exp(itB)| <= |t| |A - B|", margins, INEQ_SLACK
    )


MATRIX_STABILITY_FILTERS = ("sq", "cube-minus-id", "rat:0,1/2,1")


def check_matrix_stability(rng, instances: int = 20, gamma: float = 1.0) -> CheckResult:
    margins = []
    for text in MATRIX_STABILITY_FILTERS:
        h = parse_filter(text, gamma)
        c = stability_constant(h).lemma_constant
        for eps in (1e-1, 1e-2, 1e-3):
            for _ in range(instances):
                n = int(rng.integers(2, 17))
                a = random_gso(rng, n, gamma * rng.uniform(0.2, 1.0))
                b = a + random_gso(rng, n, eps)
                nb = np.max(np.abs(np.linalg.eigvalsh(b)))
                if nb > gamma:
                    b = b * gamma / nb
                d = np.linalg.norm(a - b, 2)
                lhs = np.linalg.norm(filter_matrix(h, a) - filter_matrix(h, b), 2)
                margins.append(lhs - c * d)
    return _inequality(
        "matrix_filter_stability",
        "|h(A) - h(B)| <= C |A - B| with the computed Fourier constant",
        margins, 1e-8,
    )


def check_constant_sampling(rng, instances: int = 1) -> CheckResult:
    errs = []
    for text in ("sq", "cube-minus-id"):
        h = parse_filter(text)
        a = stability_constant(h, sample_count=2**14).lemma_constant
        b = stability_constant(h, sample_count=2**15).lemma_constant
        errs.append(abs(a - b) / abs(b))
    return _identity(
        "stability_constant_sampling", "the constant is insensitive to doubling the sample count", errs, 1e-6
    )


def check_extension(rng, instances: int = 1) -> CheckResult:
    errs = []
    for text in ("id", "sq", "cube-minus-id", "rat:0,1/2,1"):
        h = parse_filter(text)
        ext = periodic_extension(h)
        x = np.linspace(-h.domain_bound, h.domain_bound, 1000)
        errs.append(float(np.max(np.abs(ext(x) - h(x)))))
    return _identity("periodic_extension_agrees", "the periodic extension equals h on the domain", errs, 1e-12)


def check_linear_stability(rng, instances: int = 5) -> CheckResult:
    margins = []
    seed = int(rng.integers(2**31))
    for g in ("product", "sbm:2,0.8,0.2"):
        for r in harness.run_transfer_bound(g, "sq", 16, 32, trials=instances, seed=seed):
            margins.append(r.lhs - r.constant * r.rhs_raw)
    return _inequality(
        "filter_transfer_bound",
        "filtered induced operators differ by at most C times the induced operators",
        margins, harness.TRANSFER_SLACK,
    )


def gate_passing_spec(rng, widths=(2, 2, 2), activation="relu") -> ScnnSpec:
    pool = [parse_filter("sq"), parse_filter("cube-minus-id")]
    return random_spec(rng, list(widths), pool, activation, weight_norm=1.0)


def check_scnn_transfer(rng, instances: int = 5) -> CheckResult:
    margins = []
    for _ in range(instances):
        s = gate_passing_spec(rng)
        seed = int(rng.integers(2**31))
        for r in harness.run_scnn_transfer(s, "sbm:2,0.8,0.2", 16, 32, trials=1, seed=seed):
            margins.append(r.repercussion - r.constant * r.epsilon)
    return _inequality(
        "scnn_transfer_bound",
        "network outputs differ by at most C_L times max(operator, signal) distance",
        margins, harness.SCNN_SLACK,
    )


def check_scnn_contractive(rng, instances: int = 20) -> CheckResult:
    margins = []
    for _ in range(instances):
        act = sorted(ACTIVATIONS)[int(rng.integers(len(ACTIVATIONS)))]
        s = gate_passing_spec(rng, (int(rng.integers(1, 4)),) * int(rng.integers(2, 5)), act)
        n = int(rng.integers(2, 33))
        g = Graph(random_gso(rng, n, rng.uniform(0.1, 1.0)))
        x = rng.normal(size=(s.widths[0], n))
        y_in = induce_feature_map(x)
        y_out = induce_feature_map(scnn_forward_graph(s, g, x))
        margins.append(max(p.norm() for p in y_out) - max(p.norm() for p in y_in))
    return _inequality(
        "scnn_contractive",
        "with |h| <= 1, unit row-sum weights and contractive activations, output norms do not grow",
        margins, INEQ_SLACK,
    )


def check_activation_contractive(rng, instances: int = 1000) -> CheckResult:
    margins = []
    for act in ACTIVATIONS.values():
        x, y = rng.normal(size=instances) * 3, rng.normal(size=instances) * 3
        margins.append(float(np.max(np.abs(act.func(x) - act.func(y)) - act.lipschitz * np.abs(x - y))))
    return _inequality("activation_lipschitz", "activations respect their Lipschitz constants", margins, 1e-12)


# -- unbounded operators -----------------------------------------------------------


def check_projector(rng, instances: int = 4) -> CheckResult:
    errs = []
    model = laplace_model()
    for lam in (1.0, 50.0, 200.0, 1000.0)[:instances]:
        p = band_projection(model, lam).matrix(128)
        errs.append(float(np.max(np.abs(p @ p - p))))
        errs.append(float(np.max(np.abs(p - p.conj().T))))
        errs.append(float(abs(np.linalg.matrix_rank(p, tol=1e-6) - band_dimension(model, lam))))
    return _identity("band_projector", "band projectors are idempotent, self-adjoint, of band rank", errs, 1e-9)


def check_commutation_linearity(rng, instances: int = 10) -> CheckResult:
    margins = []
    model = laplace_model()
    for _ in range(instances):
        n = int(rng.choice([16, 32, 64]))
        t = laplace_operator(n)
        a, b = rng.uniform(-1, 1, size=2)
        h = FilterSpec.polynomial([0.0, a, b], domain_bound=np.inf)
        lhs = filter_commutation_gap(model, 50.0, t, h)
        rhs = abs(a) * approx_commutation_gap(model, 50.0, t, 1) + abs(b) * approx_commutation_gap(model, 50.0, t, 2)
        # both sides agree exactly up to eigensolver roundoff of size eps * |T|^2
        scale = abs(a) * operator_norm(t) + abs(b) * operator_norm(t) ** 2
        margins.append((lhs - rhs) / scale)
    return _inequality(
        "commutation_linearity",
        "the commutation gap of a*x + b*x^2 is at most |a| gap_1 + |b| gap_2",
        margins, INEQ_SLACK,
    )


def check_square_summable_gate(rng, instances: int = 1) -> CheckResult:
    rejected = 0
    for lam in (lambda k: (np.abs(k) + 1.0) ** -0.25, lambda k: np.zeros(np.shape(k))):
        try:
            SpectralModel(lam, "probe")
        except ModelError:
            rejected += 1
    accepted = True
    try:
        laplace_model()
    except ModelError:
        accepted = False
    errs = [float(2 - rejected), 0.0 if accepted else 1.0]
    return _identity(
        "square_summability_gate", "models with infinitely many band eigenvalues are rejected", errs, 0.0
    )


def check_laplace_trend(rng, instances: int = 1) -> CheckResult:
    res = harness.run_laplace(50.0, 2, (32, 64, 128, 256))
    ok = res.decreasing and res.convergence[-1] <= 0.1 * res.convergence[0]
    return CheckResult(
        "laplace_band_convergence",
        "finite-difference band gaps shrink with the grid size",
        bool(ok), len(res.convergence), float(res.convergence[-1]), 0.1 * res.convergence[0],
    )


def check_grid_trend(rng, instances: int = 1) -> CheckResult:
    cfg = harness.ExperimentConfig("verify", graphon="product", filter="sq", sizes=[16, 32, 64, 128])
    med = list(harness.median_by_size(harness.run_convergence(cfg)).values())
    return CheckResult(
        "grid_convergence_trend", "filtered grid samples approach the reference",
        harness.strictly_decreasing(med), len(med), float(med[-1]), float(med[0]),
    )


def check_schatten_trend(rng, instances: int = 20, p: float = 4.0) -> CheckResult:
    """Recorded only: ratio of Schatten distances after and before filtering."""
    h = parse_filter("sq")
    ratios = []
    for _ in range(instances):
        n = int(rng.integers(4, 33))
        a = random_gso(rng, n, 0.9)
        b = a + random_gso(rng, n, 0.05)
        ta, tb = StepOperator.from_graph(Graph(a)), StepOperator.from_graph(Graph(b))
        num = schatten_norm(filter_step_operator(h, ta) - filter_step_operator(h, tb), p)
        ratios.append(num / schatten_norm(ta - tb, p))
    worst = max(ratios)
    return CheckResult(
        "schatten_lipschitz_ratio", "filtered/unfiltered Schatten distance ratio stays bounded (recorded)",
        bool(np.isfinite(worst)), len(ratios), worst, math.inf,
    )


CHECKS: dict[str, Callable] = {
    f.__name__[len("check_"):]: f
    for f in (
        check_filter_induction, check_filtered_signal, check_norm_scaling, check_induced_spectrum,
        check_scnn_commutation, check_relabel_spectrum, check_refinement_exact, check_hom_induced,
        check_functional_norm, check_sandwich, check_counting_lemma, check_exp_lipschitz,
        check_matrix_stability, check_constant_sampling, check_extension, check_linear_stability,
        check_scnn_transfer, check_scnn_contractive, check_activation_contractive, check_projector,
        check_commutation_linearity, check_square_summable_gate, check_laplace_trend, check_grid_trend,
        check_schatten_trend,
    )
}


def check_rng(seed: int, key: str) -> np.random.Generator:
    return np.random.default_rng(harness.trial_seed(seed, "verify:" + key, 0, 0))


def verify_suite(seed: int = 0, only=None) -> dict:
    results = []
    for key, fn in CHECKS.items():
        if only is not None and key not in only:
            continue
        results.append(fn(check_rng(seed, key)))
    failures = [r.name for r in results if not r.passed]
    return {
        "seed": seed,
        "passed": not failures,
        "failures": failures,
        "checks": [r.as_dict() for r in results],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
