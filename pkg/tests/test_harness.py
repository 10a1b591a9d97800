import json
import math

import numpy as np
import pytest

from graphon_transfer import cli, harness, verify
from graphon_transfer.core import Graph, write_gso
from graphon_transfer.filters import RegularityError, parse_filter
from graphon_transfer.induction import induce_signal
from graphon_transfer.scnn import spec_to_dict
from graphon_transfer.harness import (
    ConfigError,
    ExperimentConfig,
    SeedPairingError,
    empirical_rate,
    median_by_size,
    monotone_with_noise,
    parse_graphon,
    rows_to_csv,
    run_convergence,
    run_laplace,
    run_scnn_transfer,
    run_transfer_bound,
    sample_graph,
    sample_nodes,
    sample_signal,
    strictly_decreasing,
    trial_seed,
)
from graphon_transfer.spectral import operator_distance


def midpoint_step_error(n):
    """Exact ``||step(f(midpoints)) - f||_2`` for ``f(u) = u`` from per-cell antiderivatives."""
    a = np.arange(n) / n
    b = a + 1 / n
    c = (a + b) / 2
    return math.sqrt(float(np.sum(((c - a) ** 3 - (c - b) ** 3) / 3)))


class TestGraphonFamilies:
    @pytest.mark.parametrize("text", ["const:0.3", "product", "min", "expdist:2", "sbm:3,0.8,0.2"])
    def test_symmetric_and_bounded(self, text):
        parse_graphon(text).check(probes=10_000, seed=3)

    def test_values(self):
        u = np.array([0.1, 0.6])
        v = np.array([0.7, 0.2])
        np.testing.assert_allclose(parse_graphon("product")(u, v), [0.07, 0.12])
        np.testing.assert_allclose(parse_graphon("min")(u, v), [0.1, 0.2])
        np.testing.assert_allclose(parse_graphon("sbm:2,0.8,0.2")(u, v), [0.2, 0.2])
        np.testing.assert_allclose(parse_graphon("sbm:2,0.8,0.2")(u, u), [0.8, 0.8])

    def test_step_file(self, tmp_path):
        p = tmp_path / "g.gso"
        write_gso(Graph(np.array([[0.1, 0.4], [0.4, 0.9]])), p)
        w = parse_graphon(f"step:{p}")
        np.testing.assert_allclose(w(np.array([0.2, 0.2]), np.array([0.3, 0.8])), [0.1, 0.4])

    @pytest.mark.parametrize("text", ["sbm:2,0.8", "const:x", "ring", "product:3"])
    def test_bad_specs(self, text):
        with pytest.raises(ConfigError):
            parse_graphon(text)


class TestSampling:
    def test_product_grid_n2(self):
        g = sample_graph(parse_graphon("product"), 2, "grid").graph
        np.testing.assert_allclose(g.gwm(), [[0.0625, 0.1875], [0.1875, 0.5625]], atol=1e-15)

    def test_signal_grid_n4(self):
        np.testing.assert_allclose(sample_signal("u", 4, "grid"), [0.125, 0.375, 0.625, 0.875])

    def test_ones(self):
        np.testing.assert_array_equal(sample_signal("one", 5, "iid", 9), np.ones(5))

    def test_iid_sorted_in_unit_interval(self):
        u = sample_nodes(200, "iid", 17)
        assert np.all(np.diff(u) >= 0) and u[0] >= 0 and u[-1] < 1

    def test_bitwise_determinism(self):
        w = parse_graphon("expdist:3")
        a = sample_graph(w, 40, "iid", trial_seed(7, "x", 40, 2)).graph.gso
        b = sample_graph(w, 40, "iid", trial_seed(7, "x", 40, 2)).graph.gso
        assert a.tobytes() == b.tobytes()

    def test_trial_seed_distinct(self):
        seeds = {trial_seed(0, "e", n, t) for n in (8, 16) for t in range(50)}
        assert len(seeds) == 100
        assert trial_seed(0, "e", 8, 0) != trial_seed(1, "e", 8, 0)
        assert 0 <= trial_seed(0, "e", 8, 0) < 2**63

    def test_seed_pairing(self):
        smp = sample_graph(parse_graphon("product"), 10, "iid", 5)
        np.testing.assert_array_equal(sample_signal("u", 10, "iid", 5, pair=smp), smp.nodes)
        with pytest.raises(SeedPairingError):
            sample_signal("u", 10, "iid", 6, pair=smp)
        with pytest.raises(SeedPairingError):
            sample_signal("u", 12, "iid", 5, pair=smp)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            sample_nodes(4, "latin", 0)

    def test_induced_signal_converges(self):
        errs = []
        for n in (16, 32, 64, 128, 256, 512):
            psi = induce_signal(sample_signal("u", n, "grid"))
            # oracle: exact L2 distance between the step function and u
            fine = (np.arange(n * 64) + 0.5) / (n * 64)
            approx = math.sqrt(np.mean(np.abs(psi(fine) - fine) ** 2))
            exact = midpoint_step_error(n)
            assert approx == pytest.approx(exact, rel=1e-3)
            assert exact == pytest.approx(1 / (n * math.sqrt(12)), rel=1e-9)
            errs.append(exact)
        assert strictly_decreasing(errs)


class TestConvergence:
    def test_constant_identity_exact(self):
        rows = run_convergence(ExperimentConfig("c", graphon="const:0.4", filter="id", sizes=[4, 8, 16]))
        assert max(r.value for r in rows) <= 1e-12

    def test_grid_product_square_decreasing(self):
        rows = run_convergence(ExperimentConfig("c", graphon="product", filter="sq", sizes=[16, 32, 64, 128]))
        med = median_by_size(rows)
        assert list(med) == [16, 32, 64, 128]
        assert strictly_decreasing(list(med.values()))
        assert all(r.m == 256 for r in rows)

    def test_iid_trials(self):
        cfg = ExperimentConfig("c", graphon="sbm:2,0.8,0.2", filter="sq", sizes=[8, 16], sampling="iid", trials=3)
        rows = run_convergence(cfg)
        assert len(rows) == 6 and len({r.seed for r in rows}) == 6

    def test_triangle_consistency(self):
        w = parse_graphon("product")
        h = parse_filter("sq")
        ref = harness.reference_operator(w, h, 128)
        ops = {n: harness.filtered_operator(h, sample_graph(w, n, "iid", n).graph) for n in (8, 16, 32)}
        for n in ops:
            for m in ops:
                d = operator_distance(ops[n], ops[m])
                assert d <= operator_distance(ops[n], ref) + operator_distance(ops[m], ref) + 1e-9

    def test_trend_helpers(self):
        assert strictly_decreasing([3, 2, 1]) and not strictly_decreasing([3, 3, 1])
        assert monotone_with_noise([5, 4, 4.5, 3]) and not monotone_with_noise([5, 6, 4, 4.5])
        sizes = [16, 32, 64, 128]
        assert empirical_rate(sizes, [3.0 / n for n in sizes]) == pytest.approx(1.0)
        assert empirical_rate(sizes, [1.0 / n**2 for n in sizes]) == pytest.approx(2.0)


class TestTransferBound:
    def test_same_size_same_seed_is_zero(self):
        for r in run_transfer_bound("product", "sq", 24, 24, trials=3, seed=1):
            assert r.lhs == 0.0 and r.rhs_raw == 0.0 and r.holds

    def test_identity_filter(self):
        reps = run_transfer_bound("sbm:2,0.8,0.2", "id", 16, 32, trials=5, seed=2)
        for r in reps:
            assert r.lhs == pytest.approx(r.rhs_raw, rel=1e-10)
            assert r.constant >= 1 and r.holds

    def test_product_square_holds(self):
        reps = run_transfer_bound("product", "sq", 32, 64, trials=5, seed=3)
        assert all(r.holds for r in reps)

    def test_gate(self):
        with pytest.raises(RegularityError):
            run_transfer_bound("product", "poly:1,1", 8, 16, trials=1)

    def test_rows(self):
        reps = run_transfer_bound("product", "sq", 8, 16, trials=2)
        rows = harness.transfer_rows(reps, "product", "sq")
        assert {r.metric for r in rows} == {"lhs", "rhs_raw", "constant", "holds"}
        assert len(rows) == 8


class TestScnnTransfer:
    def spec(self):
        return verify.gate_passing_spec(np.random.default_rng(4))

    def test_identical_graphs(self):
        for r in run_scnn_transfer(self.spec(), "sbm:2,0.8,0.2", 20, 20, trials=2, seed=5):
            assert r.epsilon == 0.0 and r.repercussion == 0.0 and r.holds

    def test_bound_holds(self):
        reps = run_scnn_transfer(self.spec(), "product", 16, 32, trials=3, seed=6)
        assert all(r.holds for r in reps)
        assert all(r.epsilon == max(r.op_distance, r.signal_distance) for r in reps)

    def test_unnormalized_inputs_rejected(self, monkeypatch):
        monkeypatch.setitem(harness.SIGNALS, "big", lambda u: 3 * np.ones_like(u))
        with pytest.raises(ConfigError, match="normalized"):
            run_scnn_transfer(self.spec(), "product", 8, 16, trials=1, signals=("big",))

    def test_input_features_cycle(self):
        assert harness.input_features(["a", "b"], 3) == ["a", "b", "a"]
        assert harness.input_features([], 2) == ["cos", "cos"]


class TestLaplace:
    def test_default_run(self):
        res = run_laplace()
        assert res.band_dimension == 3 and res.decreasing
        assert len(res.rows) == 8

    def test_k1_commutation_zero(self):
        assert run_laplace(k=1, sizes=(16, 32)).commutation == [0.0, 0.0]

    def test_below_first_mode(self):
        # only k = 0 in the band; the stencil annihilates constants
        res = run_laplace(lam=30.0, sizes=(16, 32))
        assert res.band_dimension == 1
        assert max(res.convergence) <= 1e-9

    def test_bad_parameters(self):
        with pytest.raises(ConfigError):
            run_laplace(lam=-1.0)


class TestCsv:
    def rows(self):
        return run_convergence(ExperimentConfig("c", graphon="product", filter="sq", sizes=[8, 16]))

    def test_deterministic_apart_from_header(self):
        a = rows_to_csv(self.rows()).splitlines()
        b = rows_to_csv(self.rows()).splitlines()
        assert a[0].startswith("# generated ")
        assert a[1:] == b[1:]

    def test_columns_and_roundtrip(self):
        rows = self.rows()
        text = rows_to_csv(rows, timestamp=False).splitlines()
        assert text[0] == ",".join(harness.CSV_COLUMNS)
        values = [float(line.split(",")[-1]) for line in text[1:]]
        assert values == [r.value for r in sorted(rows, key=lambda r: (r.n, r.trial, r.metric))]

    def test_write(self, tmp_path):
        p = tmp_path / "out.csv"
        harness.write_csv(self.rows(), p)
        assert p.read_text().count("\n") == 4


class TestConfig:
    @pytest.mark.parametrize(
        "kw,msg",
        [
            ({"sizes": []}, "empty"),
            ({"sizes": [1, 4]}, ">= 2"),
            ({"sizes": [8, 4]}, "increasing"),
            ({"trials": 0}, "trials"),
            ({"sampling": "random"}, "sampling"),
        ],
    )
    def test_validation(self, kw, msg):
        with pytest.raises(ConfigError, match=msg):
            ExperimentConfig("x", **kw).validate()

    def test_from_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"experiment": "e", "sizes": [4, 8], "graphon": "min"}))
        cfg = ExperimentConfig.from_json(p)
        assert cfg.sizes == [4, 8] and cfg.graphon == "min"

    def test_from_json_unknown_field(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"experiment": "e", "size": [4]}))
        with pytest.raises(ConfigError, match="size"):
            ExperimentConfig.from_json(p)

    def test_from_json_missing_experiment(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{}")
        with pytest.raises(ConfigError, match="experiment"):
            ExperimentConfig.from_json(p)


class TestVerifySuite:
    def test_passes(self):
        report = verify.verify_suite(seed=3)
        assert report["passed"], report["failures"]
        assert len(report["checks"]) == len(verify.CHECKS)

    def test_only(self):
        report = verify.verify_suite(seed=0, only={"projector"})
        assert len(report["checks"]) == 1 and report["passed"]

    def test_report_json_stable(self):
        a = verify.report_json(verify.verify_suite(1, only={"sandwich", "exp_lipschitz"}))
        b = verify.report_json(verify.verify_suite(1, only={"sandwich", "exp_lipschitz"}))
        assert a == b and json.loads(a)["seed"] == 1

    def test_non_finite_serialized_as_null(self):
        r = verify.CheckResult("x", "p", True, 1, math.inf, math.inf)
        assert r.as_dict()["worst"] is None and r.as_dict()["tolerance"] is None

    def test_mutation_is_caught(self, monkeypatch):
        from graphon_transfer import spectral
        from graphon_transfer.core import Partition, StepGraphon

        # drop the factor n in the induced kernel
        monkeypatch.setattr(spectral, "induce_graphon", lambda g: StepGraphon(Partition.uniform(g.n), g.gso))
        report = verify.verify_suite(seed=0, only={"filter_induction"})
        assert not report["passed"]
        assert "filter_induction_identity" in report["failures"]


class TestCli:
    def run(self, capsys, *argv):
        code = cli.main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    def test_verify(self, capsys, tmp_path):
        p = tmp_path / "r.json"
        code, _, _ = self.run(capsys, "verify", "--seed", "5", "--out", str(p))
        assert code == 0 and json.loads(p.read_text())["passed"]

    def test_converge(self, capsys):
        code, out, err = self.run(capsys, "converge", "--sizes", "8,16,32")
        assert code == 0 and "decreasing" in err
        assert out.splitlines()[1] == ",".join(harness.CSV_COLUMNS)

    def test_transfer(self, capsys):
        code, _, err = self.run(capsys, "transfer", "--n1", "8", "--n2", "16", "--trials", "2")
        assert code == 0 and "2/2" in err

    def test_transfer_gate_failure(self, capsys):
        code, _, err = self.run(capsys, "transfer", "--filter", "poly:1,1", "--trials", "1")
        assert code == 2 and "error" in err

    def test_scnn(self, capsys, tmp_path):
        p = tmp_path / "net.json"
        p.write_text(json.dumps(spec_to_dict(verify.gate_passing_spec(np.random.default_rng(0)))))
        code, _, err = self.run(capsys, "scnn", "--spec", str(p), "--n1", "8", "--n2", "16", "--trials", "2")
        assert code == 0 and "C_L" in err

    def test_scnn_requires_spec(self, capsys):
        code, _, err = self.run(capsys, "scnn")
        assert code == 2 and "--spec" in err

    def test_laplace(self, capsys):
        code, _, err = self.run(capsys, "laplace", "--sizes", "32,64,128")
        assert code == 0 and "band dimension 3" in err

    def test_cutnorm(self, capsys, tmp_path):
        p = tmp_path / "g.gso"
        write_gso(Graph(np.array([[0.5, -0.25], [-0.25, 0.5]])), p)
        code, out, _ = self.run(capsys, "cutnorm", "--graph", str(p), "--exact")
        res = json.loads(out)
        # GWM = 2 * gso on P_2; best rectangle takes the diagonal cell: 1.0 / 4
        assert code == 0 and res["value"] == pytest.approx(0.25)
        code, out, _ = self.run(capsys, "cutnorm", "--graph", str(p), "--heuristic", "5")
        assert code == 0 and json.loads(out)["lower_bound"] <= 0.25 + 1e-12

    def test_config_file(self, capsys, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"sizes": [8, 16], "graphon": "min"}))
        code, out, _ = self.run(capsys, "converge", "--config", str(p), "--graphon", "product")
        assert code == 0 and ",product," in out and ",min," not in out

    def test_config_unknown_field(self, capsys, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"sizez": [8]}))
        code, _, err = self.run(capsys, "converge", "--config", str(p))
        assert code == 2 and "sizez" in err and "allowed" in err

    def test_bad_graphon(self, capsys):
        code, _, _ = self.run(capsys, "converge", "--graphon", "ring")
        assert code == 2

    def test_argparse_errors_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["converge", "--sizes", "a,b"])
        assert exc.value.code == 2
