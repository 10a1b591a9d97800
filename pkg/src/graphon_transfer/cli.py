"""Command-line entry point.

Exit codes: 0 success, 1 a checked bound or trend failed, 2 usage or
configuration error.  Every subcommand accepts ``--config FILE`` (JSON);
explicit command-line options override values from the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .core import read_gso
from .filters import RegularityError
from .induction import induce_graphon
from .motifs import BudgetError, cut_norm_exact, cut_norm_heuristic
from .scnn import load_spec
from .verify import report_json, verify_suite

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "verify": {"seed": 0, "out": None},
    "converge": {
        "graphon": "product", "filter": "sq", "sizes": [16, 32, 64, 128], "sampling": "grid",
        "trials": 1, "seed": 0, "out": None, "experiment": "converge",
    },
    "transfer": {
        "graphon": "product", "filter": "sq", "n1": 32, "n2": 64, "trials": 20, "seed": 0,
        "sampling": "iid", "out": None,
    },
    "scnn": {
        "spec": None, "graphon": "sbm:2,0.8,0.2", "n1": 64, "n2": 128, "trials": 20, "seed": 0,
        "sampling": "iid", "signals": ["cos", "sin"], "out": None,
    },
    "laplace": {"lambda": 50.0, "k": 2, "sizes": [64, 128, 256, 512], "out": None},
    "cutnorm": {"graph": None, "exact": False, "heuristic": None, "seed": 0},
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphon-transfer", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file with option values")
        return sp

    sp = cmd("verify", "run the self-verification suite and print a JSON report")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = cmd("converge", "distances of filtered samples to a high-resolution reference")
    sp.add_argument("--graphon")
    sp.add_argument("--filter")
    sp.add_argument("--sizes", type=_int_list)
    sp.add_argument("--sampling", choices=["grid", "iid"])
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = cmd("transfer", "check the filter transfer bound on sampled graph pairs")
    sp.add_argument("--graphon")
    sp.add_argument("--filter")
    sp.add_argument("--n1", type=int)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--sampling", choices=["grid", "iid"])
    sp.add_argument("--out")

    sp = cmd("scnn", "check the end-to-end network transfer bound")
    sp.add_argument("--spec")
    sp.add_argument("--graphon")
    sp.add_argument("--n1", type=int)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--sampling", choices=["grid", "iid"])
    sp.add_argument("--signals", type=_str_list)
    sp.add_argument("--out")

    sp = cmd("laplace", "finite-difference band gaps against the circle Laplacian")
    sp.add_argument("--lambda", dest="lambda", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--sizes", type=_int_list)
    sp.add_argument("--out")

    sp = cmd("cutnorm", "cut norm of the graphon induced by a gso file")
    sp.add_argument("--graph")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", default=None)
    g.add_argument("--heuristic", type=int, metavar="RESTARTS")
    sp.add_argument("--seed", type=int)
    return p


class UsageError(Exception):
    pass


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the ``--config`` file and explicit options (in that order)."""
    opts = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"--config {args.config}: expected a JSON object")
        data.pop("command", None)
        unknown = sorted(set(data) - set(opts))
        if unknown:
            raise UsageError(f"--config {args.config}: unknown field(s) {unknown}; allowed: {sorted(opts)}")
        opts.update(data)
    for key in opts:
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    return opts


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_verify(o) -> int:
    report = verify_suite(int(o["seed"]))
    _emit(report_json(report), o["out"])
    for name in report["failures"]:
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_CHECK


def run_converge(o) -> int:
    cfg = harness.ExperimentConfig(
        o["experiment"], graphon=o["graphon"], filter=o["filter"], sizes=list(o["sizes"]),
        sampling=o["sampling"], trials=int(o["trials"]), seed=int(o["seed"]), out=o["out"],
    )
    rows = harness.run_convergence(cfg)
    _emit(harness.rows_to_csv(rows), o["out"])
    med = harness.median_by_size(rows)
    for n, v in med.items():
        print(f"n={n:6d}  median op distance {v:.6e}", file=sys.stderr)
    trend = "decreasing" if harness.strictly_decreasing(list(med.values())) else "NOT strictly decreasing"
    print(f"trend: {trend}", file=sys.stderr)
    return EXIT_OK


def run_transfer(o) -> int:
    reps = harness.run_transfer_bound(
        o["graphon"], o["filter"], int(o["n1"]), int(o["n2"]), int(o["trials"]), int(o["seed"]), o["sampling"]
    )
    _emit(harness.rows_to_csv(harness.transfer_rows(reps, o["graphon"], o["filter"])), o["out"])
    held = sum(r.holds for r in reps)
    print(f"bound held in {held}/{len(reps)} trials (C = {reps[0].constant:.6g})", file=sys.stderr)
    return EXIT_OK if held == len(reps) else EXIT_CHECK


def run_scnn(o) -> int:
    if not o["spec"]:
        raise UsageError("scnn: --spec FILE is required")
    spec = load_spec(o["spec"], harness.domain_bound(harness.parse_graphon(o["graphon"])))
    reps = harness.run_scnn_transfer(
        spec, o["graphon"], int(o["n1"]), int(o["n2"]), int(o["trials"]), int(o["seed"]),
        o["sampling"], o["signals"],
    )
    _emit(harness.rows_to_csv(harness.scnn_rows(reps, o["graphon"], o["spec"])), o["out"])
    held = sum(r.holds for r in reps)
    print(f"bound held in {held}/{len(reps)} trials (C_L = {reps[0].constant:.6g})", file=sys.stderr)
    return EXIT_OK if held == len(reps) else EXIT_CHECK


def run_laplace(o) -> int:
    res = harness.run_laplace(float(o["lambda"]), int(o["k"]), list(o["sizes"]))
    _emit(harness.rows_to_csv(res.rows), o["out"])
    print(f"band dimension {res.band_dimension}; decreasing: {res.decreasing}", file=sys.stderr)
    return EXIT_OK if res.decreasing else EXIT_CHECK


def run_cutnorm(o) -> int:
    if not o["graph"]:
        raise UsageError("cutnorm: --graph FILE is required")
    w = induce_graphon(read_gso(o["graph"]))
    if o["heuristic"] is not None:
        out = {"mode": "heuristic", "lower_bound": cut_norm_heuristic(w, int(o["heuristic"]), int(o["seed"]))}
    else:
        value, s, t = cut_norm_exact(w)
        out = {"mode": "exact", "value": value, "s_cells": sorted(s), "t_cells": sorted(t)}
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


RUNNERS = {
    "verify": run_verify, "converge": run_converge, "transfer": run_transfer,
    "scnn": run_scnn, "laplace": run_laplace, "cutnorm": run_cutnorm,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return RUNNERS[args.command](resolve(args))
    except (UsageError, harness.ConfigError, BudgetError, RegularityError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
