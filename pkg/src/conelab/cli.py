"""Command-line interface: run experiments, classify potentials, summarize
result directories."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .classify import classify_point, solve_nu_p1
from .errors import ConelabError, NotOnSingularSet
from .harness import ExperimentConfig, run_experiment
from .potential import ConicalPotential


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    if args.out_dir:
        cfg.out_dir = args.out_dir
    record = run_experiment(cfg)
    for check in record.checks:
        status = "PASS" if check.passed else "FAIL"
        value = "" if check.value is None else f" value={check.value:.6g}"
        print(f"[{status}] {check.rule}{value}  {check.detail}")
    print(f"{record.experiment}: {'all checks passed' if record.passed else 'FAILURES'}")
    return 0 if record.passed else 1


def _lambda_grid(potential: ConicalPotential, count: int) -> list[np.ndarray]:
    """Sample points of the singular manifold for --sweep (linear g only)."""
    rng_pts = []
    jac = potential.g.jacobian(np.zeros(potential.d))
    g0 = potential.g.value(np.zeros(potential.d))
    base = -jac.T @ np.linalg.solve(jac @ jac.T, g0)  # point on Lambda
    _, _, vt = np.linalg.svd(jac)
    kernel = vt[potential.p :]
    if kernel.shape[0] == 0:
        return [base]
    ticks = np.linspace(-1.0, 1.0, count)
    for s in ticks:
        rng_pts.append(base + s * kernel[0])
    return rng_pts


def _report_to_json(report, nu=None) -> dict:
    doc = report.to_dict()
    if nu is not None:
        doc["nu"] = nu.to_dict()
    return doc


def _cmd_classify(args) -> int:
    with open(args.potential) as fh:
        potential = ConicalPotential.from_json(fh.read())
    sigma = (
        np.array([float(v) for v in args.sigma.split(",")])
        if args.sigma
        else np.zeros(potential.d)
    )
    out = []
    if args.sweep:
        if not potential.g.is_linear():
            print("--sweep requires a linear constraint map", file=sys.stderr)
            return 2
        points = _lambda_grid(potential, args.sweep)
    else:
        points = [sigma]
    for point in points:
        try:
            report = classify_point(potential, point)
        except NotOnSingularSet as exc:
            print(f"point {point.tolist()} rejected: {exc}", file=sys.stderr)
            return 2
        nu = None
        if potential.p == 1:
            nu = solve_nu_p1(report.geometry, 1.0)
        out.append(_report_to_json(report, nu))
    text = json.dumps(out[0] if len(out) == 1 else out, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_report(args) -> int:
    records = []
    for root, _dirs, files in sorted(os.walk(args.results_dir)):
        if "record.json" in files:
            with open(os.path.join(root, "record.json")) as fh:
                records.append((root, json.load(fh)))
    if not records:
        print(f"no record.json under {args.results_dir}", file=sys.stderr)
        return 2
    all_ok = True
    for root, rec in records:
        ok = rec.get("passed", False)
        all_ok &= ok
        n_checks = len(rec.get("checks", []))
        n_fail = sum(1 for c in rec.get("checks", []) if not c.get("passed"))
        print(
            f"{'PASS' if ok else 'FAIL'}  {rec.get('experiment', '?'):>20}  "
            f"{n_checks - n_fail}/{n_checks} checks  ({root})"
        )
        if not ok:
            for c in rec["checks"]:
                if not c["passed"]:
                    print(f"        failed: {c['rule']}  {c.get('detail', '')}")
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conelab",
        description="Numerical laboratory for dynamics under conical potentials",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out-dir", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_cls = sub.add_parser("classify", help="classify a singular point")
    p_cls.add_argument("potential", help="potential JSON document")
    p_cls.add_argument("--sigma", default=None, help="comma-separated point on Lambda")
    p_cls.add_argument("--sweep", type=int, default=0, help="classify N points on Lambda")
    p_cls.add_argument("--out", default=None)
    p_cls.set_defaults(func=_cmd_classify)

    p_rep = sub.add_parser("report", help="summarize a results directory")
    p_rep.add_argument("results_dir")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
