"""Command-line front end: ``generate``, ``solve``, ``check`` and ``bench``.

Exit codes: 0 success, 1 usage or input error, 2 check failure, 3 sweep
budget exhausted without convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import problems
from .cost import evaluate, load_problem, rotate_full, save_problem
from .rotations import GivensRotation, build_gamma, givens_matrix, restriction_gradient, restriction_value
from .solver import STRATEGIES, TRACE_FIELDS, SolverConfig, Status, cyclic_pairs, solve
from .unitary import make_rng, random_unitary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
EXIT_MAX_SWEEPS = 3

KINDS = ("example1", "example2", "tensor3", "trace4", "random-tensor3", "random-trace4")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _strategies(text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in STRATEGIES]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"unknown strategies {bad}; choose from {STRATEGIES}")
    return items


def build_parser():
    p = _Parser(prog="unijadi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a problem file (and ground truth when known)")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--L", type=int, default=1)
    g.add_argument("--sigma", type=float, default=0.0, help="noise std for example2")
    g.add_argument("--diag", type=_floats, help="diagonal values for tensor3/trace4")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--truth", help="ground-truth path (default: ground_truth.json next to --out)")

    def solver_flags(q):
        q.add_argument("--delta", type=float, help="threshold for cyclic-threshold (default 0.1*sqrt(2)/n)")
        q.add_argument("--eps", type=float, default=1e-6, help="gradient-norm tolerance")
        q.add_argument("--max-sweeps", type=int, default=200)
        q.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="run one solver and write its trace")
    s.add_argument("problem")
    s.add_argument("--strategy", choices=STRATEGIES, default="gradient-max")
    solver_flags(s)
    s.add_argument("--init", choices=("identity", "random"), default="identity",
                   help="starting point; 'random' draws a Haar unitary from --seed")
    s.add_argument("--trace", help="trace output path")
    s.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")

    c = sub.add_parser("check", help="run the verification suite on a problem")
    c.add_argument("problem")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=3, help="random unitary points")
    c.add_argument("--fd-tol", type=float, default=1e-6)
    c.add_argument("--gamma-tol", type=float, default=1e-9)
    c.add_argument("--grad-tol", type=float, default=1e-10)
    c.add_argument("--invariance-tol", type=float, default=1e-10)
    c.add_argument("--truth", help="ground-truth path (default: ground_truth.json next to the problem)")
    c.add_argument("--report", help="write the JSON report here")

    b = sub.add_parser("bench", help="run strategies x seeds and summarize")
    b.add_argument("problem")
    b.add_argument("--strategy", type=_strategies, default=["gradient-max", "cyclic-threshold"],
                   help="comma-separated list")
    solver_flags(b)
    b.add_argument("--seeds", type=_ints, help="comma-separated starting-point seeds (default: --seed)")
    b.add_argument("--init", choices=("identity", "random"), default="identity")
    b.add_argument("--summary", required=True)
    b.add_argument("--format", choices=("jsonl", "csv"), default="csv")
    return p


def _echo(command, args):
    cfg = {k: v for k, v in vars(args).items() if k != "command"}
    print("config: " + json.dumps({"command": command, **cfg}, default=str, sort_keys=True))


def _truth_path(explicit, anchor):
    return Path(explicit) if explicit else Path(anchor).resolve().parent / "ground_truth.json"


def cmd_generate(args):
    kind, n = args.kind, args.n
    if kind == "example1":
        cost, gt = problems.gen_random_joint_matrices(n, args.L, args.seed)
    elif kind == "example2":
        cost, gt = problems.gen_near_diagonalizable(n, args.L, args.sigma, args.seed)
    elif kind in ("tensor3", "trace4"):
        vals = args.diag if args.diag is not None else [1.0] * n
        gen = problems.gen_diagonal_tensor3 if kind == "tensor3" else problems.gen_diagonal_trace4
        cost, gt = gen(n, vals, args.seed)
    elif kind == "random-tensor3":
        cost, gt = problems.gen_random_tensor3(n, args.seed, L=args.L)
    else:
        cost, gt = problems.gen_random_trace4(n, args.seed)
    save_problem(cost, args.out)
    print(f"wrote {args.out}")
    if gt.U_star is not None or gt.f_star is not None:
        path = _truth_path(args.truth, args.out)
        problems.save_ground_truth(gt, path)
        print(f"wrote {path}")
    return EXIT_OK


def _initial_point(n, init, seed):
    if init == "random":
        return random_unitary(n, make_rng(seed))
    return np.eye(n, dtype=np.complex128)


def _config(args, strategy, seed):
    return SolverConfig(
        strategy=strategy, delta=args.delta, grad_tol=args.eps,
        max_sweeps=args.max_sweeps, seed=seed,
    )


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def write_trace(records, path, fmt):
    with open(path, "w", newline="") as fh:
        if fmt == "csv":
            w = csv.writer(fh)
            w.writerow(TRACE_FIELDS)
            for rec in records:
                row = rec.row()
                w.writerow([_fmt(row[k]) for k in TRACE_FIELDS])
        else:
            for rec in records:
                row = {k: (None if isinstance(v, float) and math.isnan(v) else v)
                       for k, v in rec.row().items()}
                fh.write(json.dumps(row) + "\n")


def _exit_for(status):
    return EXIT_MAX_SWEEPS if status == Status.MAX_SWEEPS else EXIT_OK


def cmd_solve(args):
    cost = load_problem(args.problem)
    config = _config(args, args.strategy, args.seed)
    config.resolved_delta(cost.n)
    U0 = _initial_point(cost.n, args.init, args.seed)
    res = solve(cost, U0, config)
    if args.trace:
        write_trace(res.trace, args.trace, args.format)
    print(json.dumps(res.summary()))
    return _exit_for(res.status)


def run_checks(cost, seed=0, samples=3, fd_tol=1e-6, gamma_tol=1e-9, grad_tol=1e-10,
               invariance_tol=1e-10, truth=None):
    """Diagnostics suite used by ``check``; returns ``(passed, report)``."""
    rng = make_rng(seed)
    points = [random_unitary(cost.n, rng) for _ in range(samples)]
    report = {}
    fd = max(diag.finite_diff_gradient_check(cost, U, seed=seed + k) for k, U in enumerate(points))
    report["gradient_fd_rel_err"] = {"value": fd, "tol": fd_tol, "ok": fd <= fd_tol}
    fid = 0.0
    rg = 0.0
    grid = [GivensRotation.from_angles(th, ph)
            for th in np.linspace(0, math.pi / 4, 3) for ph in np.linspace(0, 2 * math.pi, 4, endpoint=False)]
    for U in points:
        st = rotate_full(cost, U)
        for pair in cyclic_pairs(cost.n):
            G = build_gamma(st, pair)
            rg = max(rg, abs(restriction_gradient(G) - st.lam[pair]))
            for rot in grid:
                f = evaluate(cost, U @ givens_matrix(cost.n, pair, rot))
                fid = max(fid, abs(f - restriction_value(G, rot)) / (1 + abs(f)))
    report["quadratic_form_fidelity"] = {"value": fid, "tol": gamma_tol, "ok": fid <= gamma_tol}
    report["restriction_gradient"] = {"value": rg, "tol": grad_tol, "ok": rg <= grad_tol}
    inv = max(diag.invariance_check(cost, U, trials=5, seed=seed) for U in points)
    report["invariance"] = {"value": inv, "tol": invariance_tol, "ok": inv <= invariance_tol * (1 + rg)}
    if truth is not None and truth.U_star is not None:
        f = evaluate(cost, truth.U_star)
        ok = truth.f_star is None or abs(f - truth.f_star) <= 1e-9 * (1 + abs(truth.f_star))
        report["ground_truth"] = {"f": f, "f_star": truth.f_star, "ok": bool(ok)}
        st = rotate_full(cost, truth.U_star)
        if st.grad_norm <= 1e-6:
            rep = diag.regularity_check(cost, truth.U_star)
            entry = rep.to_json()
            entry["ok"] = True
            if truth.expected_regular is not None:
                entry["expected_regular"] = truth.expected_regular
                entry["ok"] = rep.all_negative_definite == truth.expected_regular
            report["regularity"] = entry
    for entry in report.values():
        entry["ok"] = bool(entry["ok"])
    return all(e["ok"] for e in report.values()), report


def cmd_check(args):
    try:
        cost = load_problem(args.problem)
    except (OSError, ValueError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    truth = None
    tpath = _truth_path(args.truth, args.problem)
    if args.truth or tpath.exists():
        try:
            with open(tpath) as fh:
                truth = problems.ground_truth_from_json(json.load(fh))
        except (OSError, ValueError) as exc:
            print(f"ignoring ground truth {tpath}: {exc}", file=sys.stderr)
    passed, report = run_checks(
        cost, seed=args.seed, samples=args.samples, fd_tol=args.fd_tol, gamma_tol=args.gamma_tol,
        grad_tol=args.grad_tol, invariance_tol=args.invariance_tol, truth=truth,
    )
    for name, entry in report.items():
        print(f"{'PASS' if entry['ok'] else 'FAIL'} {name}: "
              + json.dumps({k: v for k, v in entry.items() if k != 'ok'}, default=str))
    if args.report:
        with open(args.report, "w") as fh:
            json.dump({"passed": passed, "checks": report}, fh, indent=2, default=str)
    return EXIT_OK if passed else EXIT_CHECK


def _bench_one(cost, args, strategy, seed):
    U0 = _initial_point(cost.n, args.init, seed)
    t0 = time.perf_counter()
    res = solve(cost, U0, _config(args, strategy, seed))
    reached = diag.iterations_to_tolerance(res, args.eps)
    npairs = cost.n * (cost.n - 1) // 2
    return {
        "strategy": strategy,
        "seed": seed,
        "status": res.status.value,
        "iterations": len(res.trace),
        "sweeps_to_tol": None if reached is None else math.ceil(reached / npairs),
        "f_final": res.f_final,
        "grad_norm_final": res.grad_norm_final,
        "elapsed_s": time.perf_counter() - t0,
    }


def cmd_bench(args):
    cost = load_problem(args.problem)
    seeds = args.seeds or [args.seed]
    jobs = [(s, seed) for s in args.strategy for seed in seeds]
    workers = int(os.environ.get("UNIJADI_THREADS", os.cpu_count() or 1))
    workers = max(1, min(workers, len(jobs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda job: _bench_one(cost, args, *job), jobs))
    fields = list(rows[0].keys())
    with open(args.summary, "w", newline="") as fh:
        if args.format == "csv":
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            w.writerows(rows)
        else:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
    for row in rows:
        print(f"{row['strategy']:>16} seed={row['seed']:<4} {row['status']:<16} "
              f"sweeps_to_tol={row['sweeps_to_tol']} f={row['f_final']:.12g}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "check": cmd_check, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    _echo(args.command, args)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotImplementedError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
