"""Command-line entry point.

Subcommands:

  trial       one trial with a per-step trace
  sweep       two- or three-policy grid sweep, CSV outputs + manifest
  bounds      threshold formulas and the runaway certificate
  confidence  two-/three-coin comparison bounds
  qlearn      train (value-table file) / eval (containment fraction)

Every command is deterministic given its full flag set including --seed;
the worker pool honors --workers, then TRACE_RACE_THREADS, then the CPU
count. File-producing commands write a manifest sufficient to reproduce
their outputs bit-exactly (set SOURCE_DATE_EPOCH to pin timestamps).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .bounds import low_p_threshold, low_q_threshold, runaway_certificate
from .confidence import three_coin_confidence, two_coin_confidence
from .contagion import Instance
from .engine import TrialConfig, run_trial
from .harness import (
    THREE_POLICY_COLORS,
    TWO_POLICY,
    TWO_POLICY_COLORS,
    BudgetExceededError,
    GridSpec,
    sweep_three_policy,
    sweep_two_policy,
)
from .policies import BuiltinPolicy, LearnedPolicy, parse_policy
from .qlearn import QConfig, VTable, evaluate, train
from .reporting import Manifest, fmt_prob, write_dominance_csv, write_results_csv


def _add_instance_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=float, help="point-mass transmission probability")
    parser.add_argument("--q", type=float, help="point-mass contact probability")
    parser.add_argument("--pmin", type=float, help="uniform-min transmission lower end")
    parser.add_argument("--qmin", type=float, help="uniform-min contact lower end")
    parser.add_argument("--k", type=int, default=3, help="head-start rounds before tracing")


def _instance_from_flags(args, parser: argparse.ArgumentParser) -> Instance:
    point = args.p is not None or args.q is not None
    uniform = args.pmin is not None or args.qmin is not None
    if point and uniform:
        parser.error("give either --p/--q or --pmin/--qmin, not both")
    if point:
        if args.p is None or args.q is None:
            parser.error("point-mass instances need both --p and --q")
        return Instance.point_mass(args.p, args.q, args.k)
    if uniform:
        if args.pmin is None or args.qmin is None:
            parser.error("uniform instances need both --pmin and --qmin")
        return Instance.uniform(args.pmin, args.qmin, args.k)
    parser.error("an instance needs --p/--q or --pmin/--qmin")


def _policy_from_flags(args, parser: argparse.ArgumentParser):
    if getattr(args, "vtable", None):
        if not args.terminal:
            parser.error("--vtable needs --terminal")
        return LearnedPolicy(VTable.load(args.vtable), parse_policy(args.terminal))
    try:
        return parse_policy(args.policy)
    except ValueError as exc:
        parser.error(str(exc))


def _cmd_trial(args, parser) -> int:
    instance = _instance_from_flags(args, parser)
    policy = _policy_from_flags(args, parser)
    config = TrialConfig(instance, policy, args.zc, args.zt, args.seed)

    def show(rec):
        if rec.queried is None:
            print(
                f"t={rec.step}  head-start round  "
                f"active={rec.active_infected} materialized={rec.materialized}"
            )
            return
        e = rec.queried_entry
        status = "infected" if rec.was_infected else "clean"
        frontier = (
            "{" + ", ".join(f"n{x.node}(tau={x.tau},p={fmt_prob(x.p)},q={fmt_prob(x.q)})"
                            for x in rec.frontier) + "}"
        )
        print(
            f"t={rec.step}  query n{rec.queried} (tau={e.tau}, p={fmt_prob(e.p)}, "
            f"q={fmt_prob(e.q)}) -> {status}, revealed {rec.revealed}; "
            f"frontier={frontier} active={rec.active_infected}"
        )

    outcome = run_trial(config, trace=show)
    print(
        f"outcome: {outcome.state} rounds={outcome.rounds} queries={outcome.queries} "
        f"total_infected={outcome.total_infected} "
        f"peak_active={outcome.peak_active_infected}"
    )
    return 0


def _cmd_sweep(args, parser) -> int:
    spec = GridSpec(
        p_start=args.p_start, p_stop=args.p_stop, p_step=args.p_step,
        q_start=args.q_start, q_stop=args.q_stop, q_step=args.q_step,
        round1_n=args.n, d_threshold=args.d_threshold,
        confidence_threshold=args.confidence_threshold,
        z_c=args.zc, z_t=args.zt, k=args.k, master_seed=args.seed,
        budget_cap=args.budget_cap,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = Manifest("sweep")
    manifest.set_params(
        {
            "mode": args.mode,
            "p_start": args.p_start, "p_stop": args.p_stop, "p_step": args.p_step,
            "q_start": args.q_start, "q_stop": args.q_stop, "q_step": args.q_step,
            "n": args.n, "d_threshold": args.d_threshold,
            "confidence_threshold": args.confidence_threshold,
            "zc": args.zc, "zt": args.zt, "k": args.k,
            "master_seed": args.seed, "budget_cap": args.budget_cap,
        }
    )
    # workers and --resume are execution knobs, not result-determining
    # parameters: results are identical for any worker count, so they stay
    # out of the manifest to keep reruns byte-identical.
    sweep = sweep_two_policy if args.mode == TWO_POLICY else sweep_three_policy
    colors = TWO_POLICY_COLORS if args.mode == TWO_POLICY else THREE_POLICY_COLORS
    try:
        results = sweep(
            spec,
            workers=args.workers,
            checkpoint_dir=args.out_dir,
            resume=args.resume,
        )
    except BudgetExceededError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 1
    results_path = os.path.join(args.out_dir, "results.csv")
    dominance_path = os.path.join(args.out_dir, "dominance.csv")
    write_results_csv(results_path, results)
    write_dominance_csv(dominance_path, results)
    for code, color in colors.items():
        manifest.set(f"color_{code}", color)
    manifest.set(
        "note_no_confidence_colors",
        "mapping of the two no-claim codes to purple/blue is a documented guess",
    )
    manifest.set("output_results", results_path)
    manifest.set("output_dominance", dominance_path)
    manifest.write(os.path.join(args.out_dir, "manifest.txt"))
    print(f"wrote {results_path}, {dominance_path} ({len(results)} cells)")
    return 0


def _cmd_bounds(args, parser) -> int:
    print(f"low_q_threshold(delta={args.delta}, k={args.k}) = "
          f"{fmt_prob(low_q_threshold(args.delta, args.k))}")
    print(f"low_p_threshold(delta={args.delta}, k={args.k}) = "
          f"{fmt_prob(low_p_threshold(args.delta, args.k))}")
    if (args.p is None) != (args.q is None):
        parser.error("the runaway certificate needs both --p and --q")
    if args.p is not None:
        cert = runaway_certificate(args.p, args.q, args.delta)
        print(f"h = {cert.h}")
        print(f"f(delta) = {cert.f_delta!r}")
        print(f"pq = {args.p * args.q!r}")
        print(f"certified = {str(cert.certified).lower()}")
        print(f"B = {cert.B}")
        if args.p * args.q > 0:
            print(f"C = {cert.C}")
    return 0


def _cmd_confidence(args, parser) -> int:
    if args.mode == "two":
        if args.pc is not None:
            parser.error("--pc applies only to --mode three")
        report = two_coin_confidence(args.n, args.pa, args.pb, args.p0)
        names = ("a", "b")
    else:
        if args.pc is None:
            parser.error("--mode three needs --pa --pb --pc")
        report = three_coin_confidence(args.n, (args.pa, args.pb, args.pc), args.p0)
        names = ("a", "b", "c")
    if not report.applicable:
        reason = "d = 0" if report.epsilon == 0.0 else "eps/p0 >= 1"
        print(f"no confidence ({reason})")
        return 0
    print(f"winner = {names[report.winner]}")
    print(f"epsilon = {fmt_prob(report.epsilon)}")
    if report.epsilon2 is not None:
        print(f"epsilon2 = {fmt_prob(report.epsilon2)}")
    print(f"confidence = {fmt_prob(report.confidence)}")
    return 0


def _cmd_qlearn(args, parser) -> int:
    instance = _instance_from_flags(args, parser)
    if args.qlearn_cmd == "train":
        config = QConfig(
            eps=args.eps, alpha=args.alpha, gamma=args.gamma,
            episodes=args.episodes, max_t=args.max_t,
            max_frontier=args.max_frontier, max_tau=args.max_tau,
            rollouts=args.rollouts, terminal_policy=parse_policy(args.terminal),
            z_c=args.zc, z_t=args.zt,
        )
        table = train(instance, config, args.seed)
        table.save(args.out)
        manifest = Manifest("qlearn-train")
        manifest.set_params(
            {
                "p": args.p, "q": args.q, "k": args.k,
                "terminal": args.terminal, "episodes": args.episodes,
                "eps": args.eps, "alpha": args.alpha, "gamma": args.gamma,
                "max_t": args.max_t, "max_frontier": args.max_frontier,
                "max_tau": args.max_tau, "rollouts": args.rollouts,
                "zc": args.zc, "zt": args.zt, "master_seed": args.seed,
            }
        )
        manifest.set("output_vtable", args.out)
        manifest.write(args.out + ".manifest")
        print(f"wrote {args.out} ({len(table)} states)")
        return 0
    policy = _policy_from_flags(args, parser)
    fraction = evaluate(
        policy, instance, args.n, args.seed, z_c=args.zc, z_t=args.zt,
        workers=args.workers,
    )
    print(fmt_prob(fraction))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracerace",
        description="contact-tracing race simulator and experiment harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("trial", help="run one trial with a per-step trace")
    _add_instance_flags(t)
    t.add_argument("--policy", default="descending-time")
    t.add_argument("--vtable", help="value-table file for a learned policy")
    t.add_argument("--terminal", help="terminal policy for --vtable")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--zc", type=int, default=10)
    t.add_argument("--zt", type=int, default=1000)

    s = sub.add_parser("sweep", help="grid sweep with CSV outputs")
    s.add_argument("--mode", choices=["two-policy", "three-policy"], required=True)
    s.add_argument("--p-start", type=float, default=0.01)
    s.add_argument("--p-stop", type=float, default=1.0)
    s.add_argument("--p-step", type=float, default=0.01)
    s.add_argument("--q-start", type=float, default=0.01)
    s.add_argument("--q-stop", type=float, default=1.0)
    s.add_argument("--q-step", type=float, default=0.01)
    s.add_argument("--n", type=int, help="round-1 trials per policy per cell")
    s.add_argument("--d-threshold", type=float, default=0.00035)
    s.add_argument("--confidence-threshold", type=float, default=0.5)
    s.add_argument("--zc", type=int, default=10)
    s.add_argument("--zt", type=int, default=1000)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget-cap", type=int, default=2_000_000_000)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--resume", action="store_true")
    s.add_argument("--workers", type=int)

    b = sub.add_parser("bounds", help="threshold formulas and runaway certificate")
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--k", type=int, default=3)
    b.add_argument("--p", type=float)
    b.add_argument("--q", type=float)

    c = sub.add_parser("confidence", help="coin-comparison confidence bounds")
    c.add_argument("--mode", choices=["two", "three"], required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--pa", type=float, required=True)
    c.add_argument("--pb", type=float, required=True)
    c.add_argument("--pc", type=float)
    c.add_argument("--p0", type=float, required=True)

    ql = sub.add_parser("qlearn", help="train/evaluate learned policies")
    qsub = ql.add_subparsers(dest="qlearn_cmd", required=True)
    qt = qsub.add_parser("train")
    _add_instance_flags(qt)
    qt.add_argument("--terminal", default="descending-time")
    qt.add_argument("--episodes", type=int, default=1_000_000)
    qt.add_argument("--eps", type=float, default=0.1)
    qt.add_argument("--alpha", type=float, default=0.1)
    qt.add_argument("--gamma", type=float, default=0.6)
    qt.add_argument("--max-t", type=int, default=4)
    qt.add_argument("--max-frontier", type=int, default=3)
    qt.add_argument("--max-tau", type=int, default=3)
    qt.add_argument("--rollouts", type=int, default=100)
    qt.add_argument("--zc", type=int, default=10)
    qt.add_argument("--zt", type=int, default=1000)
    qt.add_argument("--seed", type=int, default=0)
    qt.add_argument("--out", required=True)
    qe = qsub.add_parser("eval")
    _add_instance_flags(qe)
    qe.add_argument("--policy", default="descending-time")
    qe.add_argument("--vtable")
    qe.add_argument("--terminal")
    qe.add_argument("--n", type=int, default=100_000)
    qe.add_argument("--zc", type=int, default=10)
    qe.add_argument("--zt", type=int, default=1000)
    qe.add_argument("--seed", type=int, default=0)
    qe.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd == "trial":
        return _cmd_trial(args, parser)
    if args.cmd == "sweep":
        if args.n is None:
            parser.error("sweep needs --n (round-1 trials per policy per cell)")
        return _cmd_sweep(args, parser)
    if args.cmd == "bounds":
        return _cmd_bounds(args, parser)
    if args.cmd == "confidence":
        return _cmd_confidence(args, parser)
    return _cmd_qlearn(args, parser)


if __name__ == "__main__":
    sys.exit(main())
