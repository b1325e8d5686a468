"""Acceptance suite: one test per criterion (A1-A10), one PASS line each.

Runtime is dominated by A5 (~2 min: 2x1e7 + ~2x1e8 adaptive trials) and
A8 (~3 min: ten 1e5-episode trainings plus 1e5-trial evaluations); the
rest are seconds. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import inspect
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

import oracle_enum
from tracerace import (
    BuiltinPolicy,
    Instance,
    LearnedPolicy,
    TrialConfig,
    TrialState,
    derive_seed,
    observed_containment,
    run_batch,
    run_trial,
)
from tracerace.bounds import chain_growth_oracle, low_q_threshold, runaway_certificate
from tracerace.confidence import second_round_size, two_coin_confidence
from tracerace.qlearn import QConfig, evaluate, train

ASC = BuiltinPolicy.ASCENDING_TIME
DESC = BuiltinPolicy.DESCENDING_TIME
ALL_POLICIES = list(BuiltinPolicy)

_PASS = "{} PASS — {}"


def _batch(p, q, policy, n, seed, z_c=10, z_t=1000, k=3):
    return run_batch(TrialConfig(Instance.point_mass(p, q, k), policy, z_c, z_t), n, seed)


def _containment(p, q, policy, n, seed, **kw):
    return observed_containment(_batch(p, q, policy, n, seed, **kw))


def test_a1_deterministic_chain():
    for seed in (0, 7, 987654321):
        steps = []
        out = run_trial(
            TrialConfig(Instance.point_mass(1.0, 1.0, 3), DESC, seed=seed),
            trace=steps.append,
        )
        active = {r.step: r.active_infected for r in steps}
        assert (active[3], active[4], active[5]) == (6, 10, 18)
        assert (active[3], active[4], active[5]) == tuple(
            chain_growth_oracle(t) for t in (3, 4, 5)
        )
        assert out.state is TrialState.NOT_CONTAINED
        assert out.rounds == 5
    cfg = TrialConfig(Instance.point_mass(1.0, 1.0, 3), DESC, seed=7)
    run_trial(cfg)  # warm
    t0 = time.perf_counter()
    reps = 20
    for _ in range(reps):
        run_trial(cfg)
    per_trial = (time.perf_counter() - t0) / reps
    assert per_trial < 1e-3
    print(_PASS.format("A1", f"chain 6/10/18, not-contained at t=5, {per_trial*1e6:.0f} us/trial"))


def test_a2_threshold_arithmetic():
    cert = runaway_certificate(0.9999985, 1.0, 0.001)
    assert cert.h == 272
    assert 0.99999815 <= cert.f_delta <= 0.99999825
    assert cert.certified
    assert second_round_size(0.00035) == 193_503_050
    assert low_q_threshold(0.2, 3) == 1 / 17
    print(_PASS.format("A2", "h=272, f(0.001) in window, M(0.00035)=193503050, q(0.2,3)=1/17"))


def test_a3_paper_containment_values():
    n = 100_000
    checks = [
        (0.9, 0.9, ASC, 0.231),
        (0.9, 0.9, DESC, 0.293),
        (0.95, 0.95, ASC, 0.108),
        (0.95, 0.95, DESC, 0.148),
    ]
    observed = {}
    for i, (p, q, pol, expected) in enumerate(checks):
        batch = _batch(p, q, pol, n, derive_seed(1003, i))
        frac = observed_containment(batch)
        assert frac == pytest.approx(expected, abs=0.012), (p, q, pol)
        assert batch.non_converged <= 1e-5 * n  # state-(iii) rarity
        observed[(p, q, pol)] = frac
    assert observed[(0.95, 0.95, DESC)] > observed[(0.95, 0.95, ASC)]
    print(_PASS.format(
        "A3",
        "(0.9,0.9): asc {:.3f}/desc {:.3f}; (0.95,0.95): asc {:.3f}/desc {:.3f}".format(
            observed[(0.9, 0.9, ASC)], observed[(0.9, 0.9, DESC)],
            observed[(0.95, 0.95, ASC)], observed[(0.95, 0.95, DESC)],
        ),
    ))


def test_a4_low_parameter_regime():
    n = 10_000
    worst = 1.0
    i = 0
    for p in (0.1, 0.2, 0.3, 0.4):
        for q10 in range(1, 11):
            q = q10 / 10
            for pol in (ASC, DESC):
                frac = _containment(p, q, pol, n, derive_seed(1004, i))
                worst = min(worst, frac)
                assert frac >= 0.86, (p, q, pol, frac)
                i += 1
    print(_PASS.format("A4", f"40 low-parameter cells x 2 policies all >= 0.86 (min {worst:.4f})"))


def test_a5_dominance_signs():
    # (a) descending-time dominates the high-(p,q) block
    n = 100_000
    i = 0
    for p in (0.85, 0.90, 0.95):
        for q in (0.85, 0.90, 0.95):
            asc = _containment(p, q, ASC, n, derive_seed(1005, i, 0))
            desc = _containment(p, q, DESC, n, derive_seed(1005, i, 1))
            assert desc > asc, (p, q, asc, desc)
            i += 1

    # (b) the ascending band at (0.19, 1.0): sign at 1e7, then the
    # two-round protocol on a fresh batch sized from the observed gap
    seed = 20260810
    inst = Instance.point_mass(0.19, 1.0, 3)
    r1 = [
        run_batch(TrialConfig(inst, pol), 10**7, derive_seed(seed, 0, pi, 1))
        for pi, pol in enumerate((ASC, DESC))
    ]
    obs1 = [observed_containment(b) for b in r1]
    assert obs1[0] > obs1[1], "ascending-time must win the sign check at (0.19, 1.0)"
    m = second_round_size(abs(obs1[0] - obs1[1]))
    r2 = [
        run_batch(TrialConfig(inst, pol), m, derive_seed(seed, 0, pi, 2))
        for pi, pol in enumerate((ASC, DESC))
    ]
    obs2 = [observed_containment(b) for b in r2]
    report = two_coin_confidence(m, obs2[0], obs2[1], 1.0 - 0.19)
    assert report.applicable
    assert report.winner == 0  # ascending-time
    assert report.confidence >= 0.5
    print(_PASS.format(
        "A5",
        f"desc wins all 9 high cells; (0.19,1.0) asc sign at 1e7, "
        f"M(d)={m}, round-2 confidence {report.confidence:.3f} >= 0.5",
    ))


ORACLE_CONFIGS = [
    (0.5, 0.5, 2, 10),
    (0.8, 0.3, 2, 10),
    (0.3, 0.8, 2, 10),
    (0.6, 0.6, 2, 10),
    (0.2, 1.0, 1, 8),
    (1.0, 0.6, 2, 10),
    (0.7, 0.2, 3, 10),
]


def test_a6_oracle_equivalence():
    # the adjudicator must not lean on the code it judges
    oracle_src = inspect.getsource(oracle_enum)
    assert "import tracerace" not in oracle_src
    assert "from tracerace" not in oracle_src
    n = 100_000
    worst_z = 0.0
    for ci, (p, q, z_c, z_t) in enumerate(ORACLE_CONFIGS):
        for pi, (policy, oracle_name) in enumerate(
            [(ASC, "ascending-time"), (DESC, "descending-time")]
        ):
            exact = oracle_enum.containment_probability(p, q, 3, oracle_name, z_c, z_t)
            frac = _containment(p, q, policy, n, derive_seed(10061, ci, pi), z_c=z_c, z_t=z_t)
            sigma = math.sqrt(max(exact * (1.0 - exact), 1e-12) / n)
            z = abs(frac - exact) / sigma
            worst_z = max(worst_z, z)
            assert z <= 3.0, (p, q, z_c, z_t, policy, exact, frac, z)
    # bonus: on point-mass instances descending-p collapses to uniform
    exact_uniform = oracle_enum.containment_probability(0.5, 0.5, 3, "uniform-random", 2, 10)
    frac = _containment(0.5, 0.5, BuiltinPolicy.DESCENDING_P, n, derive_seed(10061, 99),
                        z_c=2, z_t=10)
    assert abs(frac - exact_uniform) <= 3 * math.sqrt(exact_uniform * (1 - exact_uniform) / n)
    print(_PASS.format(
        "A6", f"{len(ORACLE_CONFIGS)} configs x 2 policies within 3 sigma of "
        f"exact enumeration (worst {worst_z:.2f} sigma)"
    ))


def test_a7_theorem_property_suites():
    n = 10_000
    q_small = 0.9 * low_q_threshold(0.2, 3)

    for pi, pol in enumerate(ALL_POLICIES):  # Theorem: small q contains
        frac = _containment(1.0, q_small, pol, n, derive_seed(1007, 1, pi))
        assert frac >= 0.8, (pol, frac)

    for pi, pol in enumerate(ALL_POLICIES):  # Theorem: small p contains
        frac = _containment(0.9 * low_q_threshold(0.2, 3), 1.0, pol, n, derive_seed(1007, 2, pi))
        assert frac >= 0.8, (pol, frac)

    assert runaway_certificate(0.9999985, 1.0, 0.001).certified
    for pi, pol in enumerate(ALL_POLICIES):  # certified runaway fails everyone
        frac = _containment(0.9999985, 1.0, pol, n, derive_seed(1007, 3, pi))
        assert frac <= 0.01, (pol, frac)
    print(_PASS.format("A7", "five policies contain >=0.8 in both low regimes and <=0.01 under the certificate"))


A8_INSTANCES = [(0.3, 0.9), (0.5, 0.5), (0.7, 0.9), (0.9, 0.7), (0.9, 0.9)]


def test_a8_qlearning_parity():
    n_eval = 100_000
    episodes = 100_000
    seed = 424242
    lines = []
    for ii, (p, q) in enumerate(A8_INSTANCES):
        inst = Instance.point_mass(p, q, 3)
        monotonic = {
            pol: evaluate(pol, inst, n_eval, derive_seed(seed, ii, 0, pi))
            for pi, pol in enumerate((ASC, DESC))
        }
        learned = {}
        for pi, terminal in enumerate((ASC, DESC)):
            table = train(inst, QConfig(episodes=episodes, terminal_policy=terminal),
                          derive_seed(seed, ii, 1, pi))
            learned[terminal] = evaluate(
                LearnedPolicy(table, terminal), inst, n_eval, derive_seed(seed, ii, 2, pi)
            )
        best_mono = max(monotonic.values())
        best_learned = max(learned.values())
        assert best_learned >= best_mono - 0.05, (p, q, monotonic, learned)

        # exact reward identity on an independent batch
        batch = run_batch(TrialConfig(inst, DESC), 10_000, derive_seed(seed, ii, 3))
        reward_sum = batch.contained - (batch.not_contained + batch.non_converged)
        assert (reward_sum + batch.n) / (2 * batch.n) == batch.contained / batch.n
        lines.append(f"({p},{q}): mono {best_mono:.3f} / learned {best_learned:.3f}")
    print(_PASS.format("A8", "; ".join(lines)))


def test_a9_statistics_soundness():
    for d in (0.0004, 0.001, 0.01, 0.1):
        assert math.exp(-second_round_size(d) * (0.49 * d) ** 2 / 3.0) <= 0.15

    rng = np.random.default_rng(1009)
    n1 = 4000
    scenarios = [(0.50, 0.53), (0.64, 0.60)]
    reports = []
    for rep in range(200):
        pa, pb = scenarios[rep % 2]
        d = abs(rng.binomial(n1, pa) / n1 - rng.binomial(n1, pb) / n1)
        if d == 0.0:
            continue
        n2 = second_round_size(d)
        obs_a = rng.binomial(n2, pa) / n2
        obs_b = rng.binomial(n2, pb) / n2
        report = two_coin_confidence(n2, obs_a, obs_b, min(1 - pa, 1 - pb))
        if report.applicable:
            correct = (report.winner == 0) == (pa > pb)
            reports.append((report.confidence, correct))
    for c in (0.5, 0.7):
        claimed = [(conf, ok) for conf, ok in reports if conf >= c]
        assert claimed, f"no reports reached confidence {c}"
        validity = sum(ok for _, ok in claimed) / len(claimed)
        assert validity >= c, (c, validity)
    print(_PASS.format(
        "A9",
        f"M(d) exponent bound holds; winner validity {validity:.3f} over "
        f"{len(claimed)} claims at c=0.7",
    ))


def _run_cli(argv, cwd):
    env = dict(os.environ, SOURCE_DATE_EPOCH="1700000000")
    return subprocess.run(
        [sys.executable, "-m", "tracerace", *argv],
        capture_output=True, cwd=cwd, env=env, text=True,
    )


def test_a10_byte_reproducibility(tmp_path):
    sweep_args = [
        "sweep", "--mode", "two-policy",
        "--p-start", "0.9", "--p-stop", "0.95", "--p-step", "0.05",
        "--q-start", "0.9", "--q-stop", "0.95", "--q-step", "0.05",
        "--n", "2000", "--d-threshold", "0.02", "--seed", "77", "--out-dir", "out",
    ]
    runs = {}
    for name, workers in (("one", "1"), ("two", "2")):
        cwd = tmp_path / name
        cwd.mkdir()
        proc = _run_cli(sweep_args + ["--workers", workers], str(cwd))
        assert proc.returncode == 0, proc.stderr
        runs[name] = {
            f: (cwd / "out" / f).read_bytes()
            for f in ("results.csv", "dominance.csv", "manifest.txt",
                      "journal.csv", "checkpoint.txt")
        }
    mismatched = [f for f in runs["one"] if runs["one"][f] != runs["two"][f]]
    assert not mismatched, mismatched

    train_args = ["qlearn", "train", "--p", "0.5", "--q", "0.5",
                  "--terminal", "descending-time", "--episodes", "2000",
                  "--seed", "3", "--out", "vt.txt"]
    vt = {}
    for name in ("va", "vb"):
        cwd = tmp_path / name
        cwd.mkdir()
        assert _run_cli(train_args, str(cwd)).returncode == 0
        vt[name] = ((cwd / "vt.txt").read_bytes(), (cwd / "vt.txt.manifest").read_bytes())
    assert vt["va"] == vt["vb"]

    outs = {
        _run_cli(["trial", "--p", "0.8", "--q", "0.9", "--seed", "5",
                  "--policy", "descending-time"], str(tmp_path)).stdout
        for _ in range(2)
    }
    assert len(outs) == 1
    print(_PASS.format(
        "A10", "sweep CSVs+manifest+journal, vtable+manifest, and trial trace "
        "byte-identical across reruns and worker counts"
    ))
