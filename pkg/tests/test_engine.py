"""Trial engine: termination semantics, determinism, batch machinery,
and bit parity between the reference path and the numba kernel."""

import pytest

from tracerace import (
    BatchSummary,
    BuiltinPolicy,
    Frontier,
    Instance,
    TrialConfig,
    TrialState,
    Xoshiro256,
    derive_seed,
    infection_round,
    init_tree,
    observed_containment,
    query,
    run_batch,
    run_trial,
    select,
)
from tracerace import _kernel
from tracerace.engine import _trace_loop

ASC = BuiltinPolicy.ASCENDING_TIME
DESC = BuiltinPolicy.DESCENDING_TIME


def _composed_trial(config):
    """The same trial assembled from the public module operations;
    returns (state, tree) so tests can scan the final tree."""
    rng = Xoshiro256(config.seed)
    tree = init_tree(config.instance, rng)
    for _ in range(config.instance.k - 1):
        infection_round(tree, rng)
        if tree.active_infected > config.z_c:
            return TrialState.NOT_CONTAINED, tree
        if tree.materialized_size > config.z_t:
            return TrialState.NON_CONVERGED, tree
    frontier = Frontier()
    frontier.add_node(tree, tree.root)
    while True:
        if len(frontier) == 0:
            return TrialState.CONTAINED, tree
        nid = select(config.policy, frontier, tree.t + 1, rng)
        query(tree, frontier, nid)
        infection_round(tree, rng)
        if tree.active_infected > config.z_c:
            return TrialState.NOT_CONTAINED, tree
        if tree.materialized_size > config.z_t:
            return TrialState.NON_CONVERGED, tree


def test_deterministic_chain_outcome():
    for seed in (0, 7, 123456):
        steps = []
        out = run_trial(
            TrialConfig(Instance.point_mass(1.0, 1.0, 3), DESC, seed=seed),
            trace=steps.append,
        )
        assert out.state is TrialState.NOT_CONTAINED
        assert out.rounds == 5
        active = {r.step: r.active_infected for r in steps}
        assert (active[3], active[4], active[5]) == (6, 10, 18)


def test_uninfected_root_contains_at_k_with_one_query():
    for seed in range(20):
        out = run_trial(TrialConfig(Instance.point_mass(0.0, 0.8, 3), ASC, seed=seed))
        assert out.state is TrialState.CONTAINED
        assert out.rounds == 3
        assert out.queries == 1
        assert out.total_infected == 0


def test_no_contacts_contains_with_single_infection():
    for seed in range(20):
        out = run_trial(TrialConfig(Instance.point_mass(1.0, 0.0, 5), DESC, seed=seed))
        assert out.state is TrialState.CONTAINED
        assert out.rounds == 5
        assert out.total_infected == 1


def test_observed_containment_arithmetic():
    assert observed_containment(BatchSummary(4, 1, 3, 0)) == 0.25
    assert observed_containment(BatchSummary(10, 0, 10, 0)) == 0.0
    assert observed_containment(BatchSummary(7, 7, 0, 0)) == 1.0


def test_batch_counts_sum_validation():
    with pytest.raises(ValueError):
        BatchSummary(5, 1, 1, 1)


def test_config_validation():
    inst = Instance.point_mass(0.5, 0.5, 3)
    with pytest.raises(ValueError):
        TrialConfig(inst, ASC, z_c=0)
    with pytest.raises(ValueError):
        TrialConfig(inst, ASC, z_c=10, z_t=5)
    with pytest.raises(ValueError):
        TrialConfig(Instance.point_mass(0.5, 0.5, 0), ASC)


def test_trial_is_pure_function_of_config():
    cfg = TrialConfig(Instance.point_mass(0.8, 0.7, 3), DESC, seed=991)
    assert run_trial(cfg) == run_trial(cfg)


def test_not_contained_peak_exceeds_zc():
    hits = 0
    for seed in range(200):
        out = run_trial(TrialConfig(Instance.point_mass(0.9, 0.9, 3), ASC, seed=seed))
        if out.state is TrialState.NOT_CONTAINED:
            hits += 1
            assert out.peak_active_infected > 10
        else:
            assert out.peak_active_infected <= 10
    assert hits > 0


def test_contained_trials_have_every_infected_node_stabilized():
    scanned = 0
    for seed in range(150):
        cfg = TrialConfig(Instance.point_mass(0.7, 0.7, 3), DESC, seed=derive_seed(1, seed))
        state, tree = _composed_trial(cfg)
        if state is TrialState.CONTAINED:
            scanned += 1
            for nid in range(tree.materialized_size):
                if tree.infected[nid]:
                    assert tree.stabilized[nid]
            assert tree.active_infected == 0
    assert scanned > 50


def test_composed_ops_replay_matches_run_trial():
    for seed in range(100):
        cfg = TrialConfig(
            Instance.point_mass(0.85, 0.75, 3), DESC, seed=derive_seed(2, seed)
        )
        state, _ = _composed_trial(cfg)
        assert run_trial(cfg).state is state


@pytest.mark.parametrize("policy", list(BuiltinPolicy))
def test_kernel_parity_across_policies(policy):
    for i in range(120):
        rng = Xoshiro256(derive_seed(3, i))
        if i % 3 == 0:
            instance = Instance.uniform(rng.random(), rng.random(), 3)
        else:
            instance = Instance.point_mass(rng.random(), rng.random(), 3)
        z_c, z_t = ((1, 8), (3, 25), (10, 120), (2, 15))[i % 4]
        cfg = TrialConfig(instance, policy, z_c=z_c, z_t=z_t, seed=derive_seed(4, i))
        assert run_trial(cfg) == _kernel.run_trial_fast(cfg)


def test_kernel_parity_large_zt_chain_regime():
    # near-1 p with q = 1 exercises the long-chain path and the z_t cap
    for i in range(40):
        cfg = TrialConfig(
            Instance.point_mass(0.995, 1.0, 3), DESC, z_c=2, z_t=300,
            seed=derive_seed(5, i),
        )
        assert run_trial(cfg) == _kernel.run_trial_fast(cfg)


def test_rollout_continuation_parity():
    """Continuing a mid-trial state gives bit-identical results on the
    kernel and the reference loop when fed the same stream."""
    for i in range(60):
        seed = derive_seed(6, i)

        def build():
            rng = Xoshiro256(seed)
            inst = Instance.point_mass(0.8, 0.9, 3)
            tree = init_tree(inst, rng)
            for _ in range(2):
                infection_round(tree, rng)
            frontier = Frontier()
            frontier.add_node(tree, 0)
            if tree.infected[0]:
                nid = select(DESC, frontier, 3, rng)
                query(tree, frontier, nid)
                infection_round(tree, rng)
            return tree, frontier, rng

        tree_py, frontier_py, rng_py = build()
        state_py, _, _ = _trace_loop(tree_py, frontier_py, DESC, 10, 50, rng_py, 0)

        tree_nb, frontier_nb, rng_nb = build()
        snap = _kernel.snapshot_state(tree_nb, frontier_nb, 50)
        (tau, p, q, infected, stabilized, fc, lc, ns, fr, fsize, n, t, active) = snap
        s_arr = rng_nb.state_array()
        code, _, _, _, _ = _kernel._trace_loop(
            s_arr, 0, 0.8, 0, 0.9, _kernel.POLICY_CODES[DESC], 10, 50,
            tau, p, q, infected, stabilized, fc, lc, ns, fr, fsize, n, t, active, 0, 0,
        )
        rng_nb.set_state(s_arr)
        order = (TrialState.CONTAINED, TrialState.NOT_CONTAINED, TrialState.NON_CONVERGED)
        assert order[code] is state_py
        assert (rng_nb.s0, rng_nb.s1, rng_nb.s2, rng_nb.s3) == (
            rng_py.s0, rng_py.s1, rng_py.s2, rng_py.s3,
        )


def test_batch_equals_per_trial_composition():
    from dataclasses import replace

    cfg = TrialConfig(Instance.point_mass(0.6, 0.6, 3), ASC)
    n = 500
    states = [
        run_trial(replace(cfg, seed=derive_seed(777, i))).state for i in range(n)
    ]
    batch = run_batch(cfg, n, 777)
    assert batch.contained == sum(s is TrialState.CONTAINED for s in states)
    assert batch.not_contained == sum(s is TrialState.NOT_CONTAINED for s in states)
    assert batch.n == n


def test_all_contained_batch():
    batch = run_batch(TrialConfig(Instance.point_mass(0.0, 0.5, 3), ASC), 100, 5)
    assert batch.contained == 100


def test_batch_independent_of_worker_count_and_chunking():
    cfg = TrialConfig(Instance.point_mass(0.9, 0.9, 3), DESC)
    n = 70_000  # crosses the 65536 chunk boundary
    summaries = {run_batch(cfg, n, 42, workers=w) for w in (1, 2, 5)}
    assert len(summaries) == 1


def test_batch_respects_thread_env(monkeypatch):
    from tracerace.engine import resolve_workers

    monkeypatch.setenv("TRACE_RACE_THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    monkeypatch.delenv("TRACE_RACE_THREADS")
    assert resolve_workers() >= 1


def test_containment_monotone_in_p_at_q1():
    values = []
    for p in (0.1, 0.3, 0.5, 0.7, 0.9):
        batch = run_batch(
            TrialConfig(Instance.point_mass(p, 1.0, 3), DESC), 100_000, 1312
        )
        values.append(observed_containment(batch))
    sigma = (0.25 / 100_000) ** 0.5
    for lo, hi in zip(values[1:], values[:-1]):
        assert lo <= hi + 3 * sigma
