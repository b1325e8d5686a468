"""Trial engine: full trials to termination, and reproducible batches.

A trial is: round 0 (root), uninhibited rounds 1..k-1, then repeated
steps of query-then-infection-round starting at step k with the frontier
initialized to {root}. It ends in one of three states:

  contained      -- the frontier emptied (every infected node stabilized)
  not-contained  -- active infections exceeded z_c (checked after every
                    round, head-start rounds included)
  non-converged  -- materialized nodes exceeded z_t before either

Determinism contract: a trial is a pure function of its config. Batch
trial ``i`` runs on the stream seeded by ``derive_seed(master_seed, i)``,
so batch results are independent of chunking, worker count, and of
whether the numba fast path or the pure-Python reference path executed
(the two consume identical draw sequences; tests assert bit equality).
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, replace
from typing import Callable, Optional

from ._rng import Xoshiro256, derive_seed
from .contagion import InfectionTree, Instance, infection_round, init_tree
from .policies import (
    BuiltinPolicy,
    Frontier,
    FrontierEntry,
    PolicyKind,
    query,
    select,
)

_BATCH_CHUNK = 1 << 16


class TrialState(enum.Enum):
    CONTAINED = "contained"
    NOT_CONTAINED = "not-contained"
    NON_CONVERGED = "non-converged"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TrialConfig:
    instance: Instance
    policy: PolicyKind
    z_c: int = 10
    z_t: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.z_c < 1:
            raise ValueError("z_c must be >= 1")
        if self.z_t < self.z_c:
            raise ValueError("z_t must be >= z_c")
        if self.instance.k < 1:
            raise ValueError("tracing from birth (k = 0) is out of scope; k must be >= 1")


@dataclass(frozen=True)
class TrialOutcome:
    state: TrialState
    rounds: int
    queries: int
    total_infected: int
    peak_active_infected: int


@dataclass(frozen=True)
class BatchSummary:
    n: int
    contained: int
    not_contained: int
    non_converged: int

    def __post_init__(self):
        if self.contained + self.not_contained + self.non_converged != self.n:
            raise ValueError("batch counts must sum to n")

    def __add__(self, other: "BatchSummary") -> "BatchSummary":
        return BatchSummary(
            self.n + other.n,
            self.contained + other.contained,
            self.not_contained + other.not_contained,
            self.non_converged + other.non_converged,
        )


@dataclass(frozen=True)
class TraceRecord:
    """One per-step snapshot for human-readable trial traces.

    ``queried`` is None for head-start rounds (no tracing yet); the
    remaining fields describe the tree after the step's infection round.
    """

    step: int
    queried: Optional[int]
    queried_entry: Optional[FrontierEntry]
    was_infected: Optional[bool]
    revealed: int
    frontier: tuple
    active_infected: int
    materialized: int


def observed_containment(batch: BatchSummary) -> float:
    """Fraction of trials that terminated contained."""
    if batch.n < 1:
        raise ValueError("batch must contain at least one trial")
    return batch.contained / batch.n


def _trace_loop(
    tree: InfectionTree,
    frontier: Frontier,
    policy: PolicyKind,
    z_c: int,
    z_t: int,
    rng: Xoshiro256,
    peak: int,
    trace: Optional[Callable[[TraceRecord], None]] = None,
):
    """Query/round steps until termination; shared by trials and rollouts."""
    queries = 0
    while True:
        if len(frontier) == 0:
            return TrialState.CONTAINED, queries, peak
        step = tree.t + 1
        nid = select(policy, frontier, step, rng)
        entry = FrontierEntry(nid, tree.p[nid], tree.q[nid], tree.tau[nid])
        result = query(tree, frontier, nid)
        queries += 1
        infection_round(tree, rng)
        if tree.active_infected > peak:
            peak = tree.active_infected
        if trace is not None:
            trace(
                TraceRecord(
                    step=step,
                    queried=nid,
                    queried_entry=entry,
                    was_infected=result.infected,
                    revealed=len(result.revealed),
                    frontier=tuple(frontier.entries),
                    active_infected=tree.active_infected,
                    materialized=tree.materialized_size,
                )
            )
        if tree.active_infected > z_c:
            return TrialState.NOT_CONTAINED, queries, peak
        if tree.materialized_size > z_t:
            return TrialState.NON_CONVERGED, queries, peak


def run_trial(
    config: TrialConfig, trace: Optional[Callable[[TraceRecord], None]] = None
) -> TrialOutcome:
    """Run one trial on the pure-Python reference path."""
    rng = Xoshiro256(config.seed)
    tree = init_tree(config.instance, rng)
    peak = tree.active_infected
    for _ in range(config.instance.k - 1):
        infection_round(tree, rng)
        if tree.active_infected > peak:
            peak = tree.active_infected
        if trace is not None:
            trace(
                TraceRecord(
                    step=tree.t,
                    queried=None,
                    queried_entry=None,
                    was_infected=None,
                    revealed=0,
                    frontier=(),
                    active_infected=tree.active_infected,
                    materialized=tree.materialized_size,
                )
            )
        if tree.active_infected > config.z_c:
            return TrialOutcome(
                TrialState.NOT_CONTAINED, tree.t, 0, tree.total_infected, peak
            )
        if tree.materialized_size > config.z_t:
            return TrialOutcome(
                TrialState.NON_CONVERGED, tree.t, 0, tree.total_infected, peak
            )
    frontier = Frontier()
    frontier.add_node(tree, tree.root)
    state, queries, peak = _trace_loop(
        tree, frontier, config.policy, config.z_c, config.z_t, rng, peak, trace
    )
    return TrialOutcome(state, tree.t, queries, tree.total_infected, peak)


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit argument, then TRACE_RACE_THREADS, then cpu count."""
    if workers is not None:
        if workers < 1:
            raise ValueError("workers must be >= 1")
        return workers
    env = os.environ.get("TRACE_RACE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_batch(
    config_template: TrialConfig,
    n: int,
    master_seed: int,
    workers: Optional[int] = None,
) -> BatchSummary:
    """Run n independent trials; trial i uses seed derive_seed(master_seed, i).

    The template's own seed field is ignored. Aggregation is pure counts,
    so results are identical for every worker count and chunking.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(config_template.policy, BuiltinPolicy):
        return _run_batch_kernel(config_template, n, master_seed, resolve_workers(workers))
    counts = [0, 0, 0]
    order = [TrialState.CONTAINED, TrialState.NOT_CONTAINED, TrialState.NON_CONVERGED]
    for i in range(n):
        outcome = run_trial(replace(config_template, seed=derive_seed(master_seed, i)))
        counts[order.index(outcome.state)] += 1
    return BatchSummary(n, counts[0], counts[1], counts[2])


def _run_batch_kernel(
    config: TrialConfig, n: int, master_seed: int, workers: int
) -> BatchSummary:
    from . import _kernel

    args = _kernel.batch_args(config)
    chunks = [
        (start, min(_BATCH_CHUNK, n - start)) for start in range(0, n, _BATCH_CHUNK)
    ]
    if workers <= 1 or len(chunks) == 1:
        parts = [_kernel.run_batch_range(master_seed, s, c, *args) for s, c in chunks]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda sc: _kernel.run_batch_range(master_seed, sc[0], sc[1], *args),
                    chunks,
                )
            )
    contained = sum(p[0] for p in parts)
    not_contained = sum(p[1] for p in parts)
    non_converged = sum(p[2] for p in parts)
    return BatchSummary(n, contained, not_contained, non_converged)
