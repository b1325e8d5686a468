"""Tabular Q-learning over truncated partial states of the tracing race.

The tracer's table keys are partial states (multiset of frontier arrival
times, current step); an action is an arrival time present in the
frontier (nodes with equal parameters are indistinguishable except by
arrival time, so picking a time and then a uniform node among that time
is the finest control the tracer has). Episodes run the real process;
the value update after taking action a in state s and landing in s' is

    V(s, a) <- (1 - alpha) * V(s, a) + alpha * (r + gamma * max_a' V(s', a'))

with missing entries read as 0 and the max over an empty next frontier
defined as 0. Rewards: +1 on containment, -1 otherwise (active
infections past z_c, or the z_t size cap), 0 for non-terminal steps.

Training stays tractable by truncating episodes at t > max_t, frontier
size > max_frontier, or any frontier arrival time > max_tau; a truncated
episode's terminal reward is the mean reward of ``rollouts`` full
continuations of the current hidden state under the terminal policy
(computed by the fast kernel on the same stream), used with zero
bootstrap. States beyond the limits are therefore never stored, so
evaluation-time delegation to the terminal policy falls out of a simple
missing-state check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import _kernel
from ._rng import Xoshiro256, derive_seed
from .contagion import Instance, infection_round, init_tree
from .engine import TrialConfig, run_batch
from .policies import BuiltinPolicy, Frontier, query

_MONOTONIC = (BuiltinPolicy.ASCENDING_TIME, BuiltinPolicy.DESCENDING_TIME)


@dataclass(frozen=True)
class PartialState:
    """Canonical key: sorted arrival-time multiset plus the current step."""

    taus: tuple
    t: int

    @classmethod
    def from_frontier(cls, frontier: Frontier, t: int) -> "PartialState":
        return cls(tuple(sorted(e.tau for e in frontier.entries)), t)


class VTable:
    """Lazily created state -> action -> value map, zero-initialized."""

    def __init__(self):
        self._rows: dict[PartialState, dict[int, float]] = {}

    def __len__(self) -> int:
        return len(self._rows)

    def has_state(self, s: PartialState) -> bool:
        return s in self._rows

    def get(self, s: PartialState, a: int) -> float:
        row = self._rows.get(s)
        if row is None:
            return 0.0
        return row.get(a, 0.0)

    def set(self, s: PartialState, a: int, value: float) -> None:
        self._rows.setdefault(s, {})[a] = value

    def states(self):
        return self._rows.keys()

    def row(self, s: PartialState) -> dict:
        return dict(self._rows.get(s, {}))

    def best_value(self, s: PartialState) -> float:
        """max over the state's frontier actions, 0 if the frontier is empty."""
        if not s.taus:
            return 0.0
        return max(self.get(s, a) for a in set(s.taus))

    def to_lines(self) -> list[str]:
        lines = []
        for s in sorted(self._rows, key=lambda st: (st.t, st.taus)):
            for a in sorted(self._rows[s]):
                taus = ",".join(str(x) for x in s.taus)
                lines.append(f"{taus};{s.t};{a};{self._rows[s][a]!r}")
        return lines

    def save(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(self.to_lines()) + ("\n" if self._rows else ""))

    @classmethod
    def load(cls, path: str) -> "VTable":
        table = cls()
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                taus_s, t_s, a_s, v_s = line.split(";")
                taus = tuple(int(x) for x in taus_s.split(",")) if taus_s else ()
                table.set(PartialState(taus, int(t_s)), int(a_s), float(v_s))
        return table


@dataclass(frozen=True)
class QConfig:
    eps: float = 0.1
    alpha: float = 0.1
    gamma: float = 0.6
    episodes: int = 1_000_000
    max_t: int = 4
    max_frontier: int = 3
    max_tau: int = 3
    rollouts: int = 100
    terminal_policy: BuiltinPolicy = BuiltinPolicy.DESCENDING_TIME
    z_c: int = 10
    z_t: int = 1000

    def __post_init__(self):
        for name in ("eps", "alpha", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if min(self.max_t, self.max_frontier, self.max_tau, self.rollouts) < 0:
            raise ValueError("limits must be >= 0")
        if self.terminal_policy not in _MONOTONIC:
            raise ValueError("terminal_policy must be ascending-time or descending-time")


def q_update(
    v: VTable,
    s: PartialState,
    a: int,
    r: float,
    s_next: PartialState,
    alpha: float,
    gamma: float,
) -> VTable:
    """One value update; mutates and returns the table."""
    if a not in s.taus:
        raise ValueError(f"action {a} is not an arrival time in state {s.taus}")
    v.set(s, a, (1.0 - alpha) * v.get(s, a) + alpha * (r + gamma * v.best_value(s_next)))
    return v


def _beyond_limits(s: PartialState, config: QConfig) -> bool:
    return (
        s.t > config.max_t
        or len(s.taus) > config.max_frontier
        or (len(s.taus) > 0 and max(s.taus) > config.max_tau)
    )


def _argmax_tau(v: VTable, s: PartialState, rng: Xoshiro256) -> int:
    """Best-valued arrival time, uniform among ties (ascending tau order)."""
    taus = sorted(set(s.taus))
    best = None
    tied = []
    for tau in taus:
        val = v.get(s, tau)
        if best is None or val > best:
            best = val
            tied = [tau]
        elif val == best:
            tied.append(tau)
    return tied[rng.index(len(tied))]


def learned_select(
    v: VTable,
    frontier: Frontier,
    t: int,
    rng: Xoshiro256,
    terminal: BuiltinPolicy,
) -> int:
    """Arrival time to query: table argmax inside the trained state space,
    the terminal policy's choice outside it (unseen states include
    everything beyond the truncation limits, which are never stored)."""
    if len(frontier) == 0:
        raise ValueError("learned_select called on an empty frontier")
    s = PartialState.from_frontier(frontier, t)
    if v.has_state(s):
        return _argmax_tau(v, s, rng)
    taus = frontier.taus()
    return max(taus) if terminal is BuiltinPolicy.DESCENDING_TIME else min(taus)


def _eps_greedy(
    v: VTable, s: PartialState, frontier: Frontier, eps: float, rng: Xoshiro256
):
    """Training action: returns (arrival time, node id). Single-entry
    frontiers are forced moves and consume no draws; exploration picks a
    uniform frontier entry, exploitation the argmax arrival time."""
    entries = frontier.entries
    if len(entries) == 1:
        return entries[0].tau, entries[0].node
    if rng.random() < eps:
        e = entries[rng.index(len(entries))]
        return e.tau, e.node
    tau = _argmax_tau(v, s, rng)
    with_tau = [e for e in entries if e.tau == tau]
    return tau, with_tau[rng.index(len(with_tau))].node


def train(instance: Instance, config: QConfig, master_seed: int, on_action=None) -> VTable:
    """Q-learning over `config.episodes` episodes of the real process.

    `on_action(state, arrival_time)` is an optional observer for tests
    and diagnostics; it does not affect the stream."""
    if not instance.is_point_mass():
        raise ValueError("training requires point-mass parameter distributions")
    v = VTable()
    rng = Xoshiro256(derive_seed(master_seed))
    terminal_code = _kernel.POLICY_CODES[config.terminal_policy]
    dpk, dpa = _kernel.dist_code(instance.d_p)
    dqk, dqa = _kernel.dist_code(instance.d_q)
    for _ in range(config.episodes):
        tree = init_tree(instance, rng)
        tripped = False
        for _ in range(instance.k - 1):
            infection_round(tree, rng)
            if tree.active_infected > config.z_c or tree.materialized_size > config.z_t:
                tripped = True
                break
        if tripped:
            continue  # terminal before any decision; nothing to credit
        frontier = Frontier()
        frontier.add_node(tree, tree.root)
        t = instance.k
        s = PartialState.from_frontier(frontier, t)
        if _beyond_limits(s, config):
            continue
        while True:
            a_tau, nid = _eps_greedy(v, s, frontier, config.eps, rng)
            if on_action is not None:
                on_action(s, a_tau)
            query(tree, frontier, nid)
            infection_round(tree, rng)
            t += 1
            if len(frontier) == 0:
                q_update(v, s, a_tau, 1.0, PartialState((), t), config.alpha, config.gamma)
                break
            if tree.active_infected > config.z_c or tree.materialized_size > config.z_t:
                q_update(v, s, a_tau, -1.0, PartialState((), t), config.alpha, config.gamma)
                break
            s_next = PartialState.from_frontier(frontier, t)
            if _beyond_limits(s_next, config):
                r = _rollout_reward(tree, frontier, config, terminal_code,
                                    dpk, dpa, dqk, dqa, rng)
                q_update(v, s, a_tau, r, PartialState((), t), config.alpha, config.gamma)
                break
            q_update(v, s, a_tau, 0.0, s_next, config.alpha, config.gamma)
            s = s_next
    return v


def _rollout_reward(tree, frontier, config: QConfig, terminal_code: int,
                    dpk, dpa, dqk, dqa, rng: Xoshiro256) -> float:
    """Mean reward of `rollouts` kernel continuations of the full hidden
    state under the terminal policy, drawing from the training stream."""
    if config.rollouts == 0:
        return 0.0
    (tau, p, q, infected, stabilized, fc, lc, ns, fr, fsize, n, t, active
     ) = _kernel.snapshot_state(tree, frontier, config.z_t)
    s_arr = rng.state_array()
    mean = _kernel.rollout_mean(
        s_arr, dpk, dpa, dqk, dqa, terminal_code, config.z_c, config.z_t,
        tau, p, q, infected, stabilized, fc, lc, ns, fr, fsize, n, t, active,
        config.rollouts,
    )
    rng.set_state(s_arr)
    return float(mean)


def evaluate(
    policy,
    instance: Instance,
    n: int,
    master_seed: int,
    z_c: int = 10,
    z_t: int = 1000,
    workers: Optional[int] = None,
) -> float:
    """Containment fraction of `n` engine trials under `policy`.

    Also checks the reward identity exactly: with rewards +1/-1, the
    summed reward is 2*contained - n, and (mean reward + 1) / 2 equals
    contained / n as correctly-rounded floats.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    batch = run_batch(TrialConfig(instance, policy, z_c, z_t), n, master_seed, workers)
    containment = batch.contained / n
    reward_sum = 2 * batch.contained - n
    via_reward = (reward_sum + n) / (2 * n)
    if via_reward != containment:
        raise AssertionError("reward-containment identity violated")
    return containment
