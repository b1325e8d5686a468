"""Frontier bookkeeping and the query-prioritization policies.

The tracer sees, for every unqueried child of a queried infected node,
exactly the triple (p, q, tau) -- nothing else. A policy picks one such
entry per step. The built-in policies each order by a single key with
uniform random tie-breaking among tied entries; entries with identical
keys are indistinguishable to the tracer, so any deterministic
tie-break would smuggle in information it does not have.

Frontier storage order is insertion order (root first, then revealed
children in creation order); selection draws consume randomness only
when more than one entry is tied, so replay is exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

from ._rng import Xoshiro256
from .contagion import InfectionTree


@dataclass(frozen=True)
class FrontierEntry:
    """The observable triple for one candidate node."""

    node: int
    p: float
    q: float
    tau: int


class Frontier:
    """Insertion-ordered multiset of candidate entries."""

    __slots__ = ("entries",)

    def __init__(self):
        self.entries: list[FrontierEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def add(self, entry: FrontierEntry) -> None:
        self.entries.append(entry)

    def add_node(self, tree: InfectionTree, nid: int) -> FrontierEntry:
        entry = FrontierEntry(nid, tree.p[nid], tree.q[nid], tree.tau[nid])
        self.entries.append(entry)
        return entry

    def remove_node(self, nid: int) -> FrontierEntry:
        for i, e in enumerate(self.entries):
            if e.node == nid:
                return self.entries.pop(i)
        raise ValueError(f"node {nid} is not in the frontier")

    def taus(self) -> list[int]:
        return [e.tau for e in self.entries]


class BuiltinPolicy(enum.Enum):
    ASCENDING_TIME = "ascending-time"
    DESCENDING_TIME = "descending-time"
    DESCENDING_P = "descending-p"
    DESCENDING_Q = "descending-q"
    UNIFORM_RANDOM = "uniform-random"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LearnedPolicy:
    """Trained value table with a monotonic fallback outside its state space."""

    vtable: object  # qlearn.VTable; typed loosely to avoid an import cycle
    terminal: BuiltinPolicy

    def __post_init__(self):
        if self.terminal not in (BuiltinPolicy.ASCENDING_TIME, BuiltinPolicy.DESCENDING_TIME):
            raise ValueError("learned policies need a monotonic terminal policy")

    def __str__(self) -> str:
        return f"learned({self.terminal.value})"


PolicyKind = Union[BuiltinPolicy, LearnedPolicy]

_POLICY_NAMES = {p.value: p for p in BuiltinPolicy}


def parse_policy(name: str) -> BuiltinPolicy:
    try:
        return _POLICY_NAMES[name]
    except KeyError:
        raise ValueError(
            f"unknown policy {name!r}; expected one of {sorted(_POLICY_NAMES)}"
        ) from None


def _tied_entries(policy: BuiltinPolicy, entries: list[FrontierEntry]) -> list[FrontierEntry]:
    if policy is BuiltinPolicy.UNIFORM_RANDOM:
        return entries
    if policy is BuiltinPolicy.ASCENDING_TIME:
        key = min(e.tau for e in entries)
        return [e for e in entries if e.tau == key]
    if policy is BuiltinPolicy.DESCENDING_TIME:
        key = max(e.tau for e in entries)
        return [e for e in entries if e.tau == key]
    if policy is BuiltinPolicy.DESCENDING_P:
        key = max(e.p for e in entries)
        return [e for e in entries if e.p == key]
    key = max(e.q for e in entries)
    return [e for e in entries if e.q == key]


def select(policy: PolicyKind, frontier: Frontier, t: int, rng: Xoshiro256) -> int:
    """Pick the node to query at step t. The frontier must be non-empty.

    An empty frontier means containment; callers must terminate instead
    of selecting.
    """
    entries = frontier.entries
    if not entries:
        raise ValueError("select called on an empty frontier (containment)")
    if isinstance(policy, LearnedPolicy):
        from .qlearn import learned_select

        tau = learned_select(policy.vtable, frontier, t, rng, terminal=policy.terminal)
        with_tau = [e for e in entries if e.tau == tau]
        return with_tau[rng.index(len(with_tau))].node
    if len(entries) == 1:
        return entries[0].node
    tied = _tied_entries(policy, entries)
    return tied[rng.index(len(tied))].node


@dataclass(frozen=True)
class QueryResult:
    infected: bool
    revealed: tuple


def query(tree: InfectionTree, frontier: Frontier, nid: int) -> QueryResult:
    """Query a frontier node: reveal status; stabilize and expand if infected.

    Uninfected nodes are marked queried but never stabilized -- they
    cannot transmit, so stabilization would be meaningless, and their
    future contacts are never materialized anyway.
    """
    frontier.remove_node(nid)
    tree.queried[nid] = True
    if not tree.infected[nid]:
        return QueryResult(infected=False, revealed=())
    tree.stabilized[nid] = True
    tree.active_infected -= 1
    revealed = tuple(frontier.add_node(tree, c) for c in tree.children[nid])
    return QueryResult(infected=True, revealed=revealed)
