"""Infection trees: node creation, transmission, and uninhibited growth.

The process in one line: round 0 creates a root that is infected with
probability equal to its own sampled transmission parameter; in every
later round each active (non-stabilized) infected node meets one new
contact with probability ``q_v`` and transmits with probability ``p_v``.

Storage policy: only nodes that could ever enter the tracer's frontier
are materialized -- infected nodes and their children. Children of
uninfected nodes can be neither infected nor usefully queried, so they
are never created, and active uninfected nodes consume no draws during
a round. Newly created children always get their own sampled (p, q),
because the tracer observes those values for every frontier node.

Draw order (fixed, shared with the fast kernel): root p, root q, root
infection; then per round, for each active infected node in creation
order: contact draw, then on contact child p, child q, child infection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ._rng import Xoshiro256


def _check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class PointMass:
    """Distribution putting all mass on a single value."""

    value: float

    def __post_init__(self):
        _check_probability(self.value, "point-mass value")

    def sample(self, rng: Xoshiro256) -> float:
        return self.value

    def mean(self) -> float:
        return self.value


@dataclass(frozen=True)
class UniformMin:
    """Uniform distribution on [minimum, 1).

    The degenerate endpoint minimum = 1.0 (empty interval) behaves as a
    point mass at 1.0, so sweep grids may include the endpoint.
    """

    minimum: float

    def __post_init__(self):
        _check_probability(self.minimum, "uniform-min minimum")

    def sample(self, rng: Xoshiro256) -> float:
        if self.minimum >= 1.0:
            return 1.0
        return self.minimum + (1.0 - self.minimum) * rng.random()

    def mean(self) -> float:
        if self.minimum >= 1.0:
            return 1.0
        return (self.minimum + 1.0) / 2.0


ParamDistribution = Union[PointMass, UniformMin]


@dataclass(frozen=True)
class NodeParams:
    """Per-node contact probability q and transmission probability p."""

    p: float
    q: float

    def __post_init__(self):
        _check_probability(self.p, "p")
        _check_probability(self.q, "q")


@dataclass(frozen=True)
class Instance:
    """A contagion setting: parameter distributions plus head start k."""

    d_p: ParamDistribution
    d_q: ParamDistribution
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")

    @classmethod
    def point_mass(cls, p: float, q: float, k: int = 3) -> "Instance":
        return cls(PointMass(p), PointMass(q), k)

    @classmethod
    def uniform(cls, p_min: float, q_min: float, k: int = 3) -> "Instance":
        return cls(UniformMin(p_min), UniformMin(q_min), k)

    def is_point_mass(self) -> bool:
        return all(
            isinstance(d, PointMass) or (isinstance(d, UniformMin) and d.minimum >= 1.0)
            for d in (self.d_p, self.d_q)
        )

    def root_infection_probability(self) -> float:
        """P(root infected) = E[p]; the quantity behind the p0 bounds."""
        return self.d_p.mean()


@dataclass(frozen=True)
class Node:
    """Read-only view of one stored node."""

    id: int
    parent: Optional[int]
    params: NodeParams
    tau: int
    infected: bool
    stabilized: bool
    queried: bool
    children: tuple


class InfectionTree:
    """Growing labeled tree in struct-of-arrays form.

    Arrays are plain lists indexed by node id (creation order); the
    fast kernel consumes a numpy snapshot of the same layout. Counters
    ``active_infected``, ``total_infected`` and ``materialized_size``
    are maintained incrementally and re-derivable by full scan.
    """

    __slots__ = (
        "instance", "tau", "p", "q", "parent", "infected", "stabilized",
        "queried", "children", "t", "active_infected", "total_infected",
    )

    def __init__(self, instance: Instance):
        self.instance = instance
        self.tau: list[int] = []
        self.p: list[float] = []
        self.q: list[float] = []
        self.parent: list[int] = []
        self.infected: list[bool] = []
        self.stabilized: list[bool] = []
        self.queried: list[bool] = []
        self.children: list[list[int]] = []
        self.t = 0
        self.active_infected = 0
        self.total_infected = 0

    root = 0

    @property
    def materialized_size(self) -> int:
        return len(self.tau)

    def add_node(self, parent: int, params: NodeParams, tau: int, infected: bool) -> int:
        nid = len(self.tau)
        self.tau.append(tau)
        self.p.append(params.p)
        self.q.append(params.q)
        self.parent.append(parent)
        self.infected.append(infected)
        self.stabilized.append(False)
        self.queried.append(False)
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(nid)
        if infected:
            self.active_infected += 1
            self.total_infected += 1
        return nid

    def node(self, nid: int) -> Node:
        return Node(
            id=nid,
            parent=self.parent[nid] if self.parent[nid] >= 0 else None,
            params=NodeParams(self.p[nid], self.q[nid]),
            tau=self.tau[nid],
            infected=self.infected[nid],
            stabilized=self.stabilized[nid],
            queried=self.queried[nid],
            children=tuple(self.children[nid]),
        )

    def recompute_active_infected(self) -> int:
        return sum(1 for i, f in enumerate(self.infected) if f and not self.stabilized[i])


def sample_params(d_p: ParamDistribution, d_q: ParamDistribution, rng: Xoshiro256) -> NodeParams:
    """Draw (p, q) independently; p first, part of the fixed draw order."""
    p = d_p.sample(rng)
    q = d_q.sample(rng)
    return NodeParams(p, q)


def init_tree(instance: Instance, rng: Xoshiro256) -> InfectionTree:
    """Round 0: create the root, infected with probability its own p."""
    tree = InfectionTree(instance)
    params = sample_params(instance.d_p, instance.d_q, rng)
    infected = rng.random() < params.p
    tree.add_node(parent=-1, params=params, tau=0, infected=infected)
    return tree


def infection_round(tree: InfectionTree, rng: Xoshiro256) -> InfectionTree:
    """Advance one round: every active infected node may spawn one child."""
    tree.t += 1
    t = tree.t
    d_p, d_q = tree.instance.d_p, tree.instance.d_q
    infected, stabilized, q = tree.infected, tree.stabilized, tree.q
    for v in range(len(tree.tau)):
        if infected[v] and not stabilized[v]:
            if rng.random() < q[v]:
                params = sample_params(d_p, d_q, rng)
                child_infected = rng.random() < tree.p[v]
                tree.add_node(parent=v, params=params, tau=t, infected=child_infected)
    return tree


def grow_uninhibited(tree: InfectionTree, k: int, rng: Xoshiro256) -> InfectionTree:
    """Run rounds 1..k-1, the head start before tracing begins at step k."""
    if k < 1:
        raise ValueError(f"uninhibited growth needs k >= 1, got {k}")
    if tree.t != 0:
        raise ValueError("grow_uninhibited expects a fresh tree (t = 0)")
    for _ in range(k - 1):
        infection_round(tree, rng)
    return tree
