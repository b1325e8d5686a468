"""Grid sweeps comparing policies cell by cell, with adaptive second rounds.

Two-policy mode (point-mass instances, ascending-time vs descending-time):
round 1 runs ``round1_n`` trials per policy; if the observed containment
gap d reaches ``d_threshold``, a fresh round 2 of ``second_round_size(d)``
trials per policy decides the cell via the two-coin bound computed from
round-2 data alone (round 1 only sizes the confirmation batch; reusing
it would break the bound's fresh-sample assumption). Cells classify as
``winner-<policy>`` at the confidence threshold, or as one of two
no-claim codes: ``no-confidence-below-threshold-d`` (gap too small for a
second round) and ``no-confidence-failed-bound`` (second round ran but
the bound was inapplicable or below threshold).

Three-policy mode (heterogeneous instances Unif[p_min,1) x Unif[q_min,1),
descending-p vs descending-q vs descending-time): a single round per
policy, decided by the three-coin bound on the same batches.

Reproducibility: cells are processed in row-major order; the batch for
(cell, policy, round) uses master seed derive_seed(spec seed, cell index,
policy index, round). A checkpoint journal makes interrupted sweeps
resumable; per-cell classification is a pure function of the journaled
counts, so resumed results are identical to uninterrupted ones.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from ._rng import derive_seed
from .confidence import ConfidenceReport, second_round_size, three_coin_confidence, two_coin_confidence
from .contagion import Instance
from .engine import BatchSummary, TrialConfig, observed_containment, run_batch
from .policies import BuiltinPolicy
from .reporting import (
    CHECKPOINT_HEADER,
    RESULTS_HEADER,
    checkpoint_line,
    fmt_prob,
    read_checkpoint,
    results_rows,
)

TWO_POLICY = "two-policy"
THREE_POLICY = "three-policy"

TWO_POLICY_SET = (BuiltinPolicy.ASCENDING_TIME, BuiltinPolicy.DESCENDING_TIME)
THREE_POLICY_SET = (
    BuiltinPolicy.DESCENDING_P,
    BuiltinPolicy.DESCENDING_Q,
    BuiltinPolicy.DESCENDING_TIME,
)

CLASS_BELOW_THRESHOLD = "no-confidence-below-threshold-d"
CLASS_FAILED_BOUND = "no-confidence-failed-bound"

# Figure color conventions. The split of the two no-claim codes between
# purple and blue is a documented guess; the source plots name both
# colors without mapping them.
TWO_POLICY_COLORS = {
    "winner-ascending-time": "green",
    "winner-descending-time": "yellow",
    CLASS_BELOW_THRESHOLD: "purple",
    CLASS_FAILED_BOUND: "blue",
}
THREE_POLICY_COLORS = {
    "winner-descending-p": "green",
    "winner-descending-q": "yellow",
    "winner-descending-time": "blue",
    CLASS_BELOW_THRESHOLD: "purple",
    CLASS_FAILED_BOUND: "purple",
}


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Axis ranges and knobs for one sweep. Axis values are start,
    start+step, ... up to stop inclusive (within float tolerance)."""

    p_start: float
    p_stop: float
    p_step: float
    q_start: float
    q_stop: float
    q_step: float
    round1_n: int
    d_threshold: float = 0.00035
    confidence_threshold: float = 0.5
    z_c: int = 10
    z_t: int = 1000
    k: int = 3
    master_seed: int = 0
    budget_cap: int = 2_000_000_000

    def __post_init__(self):
        for name in ("p", "q"):
            start = getattr(self, f"{name}_start")
            stop = getattr(self, f"{name}_stop")
            step = getattr(self, f"{name}_step")
            if step <= 0:
                raise ValueError(f"{name}_step must be > 0")
            if start > stop:
                raise ValueError(f"{name}_start must be <= {name}_stop")
        if self.round1_n < 1:
            raise ValueError("round1_n must be >= 1")
        if self.budget_cap < 1:
            raise ValueError("budget_cap must be >= 1")

    @staticmethod
    def _axis(start: float, stop: float, step: float) -> list[float]:
        values = []
        i = 0
        while True:
            v = round(start + i * step, 9)
            if v > stop + 1e-9:
                break
            values.append(v)
            i += 1
        return values

    def p_values(self) -> list[float]:
        return self._axis(self.p_start, self.p_stop, self.p_step)

    def q_values(self) -> list[float]:
        return self._axis(self.q_start, self.q_stop, self.q_step)

    def cells(self) -> list[tuple[int, float, float]]:
        """Row-major (cell_index, p, q) enumeration."""
        out = []
        idx = 0
        for p in self.p_values():
            for q in self.q_values():
                out.append((idx, p, q))
                idx += 1
        return out


@dataclass(frozen=True)
class InstanceResult:
    mode: str
    cell_index: int
    p: float
    q: float
    policies: tuple
    round1: dict
    round2: Optional[dict]
    m_round2: Optional[int]
    d_round1: float
    report: Optional[ConfidenceReport]
    classification: str
    winner: Optional[BuiltinPolicy]


@dataclass(frozen=True)
class DominanceMap:
    """Per-cell classifications plus the color legend for rendering."""

    mode: str
    cells: dict
    colors: dict


def dominance_map(results: Sequence[InstanceResult]) -> DominanceMap:
    if not results:
        raise ValueError("no results to map")
    mode = results[0].mode
    colors = TWO_POLICY_COLORS if mode == TWO_POLICY else THREE_POLICY_COLORS
    return DominanceMap(
        mode=mode,
        cells={(r.p, r.q): r.classification for r in results},
        colors=dict(colors),
    )


def region_confidence(cells: Sequence, square_side: int) -> float:
    """Confidence that at least one cell of a same-winner square region
    is truly won, assuming per-cell independence: 1 - (1-c)^(side^2)
    with c the smallest per-cell confidence."""
    if square_side < 1:
        raise ValueError("square_side must be >= 1")
    pairs = []
    for cell in cells:
        if isinstance(cell, InstanceResult):
            if cell.winner is None or cell.report is None or cell.report.confidence is None:
                raise ValueError("region_confidence needs winner-classified cells")
            pairs.append((cell.winner, cell.report.confidence))
        else:
            pairs.append((cell[0], float(cell[1])))
    if len(pairs) != square_side * square_side:
        raise ValueError("cell count must equal square_side^2")
    winners = {w for w, _ in pairs}
    if len(winners) != 1:
        raise ValueError("mixed winners in region")
    c = min(conf for _, conf in pairs)
    return 1.0 - (1.0 - c) ** (square_side * square_side)


class _Journal:
    """Append-only per-cell record of batch counts + checkpoint lines."""

    def __init__(self, directory: Optional[str], resume: bool):
        self.enabled = directory is not None
        if not self.enabled:
            self.done: dict[int, tuple[str, str]] = {}
            return
        os.makedirs(directory, exist_ok=True)
        self.journal_path = os.path.join(directory, "journal.csv")
        self.checkpoint_path = os.path.join(directory, "checkpoint.txt")
        if resume:
            self.done = read_checkpoint(self.checkpoint_path)
            self.rows = self._read_rows()
        else:
            self.done = {}
            self.rows = {}
            for path, header in (
                (self.journal_path, RESULTS_HEADER),
                (self.checkpoint_path, CHECKPOINT_HEADER),
            ):
                with open(path, "w", newline="") as fh:
                    fh.write(header + "\n")

    def _read_rows(self) -> dict[tuple[str, str], list[str]]:
        rows: dict[tuple[str, str], list[str]] = {}
        if not os.path.exists(self.journal_path):
            return rows
        with open(self.journal_path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line == RESULTS_HEADER:
                    continue
                fields = line.split(",")
                rows.setdefault((fields[1], fields[2]), []).append(line)
        return rows

    def saved_batches(self, cell_index: int):
        """Re-hydrate (round1, round2, m_round2) for a completed cell."""
        if cell_index not in self.done:
            return None
        key = self.done[cell_index]
        rounds: dict[int, dict[str, BatchSummary]] = {1: {}, 2: {}}
        m2 = None
        for line in self.rows.get(key, []):
            f = line.split(",")
            rnd = int(f[4])
            rounds[rnd][f[3]] = BatchSummary(int(f[5]), int(f[6]), int(f[7]), int(f[8]))
            if rnd == 2:
                m2 = int(f[5])
        return rounds[1], (rounds[2] or None), m2

    def record(self, result: InstanceResult) -> None:
        if not self.enabled:
            return
        with open(self.journal_path, "a", newline="") as fh:
            for row in results_rows(result):
                fh.write(row + "\n")
        with open(self.checkpoint_path, "a", newline="") as fh:
            fh.write(checkpoint_line(result.cell_index, result.p, result.q) + "\n")


def _classify(policies, report: Optional[ConfidenceReport], threshold: float):
    if (
        report is not None
        and report.applicable
        and report.confidence is not None
        and report.confidence >= threshold
    ):
        winner = policies[report.winner]
        return f"winner-{winner.value}", winner
    return CLASS_FAILED_BOUND, None


def _two_policy_cell(
    spec: GridSpec,
    cell_index: int,
    p: float,
    q: float,
    budget,
    workers: Optional[int],
    batches=None,
) -> InstanceResult:
    instance = Instance.point_mass(p, q, spec.k)
    policies = TWO_POLICY_SET
    if batches is None:
        budget.spend(len(policies) * spec.round1_n, cell_index)
        round1 = {
            pol: run_batch(
                TrialConfig(instance, pol, spec.z_c, spec.z_t),
                spec.round1_n,
                derive_seed(spec.master_seed, cell_index, pi, 1),
                workers,
            )
            for pi, pol in enumerate(policies)
        }
        round2, m2 = None, None
    else:
        round1, round2, m2 = batches
        round1 = {pol: round1[pol.value] for pol in policies}
        if round2 is not None:
            round2 = {pol: round2[pol.value] for pol in policies}
    obs1 = [observed_containment(round1[pol]) for pol in policies]
    d1 = abs(obs1[0] - obs1[1])
    if d1 == 0.0 or d1 < spec.d_threshold:
        return InstanceResult(
            TWO_POLICY, cell_index, p, q, policies, round1, None, None, d1,
            None, CLASS_BELOW_THRESHOLD, None,
        )
    if batches is None:
        m2 = second_round_size(d1)
        budget.spend(len(policies) * m2, cell_index)
        round2 = {
            pol: run_batch(
                TrialConfig(instance, pol, spec.z_c, spec.z_t),
                m2,
                derive_seed(spec.master_seed, cell_index, pi, 2),
                workers,
            )
            for pi, pol in enumerate(policies)
        }
    obs2 = [observed_containment(round2[pol]) for pol in policies]
    p0 = 1.0 - instance.root_infection_probability()
    if p0 <= 0.0:
        report = None
    else:
        report = two_coin_confidence(m2, obs2[0], obs2[1], p0)
    classification, winner = _classify(policies, report, spec.confidence_threshold)
    return InstanceResult(
        TWO_POLICY, cell_index, p, q, policies, round1, round2, m2, d1,
        report, classification, winner,
    )


def _three_policy_cell(
    spec: GridSpec,
    cell_index: int,
    p_min: float,
    q_min: float,
    budget,
    workers: Optional[int],
    batches=None,
) -> InstanceResult:
    instance = Instance.uniform(p_min, q_min, spec.k)
    policies = THREE_POLICY_SET
    if batches is None:
        budget.spend(len(policies) * spec.round1_n, cell_index)
        round1 = {
            pol: run_batch(
                TrialConfig(instance, pol, spec.z_c, spec.z_t),
                spec.round1_n,
                derive_seed(spec.master_seed, cell_index, pi, 1),
                workers,
            )
            for pi, pol in enumerate(policies)
        }
    else:
        round1 = {pol: batches[0][pol.value] for pol in policies}
    obs = [observed_containment(round1[pol]) for pol in policies]
    top, second = sorted(obs, reverse=True)[:2]
    d1 = top - second
    p0 = 1.0 - instance.root_infection_probability()
    if p0 <= 0.0:
        report = None
    else:
        report = three_coin_confidence(spec.round1_n, obs, p0)
    classification, winner = _classify(policies, report, spec.confidence_threshold)
    return InstanceResult(
        THREE_POLICY, cell_index, p_min, q_min, policies, round1, None, None,
        d1, report, classification, winner,
    )


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0

    def spend(self, trials: int, cell_index: int) -> None:
        self.used += trials
        if self.used > self.cap:
            raise BudgetExceededError(
                f"trial budget exceeded at cell {cell_index}: "
                f"{self.used} trials needed > cap {self.cap}"
            )


def _sweep(
    spec: GridSpec,
    mode: str,
    cell_fn,
    n_policies: int,
    workers: Optional[int],
    checkpoint_dir: Optional[str],
    resume: bool,
    progress: Optional[Callable[[InstanceResult], None]],
) -> list[InstanceResult]:
    cells = spec.cells()
    round1_total = len(cells) * n_policies * spec.round1_n
    if round1_total > spec.budget_cap:
        raise BudgetExceededError(
            f"round-1 budget {round1_total} trials exceeds cap {spec.budget_cap}"
        )
    journal = _Journal(checkpoint_dir, resume)
    budget = _Budget(spec.budget_cap)
    results = []
    for cell_index, p, q in cells:
        saved = journal.saved_batches(cell_index) if journal.done else None
        if saved is not None:
            result = cell_fn(spec, cell_index, p, q, budget, workers, saved)
        else:
            result = cell_fn(spec, cell_index, p, q, budget, workers, None)
            journal.record(result)
        results.append(result)
        if progress is not None:
            progress(result)
    return results


def sweep_two_policy(
    spec: GridSpec,
    workers: Optional[int] = None,
    checkpoint_dir: Optional[str] = None,
    resume: bool = False,
    progress: Optional[Callable[[InstanceResult], None]] = None,
) -> list[InstanceResult]:
    """Ascending-time vs descending-time over a point-mass (p, q) grid."""
    return _sweep(
        spec, TWO_POLICY, _two_policy_cell, 2, workers, checkpoint_dir, resume, progress
    )


def sweep_three_policy(
    spec: GridSpec,
    workers: Optional[int] = None,
    checkpoint_dir: Optional[str] = None,
    resume: bool = False,
    progress: Optional[Callable[[InstanceResult], None]] = None,
) -> list[InstanceResult]:
    """descending-p vs descending-q vs descending-time over a
    (p_min, q_min) grid of uniform-parameter instances."""
    return _sweep(
        spec, THREE_POLICY, _three_policy_cell, 3, workers, checkpoint_dir, resume, progress
    )
