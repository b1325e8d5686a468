"""Stable file formats: results/dominance CSVs, manifests, checkpoints.

Schemas are frozen (golden-file tested); downstream consumers, including
the figure renderer, parse them bit-exactly:

  results CSV   mode,p_or_pmin,q_or_qmin,policy,round,n_trials,contained,
                not_contained,non_converged,observed_containment
  dominance CSV p_or_pmin,q_or_qmin,winner,confidence,classification,
                d_round1,m_round2
  checkpoint    cell_index,p,q,done           (one completed cell per line)
  manifest      key = value                   (plain text)

Probabilities print with 6 significant digits, counts exactly. Manifests
take their timestamps from SOURCE_DATE_EPOCH when set (the reproducible-
builds convention), making re-runs byte-identical.
"""

from __future__ import annotations

import os
import time
from typing import Iterable, Optional

RESULTS_HEADER = (
    "mode,p_or_pmin,q_or_qmin,policy,round,n_trials,"
    "contained,not_contained,non_converged,observed_containment"
)
DOMINANCE_HEADER = "p_or_pmin,q_or_qmin,winner,confidence,classification,d_round1,m_round2"
CHECKPOINT_HEADER = "cell_index,p,q,done"


def fmt_prob(x: float) -> str:
    """6 significant digits; fixed across the artifact for regression tests."""
    return f"{x:.6g}"


def results_rows(result) -> list[str]:
    """Per-(policy, round) CSV rows for one harness InstanceResult."""
    rows = []
    for round_no, batches in ((1, result.round1), (2, result.round2)):
        if batches is None:
            continue
        for pol in result.policies:
            b = batches[pol]
            rows.append(
                f"{result.mode},{fmt_prob(result.p)},{fmt_prob(result.q)},{pol.value},"
                f"{round_no},{b.n},{b.contained},{b.not_contained},{b.non_converged},"
                f"{fmt_prob(b.contained / b.n)}"
            )
    return rows


def dominance_row(result) -> str:
    winner = result.winner.value if result.winner is not None else ""
    conf = ""
    if result.report is not None and result.report.confidence is not None:
        conf = fmt_prob(result.report.confidence)
    m2 = str(result.m_round2) if result.m_round2 is not None else ""
    return (
        f"{fmt_prob(result.p)},{fmt_prob(result.q)},{winner},{conf},"
        f"{result.classification},{fmt_prob(result.d_round1)},{m2}"
    )


def write_results_csv(path: str, results: Iterable) -> None:
    lines = [RESULTS_HEADER]
    for r in results:
        lines.extend(results_rows(r))
    _write_lines(path, lines)


def write_dominance_csv(path: str, results: Iterable) -> None:
    lines = [DOMINANCE_HEADER]
    lines.extend(dominance_row(r) for r in results)
    _write_lines(path, lines)


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


class Manifest:
    """Ordered key = value record accompanying every file-producing command."""

    def __init__(self, command: str):
        self._items: list[tuple[str, str]] = []
        self.set("command", command)
        self.set("artifact_version", _artifact_version())
        self.set("started_at", _timestamp())

    def set(self, key: str, value) -> None:
        self._items.append((str(key), str(value)))

    def set_params(self, params: dict) -> None:
        for key in params:
            self.set(key, params[key])

    def write(self, path: str) -> None:
        self.set("finished_at", _timestamp())
        with open(path, "w", newline="") as fh:
            for key, value in self._items:
                fh.write(f"{key} = {value}\n")


def _artifact_version() -> str:
    from . import __version__

    return __version__


def checkpoint_line(cell_index: int, p: float, q: float) -> str:
    return f"{cell_index},{fmt_prob(p)},{fmt_prob(q)},done"


def read_checkpoint(path: str) -> dict[int, tuple[str, str]]:
    """Completed cells: cell_index -> (p, q) as formatted strings."""
    done: dict[int, tuple[str, str]] = {}
    if not os.path.exists(path):
        return done
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line == CHECKPOINT_HEADER:
                continue
            idx, p, q, flag = line.split(",")
            if flag == "done":
                done[int(idx)] = (p, q)
    return done
