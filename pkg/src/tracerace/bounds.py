"""Closed-form thresholds and certificates for the tracing race.

Three regimes have policy-independent outcomes:

  * all q_v below ``low_q_threshold(delta, k)``  -> any non-trivial
    policy contains with probability >= 1 - delta;
  * all p_v below ``low_p_threshold(delta, k)``  -> same guarantee
    (the two thresholds share the same formula);
  * ``p*q > f(delta)``                           -> every policy fails
    with probability >= 1 - delta (the runaway certificate), where
    f(delta) = max((1 - delta/2)^(1/h), 1/2) with
    h = 2*ceil(max(128, ln(4/delta)/2)) + 16.

The certificate check discriminates at the seventh decimal near 1
(e.g. f(0.001) ~ 0.9999982 vs pq = 0.9999985), so f is evaluated as
exp(log1p(-delta/2)/h) rather than via pow.

``chain_growth_oracle`` is the deterministic worst-case anchor: under
p = q = 1, k = 3 with tracing, active infections follow X_3 = 6,
X_{t+1} = 2*(X_t - 1), i.e. X_t = 2^(t-1) + 2. (The source analysis
states the bound with exponent t, but its base case and recurrence
establish 2^(t-1) + 2; the oracle implements the recurrence and the
discrepancy is documented here rather than silently corrected.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def _check_delta(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return float(delta)


def low_q_threshold(delta: float, k: int) -> float:
    """q(delta, k) = 1 / (ceil(e/delta) + k)."""
    _check_delta(delta)
    if k < 0:
        raise ValueError("k must be >= 0")
    return 1.0 / (math.ceil(math.e / delta) + k)


def low_p_threshold(delta: float, k: int) -> float:
    """p(delta, k); identical formula to low_q_threshold."""
    return low_q_threshold(delta, k)


@dataclass(frozen=True)
class RunawayCertificate:
    """Outcome of the pq > f(delta) check, with its proof constants."""

    p: float
    q: float
    delta: float
    h: int
    f_delta: float
    certified: bool

    @property
    def B(self) -> int:
        """Active-infection level from which containment is unlikely."""
        return self.h - 16

    @property
    def C(self) -> int:
        """Epoch size constant; defined only for pq > 0."""
        pq = self.p * self.q
        if pq <= 0.0:
            raise ValueError("C is undefined for pq = 0")
        return 2 * math.ceil(max(64.0 / pq, math.log(4.0 / self.delta) / 2.0))


def runaway_certificate(p: float, q: float, delta: float) -> RunawayCertificate:
    """Check pq > f(delta); certified means every policy fails w.p. >= 1 - delta
    (for k >= 3 and all nodes' parameters at least (p, q))."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("p and q must be probabilities")
    _check_delta(delta)
    h = 2 * math.ceil(max(128.0, math.log(4.0 / delta) / 2.0)) + 16
    f_delta = max(math.exp(math.log1p(-delta / 2.0) / h), 0.5)
    return RunawayCertificate(
        p=p, q=q, delta=delta, h=h, f_delta=f_delta, certified=p * q > f_delta
    )


def chain_growth_oracle(t: int) -> int:
    """Deterministic active-infection count at end of round t (p = q = 1, k = 3)."""
    if t < 3:
        raise ValueError("the chain oracle is defined for t >= 3")
    x = 6
    for _ in range(t - 3):
        x = 2 * (x - 1)
    return x
