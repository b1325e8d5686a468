"""Chernoff tail bounds and the coin-comparison confidence procedures.

Comparing policies on an instance is comparing coins with unknown
biases from observed head fractions. With gap d = |phat_a - phat_b| and
eps = 0.49*d, a fresh batch of N flips per coin gives

    P(true argmax = observed argmax) >= 1 - 2*exp(-N*eps^2/3)   (2 coins)
                                     >= 1 - 3*exp(-N*eps1^2/3)  (3 coins)

valid only when eps is strictly below every coin's true bias. True
biases are unknown, so callers substitute the lower bound p0
(1 - P(root infected): containment is certain when the root escapes
infection); eps/p0 >= 1 or a tied top pair means the bound is
inapplicable and the report carries applicable=False ("no confidence").

The bound is reported raw even when vacuous (possibly negative):
clamping belongs to presentation layers, and hiding vacuity would mask
undersized samples.

``second_round_size`` is the adaptive trial count for confirming a gap
first observed at size d:

    M(d) = 50 * ceil(ceil(3*ln(1/0.15) / (0.49*d)^2) / 50)

so a second round that re-attains the gap yields confidence at least
1 - 2*0.15 = 0.7.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class ConfidenceReport:
    """Outcome of a coin-comparison bound.

    ``epsilon2`` is None for two-coin reports. ``confidence`` is None
    exactly when ``applicable`` is False; otherwise it may be any value
    <= 1, including negative (a vacuous bound).  ``winner`` is the index
    of the coin with the strictly largest observed fraction, or None
    when no claim is made.
    """

    epsilon: float
    epsilon2: Optional[float]
    p0: float
    applicable: bool
    confidence: Optional[float]
    winner: Optional[int]


def chernoff_upper(mu: float, gamma: float) -> float:
    """Bound on P(X >= (1+gamma)*mu) for a sum of Poisson trials with mean mu."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    return math.exp(-mu * gamma * gamma / 3.0)


def chernoff_lower(mu: float, gamma: float) -> float:
    """Bound on P(X <= (1-gamma)*mu)."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    return math.exp(-mu * gamma * gamma / 2.0)


def _check_fraction(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return float(value)


def _check_common(n: int, p0: float) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < p0 <= 1.0:
        raise ValueError(f"p0 must be in (0, 1], got {p0}")


def two_coin_confidence(n: int, phat_a: float, phat_b: float, p0: float) -> ConfidenceReport:
    """Confidence that the coin with the larger observed fraction has the
    larger true bias, from n flips of each.

    p0 is the caller-supplied lower bound on both true biases
    (point-mass setting: 1 - p)."""
    _check_common(n, p0)
    _check_fraction(phat_a, "phat_a")
    _check_fraction(phat_b, "phat_b")
    d = abs(phat_a - phat_b)
    eps = 0.49 * d
    if d == 0.0 or eps / p0 >= 1.0:
        return ConfidenceReport(eps, None, p0, False, None, None)
    confidence = 1.0 - 2.0 * math.exp(-n * eps * eps / 3.0)
    winner = 0 if phat_a > phat_b else 1
    return ConfidenceReport(eps, None, p0, True, confidence, winner)


def three_coin_confidence(n: int, phats: Sequence[float], p0: float) -> ConfidenceReport:
    """Confidence that the coin with the largest observed fraction has the
    largest true bias, from n flips of each of three coins.

    p0 lower-bounds all three true biases (heterogeneous setting:
    1 - (p_min + 1)/2)."""
    _check_common(n, p0)
    if len(phats) != 3:
        raise ValueError("three_coin_confidence needs exactly three fractions")
    for i, ph in enumerate(phats):
        _check_fraction(ph, f"phats[{i}]")
    order = sorted(range(3), key=lambda i: phats[i], reverse=True)
    a, b, c = (phats[i] for i in order)
    d1 = a - b
    d2 = a - c
    eps1 = 0.49 * d1
    eps2 = 0.49 * d2
    if d1 == 0.0 or eps1 / p0 >= 1.0 or eps2 / p0 >= 1.0:
        return ConfidenceReport(eps1, eps2, p0, False, None, None)
    confidence = 1.0 - 3.0 * math.exp(-n * eps1 * eps1 / 3.0)
    return ConfidenceReport(eps1, eps2, p0, True, confidence, order[0])


def second_round_size(d: float) -> int:
    """M(d): second-round trial count for a first-round gap of d."""
    if d <= 0.0:
        raise ValueError("d must be > 0")
    inner = math.ceil(3.0 * math.log(1.0 / 0.15) / (0.49 * d) ** 2)
    return 50 * math.ceil(inner / 50.0)
