"""The three analytic regimes, checked empirically at desk scale.

Below the low-q or low-p threshold every non-trivial policy contains
with probability >= 1 - delta; above the pq > f(delta) certificate every
policy fails with probability >= 1 - delta. The bounds are loose -- the
observed fractions sit far inside them.
"""

from tracerace import BuiltinPolicy, Instance, TrialConfig, observed_containment, run_batch
from tracerace.bounds import low_q_threshold, runaway_certificate

DELTA = 0.2
K = 3
N = 10_000

q_star = low_q_threshold(DELTA, K)
print(f"delta={DELTA}, k={K}: containment threshold q(delta,k) = 1/17 = {q_star:.5f}")

q_test = 0.9 * q_star
print(f"\nall q_v = {q_test:.5f} (below threshold), p = 1: guarantee is >= {1-DELTA}")
for i, pol in enumerate(BuiltinPolicy):
    batch = run_batch(TrialConfig(Instance.point_mass(1.0, q_test, K), pol), N, 300 + i)
    print(f"  {pol.value:16s} contained {observed_containment(batch):.4f}")

cert = runaway_certificate(0.9999985, 1.0, 0.001)
print(f"\nrunaway certificate at p=0.9999985, q=1, delta=0.001:")
print(f"  h = {cert.h}, f(delta) = {cert.f_delta!r}, certified = {cert.certified}")
print(f"  guarantee: every policy fails w.p. >= 0.999")
for i, pol in enumerate(BuiltinPolicy):
    batch = run_batch(TrialConfig(Instance.point_mass(0.9999985, 1.0, K), pol), N, 400 + i)
    print(f"  {pol.value:16s} contained {observed_containment(batch):.4f}")
