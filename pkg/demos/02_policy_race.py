"""Ascending-time vs descending-time across the parameter space.

Neither monotonic policy wins everywhere: descending-time dominates when
p and q are both large, ascending-time holds a band below it. Each row
runs 100k trials per policy (a second or two total on the fast kernel).
"""

from tracerace import BuiltinPolicy, Instance, TrialConfig, observed_containment, run_batch

N = 100_000
POINTS = [(0.2, 0.9), (0.19, 1.0), (0.5, 0.5), (0.8, 0.8), (0.9, 0.9), (0.95, 0.95)]

print(f"{'p':>5} {'q':>5} {'ascending':>10} {'descending':>11} {'leader':>11}")
for i, (p, q) in enumerate(POINTS):
    fracs = {}
    for j, pol in enumerate((BuiltinPolicy.ASCENDING_TIME, BuiltinPolicy.DESCENDING_TIME)):
        batch = run_batch(TrialConfig(Instance.point_mass(p, q, 3), pol), N, 7000 + 10 * i + j)
        fracs[pol] = observed_containment(batch)
    asc = fracs[BuiltinPolicy.ASCENDING_TIME]
    desc = fracs[BuiltinPolicy.DESCENDING_TIME]
    leader = "ascending" if asc > desc else "descending"
    if abs(asc - desc) < 3 * (0.25 / N) ** 0.5:
        leader = "~tie"
    print(f"{p:>5} {q:>5} {asc:>10.4f} {desc:>11.4f} {leader:>11}")

print("\nAt (0.19, 1.0) the ascending edge is real but ~4.5e-4 wide; deciding it")
print("with confidence takes the two-round protocol of demo 04 at n ~ 1e8.")
