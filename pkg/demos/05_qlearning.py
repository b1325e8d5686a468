"""Searching for a better time-based policy with tabular Q-learning.

The table keys on (frontier arrival times, step) up to small truncation
limits; beyond them a monotonic terminal policy finishes the episode via
rollouts. If some cleverer short opening sequence existed, the learned
policy would find it -- in practice it lands on par with the better
monotonic policy, which is the point.
"""

from tracerace import BuiltinPolicy, Instance, LearnedPolicy
from tracerace.qlearn import PartialState, QConfig, evaluate, train

P, Q = 0.9, 0.9
inst = Instance.point_mass(P, Q, 3)
ASC, DESC = BuiltinPolicy.ASCENDING_TIME, BuiltinPolicy.DESCENDING_TIME

print(f"instance (p,q)=({P},{Q}), 50k training episodes per terminal\n")
for pol in (ASC, DESC):
    print(f"  {pol.value:16s} contains {evaluate(pol, inst, 100_000, 50):.4f}")

for terminal in (ASC, DESC):
    table = train(inst, QConfig(episodes=50_000, terminal_policy=terminal), 51)
    frac = evaluate(LearnedPolicy(table, terminal), inst, 100_000, 52)
    print(f"  learn-{terminal.value.split('-')[0]:10s} contains {frac:.4f} "
          f"({len(table)} trained states)")

table = train(inst, QConfig(episodes=50_000, terminal_policy=DESC), 53)
s = PartialState((1, 2), 4)
if table.has_state(s):
    row = table.row(s)
    print(f"\nthe decisive state (frontier taus (1,2) at t=4): values {row}")
    print("higher value on tau=2 means the learned policy queries the newer")
    print("node first, i.e. it rediscovered the descending-time choice here.")
