"""Watch single trials unfold.

The race in miniature: the tracer stabilizes one node per step while
every active infected node keeps meeting contacts. Three parameter
points show the three endings -- contained quickly, contained after a
fight, and overrun.
"""

from tracerace import BuiltinPolicy, Instance, TrialConfig, run_trial


def show(title, p, q, seed, policy=BuiltinPolicy.DESCENDING_TIME):
    print(f"\n=== {title}: p={p}, q={q}, policy={policy} ===")

    def line(rec):
        if rec.queried is None:
            print(f"  t={rec.step}  (head start)            active={rec.active_infected}")
        else:
            e = rec.queried_entry
            status = "infected" if rec.was_infected else "clean"
            print(
                f"  t={rec.step}  query tau={e.tau} -> {status:8s} "
                f"revealed={rec.revealed}  frontier={len(rec.frontier)}  "
                f"active={rec.active_infected}"
            )

    out = run_trial(TrialConfig(Instance.point_mass(p, q, 3), policy, seed=seed), trace=line)
    print(f"  => {out.state} after {out.rounds} rounds, {out.queries} queries, "
          f"{out.total_infected} ever infected")


show("an easy catch", 0.3, 0.4, seed=11)
show("a close race", 0.8, 0.8, seed=103)
show("overrun (worst case, p=q=1)", 1.0, 1.0, seed=0)
