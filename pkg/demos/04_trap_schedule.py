"""A schedule where everyone hears the truth forever and still never learns it.

Two agents take turns: one hears the truth exactly once, then the pair
gossips until their means nearly merge; then the other hears the truth
once, and so on.  Each truth hear is diluted by an ever-larger stock of
peer-sourced precision, so the merged mean creeps down by less and less
and never drops below 1 (truth at 0, start at 2).  Both agents hear the
truth infinitely often; no fixed hearing window survives.

The construction co-runs the mean recursion to place the switch times;
this script replays it independently and checks every claim.
"""

from socialbayes import (
    SystemParams,
    counterexample_check,
    make_counterexample_schedule,
    verify_truth_hearing,
)


def main():
    horizon = 1_000_000
    print("materializing the trap schedule up to t=%d ..." % horizon)
    sched = make_counterexample_schedule(1.0, horizon)

    print()
    print("switch times (t_k: agent 1 hears truth, s_k: agent 2 does):")
    print("  k     t_k        s_k    shifted mean at s_k   its floor")
    for rec in sched.switches:
        print("%3d  %8d  %8d        %.6f         %.6f"
              % (rec.k, rec.t_k, rec.s_k, rec.value_at_s, rec.bound_at_s))
    print("the gaps stretch without bound: truth hears become arbitrarily rare.")

    verdict = counterexample_check(sched, SystemParams(n=2, seed=0))
    print()
    print("replay verdict: %s" % verdict.status)
    print("  completed alternation cycles: %d" % verdict.cycles_realized)
    print("  min over both agents and all t of (mean - truth): %.6f"
          % verdict.min_shifted)
    print("  truth hears per agent: %s" % (verdict.truth_edge_counts,))

    print()
    print("fixed hearing windows all fail eventually:")
    for kappa in (10, 100, 1000):
        v = verify_truth_hearing(sched, kappa, horizon)
        where = ("agent %d, window start %d" % v.violation
                 if v.violation else "none")
        print("  kappa=%5d   passed=%s   first violation: %s"
              % (kappa, v.passed, where))


if __name__ == "__main__":
    main()
