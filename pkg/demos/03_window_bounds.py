"""The window bounds, checkpoint by checkpoint.

Over any aligned window [s, s+kappa) in which every agent hears the
truth, three inequalities govern the reduced transition products: the
precision-ratio diagonal bound, the strict infinity-norm contraction,
and the lower bound on the accumulated truth pull.  Decay checks chain
window contractions into a power-law envelope once a burn-in threshold
is cleared; before that threshold the hypotheses fail and the checker
reports "precondition unmet" instead of a verdict.

This script sweeps a periodic schedule, prints the full report, then
zooms in on one early decay check to show the gate doing its job.
"""

from socialbayes import (
    SystemParams,
    check_product_decay,
    check_report_text,
    make_periodic_schedule,
    sweep_window_checks,
)


def main():
    n, kappa = 4, 3
    sched = make_periodic_schedule(n, kappa, peer_rule="ring")
    params = SystemParams(n=n, seed=0)

    checks = sweep_window_checks(sched, params, horizon=60, kappa=kappa)
    print(check_report_text(checks))
    issued = sum(1 for c in checks if not c.gated)
    gated = sum(1 for c in checks if c.gated)
    print()
    print("%d checkpoints issued a verdict, %d were gated." % (issued, gated))

    print()
    print("an early-window decay check is gated (burn-in not cleared):")
    early = check_product_decay(sched, params, m0=1, m=5, kappa=kappa, d=2)
    print("  status: %s" % early.status)
    print("  reason: %s" % early.detail.get("reason", ""))

    late = check_product_decay(sched, params, m0=13, m=5, kappa=kappa, d=2)
    print("after burn-in the same chain issues a verdict:")
    print("  status: %s, lhs=%.3e <= rhs=%.3e" % (late.status, late.lhs, late.rhs))


if __name__ == "__main__":
    main()
