"""A first walk through the belief update.

One learning agent listens to the truth agent at every step.  Its
posterior precision grows linearly, so the posterior mean is a running
precision-weighted average that approaches the truth like 1/t.  We
check the simulated mean against the closed form (tau = tau0: the mean
at time t is x0/(1+t) when the truth sits at zero), then let a second
agent join that only ever hears the first one and watch the lag.
"""

import numpy as np

from socialbayes import (
    SystemParams,
    make_periodic_schedule,
    make_table_schedule,
    run_expected,
    run_simulation,
)


def single_listener():
    print("=== one agent, truth every step ===")
    params = SystemParams(n=1, seed=7)
    sched = make_periodic_schedule(1, 1)
    horizon = 20

    out = run_expected(sched, params, horizon, x0=2.0)
    noisy = run_simulation(sched, params, horizon, x0=2.0)
    closed = 2.0 / (1.0 + np.arange(horizon + 1))
    print(" t   mean        closed      precision")
    for t in range(0, horizon + 1, 4):
        print("%2d   %.6f    %.6f    %5.1f"
              % (t, out.means[t, 1], closed[t], noisy.precisions[t, 1]))
    print("max |mean - closed| = %.2e" % np.max(np.abs(out.means[:, 1] - closed)))

    print("with observation noise the path wiggles but the precision "
          "schedule is deterministic either way:")
    print("  noisy mean at t=%d: %.4f (expected %.4f)"
          % (horizon, noisy.means[-1, 1], out.means[-1, 1]))


def relay_chain():
    print()
    print("=== a relay: agent 2 only hears agent 1 ===")
    params = SystemParams(n=2, seed=7)
    horizon = 400
    edges = []
    for t in range(horizon):
        edges.append((t, 1, 0))  # agent 1 hears the truth
        edges.append((t, 2, 1))  # agent 2 hears agent 1
    sched = make_table_schedule(2, edges, horizon=horizon)

    out = run_expected(sched, params, horizon, x0=2.0)
    print(" t      agent 1     agent 2")
    for t in (10, 50, 100, 400):
        print("%4d    %.5f     %.5f" % (t, out.means[t, 1], out.means[t, 2]))
    print("both shrink toward 0, the relay end lagging behind the source.")


def main():
    single_listener()
    relay_chain()


if __name__ == "__main__":
    main()
