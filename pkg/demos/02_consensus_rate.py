"""How fast does the expected process forget its prior?

On a periodic schedule with window kappa and degree cap d, the sup
distance of the mean process from the truth decays no slower than
t^(-1/(2*d*kappa)).  In practice the decay is much faster; the bound is
a floor, not a forecast.  We run a 4-agent ring with kappa = 3, fit the
log-log slope over a late window, and compare against the floor.  An
optional plot lands next to this script when matplotlib is available.
"""

import pathlib

import numpy as np

from socialbayes import SystemParams, fit_rate, make_periodic_schedule, run_expected


def main():
    n, kappa, d = 4, 3, 2
    horizon = 200_000
    sched = make_periodic_schedule(n, kappa, peer_rule="ring")
    params = SystemParams(n=n, seed=0)

    print("running the expected process: n=%d, kappa=%d, ring, T=%d"
          % (n, kappa, horizon))
    out = run_expected(sched, params, horizon, x0=2.0)

    fit = fit_rate(out.times, out.norms, window=(1000, horizon),
                   d=d, kappa=kappa, slack=0.05)
    print("fitted slope      %.4f" % fit.slope)
    print("guaranteed floor  %.4f  (=-1/(2*d*kappa))" % fit.theoretical_bound)
    print("verdict           %s" % ("pass" if fit.passed else "FAIL"))

    print()
    print("sup |mean - truth| along the way:")
    for t in (10, 100, 1000, 10_000, 100_000):
        print("  t=%6d   %.3e" % (t, out.norms[t]))

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("(matplotlib not installed; skipping the plot)")
        return

    mask = out.times >= 1
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(out.times[mask], out.norms[mask], label="sup deviation")
    tt = np.array([1000.0, horizon])
    ax.loglog(tt, out.norms[1000] * (tt / 1000.0) ** fit.theoretical_bound,
              "--", label="rate floor")
    ax.set_xlabel("t")
    ax.set_ylabel("sup |mean - truth|")
    ax.legend()
    fig.tight_layout()
    target = pathlib.Path(__file__).parent / "demo_consensus_rate.png"
    fig.savefig(target, dpi=120)
    print("wrote %s" % target)


if __name__ == "__main__":
    main()
