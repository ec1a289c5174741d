"""Numerical verification: norms, contraction bounds, rates, deviations.

The checks here turn the convergence analysis of the mean process into
machine-verifiable statements about finite windows of a concrete schedule:

* diagonal bound - partial window products of the reduced blocks keep
  diagonal mass at least (P_s)_ii / (P_{s+kappa})_ii;
* window contraction - if every agent hears the truth inside the window,
  the full window product contracts the sup norm to at most
  1 - min_i (P_s)_ii / (P_{s+kappa})_ii^2;
* product decay - across m consecutive windows beyond a burn-in threshold,
  the product norm is bounded by a harmonic-sum exponential, which is what
  produces the power-law convergence rate t^(-1/(2*d*kappa));
* truth-pull accumulation - truth-pull weights summed over a hearing window
  are at least the reciprocal of the window-end precision.

Every check is reported as a BoundCheck with margin = rhs - lhs; a check
passes when the margin is no more negative than the shared tolerance.
Checks whose hypotheses fail (no truth hearing, burn-in not reached, degree
cap exceeded) report status "precondition unmet" instead of a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemParams, run_ensemble
from .expected import run_expected, transition_bundle
from .schedules import (CounterexampleSchedule, GraphSchedule, max_degree,
                        make_periodic_schedule, make_random_schedule)

TOL = 1e-12


def norm_inf(m: np.ndarray) -> float:
    """Operator infinity norm: largest absolute row sum."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    return float(np.max(np.abs(m).sum(axis=1)))


def norm_max(m: np.ndarray) -> float:
    """Largest absolute entry."""
    return float(np.max(np.abs(m)))


@dataclass(frozen=True)
class BoundCheck:
    """One verified inequality lhs <= rhs.

    margin = rhs - lhs; the check passes iff margin >= -TOL.  status is
    "precondition unmet" when the inequality's hypotheses do not hold at this
    checkpoint, in which case no verdict is issued.
    """

    name: str
    lhs: float
    rhs: float
    status: str = "ok"
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.status == "ok" and self.margin >= -TOL

    @property
    def gated(self) -> bool:
        """True when the hypotheses did not hold and no verdict was issued."""
        return self.status != "ok"


def _skipped(name: str, reason: str, **detail) -> BoundCheck:
    detail = dict(detail)
    detail["reason"] = reason
    return BoundCheck(name, math.nan, math.nan, "precondition unmet", detail)


def _window_bundles(schedule: GraphSchedule, params: SystemParams, s: int,
                    kappa: int, ledger_start: np.ndarray | None = None):
    """Bundles for steps [s, s+kappa) plus the ledger at both ends."""
    if ledger_start is None:
        total = np.zeros(schedule.n + 1, dtype=np.int64)
        for k in range(s):
            total += schedule.arrays_at(k)[1]
        ledger = params.ratio + total.astype(np.float64)
    else:
        ledger = np.asarray(ledger_start, dtype=np.float64).copy()
    p_start = ledger.copy()
    bundles = []
    for u in range(s, s + kappa):
        a, deg = schedule.arrays_at(u)
        b = transition_bundle(a, deg, ledger, u)
        bundles.append(b)
        ledger = b.ledger_after
    return bundles, p_start, ledger


def _window_hears(bundles) -> bool:
    """True when every agent hears the truth at some step of the window."""
    pull = np.zeros_like(bundles[0].truth_pull)
    for b in bundles:
        pull = pull + b.truth_pull
    return bool(np.all(pull > 0.0))


def check_diagonal_bound(schedule: GraphSchedule, params: SystemParams,
                         s: int, kappa: int, l: int | None = None,
                         _bundles=None) -> BoundCheck:
    """Partial window products keep diagonal mass above the precision ratio.

    For each offset l in [0, kappa), the product of reduced blocks over steps
    [s+l+1, s+kappa) has (i, i) entry at least (P_s)_ii / (P_{s+kappa})_ii.
    Holds for any schedule; no hearing assumption needed.  l = kappa-1 gives
    the empty product (identity).  Reports the worst (l, i) margin, or the
    single offset when l is given.
    """
    if not (l is None or 0 <= l <= kappa - 1):
        raise ValueError("offset l must lie in [0, kappa)")
    bundles, p_start, p_end = _bundles or _window_bundles(
        schedule, params, s, kappa)
    bound = p_start[1:] / p_end[1:]
    offsets = range(kappa) if l is None else (l,)
    worst = None
    # suffix[l] = product of reduced blocks over steps [s+l+1, s+kappa)
    suffix = np.eye(schedule.n)
    diag_by_offset = {kappa - 1: np.diag(suffix).copy()}
    for u in range(kappa - 2, -1, -1):
        suffix = suffix @ bundles[u + 1].reduced
        diag_by_offset[u] = np.diag(suffix).copy()
    for off in offsets:
        diag = diag_by_offset[off]
        i = int(np.argmin(diag - bound))
        cand = (float(bound[i]), float(diag[i]), off, i + 1)
        if worst is None or cand[1] - cand[0] < worst[1] - worst[0]:
            worst = cand
    lhs, rhs, off, agent = worst
    return BoundCheck(f"diagonal_bound[s={s},kappa={kappa}]", lhs, rhs,
                      detail={"s": s, "kappa": kappa, "l": off, "agent": agent})


def check_contraction(schedule: GraphSchedule, params: SystemParams,
                      s: int, kappa: int, _bundles=None) -> BoundCheck:
    """Window product contracts the sup norm when everyone hears the truth.

    ||product over [s, s+kappa)||_inf <= 1 - min_i (P_s)_ii/(P_{s+kappa})_ii^2.
    Requires each agent to hear the truth at least once in the window;
    otherwise the checkpoint is reported as precondition unmet.
    """
    name = f"contraction[s={s},kappa={kappa}]"
    bundles, p_start, p_end = _bundles or _window_bundles(
        schedule, params, s, kappa)
    if not _window_hears(bundles):
        return _skipped(name, "truth hearing fails in window", s=s, kappa=kappa)
    prod = np.eye(schedule.n)
    for b in bundles:
        prod = b.reduced @ prod
    lhs = norm_inf(prod)
    rhs = 1.0 - float(np.min(p_start[1:] / p_end[1:] ** 2))
    return BoundCheck(name, lhs, rhs, detail={"s": s, "kappa": kappa})


def check_truth_pull_accumulation(schedule: GraphSchedule,
                                  params: SystemParams, s: int, kappa: int,
                                  _bundles=None) -> BoundCheck:
    """Truth-pull weights over a hearing window exceed 1/(P_{s+kappa})_ii.

    Each hearing step contributes pull 1/(P_{u+1})_ii >= 1/(P_{s+kappa})_ii,
    so one hear per window suffices.  Skipped when hearing fails.
    """
    name = f"truth_pull[s={s},kappa={kappa}]"
    bundles, _, p_end = _bundles or _window_bundles(schedule, params, s, kappa)
    if not _window_hears(bundles):
        return _skipped(name, "truth hearing fails in window", s=s, kappa=kappa)
    pull = np.zeros(schedule.n)
    for b in bundles:
        pull = pull + b.truth_pull
    bound = 1.0 / p_end[1:]
    i = int(np.argmin(pull - bound))
    return BoundCheck(name, float(bound[i]), float(pull[i]),
                      detail={"s": s, "kappa": kappa, "agent": i + 1})


def burn_in_threshold(params: SystemParams, kappa: int, d: int) -> float:
    """Window index past which the harmonic product decay bound applies.

    m* = 2*d*kappa/delta + (tau0/tau)/(d*kappa*tau_ratio_unit), with
    delta = min(tau0/tau, 1).
    """
    delta = min(params.ratio, 1.0)
    return 2.0 * d * kappa / delta + params.ratio / (d * kappa)


def check_product_decay(schedule: GraphSchedule, params: SystemParams,
                        m0: int, m: int, kappa: int, d: int) -> BoundCheck:
    """Multi-window product norm obeys the harmonic-sum exponential bound.

    ||product over [m0*kappa, (m0+m)*kappa)||_inf
        <= exp(-(1/(2*d*kappa)) * sum_{j=2}^{m+1} 1/(m0+j))
    valid once m0 >= burn-in threshold, every window hears the truth, and d
    really caps the receive degrees over the span.  m = 0 passes trivially.
    """
    name = f"product_decay[m0={m0},m={m},kappa={kappa}]"
    if m < 0 or m0 < 0:
        raise ValueError("window indices must be nonnegative")
    mstar = burn_in_threshold(params, kappa, d)
    if m0 < mstar:
        return _skipped(name, f"burn-in not reached (m* = {mstar:.3f})",
                        m0=m0, m=m, kappa=kappa, d=d)
    s, e = m0 * kappa, (m0 + m) * kappa
    prod = np.eye(schedule.n)
    ledger = None
    hears_all = True
    deg_cap = 0
    for j in range(m):
        bundles, p_start, p_end = _window_bundles(
            schedule, params, s + j * kappa, kappa, ledger_start=ledger)
        ledger = p_end
        hears_all = hears_all and _window_hears(bundles)
        for b in bundles:
            deg_cap = max(deg_cap, int((b.ledger_after - b.ledger_before).max()))
            prod = b.reduced @ prod
    if not hears_all:
        return _skipped(name, "truth hearing fails in some window",
                        m0=m0, m=m, kappa=kappa, d=d)
    if deg_cap > d:
        return _skipped(name, f"degree cap {d} exceeded (saw {deg_cap})",
                        m0=m0, m=m, kappa=kappa, d=d)
    lhs = norm_inf(prod)
    harmonic = sum(1.0 / (m0 + j) for j in range(2, m + 2))
    rhs = math.exp(-harmonic / (2.0 * d * kappa))
    return BoundCheck(name, lhs, rhs,
                      detail={"m0": m0, "m": m, "kappa": kappa, "d": d,
                              "span": (s, e)})


def check_transition_identities(schedule: GraphSchedule, params: SystemParams,
                                horizon: int) -> list[BoundCheck]:
    """Stochasticity and reduction identities over every step t < horizon.

    Reports the worst |row sum - 1| of the full transition and the worst
    |truth_pull + reduced row sum - 1| as two equality checks (lhs = worst
    deviation, rhs = 0).
    """
    ledger = np.full(schedule.n + 1, params.ratio)
    worst_rows = 0.0
    worst_red = 0.0
    at_rows = at_red = -1
    for t in range(horizon):
        a, deg = schedule.arrays_at(t)
        b = transition_bundle(a, deg, ledger, t)
        ledger = b.ledger_after
        dev_rows = float(np.max(np.abs(b.full.sum(axis=1) - 1.0)))
        dev_red = float(np.max(np.abs(
            b.truth_pull + b.reduced.sum(axis=1) - 1.0)))
        if dev_rows > worst_rows:
            worst_rows, at_rows = dev_rows, t
        if dev_red > worst_red:
            worst_red, at_red = dev_red, t
    return [
        BoundCheck(f"stochasticity[T={horizon}]", worst_rows, 0.0,
                   detail={"worst_t": at_rows}),
        BoundCheck(f"reduction[T={horizon}]", worst_red, 0.0,
                   detail={"worst_t": at_red}),
    ]


def check_norm_inequalities(n_pairs: int = 1000, size: int = 8,
                            seed: int = 4096) -> list[BoundCheck]:
    """Random-matrix sweep of the three product-norm inequalities.

    For pairs (R, S) with entries uniform in [-1, 1]:
      ||R S||_inf <= ||R||_inf ||S||_inf,
      ||R S||_max <= ||R||_inf ||S||_max,
      ||R S R^T||_max <= ||R||_inf^2 ||S||_max.
    Each reported check carries the worst margin over the sweep.
    """
    rng = np.random.default_rng(seed)
    worst = {"inf_submult": None, "mixed_bound": None, "congruence_bound": None}

    def _update(key, lhs, rhs, idx):
        if worst[key] is None or rhs - lhs < worst[key][1] - worst[key][0]:
            worst[key] = (lhs, rhs, idx)

    for idx in range(n_pairs):
        r = rng.uniform(-1.0, 1.0, (size, size))
        s = rng.uniform(-1.0, 1.0, (size, size))
        rs = r @ s
        _update("inf_submult", norm_inf(rs), norm_inf(r) * norm_inf(s), idx)
        _update("mixed_bound", norm_max(rs), norm_inf(r) * norm_max(s), idx)
        _update("congruence_bound", norm_max(r @ s @ r.T),
                norm_inf(r) ** 2 * norm_max(s), idx)
    return [BoundCheck(f"{key}[pairs={n_pairs}]", lhs, rhs,
                       detail={"worst_pair": idx})
            for key, (lhs, rhs, idx) in worst.items()]


def sweep_window_checks(schedule: GraphSchedule, params: SystemParams,
                        horizon: int, kappa: int, d: int | None = None,
                        decay_lengths=(1, 5, 20)) -> list[BoundCheck]:
    """All window-anchored checks over aligned windows within the horizon.

    Walks window starts s = 0, kappa, 2*kappa, ... with an incrementally
    maintained ledger; at each start runs the diagonal, contraction, and
    truth-pull checks, then adds product-decay checks at the first admissible
    burn-in for each requested length that fits the horizon.
    """
    checks: list[BoundCheck] = []
    ledger = np.full(schedule.n + 1, float(params.ratio))
    n_windows = horizon // kappa
    if d is None:
        d = max_degree(schedule, horizon)
    for j in range(n_windows):
        s = j * kappa
        bundles, p_start, p_end = _window_bundles(
            schedule, params, s, kappa, ledger_start=ledger)
        ledger = p_end
        shared = (bundles, p_start, p_end)
        checks.append(check_diagonal_bound(schedule, params, s, kappa,
                                           _bundles=shared))
        checks.append(check_contraction(schedule, params, s, kappa,
                                        _bundles=shared))
        checks.append(check_truth_pull_accumulation(schedule, params, s,
                                                    kappa, _bundles=shared))
    if d > 0:
        m0 = math.ceil(burn_in_threshold(params, kappa, d))
        for m in decay_lengths:
            if (m0 + m) * kappa <= horizon:
                checks.append(check_product_decay(schedule, params, m0, m,
                                                  kappa, d))
    return checks


@dataclass(frozen=True)
class RateFit:
    """Log-log least-squares fit of a norm series against the rate bound.

    Passes when the fitted slope is at most theoretical_bound + slack: the
    series decays at least as fast as t^(-1/(2*d*kappa)) up to the statistical
    slack.  status "converged before window" flags an all-zero window (decay
    already complete; trivially passing).
    """

    slope: float
    intercept: float
    window: tuple[int, int]
    theoretical_bound: float
    slack: float
    n_points: int
    status: str = "ok"

    @property
    def passed(self) -> bool:
        if self.status == "converged before window":
            return True
        return self.slope <= self.theoretical_bound + self.slack


def fit_rate(times, norms, window: tuple[int, int], d: int, kappa: int,
             slack: float = 0.05) -> RateFit:
    """Fit log ||z_t|| against log t over a time window.

    Uses only strictly positive norms at strictly positive times inside
    [window[0], window[1]].  Raises when the window retains fewer than two
    points but some norms are positive.
    """
    times = np.asarray(times, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    if times.shape != norms.shape:
        raise ValueError("times and norms must align")
    lo, hi = window
    if not (0 < lo < hi):
        raise ValueError("window must satisfy 0 < lo < hi")
    inside = (times >= lo) & (times <= hi) & (times > 0)
    if not np.any(inside):
        raise ValueError("window contains no samples")
    bound = -1.0 / (2.0 * d * kappa)
    keep = inside & (norms > 0.0)
    if not np.any(keep):
        return RateFit(-math.inf, -math.inf, (lo, hi), bound, slack, 0,
                       "converged before window")
    if keep.sum() < 2:
        raise ValueError("need at least two positive samples to fit")
    slope, intercept = np.polyfit(np.log(times[keep]), np.log(norms[keep]), 1)
    return RateFit(float(slope), float(intercept), (lo, hi), bound, slack,
                   int(keep.sum()))


@dataclass(frozen=True)
class MomentReport:
    """Empirical fourth moments of the deviation from the mean process.

    moments[k, i-1] estimates E[(x_{t_k,i} - y_{t_k,i})^4] over the ensemble;
    max_moments takes the worst agent per time; partial_sums accumulates
    max_moments along the checkpoint grid (summability indicator); exponent
    is the log-log slope of max_moments (nan when all checkpoints are zero).
    """

    times: np.ndarray
    moments: np.ndarray
    max_moments: np.ndarray
    partial_sums: np.ndarray
    exponent: float
    n_runs: int


def fourth_moment_summary(deviations: np.ndarray) -> np.ndarray:
    """Mean of the fourth power over the run axis of an (M, K, n) array."""
    dev = np.asarray(deviations, dtype=np.float64)
    return np.mean(dev ** 4, axis=0)


def estimate_deviation_moments(schedule: GraphSchedule, params: SystemParams,
                               horizon: int, n_runs: int, x0=None,
                               times=None) -> MomentReport:
    """Monte-Carlo fourth moments of x_t - y_t on a checkpoint grid.

    Default grid is geometric from t = 100 in half-decades up to the horizon.
    Requires n_runs >= 100 for any reported fit.
    """
    if n_runs < 100:
        raise ValueError("need at least 100 runs for moment estimates")
    if times is None:
        if horizon < 100:
            raise ValueError("default grid starts at t=100; give times")
        grid = []
        e = 2.0
        while round(10.0 ** e) <= horizon:
            grid.append(round(10.0 ** e))
            e += 0.5
        times = np.unique(np.asarray(grid, dtype=np.int64))
    else:
        times = np.unique(np.asarray(times, dtype=np.int64))
    expected = run_expected(schedule, params, int(times[-1]), x0)
    ensemble = run_ensemble(schedule, params, int(times[-1]), n_runs, x0,
                            record_times=times)
    dev = ensemble.means[:, :, 1:] - expected.means[times][None, :, 1:]
    moments = fourth_moment_summary(dev)
    max_moments = moments.max(axis=1)
    positive = (times > 0) & (max_moments > 0.0)
    if positive.sum() >= 2:
        exponent = float(np.polyfit(np.log(times[positive]),
                                    np.log(max_moments[positive]), 1)[0])
    else:
        exponent = math.nan
    return MomentReport(times, moments, max_moments,
                        np.cumsum(max_moments), exponent, n_runs)


@dataclass(frozen=True)
class CounterexampleVerdict:
    """Replay verification of the alternating trap schedule.

    status is "pass", "fail", or "insufficient horizon" (no completed
    alternation cycle inside the horizon).  min_shifted is the smallest
    truth-shifted mean over both agents and all times; cycle_margins holds
    (k, margin at s_k, margin at t_k); truth_edge_counts counts hears per
    agent within the horizon.
    """

    status: str
    min_shifted: float
    cycles_realized: int
    cycle_margins: list
    truth_edge_counts: tuple[int, int]
    horizon: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def counterexample_check(schedule: CounterexampleSchedule,
                         params: SystemParams,
                         horizon: int | None = None) -> CounterexampleVerdict:
    """Re-run the mean recursion over the trap schedule and check its claims.

    Asserts the truth-shifted means never drop below 1, that both defining
    bounds hold at every realized switch pair, and reports per-agent truth
    hears.  Independent of the values recorded at construction: the
    trajectory is recomputed through the generic mean-process path.
    """
    if not isinstance(schedule, CounterexampleSchedule):
        raise ValueError("needs a counterexample schedule")
    if horizon is None:
        horizon = schedule.horizon
    if horizon > schedule.horizon:
        raise ValueError("horizon beyond the materialized schedule")
    x0 = params.truth + schedule.start
    traj = run_expected(schedule, params, horizon, x0=x0)
    shifted = traj.shifted  # (T+1, 2)
    min_shifted = float(shifted.min())
    margins = []
    realized = 0
    ok = min_shifted >= 1.0 - TOL
    for rec in schedule.switches:
        if rec.s_k > horizon:
            break
        realized += 1
        m_s = float(shifted[rec.s_k, 0] - rec.bound_at_s)
        m_t = float(shifted[rec.t_k, 1] - rec.bound_at_t)
        margins.append((rec.k, m_s, m_t))
        ok = ok and m_s >= -TOL and m_t >= -TOL
    counts = (sum(1 for t in schedule.truth_times_1 if t < horizon),
              sum(1 for t in schedule.truth_times_2 if t < horizon))
    if realized == 0:
        return CounterexampleVerdict("insufficient horizon", min_shifted, 0,
                                     [], counts, horizon)
    return CounterexampleVerdict("pass" if ok else "fail", min_shifted,
                                 realized, margins, counts, horizon)


@dataclass(frozen=True)
class ConsensusVerdict:
    """Did the final state reach the truth with diverging precisions?"""

    passed: bool
    cause: str
    max_mean_error: float
    min_precision: float
    isolated_agents: tuple[int, ...]


def consensus_verdict(final_means: np.ndarray, final_ledger: np.ndarray,
                      params: SystemParams, eps_mean: float,
                      precision_floor: float) -> ConsensusVerdict:
    """Check max_i |x_i - truth| <= eps_mean and precisions above the floor.

    Agents whose ledger never moved off the prior are flagged as isolated and
    reported as the cause when they also block the precision floor.
    """
    means = np.asarray(final_means, dtype=np.float64)
    ledger = np.asarray(final_ledger, dtype=np.float64)
    err = float(np.max(np.abs(means[1:] - params.truth)))
    precisions = params.tau * ledger[1:]
    min_prec = float(precisions.min())
    isolated = tuple(int(i) for i in range(1, params.n + 1)
                     if ledger[i] == params.ratio)
    if err > eps_mean and isolated:
        return ConsensusVerdict(False, "isolated agent", err, min_prec,
                                isolated)
    if err > eps_mean:
        return ConsensusVerdict(False, "mean beyond tolerance", err, min_prec,
                                isolated)
    if min_prec < precision_floor:
        cause = "isolated agent" if isolated else "precision below floor"
        return ConsensusVerdict(False, cause, err, min_prec, isolated)
    return ConsensusVerdict(True, "", err, min_prec, isolated)


@dataclass(frozen=True)
class StandardCase:
    """One entry of the standard verification suite."""

    label: str
    schedule: GraphSchedule
    kappa: int


def standard_schedule_set(horizon: int = 1000) -> list[StandardCase]:
    """Periodic and random schedules over n x kappa grid used by the suite."""
    cases = []
    for n in (2, 4, 8, 10):
        for kappa in (1, 3, 5):
            cases.append(StandardCase(
                f"periodic[n={n},kappa={kappa}]",
                make_periodic_schedule(n, kappa, "ring"), kappa))
            cases.append(StandardCase(
                f"random[n={n},kappa={kappa}]",
                make_random_schedule(n, kappa, 0.2, seed=7000 + 10 * n + kappa,
                                     horizon=horizon), kappa))
    return cases
