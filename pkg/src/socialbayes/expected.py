"""Deterministic mean process and its transition algebra.

Taking expectations through the noisy belief recursion leaves a linear
system: y_{t+1} = W_t y_t with W_t = (P_t + D_t)^{-1}(P_t + A_t), a
stochastic matrix whose row 0 is (1, 0, ..., 0).  Deleting row and column 0
gives the sub-stochastic learning-agent block B_t; the deleted column
reappears as the truth-pull vector alpha_t (weight an agent moves toward the
truth when it hears it), and rows obey alpha_t + B_t 1 = 1 exactly.  The
truth-shifted means z_t = y_t[1:] - truth then satisfy z_{t+1} = B_t z_t, so
long products of the B blocks control how fast everyone converges - or fails
to.  The noise-mixing block M_t = (P_{t+1}^{-1} A_t)[1:, 1:] plays the same
role for the deviation process in the stochastic recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SystemParams, initial_state
from .schedules import GraphSchedule

_ATOL = 1e-12


@dataclass(frozen=True)
class TransitionBundle:
    """All transition blocks for one step, built from (A_t, D_t, P_t).

    full is stochastic with row 0 = e_0; reduced is the learning-agent block
    (entrywise nonnegative, row sums <= 1); truth_pull[i-1] is the weight
    agent i puts on the truth signal (zero unless it hears the truth);
    noise_mix maps sender noise into receiving agents.  ledger_after is the
    updated precision diagonal P_{t+1} = P_t + D_t.
    """

    t: int
    full: np.ndarray          # (n+1, n+1) stochastic
    reduced: np.ndarray       # (n, n) sub-stochastic
    truth_pull: np.ndarray    # (n,)
    noise_mix: np.ndarray     # (n, n)
    ledger_before: np.ndarray
    ledger_after: np.ndarray


def transition_bundle(adjacency: np.ndarray, deg: np.ndarray,
                      ledger: np.ndarray, t: int = 0) -> TransitionBundle:
    """Build and validate the transition blocks for one step.

    deg is the ledger degree vector (deg[0] = 0).  The divisor on each row is
    the row sum of (P_t + A_t), which equals P_{t+1} on learning-agent rows
    and P_t + 1 on the truth row; that makes the full matrix exactly
    stochastic while the truth agent's ledger stays inert.
    """
    a = np.asarray(adjacency, dtype=np.float64)
    p = np.asarray(ledger, dtype=np.float64)
    m = a.shape[0]
    if a.shape != (m, m) or p.shape != (m,) or deg.shape != (m,):
        raise ValueError("shape mismatch between adjacency, degrees, ledger")
    if np.any(p <= 0):
        raise ValueError("ledger entries must be positive")
    if deg[0] != 0 or a[0, 0] != 1.0 or np.any(a[0, 1:] != 0.0):
        raise ValueError("truth row must be the self-loop with zero degree")
    if np.any(a < 0):
        raise ValueError("adjacency entries must be nonnegative")
    rowsum = a.sum(axis=1)
    if not np.array_equal(rowsum[1:], deg[1:]):
        raise ValueError("degrees disagree with adjacency row sums")
    p_after = p + deg
    divisor = p + rowsum  # equals p_after on rows i >= 1
    full = (np.diag(p) + a) / divisor[:, None]
    reduced = full[1:, 1:]
    truth_pull = full[1:, 0]
    noise_mix = a[1:, 1:] / p_after[1:, None]

    assert np.all(np.abs(full.sum(axis=1) - 1.0) <= _ATOL), \
        "full transition rows must sum to one"
    assert np.all(np.abs(truth_pull + reduced.sum(axis=1) - 1.0) <= _ATOL), \
        "truth pull and reduced rows must sum to one"
    assert np.all(reduced >= 0.0), "reduced block must be nonnegative"
    assert np.array_equal(p_after[1:], divisor[1:]), \
        "the two divisor forms must agree on learning-agent rows"
    return TransitionBundle(t, full, reduced, truth_pull, noise_mix, p, p_after)


def bundle_at(schedule: GraphSchedule, params: SystemParams, t: int,
              ledger: np.ndarray | None = None) -> TransitionBundle:
    """Transition bundle at time t; ledger recomputed from scratch if absent."""
    a, deg = schedule.arrays_at(t)
    if ledger is None:
        total = np.zeros(schedule.n + 1, dtype=np.int64)
        for k in range(t):
            total += schedule.arrays_at(k)[1]
        ledger = params.ratio + total.astype(np.float64)
    return transition_bundle(a, deg, ledger, t)


def step_expected(y: np.ndarray, bundle: TransitionBundle,
                  truth: float) -> np.ndarray:
    """One step of the mean process, cross-checked in both forms.

    Computes the full stochastic step and the truth-shifted reduced step and
    requires them to agree entrywise before returning.
    """
    y_full = bundle.full @ y
    z_next = bundle.reduced @ (y[1:] - truth)
    assert np.all(np.abs(y_full[1:] - (truth + z_next)) <= 1e-11 * max(
        1.0, np.max(np.abs(y)))), "full and reduced forms disagree"
    y_full[0] = truth
    return y_full


def reduced_product(schedule: GraphSchedule, params: SystemParams,
                    t: int, s: int,
                    ledger_start: np.ndarray | None = None) -> np.ndarray:
    """Product of reduced blocks over steps [s, t), newest on the left.

    t == s gives the identity.  The ledger at s is recomputed unless given.
    """
    if t < s:
        raise ValueError("need t >= s")
    if s < 0:
        raise ValueError("need s >= 0")
    n = schedule.n
    if ledger_start is None:
        total = np.zeros(n + 1, dtype=np.int64)
        for k in range(s):
            total += schedule.arrays_at(k)[1]
        ledger = params.ratio + total.astype(np.float64)
    else:
        ledger = np.asarray(ledger_start, dtype=np.float64).copy()
    acc = np.eye(n)
    for u in range(s, t):
        b = transition_bundle(*schedule.arrays_at(u), ledger, u)
        acc = b.reduced @ acc
        ledger = b.ledger_after
    return acc


@dataclass(frozen=True)
class ExpectedTrajectory:
    """Dense mean-process record: y_t, truth-shifted z_t, and sup norms."""

    times: np.ndarray      # (T+1,)
    means: np.ndarray      # (T+1, n+1), row t is y_t
    norms: np.ndarray      # (T+1,), max_i |y_{t,i} - truth| over i >= 1
    truth: float
    params: SystemParams
    kind: str = "expected"

    @property
    def shifted(self) -> np.ndarray:
        """z_t = y_t[1:] - truth, one row per time."""
        return self.means[:, 1:] - self.truth


def run_expected(schedule: GraphSchedule, params: SystemParams, horizon: int,
                 x0=None) -> ExpectedTrajectory:
    """Run the deterministic mean recursion for `horizon` steps.

    Exact linear iteration, no RNG.  The first step is cross-checked against
    the validated bundle path; later steps use the same arithmetic on the
    incrementally maintained ledger.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    init = initial_state(params, x0)
    truth = params.truth
    n1 = params.n + 1
    means = np.empty((horizon + 1, n1))
    norms = np.empty(horizon + 1)
    y = init.means.copy()
    p = init.ledger.copy()
    means[0] = y
    norms[0] = np.max(np.abs(y[1:] - truth)) if params.n else 0.0
    for t in range(horizon):
        a_mat, deg = schedule.arrays_at(t)
        # zero-receiver rows are exact no-ops, matching the noisy path
        y_next = np.where(deg > 0, (p * y + a_mat @ y) / (p + deg), y)
        y_next[0] = truth
        if t == 0:
            checked = step_expected(y, transition_bundle(a_mat, deg, p, t),
                                    truth)
            assert np.all(np.abs(checked - y_next) <= 1e-11 * max(
                1.0, np.max(np.abs(y)))), "lean step disagrees with bundle step"
        y = y_next
        p = p + deg
        means[t + 1] = y
        norms[t + 1] = np.max(np.abs(y[1:] - truth))
    return ExpectedTrajectory(np.arange(horizon + 1), means, norms, truth,
                              params)
