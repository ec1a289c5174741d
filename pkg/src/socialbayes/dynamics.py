"""Stochastic belief dynamics for memoryless Gaussian agents.

Each learning agent i holds a Gaussian belief N(x_i, 1/precision_i); the truth
agent (index 0) holds a point mass at the truth value.  At every step each
agent with outgoing edges samples one value from its own belief, adds
observation noise of variance 1/tau, and sends the same signal to all
listeners.  A receiver conjugates its Gaussian with the incoming signals,
which keeps beliefs Gaussian and gives the closed-form update

    mean'      = (precision * mean + tau * sum(signals)) / (precision + k*tau)
    precision' = precision + k*tau

for k received signals.  Precisions are therefore schedule-determined: we
track them as ledger values tau0/tau + (integer signal counts) and scale by
tau on demand, so incremental and from-scratch accounting agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedules import GraphSchedule

# Stream tag for per-run dynamics generators; schedules use their own tags.
_TAG_RUN = 201

# Noise is drawn in blocks to keep generator overhead off the hot loop;
# block draws and per-step draws of the same shapes yield the same stream.
_NOISE_BLOCK = 4096


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Named substream of the master seed (independent across keys)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def run_stream(seed: int, run_index: int = 0) -> np.random.Generator:
    """Dynamics stream for one run; distinct runs never share draws."""
    return rng_stream(seed, _TAG_RUN, run_index)


@dataclass(frozen=True)
class SystemParams:
    """Model constants: agent count, noise scales, truth, master seed.

    tau is the observation precision (1/sigma^2), tau0 the shared prior
    precision.  truth_noise controls whether the truth agent's emitted signal
    carries observation noise like everyone else's; the mean process is
    unaffected either way.
    """

    n: int
    tau: float = 1.0
    tau0: float = 1.0
    truth: float = 0.0
    seed: int = 0
    truth_noise: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one learning agent")
        if self.tau <= 0 or self.tau0 <= 0:
            raise ValueError("precisions must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def ratio(self) -> float:
        return self.tau0 / self.tau


@dataclass(frozen=True)
class BeliefState:
    """Belief means and precision ledger at one time.

    means[0] is pinned to the truth value.  ledger[i] = tau0/tau + number of
    signals agent i has received so far; actual precisions are tau * ledger
    for i >= 1 and infinite for the truth agent.
    """

    means: np.ndarray
    ledger: np.ndarray
    t: int
    params: SystemParams

    @property
    def precisions(self) -> np.ndarray:
        p = self.params.tau * self.ledger
        p[0] = np.inf  # point mass at the truth
        return p


def initial_state(params: SystemParams, x0=None) -> BeliefState:
    """State at t=0: given means (scalar broadcast or per-agent), prior ledger."""
    m = np.empty(params.n + 1)
    if x0 is None:
        m[:] = params.truth
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.ndim == 0:
            m[1:] = float(x0)
        elif x0.size == params.n:
            m[1:] = x0
        elif x0.size == params.n + 1:
            m[1:] = x0[1:]
        else:
            raise ValueError("x0 must be scalar, length n, or length n+1")
    m[0] = params.truth
    ledger = np.full(params.n + 1, params.ratio)
    return BeliefState(m, ledger, 0, params)


@dataclass(frozen=True)
class SignalBatch:
    """One step's emissions: belief samples theta, observation noise eps."""

    theta: np.ndarray
    eps: np.ndarray

    @property
    def a(self) -> np.ndarray:
        """Signals actually sent, a = theta + eps."""
        return self.theta + self.eps


def emit_signals(means: np.ndarray, ledger: np.ndarray, params: SystemParams,
                 rng: np.random.Generator) -> SignalBatch:
    """Sample every agent's outgoing signal for one step.

    theta_i ~ N(mean_i, 1/(tau*ledger_i)) for learning agents; the truth agent
    emits theta_0 = truth exactly.  eps ~ N(0, 1/tau) iid, dropped on the
    truth coordinate when truth_noise is off.
    """
    if np.any(ledger[1:] <= 0):
        raise ValueError("ledger entries must be positive")
    g = rng.standard_normal((2, means.size))
    u = g[0] / np.sqrt(params.tau * ledger)
    u[0] = 0.0  # point mass: the truth agent's sample is the truth itself
    eps = g[1] / np.sqrt(params.tau)
    if not params.truth_noise:
        eps[0] = 0.0
    return SignalBatch(means + u, eps)


def update_agent(mean: float, precision: float, signals, tau: float):
    """Conjugate Gaussian update of one agent for its received signals.

    Returns (mean', precision').  With no signals the belief is unchanged.
    """
    signals = np.atleast_1d(np.asarray(signals, dtype=np.float64))
    k = signals.size
    new_precision = precision + k * tau
    new_mean = (precision * mean + tau * signals.sum()) / new_precision
    return float(new_mean), float(new_precision)


def step_per_agent(state: BeliefState, adjacency: np.ndarray,
                   batch: SignalBatch) -> BeliefState:
    """Reference path: apply update_agent to each receiver separately."""
    params = state.params
    a = batch.a
    means = state.means.copy()
    ledger = state.ledger.copy()
    for i in range(1, params.n + 1):
        senders = np.flatnonzero(adjacency[i])
        if senders.size == 0:
            continue
        mean, _ = update_agent(means[i], params.tau * ledger[i],
                               a[senders], params.tau)
        means[i] = mean
        ledger[i] += senders.size
    means[0] = params.truth
    return BeliefState(means, ledger, state.t + 1, params)


def step_mean_process(state: BeliefState, adjacency: np.ndarray,
                      batch: SignalBatch | None = None,
                      rng: np.random.Generator | None = None) -> BeliefState:
    """Advance all beliefs one step in matrix form.

    x' = (P x + A (x + u + eps)) / (P + d) rowwise on learning agents, with
    coordinate 0 pinned to the truth.  Draws a SignalBatch from rng when one
    is not supplied; agrees with the per-agent reference path on the same
    batch to floating-point roundoff.
    """
    params = state.params
    if batch is None:
        if rng is None:
            raise ValueError("need a SignalBatch or an rng to draw one")
        batch = emit_signals(state.means, state.ledger, params, rng)
    deg = adjacency[1:].sum(axis=1)
    p = state.ledger
    means = np.empty_like(state.means)
    # receivers with no incoming edges keep their posterior bit-for-bit
    means[1:] = np.where(
        deg > 0,
        (p[1:] * state.means[1:] + adjacency[1:] @ batch.a) / (p[1:] + deg),
        state.means[1:])
    means[0] = params.truth
    ledger = p.copy()
    ledger[1:] += deg
    return BeliefState(means, ledger, state.t + 1, params)


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: means and precision ledger at the requested times."""

    times: np.ndarray            # (K,)
    means: np.ndarray            # (K, n+1)
    ledger: np.ndarray           # (K, n+1), schedule-determined
    params: SystemParams
    run_index: int = 0
    kind: str = "simulated"
    signals: np.ndarray | None = None  # (K, n+1) emitted signals, optional

    @property
    def precisions(self) -> np.ndarray:
        p = self.params.tau * self.ledger.copy()
        p[:, 0] = np.inf
        return p


def _record_times(horizon: int, record_every, record_times) -> np.ndarray:
    if record_times is not None:
        times = np.unique(np.asarray(record_times, dtype=np.int64))
        if times.size and (times[0] < 0 or times[-1] > horizon):
            raise ValueError("record times outside [0, horizon]")
        return times
    step = 1 if record_every is None else int(record_every)
    if step < 1:
        raise ValueError("record_every must be >= 1")
    times = np.arange(0, horizon + 1, step, dtype=np.int64)
    if times.size == 0 or times[-1] != horizon:
        times = np.append(times, horizon)
    return times


class _NoiseBlocks:
    """Blocked standard-normal draws, stream-identical to per-step draws."""

    def __init__(self, rng, width):
        self.rng = rng
        self.width = width
        self.buf = None
        self.pos = 0

    def next(self):
        if self.buf is None or self.pos == len(self.buf):
            self.buf = self.rng.standard_normal((_NOISE_BLOCK, 2, self.width))
            self.pos = 0
        g = self.buf[self.pos]
        self.pos += 1
        return g


def _run_core(step_arrays, params: SystemParams, horizon: int, x0, times,
              run_index: int, zero_noise: bool,
              out_means, out_ledger=None, out_signals=None):
    """Shared hot loop: one run, recording at `times` into preallocated rows."""
    init = initial_state(params, x0)
    x = init.means.copy()
    p = init.ledger.copy()
    tau = params.tau
    inv_sqrt_tau = 1.0 / np.sqrt(tau)
    truth = params.truth
    truth_noise = params.truth_noise
    noise = None if zero_noise else _NoiseBlocks(
        run_stream(params.seed, run_index), params.n + 1)
    next_rec = 0
    for t in range(horizon + 1):
        recorded = next_rec < times.size and times[next_rec] == t
        if recorded:
            out_means[next_rec] = x
            if out_ledger is not None:
                out_ledger[next_rec] = p
            next_rec += 1
        if t == horizon:
            break
        a_mat, deg = step_arrays(t)
        if zero_noise:
            sig = x
        else:
            g = noise.next()
            u = g[0] / np.sqrt(tau * p)
            u[0] = 0.0
            eps = g[1] * inv_sqrt_tau
            if not truth_noise:
                eps[0] = 0.0
            sig = x + u + eps
        if recorded and out_signals is not None:
            out_signals[next_rec - 1] = sig
        # zero-receiver coordinates stay put exactly, like the reference path
        x = np.where(deg > 0, (p * x + a_mat @ sig) / (p + deg), x)
        x[0] = truth
        p = p + deg


def run_simulation(schedule: GraphSchedule, params: SystemParams, horizon: int,
                   x0=None, record_every=None, record_times=None,
                   record_signals: bool = False, run_index: int = 0,
                   zero_noise: bool = False) -> Trajectory:
    """Simulate one run of the noisy belief recursion.

    Reproducible from (params.seed, run_index, schedule, params): the run owns
    stream (seed, run tag, run_index).  horizon = 0 records only the initial
    state.  zero_noise forces u = eps = 0, which makes the run coincide with
    the deterministic mean process.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    times = _record_times(horizon, record_every, record_times)
    n1 = params.n + 1
    out_means = np.empty((times.size, n1))
    out_ledger = np.empty((times.size, n1))
    out_signals = np.full((times.size, n1), np.nan) if record_signals else None
    _run_core(schedule.arrays_at, params, horizon, x0, times, run_index,
              zero_noise, out_means, out_ledger, out_signals)
    return Trajectory(times, out_means, out_ledger, params, run_index,
                      "zero-noise" if zero_noise else "simulated", out_signals)


@dataclass(frozen=True)
class EnsembleResult:
    """Monte-Carlo batch over one schedule: per-run means at recorded times."""

    times: np.ndarray      # (K,)
    means: np.ndarray      # (M, K, n+1)
    ledger: np.ndarray     # (K, n+1), shared across runs by construction
    params: SystemParams
    n_runs: int


def run_ensemble(schedule: GraphSchedule, params: SystemParams, horizon: int,
                 n_runs: int, x0=None, record_every=None, record_times=None,
                 zero_noise: bool = False) -> EnsembleResult:
    """Independent runs over a shared schedule (run r uses stream index r)."""
    if n_runs < 1:
        raise ValueError("need at least one run")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    times = _record_times(horizon, record_every, record_times)
    window = [schedule.arrays_at(t) for t in range(horizon)]
    step_arrays = window.__getitem__
    n1 = params.n + 1
    means = np.empty((n_runs, times.size, n1))
    ledger = np.empty((times.size, n1))
    for r in range(n_runs):
        _run_core(step_arrays, params, horizon, x0, times, r, zero_noise,
                  means[r], out_ledger=ledger if r == 0 else None)
    return EnsembleResult(times, means, ledger, params, n_runs)
