"""Noisy belief dynamics: conjugate updates, RNG streams, trajectories."""

import numpy as np
import pytest

from socialbayes.dynamics import (
    SystemParams,
    emit_signals,
    initial_state,
    run_ensemble,
    run_simulation,
    run_stream,
    step_mean_process,
    step_per_agent,
    update_agent,
)
from socialbayes.schedules import (
    make_periodic_schedule,
    make_random_schedule,
    make_table_schedule,
)


def test_update_agent_single_signal():
    # tau = tau0 = 1, one signal: posterior mean is the plain average
    mean, prec = update_agent(2.0, 1.0, [4.0], 1.0)
    assert mean == 3.0 and prec == 2.0


def test_update_agent_batch_and_empty():
    mean, prec = update_agent(1.0, 2.0, [0.0, 0.0], 1.0)
    assert mean == pytest.approx(0.5) and prec == 4.0
    mean, prec = update_agent(1.0, 2.0, [], 1.0)
    assert mean == 1.0 and prec == 2.0


def test_update_agent_precision_weighting():
    # strong prior barely moves; weak prior follows the signal
    strong, _ = update_agent(0.0, 100.0, [10.0], 1.0)
    weak, _ = update_agent(0.0, 0.01, [10.0], 1.0)
    assert strong < 0.2 and weak > 9.0


def test_initial_state_broadcasts():
    params = SystemParams(n=3, truth=5.0)
    assert list(initial_state(params, 2.0).means) == [5.0, 2.0, 2.0, 2.0]
    assert list(initial_state(params, [1.0, 2.0, 3.0]).means) == [5.0, 1.0, 2.0, 3.0]
    # an n+1 vector may carry any value at index 0; it is pinned anyway
    assert initial_state(params, [9.0, 1.0, 2.0, 3.0]).means[0] == 5.0
    with pytest.raises(ValueError):
        initial_state(params, [1.0, 2.0])


def test_initial_precisions():
    params = SystemParams(n=2, tau=4.0, tau0=2.0)
    state = initial_state(params, 0.0)
    assert state.precisions[0] == np.inf
    assert np.allclose(state.precisions[1:], 2.0)  # tau * (tau0/tau)


def test_emit_signals_truth_coordinates():
    params = SystemParams(n=2, truth=3.0, truth_noise=False)
    state = initial_state(params, 0.0)
    batch = emit_signals(state.means, state.ledger, params, run_stream(1))
    assert batch.theta[0] == 3.0
    assert batch.eps[0] == 0.0
    assert batch.a[0] == 3.0

    noisy = SystemParams(n=2, truth=3.0, truth_noise=True)
    batch = emit_signals(state.means, state.ledger, noisy, run_stream(1))
    assert batch.theta[0] == 3.0
    assert batch.eps[0] != 0.0


def test_emit_signals_rejects_dead_ledger():
    params = SystemParams(n=1)
    with pytest.raises(ValueError):
        emit_signals(np.zeros(2), np.array([1.0, 0.0]), params, run_stream(0))


def test_per_agent_matches_matrix_path():
    """Reference loop and vectorized step agree to 1e-12 per entry.

    Summation order differs between the two paths (explicit sum vs BLAS
    dot), so agreement is to accumulation tolerance, not bitwise.
    """
    params = SystemParams(n=5, tau=2.0, tau0=3.0, truth=1.0, seed=11)
    sched = make_random_schedule(5, 3, 0.4, seed=11)
    state_a = initial_state(params, np.linspace(-2, 2, 5))
    state_b = state_a
    rng = run_stream(params.seed)
    for t in range(100):
        adjacency, _ = sched.arrays_at(t)
        batch = emit_signals(state_a.means, state_a.ledger, params, rng)
        state_a = step_per_agent(state_a, adjacency, batch)
        state_b = step_mean_process(state_b, adjacency, batch)
        assert np.max(np.abs(state_a.means - state_b.means)) <= 1e-12
        assert np.array_equal(state_a.ledger, state_b.ledger)


def test_no_edges_is_exact_identity():
    params = SystemParams(n=3, seed=2)
    sched = make_table_schedule(3, [(1, 1, 0)], horizon=2)
    state = initial_state(params, [0.3, -0.7, 1.9])
    rng = run_stream(5)
    adjacency, _ = sched.arrays_at(0)  # empty step
    batch = emit_signals(state.means, state.ledger, params, rng)
    nxt = step_mean_process(state, adjacency, batch)
    assert np.array_equal(nxt.means, state.means)
    assert np.array_equal(nxt.ledger, state.ledger)


def test_final_distribution_is_gaussian():
    """Linear dynamics with Gaussian draws: skewness and excess kurtosis
    of x_T across runs sit inside 3 standard errors of zero."""
    params = SystemParams(n=3, seed=31)
    sched = make_periodic_schedule(3, 2, peer_rule="ring")
    ens = run_ensemble(sched, params, 50, n_runs=5000, x0=2.0,
                       record_times=[50])
    m = 5000
    se_skew, se_kurt = np.sqrt(6.0 / m), np.sqrt(24.0 / m)
    for i in range(1, 4):
        x = ens.means[:, 0, i]
        z = (x - x.mean()) / x.std()
        skew = np.mean(z ** 3)
        exkurt = np.mean(z ** 4) - 3.0
        assert abs(skew) <= 3 * se_skew
        assert abs(exkurt) <= 3 * se_kurt


def test_truth_coordinate_pinned():
    params = SystemParams(n=3, truth=-2.5, seed=4)
    sched = make_periodic_schedule(3, 2, peer_rule="complete")
    traj = run_simulation(sched, params, 50, x0=1.0)
    assert np.all(traj.means[:, 0] == -2.5)


def test_run_simulation_reproducible():
    params = SystemParams(n=3, seed=123)
    sched = make_periodic_schedule(3, 2, peer_rule="ring")
    t1 = run_simulation(sched, params, 200, x0=2.0)
    t2 = run_simulation(sched, params, 200, x0=2.0)
    assert np.array_equal(t1.means, t2.means)
    t3 = run_simulation(sched, params, 200, x0=2.0, run_index=1)
    assert not np.array_equal(t1.means, t3.means)


def test_seed_changes_noise():
    sched = make_periodic_schedule(2, 1)
    a = run_simulation(sched, SystemParams(n=2, seed=1), 50, x0=1.0)
    b = run_simulation(sched, SystemParams(n=2, seed=2), 50, x0=1.0)
    assert not np.array_equal(a.means, b.means)


def test_zero_noise_run_is_deterministic_mean_recursion():
    from socialbayes.expected import run_expected
    params = SystemParams(n=4, seed=9)
    sched = make_periodic_schedule(4, 3, peer_rule="ring")
    traj = run_simulation(sched, params, 300, x0=2.0, zero_noise=True)
    expected = run_expected(sched, params, 300, x0=2.0)
    assert np.allclose(traj.means, expected.means[traj.times], atol=1e-12)


def test_ledger_matches_schedule_degrees():
    params = SystemParams(n=2, tau=1.0, tau0=3.0, seed=0)
    sched = make_periodic_schedule(2, 2, peer_rule="ring")
    traj = run_simulation(sched, params, 10)
    total = np.zeros(3, dtype=np.int64)
    for t in range(10):
        assert np.array_equal(traj.ledger[t], 3.0 + total)
        total += sched.arrays_at(t)[1]


def test_record_every_and_final_time():
    params = SystemParams(n=1, seed=0)
    sched = make_periodic_schedule(1, 1)
    traj = run_simulation(sched, params, 95, record_every=10)
    assert list(traj.times[:3]) == [0, 10, 20]
    assert traj.times[-1] == 95  # final state always recorded


def test_record_times_subset():
    params = SystemParams(n=1, seed=0)
    sched = make_periodic_schedule(1, 1)
    traj = run_simulation(sched, params, 100, record_times=[0, 7, 99])
    assert list(traj.times) == [0, 7, 99]
    with pytest.raises(ValueError):
        run_simulation(sched, params, 100, record_times=[101])


def test_horizon_zero_single_row():
    params = SystemParams(n=2, seed=0)
    sched = make_periodic_schedule(2, 1)
    traj = run_simulation(sched, params, 0, x0=1.5)
    assert traj.times.shape == (1,)
    assert list(traj.means[0]) == [0.0, 1.5, 1.5]


def test_record_signals_shape():
    params = SystemParams(n=2, seed=3)
    sched = make_periodic_schedule(2, 1)
    traj = run_simulation(sched, params, 20, record_signals=True)
    assert traj.signals is not None
    assert traj.signals.shape == (len(traj.times), 3)


def test_ensemble_members_match_solo_runs():
    """Run r of an ensemble replays run_simulation with run_index=r."""
    params = SystemParams(n=3, seed=21)
    sched = make_periodic_schedule(3, 2, peer_rule="ring")
    ens = run_ensemble(sched, params, 100, n_runs=3, x0=2.0, record_every=10)
    for r in range(3):
        solo = run_simulation(sched, params, 100, x0=2.0, record_every=10,
                              run_index=r)
        assert np.array_equal(ens.means[r], solo.means)
    assert ens.n_runs == 3
    assert np.array_equal(ens.times, solo.times)


def test_ensemble_runs_are_independent():
    params = SystemParams(n=2, seed=8)
    sched = make_periodic_schedule(2, 1)
    ens = run_ensemble(sched, params, 50, n_runs=4, x0=1.0)
    finals = ens.means[:, -1, 1]
    assert len(set(finals.tolist())) == 4


def test_ensemble_rejects_empty():
    sched = make_periodic_schedule(2, 1)
    with pytest.raises(ValueError):
        run_ensemble(sched, SystemParams(n=2), 10, n_runs=0)


def test_noise_shrinks_with_accumulated_precision():
    """Late-time steps move beliefs far less than early ones."""
    params = SystemParams(n=1, seed=15)
    sched = make_periodic_schedule(1, 1)
    traj = run_simulation(sched, params, 2000, x0=2.0)
    early = np.abs(np.diff(traj.means[1:20, 1]))
    late = np.abs(np.diff(traj.means[-20:, 1]))
    assert late.max() < early.max() / 10
