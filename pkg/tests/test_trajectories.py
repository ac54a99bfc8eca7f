"""Monte Carlo engine: determinism, conservation, localization."""

import math

import numpy as np
import pytest

from zenowalk import rng
from zenowalk.measurement import MeasurementParams, step_sizes, x_of_pi
from zenowalk.schedules import (
    ProfileSpec,
    Schedule,
    pi_localization_schedule,
    uniform_schedule,
)
from zenowalk.trajectories import (
    X_MAX,
    empirical_pi_mean,
    run_ensemble,
    run_localization_ensemble,
    run_trajectory,
)


def test_zero_steps_keeps_initial_point():
    rec = run_trajectory(0.7, uniform_schedule(0.05), 0, seed=1)
    assert rec.x.tolist() == [0.7]
    assert rec.outcomes.size == 0
    assert list(rec.entries()) == [(0, 0.0, 0.7, None)]


def test_zero_strength_walk_stays_put():
    rec = run_trajectory(0.3, uniform_schedule(0.0), 50, seed=9)
    assert np.all(rec.x == 0.3)


def test_bit_reproducible():
    sched = uniform_schedule(0.05)
    a = run_trajectory(0.0, sched, 2000, seed=1234)
    b = run_trajectory(0.0, sched, 2000, seed=1234)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.outcomes, b.outcomes)
    c = run_trajectory(0.0, sched, 2000, seed=1235)
    assert not np.array_equal(a.x, c.x)


def test_record_steps_match_step_sizes():
    sched = uniform_schedule(0.08)
    rec = run_trajectory(0.4, sched, 500, seed=3)
    eps = step_sizes(MeasurementParams(sched.alpha, sched.delta_scale))
    diffs = np.diff(rec.x)
    expected = np.where(rec.outcomes == 1, eps[1], eps[0])
    assert np.max(np.abs(diffs - expected)) < 2e-15
    assert np.all(np.diff(rec.t) > 0)


def test_ensemble_member_zero_equals_single_run():
    sched = uniform_schedule(0.05)
    stats = run_ensemble(0.0, sched, 300, 1, checkpoints=[300], base_seed=77)
    rec = run_trajectory(0.0, sched, 300, seed=rng.trajectory_seed(77, 0))
    assert stats.final_x[0] == rec.x[-1]


def test_ensemble_worker_count_does_not_change_results():
    sched = uniform_schedule(0.05)
    a = run_ensemble(0.0, sched, 200, 64, checkpoints=[100], base_seed=5, workers=1)
    b = run_ensemble(0.0, sched, 200, 64, checkpoints=[100], base_seed=5, workers=4)
    assert np.array_equal(a.final_x, b.final_x)
    assert np.array_equal(a.histograms[100], b.histograms[100])


def test_histogram_masses_sum_to_one():
    stats = run_ensemble(0.0, uniform_schedule(0.05), 100, 500, checkpoints=[0, 100], base_seed=2)
    for c in (0, 100):
        assert np.sum(stats.histograms[c]) == pytest.approx(1.0, abs=1e-12)


def test_pi_martingale_uniform():
    stats = run_ensemble(0.0, uniform_schedule(0.05), 400, 10000, checkpoints=[100, 400], base_seed=21)
    for c in (100, 400):
        mean, se = empirical_pi_mean(stats, c)
        assert abs(mean - 0.5) <= 4.0 * se


def test_pi_martingale_from_biased_start():
    x0 = x_of_pi(0.3)
    stats = run_ensemble(x0, uniform_schedule(0.05), 600, 10000, checkpoints=[600], base_seed=8)
    mean, se = empirical_pi_mean(stats, 600)
    assert abs(mean - 0.3) <= 4.0 * se
    # absorbed-side split follows the conserved mean
    frac_right = float(np.mean(stats.final_x > 0.0))
    assert abs(frac_right - 0.3) <= 0.05


def test_pi_martingale_localized_schedule():
    sched = pi_localization_schedule(0.1, pi_lock=0.7)
    x0 = x_of_pi(0.3)
    stats = run_ensemble(x0, sched, 1500, 10000, checkpoints=[1500], base_seed=13)
    mean, se = empirical_pi_mean(stats, 1500)
    assert abs(mean - 0.3) <= 4.0 * se


def test_empirical_pi_mean_missing_checkpoint():
    stats = run_ensemble(0.0, uniform_schedule(0.05), 10, 4, checkpoints=[10], base_seed=1)
    with pytest.raises(KeyError):
        empirical_pi_mean(stats, 5)


def test_absorption_freezes_walkers():
    # strong steps drive everyone to a basis state well before 1e4 steps
    sched = uniform_schedule(0.3)
    stats = run_ensemble(0.0, sched, 10000, 200, base_seed=4)
    assert np.all(np.abs(stats.final_x) > X_MAX)
    assert np.all(np.abs(stats.final_x) < X_MAX + 1.0)


def test_localization_no_crossing_and_split():
    pi_lock, pi0 = 0.7, 0.3
    sched = pi_localization_schedule(0.1, pi_lock)
    ens = run_localization_ensemble(x_of_pi(pi0), sched, 5000, 3000, base_seed=15)
    assert ens.max_x_seen < x_of_pi(pi_lock)
    frac_lock, frac_zero, unresolved = ens.split()
    expected = pi0 / pi_lock
    se = math.sqrt(expected * (1 - expected) / 3000)
    assert abs(frac_lock - expected) <= 4.0 * se
    assert unresolved <= 0.01 * 3000


def test_localization_requires_matching_profile():
    with pytest.raises(ValueError):
        run_localization_ensemble(0.0, uniform_schedule(0.1), 10, 4)


def test_generic_registry_path_matches_const_kernel():
    # a "uniform" profile registered under a different name takes the
    # generic per-step route; distributions must agree with the fast path
    ProfileSpec.make("uniform")  # ensure registry intact
    sched_fast = uniform_schedule(0.06)
    sched_generic = Schedule(
        delta_scale=0.06, strength=ProfileSpec.make("uniform", value=1.0)
    )
    a = run_ensemble(0.2, sched_fast, 150, 300, checkpoints=[150], base_seed=42)
    b = run_ensemble(0.2, sched_generic, 150, 300, checkpoints=[150], base_seed=42)
    assert np.max(np.abs(a.final_x - b.final_x)) < 1e-10


def test_invalid_inputs():
    with pytest.raises(ValueError):
        run_trajectory(math.inf, uniform_schedule(0.05), 10, 1)
    with pytest.raises(ValueError):
        run_trajectory(0.0, uniform_schedule(0.05), -1, 1)
    with pytest.raises(ValueError):
        run_ensemble(0.0, uniform_schedule(0.05), 10, 0)
    with pytest.raises(ValueError):
        run_ensemble(0.0, uniform_schedule(0.05), 10, 2, checkpoints=[20])
    with pytest.raises(ValueError):
        Schedule(delta_scale=-0.1)
    with pytest.raises(ValueError):
        Schedule(delta_scale=0.1, alpha=2.0)


def test_trajectory_seed_derivation_is_stable():
    # frozen so stored ensembles stay reproducible across versions
    assert rng.trajectory_seed(0, 0) == rng.trajectory_seed(0, 0)
    assert rng.trajectory_seed(0, 0) != rng.trajectory_seed(0, 1)
    assert rng.trajectory_seed(1, 0) != rng.trajectory_seed(0, 0)
    seeds = {rng.trajectory_seed(123, i) for i in range(10000)}
    assert len(seeds) == 10000
