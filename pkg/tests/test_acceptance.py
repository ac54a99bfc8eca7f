"""Acceptance suite: one test per shipped quantitative criterion.

Each test prints one PASS/FAIL line (run with -s to see them inline) and
enforces its stated tolerance and runtime budget.  Criterion 6's band check
is known to be unattainable for a faithful implementation (the converged
current is -0.808, confirmed by three independent oracles; see the decisions
ledger); it is asserted as stated and fails honestly.
"""

import math
import time

import numpy as np
import pytest

from zenowalk import master, profiles, ratchet
from zenowalk.cli import _fp_l2, _rescale_l1
from zenowalk.measurement import (
    MeasurementParams,
    diffusion_step,
    mean_step,
    step_size_at_x,
    step_sizes,
    x_of_pi,
)
from zenowalk.schedules import pi_localization_schedule, uniform_schedule
from zenowalk.trajectories import (
    empirical_pi_mean,
    run_ensemble,
    run_localization_ensemble,
)

# long-time currents measured by criteria 5-7, checked for the weak-ratchet
# sign bound in criterion 8 (pytest executes this module top to bottom)
_MEASURED_CURRENTS = {}


def _report(n, ok, msg):
    print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {msg}")


def test_criterion_01_analytic_fp_oracle():
    """Solver vs the exact point-source density at t=1, X=-10."""
    t0 = time.perf_counter()
    l2_a, _ = _fp_l2(4096, -10.0, 0.01, 1.0)
    l2_b, _ = _fp_l2(8192, -10.0, 0.01, 1.0)
    elapsed = time.perf_counter() - t0
    ratio = l2_a / l2_b
    ok = l2_a < 1e-3 and ratio >= 3.5 and elapsed < 30.0
    _report(1, ok, f"L2(4096)={l2_a:.3e} (<1e-3), ratio={ratio:.2f} (>=3.5), {elapsed:.1f}s (<30s)")
    assert l2_a < 1e-3
    assert ratio >= 3.5
    assert elapsed < 30.0


def test_criterion_02_pi_conservation():
    """<Pi> conserved: master equation per step and MC ensembles at 4 SE."""
    t0 = time.perf_counter()
    worst = {}
    g0 = master.grid_from_point(x_of_pi(0.3), n=8192)
    const_op = master.PushOperator(g0.nodes, g0.dx, math.pi / 4, 0.05)
    cond_op = master.PushOperator(
        g0.nodes, g0.dx, math.pi / 4, 0.05 * (1.0 + 0.5 * np.sin(g0.nodes))
    )
    for name, op in (("constant", const_op), ("conditional", cond_op)):
        g = g0
        audit = master.conservation_audit(g)
        w = 0.0
        for _ in range(500):
            g = op.apply(g)
            nxt = master.conservation_audit(g)
            w = max(w, abs(nxt["pi"] - audit["pi"]))
            audit = nxt
        worst[name] = w

    devs = {}
    for name, sched in (
        ("constant", uniform_schedule(0.05)),
        ("conditional", pi_localization_schedule(0.1, 0.7)),
    ):
        stats = run_ensemble(x_of_pi(0.3), sched, 500, 10000, checkpoints=[500], base_seed=2024)
        mean, se = empirical_pi_mean(stats, 500)
        devs[name] = (abs(mean - 0.3), se)
    elapsed = time.perf_counter() - t0

    ok = (
        all(w < 1e-9 for w in worst.values())
        and all(d <= 4 * se for d, se in devs.values())
        and elapsed < 120.0
    )
    _report(
        2,
        ok,
        f"master drift/step const={worst['constant']:.1e} cond={worst['conditional']:.1e} (<1e-9); "
        f"MC dev/4SE const={devs['constant'][0]/(4*devs['constant'][1]):.2f} "
        f"cond={devs['conditional'][0]/(4*devs['conditional'][1]):.2f} (<1); {elapsed:.0f}s (<120s)",
    )
    for w in worst.values():
        assert w < 1e-9
    for d, se in devs.values():
        assert d <= 4 * se
    assert elapsed < 120.0


def test_criterion_03_step_size_x_independence():
    """Position-explicit step formula is constant over x (Appendix-A claim)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    grid = np.linspace(-10.0, 10.0, 41)
    worst = 0.0
    for _ in range(100):
        alpha = rng.uniform(0.1, 1.45)
        delta = rng.uniform(-0.35, 0.35)
        if not 0.05 < alpha + delta < math.pi / 2 - 0.05:
            continue
        p = MeasurementParams(alpha, delta)
        eps = step_sizes(p)
        for outcome in (0, 1):
            dev = float(np.max(np.abs(step_size_at_x(grid, p, outcome) - eps[outcome])))
            worst = max(worst, dev)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 1.0
    _report(3, ok, f"max |eps(x) - eps| = {worst:.2e} (<1e-10), {elapsed:.2f}s (<1s)")
    assert worst < 1e-10
    assert elapsed < 1.0


def test_criterion_04_small_delta_expansion_orders():
    """Residuals of mu - d^2 tanh x and D - d^2/2 scale as O(d^3)."""
    t0 = time.perf_counter()
    alpha, x = 0.5, 1.3
    ratios = []
    res_mu, res_d = [], []
    for d in (0.1, 0.05, 0.025):
        p = MeasurementParams(alpha, d)
        res_mu.append(abs(mean_step(x, p) - d * d * math.tanh(x)))
        res_d.append(abs(diffusion_step(x, p) - d * d / 2.0))
    for seq in (res_mu, res_d):
        ratios.extend(a / b for a, b in zip(seq, seq[1:]))
    elapsed = time.perf_counter() - t0
    ok = all(4.0 <= r <= 16.0 for r in ratios) and elapsed < 1.0
    _report(4, ok, f"halving ratios {['%.2f' % r for r in ratios]} in [4,16], {elapsed:.2f}s (<1s)")
    for r in ratios:
        assert 4.0 <= r <= 16.0
    assert elapsed < 1.0


def test_criterion_05_no_ratchet_baselines():
    """g=1 gives current -1 and a homogeneous density; temporal-only too."""
    t0 = time.perf_counter()
    run = ratchet.solve_reduced(profiles.unit_profile(), n_cells=128, t_end=50.0)
    avg_unit = run.record.final_average
    uniformity = float(np.max(np.abs(run.final.values * 2 * math.pi - 1.0)))
    run_t = ratchet.solve_reduced(
        profiles.StrengthProfile(temporal="onoff"), n_cells=128, t_end=30.0
    )
    avg_temporal = run_t.record.final_average
    elapsed = time.perf_counter() - t0
    _MEASURED_CURRENTS["unit"] = avg_unit
    _MEASURED_CURRENTS["temporal-only"] = avg_temporal
    ok = abs(avg_unit + 1) < 0.01 and uniformity < 1e-6 and abs(avg_temporal + 1) < 1e-6 and elapsed < 60
    _report(
        5,
        ok,
        f"g=1 avg={avg_unit:.4f} (-1 +/- 0.01), uniformity={uniformity:.1e} (<1e-6), "
        f"temporal avg={avg_temporal:.10f} (-1 +/- solver tol), {elapsed:.0f}s (<60s)",
    )
    assert abs(avg_unit + 1.0) < 0.01
    assert uniformity < 1e-6
    assert abs(avg_temporal + 1.0) < 1e-6
    assert elapsed < 60.0


def test_criterion_06_weak_spacetime_ratchet():
    """Switched sawtooth: weakened, never reversed; figure band as stated."""
    t0 = time.perf_counter()
    prof = profiles.onoff_sawtooth_profile()
    run = ratchet.solve_reduced(prof, n_cells=128, t_end=400 * prof.switching_period)
    elapsed = time.perf_counter() - t0
    avg = run.record.final_average
    _MEASURED_CURRENTS["spacetime"] = avg
    in_band = abs(avg + 0.86) <= 0.05
    ok = in_band and avg >= -0.95 and elapsed < 300.0
    _report(
        6,
        ok,
        f"long-time avg={avg:.4f}; weakened-by->=0.05 {'yes' if avg >= -0.95 else 'NO'}; "
        f"band -0.86+/-0.05 {'yes' if in_band else 'NO'}; {elapsed:.0f}s (<300s)",
    )
    assert elapsed < 300.0
    assert run.converged()
    assert avg >= -1.0 + 0.05  # strictly weaker than the bare drift
    # The band below is asserted exactly as specified.  A faithful solution
    # converges to -0.808 (time-marched FV here; Floquet periodic-orbit
    # oracle -0.80797; direct discrete-walk MC -0.8082 +/- 0.0006), while the
    # running average only passes -0.86 transiently near t ~= 10.  See the
    # decisions ledger for the full analysis and variant scan.
    assert in_band, (
        f"long-time average {avg:.4f} outside the quoted figure band -0.86 +/- 0.05; "
        "converged value confirmed by independent Floquet and Monte Carlo oracles "
        "(-0.80797 and -0.8082 +/- 0.0006)"
    )


def test_criterion_07_seebeck_ratchet():
    """Static profiles: steady current equals -1/<g^-2> within 1e-3."""
    t0 = time.perf_counter()
    cases = {"paper": profiles.static_sine_profile(-0.8)}
    for seed in range(5):
        cases[f"random{seed}"] = profiles.random_static_profile(seed)
    diffs = {}
    for name, prof in cases.items():
        closed = ratchet.seebeck_steady_current(prof)
        run = ratchet.solve_reduced(prof, n_cells=256, t_end=40.0)
        numeric = float(run.record.instantaneous[-1])
        diffs[name] = abs(numeric - closed)
        if name == "paper":
            value = numeric
            _MEASURED_CURRENTS["seebeck"] = numeric
    elapsed = time.perf_counter() - t0
    worst = max(diffs.values())
    ok = (
        worst < 1e-3
        and abs(value - (-9.0 / 55.0)) < 1e-3
        and abs(value - (-0.2)) <= 0.08
        and elapsed < 120.0
    )
    _report(
        7,
        ok,
        f"paper value={value:.5f} (closed form {-9/55:.5f}, figure read -0.2 +/- 0.08); "
        f"worst |numeric-closed|={worst:.1e} over {len(cases)} profiles (<1e-3); {elapsed:.0f}s (<120s)",
    )
    assert worst < 1e-3
    assert abs(value - (-9.0 / 55.0)) < 1e-3
    assert abs(value - (-0.2)) <= 0.08  # documented loose figure band
    assert elapsed < 120.0


def test_criterion_08_weak_ratchet_sign_invariant():
    """No measured long-time current reverses sign or beats the bare drift."""
    prof = profiles.sign_sawtooth_profile(-0.8, 0.0)
    run = ratchet.solve_reduced(prof, n_cells=128, t_end=200.0)
    _MEASURED_CURRENTS["sign-drive"] = run.record.final_average
    missing = {"unit", "temporal-only", "spacetime", "seebeck"} - set(_MEASURED_CURRENTS)
    ok = not missing and all(-1.01 < v < 0.0 for v in _MEASURED_CURRENTS.values())
    listing = ", ".join(f"{k}={v:.4f}" for k, v in sorted(_MEASURED_CURRENTS.items()))
    _report(8, ok, f"currents all in (-1.01, 0): {listing}")
    assert not missing, f"earlier criteria did not record currents: {missing}"
    for name, v in _MEASURED_CURRENTS.items():
        assert -1.01 < v < 0.0, name


def test_criterion_09_localization():
    """Vanishing strength at Pi_X: confinement, split, rescale equivalence."""
    t0 = time.perf_counter()
    pi_lock, pi0 = 0.7, 0.3
    sched = pi_localization_schedule(0.1, pi_lock)
    ens = run_localization_ensemble(x_of_pi(pi0), sched, 6000, 10000, base_seed=424242)
    crossings = int(np.count_nonzero(ens.final_x >= x_of_pi(pi_lock))) + int(
        ens.max_x_seen >= x_of_pi(pi_lock)
    )
    frac_lock, frac_zero, unresolved = ens.split()
    expected = pi0 / pi_lock
    se = math.sqrt(expected * (1 - expected) / 10000)

    l1s = []
    mass_above = 0.0
    for t_scaled in (0.1, 1.0, 5.0):
        l1, above = _rescale_l1(pi_lock, pi0, 512, t_scaled)
        l1s.append(l1)
        mass_above = max(mass_above, above)
    elapsed = time.perf_counter() - t0

    ok = (
        crossings == 0
        and mass_above < 1e-12
        and abs(frac_lock - expected) <= 4 * se
        and max(l1s) < 1e-3
        and elapsed < 300.0
    )
    _report(
        9,
        ok,
        f"crossings={crossings} (=0); FP mass above lock={mass_above:.1e} (<1e-12); "
        f"split {frac_lock:.4f} vs {expected:.4f} (4SE={4*se:.4f}, unresolved={unresolved}); "
        f"rescale L1 max={max(l1s):.1e} (<1e-3); {elapsed:.0f}s (<300s)",
    )
    assert crossings == 0
    assert mass_above < 1e-12
    assert abs(frac_lock - expected) <= 4 * se
    assert max(l1s) < 1e-3
    assert elapsed < 300.0


def test_criterion_10_mc_master_cross_validation():
    """Master-equation density vs a 1e5-trajectory histogram after 200 steps."""
    t0 = time.perf_counter()
    p = MeasurementParams(math.pi / 4, 0.05)
    n_steps = 200
    stats = run_ensemble(0.0, uniform_schedule(0.05), n_steps, 100000, base_seed=11)
    g = master.grid_from_point(0.0, n=8192)
    op = master.PushOperator(g.nodes, g.dx, p.alpha, p.delta)
    g = master.evolve(g, op, n_steps)

    # matched binning: edges at the midpoints of the walk's outcome-count
    # lattice x = k eps0 + (n-k) eps1 (see decisions ledger)
    eps0, eps1 = step_sizes(p)
    spacing = eps1 - eps0
    edges = np.sort(n_steps * eps1 - (np.arange(-2, 420) + 0.5) * spacing)
    h_grid = np.zeros(edges.size - 1)
    np.add.at(h_grid, np.clip(np.digitize(g.nodes, edges) - 1, 0, edges.size - 2), g.masses())
    h_mc, _ = np.histogram(stats.final_x, bins=edges)
    l1 = float(np.abs(h_grid - h_mc / stats.final_x.size).sum())
    elapsed = time.perf_counter() - t0
    ok = l1 < 0.05 and elapsed < 180.0
    _report(10, ok, f"L1(master, MC)={l1:.4f} (<0.05), {elapsed:.0f}s (<180s)")
    assert l1 < 0.05
    assert elapsed < 180.0
