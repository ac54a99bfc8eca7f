"""Grid master equation: pushes, conservation, cross-validation."""

import math

import numpy as np
import pytest

from zenowalk import master
from zenowalk.measurement import MeasurementParams, pi_of_x, step_sizes, x_of_pi
from zenowalk.schedules import uniform_schedule
from zenowalk.trajectories import run_ensemble


def spike_grid(x0=0.0, n=4001, lo=-25.0, hi=25.0):
    return master.grid_from_point(x0, lo, hi, n)


def test_spike_grid_is_normalized_point():
    g = spike_grid()
    assert g.mass() == pytest.approx(1.0, abs=1e-13)
    assert master.pi_average(g) == pytest.approx(0.5, abs=1e-12)
    assert np.count_nonzero(g.values) <= 2


def test_zero_delta_step_is_identity():
    g = spike_grid()
    out = master.propagate_const(g, MeasurementParams(0.9, 0.0))
    assert np.max(np.abs(out.values - g.values)) < 1e-15


def test_one_step_spike_splits_into_outcome_masses():
    p = MeasurementParams(math.pi / 4, 0.05)
    g = spike_grid()
    out = master.propagate_const(g, p)
    eps0, eps1 = step_sizes(p)
    m = out.masses()
    # mass within one cell of each landing point equals the outcome probability
    near0 = np.abs(out.nodes - eps0) < 2 * out.dx
    near1 = np.abs(out.nodes - eps1) < 2 * out.dx
    ca = math.cos(p.alpha) ** 2
    cd = math.cos(p.alpha + p.delta) ** 2
    p0 = 0.5 * (ca + cd)
    assert float(m[near0].sum()) == pytest.approx(p0, abs=1e-12)
    assert float(m[near1].sum()) == pytest.approx(1.0 - p0, abs=1e-12)


def test_mass_and_pi_conserved_over_500_steps():
    p = MeasurementParams(math.pi / 4, 0.05)
    g = master.grid_from_point(0.0, n=8192)
    op = master.PushOperator(g.nodes, g.dx, p.alpha, p.delta)
    audit = master.conservation_audit(g)
    worst_mass = worst_pi = 0.0
    for _ in range(500):
        g = op.apply(g)
        nxt = master.conservation_audit(g)
        worst_mass = max(worst_mass, abs(nxt["mass"] - audit["mass"]))
        worst_pi = max(worst_pi, abs(nxt["pi"] - audit["pi"]))
        audit = nxt
    assert worst_mass < 1e-12
    assert worst_pi < 1e-9


def test_pi_average_of_evolved_biased_start():
    x0 = x_of_pi(0.3)
    g = master.grid_from_point(x0, n=8192)
    op = master.PushOperator(g.nodes, g.dx, math.pi / 4, 0.05)
    g = master.evolve(g, op, 500)
    assert master.pi_average(g) + sum(g.absorbed_pi) == pytest.approx(0.3, abs=1e-9)


def test_conditional_matches_const_for_constant_schedule():
    p = MeasurementParams(0.6, 0.04)
    g = spike_grid(0.2)
    a = master.propagate_const(g, p)
    b = master.propagate_conditional(
        g, lambda x: np.full_like(x, 0.6), lambda x: np.full_like(x, 0.04)
    )
    assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_conditional_conserves_pi():
    g = master.grid_from_point(0.0, n=4096)
    op = master.PushOperator(
        g.nodes, g.dx, math.pi / 4, 0.05 * (1.0 + 0.5 * np.sin(g.nodes))
    )
    before = master.conservation_audit(g)
    for _ in range(100):
        g = op.apply(g)
    after = master.conservation_audit(g)
    assert abs(after["pi"] - before["pi"]) < 1e-9
    assert abs(after["mass"] - before["mass"]) < 1e-11


def test_conditional_strength_zero_blocks_crossing():
    # delta(x) vanishing at X: no mass may appear at or above X
    X = 1.5
    n = 3000
    lo, hi = -25.0, X  # grid ends exactly at the blocking point
    g = master.grid_from_point(0.0, lo, hi, n)
    pi_lock = pi_of_x(X)

    def delta_fn(x):
        pi = pi_of_x(x)
        return 0.1 * (pi_lock - pi) / (1.0 - pi)

    op = master.PushOperator(g.nodes, g.dx, math.pi / 4, delta_fn(g.nodes))
    for _ in range(200):
        g = op.apply(g, boundary_limit=None)
    # the top absorber collects mass approaching X from below; nothing crosses
    assert g.mass() + g.absorbed_mass[0] + g.absorbed_mass[1] == pytest.approx(1.0, abs=1e-12)
    assert g.absorbed_mass[0] == 0.0
    assert master.conservation_audit(g)["pi"] == pytest.approx(0.5, abs=1e-9)


def test_boundary_overflow_raises():
    g = master.grid_from_point(0.0, -0.5, 0.5, 64)  # absurdly narrow grid
    p = MeasurementParams(math.pi / 4, 0.3)
    with pytest.raises(master.MassOverflowError):
        gg = g
        for _ in range(50):
            gg = master.propagate_const(gg, p)


def exact_lattice_distribution(p: MeasurementParams, n_steps: int):
    """Walk on the outcome-count lattice: exact chain over k = #zeros."""
    eps0, eps1 = step_sizes(p)
    ca, sa, cd, sd = p.trig()
    pk = np.array([1.0])
    for m in range(n_steps):
        xk = np.arange(m + 1) * eps0 + (m - np.arange(m + 1)) * eps1
        pi = 1.0 / (1.0 + np.exp(-2.0 * xk))
        p0 = pi * cd + (1.0 - pi) * ca
        new = np.zeros(m + 2)
        new[1:] += pk * p0
        new[:-1] += pk * (1.0 - p0)
        pk = new
    xk = np.arange(n_steps + 1) * eps0 + (n_steps - np.arange(n_steps + 1)) * eps1
    return xk, pk


def lattice_bins(p: MeasurementParams, n_steps: int, n_bins: int = 400):
    """Bin edges at lattice midpoints (walk support is the k-lattice)."""
    eps0, eps1 = step_sizes(p)
    spacing = eps1 - eps0
    return n_steps * eps1 - (np.arange(-2, n_bins) + 0.5) * spacing


def test_master_matches_exact_lattice_chain():
    p = MeasurementParams(math.pi / 4, 0.05)
    n_steps = 120
    g = master.grid_from_point(0.0, n=16384)
    op = master.PushOperator(g.nodes, g.dx, p.alpha, p.delta)
    g = master.evolve(g, op, n_steps)
    xk, pk = exact_lattice_distribution(p, n_steps)
    edges = np.sort(lattice_bins(p, n_steps))
    h_grid = np.zeros(edges.size - 1)
    np.add.at(h_grid, np.clip(np.digitize(g.nodes, edges) - 1, 0, edges.size - 2), g.masses())
    h_exact = np.zeros(edges.size - 1)
    np.add.at(h_exact, np.clip(np.digitize(xk, edges) - 1, 0, edges.size - 2), pk)
    assert np.abs(h_grid - h_exact).sum() < 0.01


def test_master_matches_monte_carlo_histogram():
    # small version of the acceptance cross-validation
    p = MeasurementParams(math.pi / 4, 0.05)
    n_steps = 120
    stats = run_ensemble(0.0, uniform_schedule(0.05), n_steps, 20000, base_seed=11)
    g = master.grid_from_point(0.0, n=16384)
    op = master.PushOperator(g.nodes, g.dx, p.alpha, p.delta)
    g = master.evolve(g, op, n_steps)
    edges = np.sort(lattice_bins(p, n_steps))
    h_grid = np.zeros(edges.size - 1)
    np.add.at(h_grid, np.clip(np.digitize(g.nodes, edges) - 1, 0, edges.size - 2), g.masses())
    h_mc, _ = np.histogram(stats.final_x, bins=edges)
    assert np.abs(h_grid - h_mc / stats.final_x.size).sum() < 0.05


def test_pi_average_examples():
    g = spike_grid(1.7)
    assert master.pi_average(g) == pytest.approx(pi_of_x(1.7), abs=1e-10)
    # symmetric density about 0 has <Pi> = 1/2
    nodes, dx = master.uniform_grid(-10, 10, 2000)
    vals = np.exp(-(nodes**2))
    vals /= vals.sum() * dx
    sym = master.PdfGrid(g.chart, nodes, dx, vals)
    assert master.pi_average(sym) == pytest.approx(0.5, abs=1e-12)
