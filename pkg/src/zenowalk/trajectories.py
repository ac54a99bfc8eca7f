"""Monte Carlo engine for weak-measurement random walks.

Every trajectory owns a counter-based random stream (see `rng`), so ensembles
are reproducible, order-independent, and mergeable by trajectory index.  The
inner stepping loops run in the active kernel backend; trajectories past
|x| > X_MAX are treated as absorbed in the nearby basis state (Pi within
2e-22 of 0 or 1) and frozen, while still consuming one uniform per step.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, rng
from .measurement import MeasurementParams, pi_of_x, step_sizes
from .schedules import Schedule

__all__ = [
    "X_MAX",
    "TrajectoryRecord",
    "EnsembleStats",
    "LocalizationEnsemble",
    "run_trajectory",
    "run_ensemble",
    "empirical_pi_mean",
    "run_localization_ensemble",
]

X_MAX = 25.0
_CHUNK = 64
# sustained-arrival criterion for the vanishing-strength lock point
NEIGHBORHOOD_BAND = 1e-3
NEIGHBORHOOD_STEPS = 1000


@dataclass(frozen=True)
class TrajectoryRecord:
    """One walk: positions x[0..n], times t[0..n], outcomes of each step."""

    seed: int
    schedule: Schedule
    x: np.ndarray
    t: np.ndarray
    outcomes: np.ndarray

    def entries(self):
        """(n, t_n, x_n, outcome leading to x_n); outcome None at n=0."""
        yield 0, self.t[0], self.x[0], None
        for n in range(1, self.x.size):
            yield n, self.t[n], self.x[n], int(self.outcomes[n - 1])

    @property
    def n_steps(self) -> int:
        return self.outcomes.size


@dataclass(frozen=True)
class EnsembleStats:
    """Checkpointed summary of an ensemble of trajectories."""

    n_trajectories: int
    checkpoints: Tuple[int, ...]
    bin_edges: np.ndarray
    histograms: Dict[int, np.ndarray]
    pi_mean: Dict[int, float]
    pi_stderr: Dict[int, float]
    final_x: np.ndarray


@dataclass(frozen=True)
class LocalizationEnsemble:
    """Terminal statistics of walks under a strength lock at pi_lock."""

    pi_lock: float
    final_x: np.ndarray
    reached_lock: np.ndarray
    frozen: np.ndarray
    max_x_seen: float

    def committed_to_zero(self, commit_x: float = -10.0) -> np.ndarray:
        return (self.final_x < commit_x) & ~self.reached_lock

    def split(self, commit_x: float = -10.0):
        """(fraction at lock, fraction at |0>, unresolved count)."""
        n = self.final_x.size
        to_lock = int(np.count_nonzero(self.reached_lock))
        to_zero = int(np.count_nonzero(self.committed_to_zero(commit_x)))
        return to_lock / n, to_zero / n, n - to_lock - to_zero


def _schedule_kind(sched: Schedule) -> str:
    if sched.tau.name != "uniform" or dict(sched.tau.params).get("value", 1.0) != 1.0:
        return "generic"
    if sched.strength.name == "uniform" and dict(sched.strength.params).get("value", 1.0) == 1.0:
        return "const"
    if sched.strength.name == "pi_localization":
        return "locg"
    return "generic"


def _const_kernel_args(sched: Schedule):
    p = MeasurementParams(sched.alpha, sched.delta_scale)
    ca, sa, cd, sd = p.trig()
    eps0, eps1 = (0.0, 0.0) if sched.delta_scale == 0.0 else step_sizes(p)
    # p0 = (ca+cd)/2 + tanh(x)(cd-ca)/2
    return 0.5 * (ca + cd), 0.5 * (cd - ca), eps0, eps1


def _generic_step(x, frozen, u_col, n_index, sched: Schedule, g_eval):
    """One step of the registry-evaluated fallback path (numpy)."""
    ca = math.cos(sched.alpha) ** 2
    sa = math.sin(sched.alpha) ** 2
    dn = sched.delta_scale * g_eval(n_index, x)
    cd = np.cos(sched.alpha + dn) ** 2
    sd = np.sin(sched.alpha + dn) ** 2
    pi = pi_of_x(x)
    p0 = pi * cd + (1.0 - pi) * ca
    oc = (u_col >= p0).astype(np.int8)
    step = np.where(oc == 1, 0.5 * np.log(sd / sa), 0.5 * np.log(cd / ca))
    active = frozen == 0
    x[active] += step[active]
    oc[~active] = -1
    frozen[np.abs(x) > X_MAX] = 1
    return oc


class _Walker:
    """Lockstep driver advancing a block of trajectories chunk by chunk."""

    def __init__(
        self, x0: float, sched: Schedule, seeds: Sequence[int], record: bool, kmod=None
    ):
        self.sched = sched
        self.kind = _schedule_kind(sched)
        # the walk kernel is fixed by the caller (full-ensemble width), so
        # worker splits cannot change which implementation runs
        self.kmod = kmod if kmod is not None else _kernels.walk_backend(len(seeds))
        n = len(seeds)
        self.x = np.full(n, float(x0))
        self.frozen = np.zeros(n, dtype=np.uint8)
        self.gens = [rng.stream(s) for s in seeds]
        self.u = np.empty((n, _CHUNK))
        self.record = record
        self.rec_x: list = []
        self.rec_oc: list = []
        self.max_x = float(x0)
        self.counters = np.zeros(n, dtype=np.int64)
        self.latched = np.zeros(n, dtype=np.uint8)
        if self.kind == "const":
            self.kargs = _const_kernel_args(sched)
        elif self.kind == "locg":
            self.pi_lock = dict(sched.strength.params)["pi_lock"]
        else:
            self.g_eval = sched.strength.evaluator()
        self.n_done = 0

    def advance(self, n_steps: int):
        while n_steps > 0:
            size = min(_CHUNK, n_steps)
            # kernels need a C-contiguous (n, size) block
            u = self.u if size == _CHUNK else np.empty((self.x.size, size))
            for i, g in enumerate(self.gens):
                g.random(out=u[i])
            x_out = np.empty((size, self.x.size)) if self.record else None
            oc_out = np.empty((size, self.x.size), dtype=np.int8) if self.record else None
            if self.kind == "const":
                self.kmod.walk_const(
                    self.x, self.frozen, u, *self.kargs, X_MAX, x_out, oc_out
                )
            elif self.kind == "locg":
                m = self.kmod.walk_localized(
                    self.x,
                    self.frozen,
                    u,
                    self.sched.alpha,
                    self.sched.delta_scale,
                    self.pi_lock,
                    NEIGHBORHOOD_BAND,
                    NEIGHBORHOOD_STEPS,
                    self.counters,
                    self.latched,
                    X_MAX,
                    x_out,
                    oc_out,
                )
                if m > self.max_x:
                    self.max_x = m
            else:
                for k in range(size):
                    oc = _generic_step(
                        self.x, self.frozen, u[:, k], self.n_done + k, self.sched, self.g_eval
                    )
                    if x_out is not None:
                        x_out[k] = self.x
                        oc_out[k] = oc
                m = float(np.max(self.x))
                if m > self.max_x:
                    self.max_x = m
            if self.record:
                self.rec_x.append(x_out)
                self.rec_oc.append(oc_out)
            self.n_done += size
            n_steps -= size


def run_trajectory(x0: float, sched: Schedule, n_steps: int, seed: int) -> TrajectoryRecord:
    """Simulate one walk of n_steps from x0, fully recorded.

    Bit-reproducible for a fixed (inputs, seed, backend); an ensemble member
    with the same derived seed produces the identical path.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if not math.isfinite(x0):
        raise ValueError("x0 must be finite")
    walker = _Walker(x0, sched, [seed], record=True)
    walker.advance(n_steps)
    xs = np.empty(n_steps + 1)
    xs[0] = x0
    ocs = np.empty(n_steps, dtype=np.int8)
    if n_steps:
        xs[1:] = np.concatenate(walker.rec_x)[:, 0]
        ocs[:] = np.concatenate(walker.rec_oc)[:, 0]
    ts = np.arange(n_steps + 1, dtype=float) * sched.step_duration()
    return TrajectoryRecord(seed=seed, schedule=sched, x=xs, t=ts, outcomes=ocs)


def _run_block(x0, sched, seeds, checkpoints, n_steps, kmod=None):
    walker = _Walker(x0, sched, seeds, record=False, kmod=kmod)
    snaps = {}
    prev = 0
    for cp in checkpoints:
        walker.advance(cp - prev)
        snaps[cp] = walker.x.copy()
        prev = cp
    walker.advance(n_steps - prev)
    return snaps, walker.x.copy()


def run_ensemble(
    x0: float,
    sched: Schedule,
    n_steps: int,
    n_traj: int,
    checkpoints: Sequence[int] = (),
    base_seed: int = 0,
    bin_edges: Optional[np.ndarray] = None,
    workers: int = 1,
) -> EnsembleStats:
    """Simulate n_traj independent walks and summarize them at checkpoints.

    Per-trajectory seeds derive deterministically from base_seed; results are
    identical for any `workers` because blocks merge by trajectory index.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    cps = sorted(set(int(c) for c in checkpoints))
    if any(c < 0 or c > n_steps for c in cps):
        raise ValueError("checkpoints must lie in [0, n_steps]")
    if bin_edges is None:
        bin_edges = np.linspace(-X_MAX - 1.0, X_MAX + 1.0, 209)
    seeds = [rng.trajectory_seed(base_seed, i) for i in range(n_traj)]
    kmod = _kernels.walk_backend(n_traj)
    if workers <= 1 or n_traj < 2 * workers:
        blocks = [(seeds, _run_block(x0, sched, seeds, cps, n_steps, kmod))]
    else:
        splits = np.array_split(np.arange(n_traj), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(_run_block, x0, sched, [seeds[i] for i in idx], cps, n_steps, kmod)
                for idx in splits
            ]
            blocks = [([seeds[i] for i in idx], f.result()) for idx, f in zip(splits, futs)]
    snap_at = {cp: np.concatenate([b[1][0][cp] for b in blocks]) for cp in cps}
    final_x = np.concatenate([b[1][1] for b in blocks])

    hists, pi_mean, pi_err = {}, {}, {}
    for cp in cps:
        xs = snap_at[cp]
        counts, _ = np.histogram(np.clip(xs, bin_edges[0], bin_edges[-1]), bins=bin_edges)
        hists[cp] = counts / n_traj
        pis = pi_of_x(xs)
        pi_mean[cp] = float(np.mean(pis))
        pi_err[cp] = float(np.std(pis, ddof=1) / math.sqrt(n_traj)) if n_traj > 1 else 0.0
    return EnsembleStats(
        n_trajectories=n_traj,
        checkpoints=tuple(cps),
        bin_edges=bin_edges,
        histograms=hists,
        pi_mean=pi_mean,
        pi_stderr=pi_err,
        final_x=final_x,
    )


def empirical_pi_mean(stats: EnsembleStats, checkpoint: int):
    """(mean, stderr) of Pi over the ensemble at a recorded checkpoint."""
    if checkpoint not in stats.pi_mean:
        raise KeyError(f"checkpoint {checkpoint} was not recorded")
    return stats.pi_mean[checkpoint], stats.pi_stderr[checkpoint]


def run_localization_ensemble(
    x0: float,
    sched: Schedule,
    n_steps: int,
    n_traj: int,
    base_seed: int = 0,
) -> LocalizationEnsemble:
    """Ensemble run under a pi_localization schedule with arrival latching."""
    if sched.strength.name != "pi_localization":
        raise ValueError("schedule must use the pi_localization profile")
    seeds = [rng.trajectory_seed(base_seed, i) for i in range(n_traj)]
    walker = _Walker(x0, sched, seeds, record=False)
    walker.advance(n_steps)
    return LocalizationEnsemble(
        pi_lock=dict(sched.strength.params)["pi_lock"],
        final_x=walker.x.copy(),
        reached_lock=walker.latched.astype(bool),
        frozen=walker.frozen.astype(bool),
        max_x_seen=walker.max_x,
    )
