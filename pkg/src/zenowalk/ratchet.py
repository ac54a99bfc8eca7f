"""Reduced periodic dynamics far from the origin and its transport numbers.

Far to the left of the origin the drift saturates (mu = -g^2, D = g^2/2 in
the shifted coordinate), so for a space-periodic strength the density can be
folded onto one period: the reduced density and flux obey the same flux-form
equation with periodic boundaries and admit a steady state.  The
space-averaged current int J dx then measures transport: it is exactly -1
for g = 1, can only be weakened (never reversed) by modulating g with
<g^2> = 1, and for static profiles has the closed form -1/<g^-2>.

Note mu/D = -2 identically here, so the exponentially fitted face weights
are the same at every face and the scheme reproduces steady currents at
quadrature accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import _kernels
from .fokker_planck import Field, FpCoefficients, MassDriftError
from .measurement import Chart
from .profiles import ProfileError, StrengthProfile

__all__ = [
    "CurrentRecord",
    "ReducedRun",
    "asymptotic_coefficients",
    "default_initial",
    "solve_reduced",
    "moving_average",
    "seebeck_steady_current",
]


def asymptotic_coefficients(profile: StrengthProfile, side: str = "left") -> FpCoefficients:
    """Drift/diffusion in the shifted coordinate on the chosen side.

    mu = -g^2 approaching |0> (left), +g^2 approaching |1> (right); both
    sides share D = g^2/2.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    sign = -1.0 if side == "left" else 1.0
    return FpCoefficients(
        chart=Chart.X,
        mu=lambda x, t: sign * profile(x, t) ** 2,
        D=lambda x, t: 0.5 * profile(x, t) ** 2,
        time_dependent=not profile.is_static,
    )


@dataclass(frozen=True)
class CurrentRecord:
    """Sampled space-averaged current and its running time average."""

    times: np.ndarray
    instantaneous: np.ndarray
    running_average: np.ndarray

    @classmethod
    def from_samples(cls, times, currents) -> "CurrentRecord":
        times = np.asarray(times, dtype=float)
        cur = np.asarray(currents, dtype=float)
        run = np.empty_like(cur)
        if cur.size:
            run[0] = cur[0]
            if cur.size > 1:
                seg = 0.5 * (cur[1:] + cur[:-1]) * np.diff(times)
                run[1:] = np.cumsum(seg) / times[1:]
        return cls(times, cur, run)

    @property
    def final_average(self) -> float:
        return float(self.running_average[-1])


def moving_average(rec: CurrentRecord, t: float) -> float:
    """(1/t) of the trapezoid integral of the recorded current over [0, t]."""
    if t < rec.times[0] or t > rec.times[-1]:
        raise ValueError("t outside the recorded range")
    if t <= rec.times[0]:
        return float(rec.instantaneous[0])
    k = int(np.searchsorted(rec.times, t, side="right")) - 1
    partial = np.trapezoid(rec.instantaneous[: k + 1], rec.times[: k + 1])
    if t > rec.times[k]:
        c_t = np.interp(t, rec.times, rec.instantaneous)
        partial += 0.5 * (rec.instantaneous[k] + c_t) * (t - rec.times[k])
    return float(partial / t)


@dataclass(frozen=True)
class ReducedRun:
    fields: List[Field]
    record: CurrentRecord
    mass_drift: float
    min_density: float

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def converged(self, tail: float = 0.2, tol: float = 1e-3) -> bool:
        """Running average moved less than tol over the last `tail` of the run."""
        t_end = self.record.times[-1]
        early = moving_average(self.record, (1.0 - tail) * t_end)
        return abs(self.record.final_average - early) < tol


def default_initial(n_cells: int, length: float) -> Field:
    """The standard start: a narrow Gaussian exp(-x^2/0.1), wrapped."""
    dx = length / n_cells
    nodes = -0.5 * length + (np.arange(n_cells) + 0.5) * dx
    vals = np.zeros(n_cells)
    for j in (-1, 0, 1):
        vals += np.exp(-((nodes + j * length) ** 2) / 0.1)
    vals /= np.sum(vals) * dx
    return Field(chart=Chart.X, nodes=nodes, dx=dx, values=vals, time=0.0, bc="periodic")


def _phase_faces(profile, coeffs, nodes, dx, t_probe):
    from .fokker_planck import face_arrays, stable_dt

    a_lo, a_hi = face_arrays(nodes, dx, coeffs, t_probe, "periodic")
    dt = stable_dt(nodes, dx, coeffs, t_probe, safety=0.4)
    return a_lo, a_hi, dt


def solve_reduced(
    profile: StrengthProfile,
    n_cells: int = 128,
    t_end: float = 100.0,
    side: str = "left",
    initial: Optional[Field] = None,
    record_dt: float = 0.02,
    snapshot_times: Sequence[float] = (),
    mass_drift_limit: float = 1e-8,
) -> ReducedRun:
    """Evolve the reduced density to t_end, sampling the current.

    Steps are aligned to the switching instants (multiples of pi) so no step
    straddles a discontinuity of f(t); within a phase the face coefficients
    are frozen (f is piecewise constant) and the sweep runs in the kernel
    backend.
    """
    coeffs = asymptotic_coefficients(profile, side)
    f0 = initial if initial is not None else default_initial(n_cells, profile.length)
    if f0.bc != "periodic":
        raise ValueError("reduced runs require a periodic field")
    nodes, dx = f0.nodes, f0.dx
    p = f0.values.astype(float).copy()
    mass0 = float(np.sum(p)) * dx

    # phase boundaries: switching instants, snapshots, t_end
    cuts = {float(t_end)}
    cuts.update(float(s) for s in snapshot_times if 0.0 < float(s) <= t_end)
    if not profile.is_static:
        k = 1
        while k * math.pi < t_end:
            cuts.add(k * math.pi)
            k += 1
    cuts = sorted(cuts)
    snapshots = sorted(float(s) for s in snapshot_times if 0.0 < float(s) <= t_end)

    times_all: List[np.ndarray] = []
    curs_all: List[np.ndarray] = []
    fields: List[Field] = []
    min_p = float(np.min(p))
    t = 0.0
    for cut in cuts:
        span = cut - t
        if span <= 0.0:
            continue
        a_lo, a_hi, dt_max = _phase_faces(profile, coeffs, nodes, dx, t + 0.5 * span)
        n_steps = max(1, int(math.ceil(span / dt_max - 1e-12)))
        dt = span / n_steps
        stride = max(1, int(round(record_dt / dt)))
        buf = np.empty(n_steps // stride + 1)
        written, m, _ = _kernels.fv_sweep(p, a_lo, a_hi, dx, dt, n_steps, True, buf, stride)
        times_all.append(t + np.arange(written) * (stride * dt))
        curs_all.append(buf[:written].copy())
        min_p = min(min_p, m)
        t = cut
        if (snapshots and abs(t - snapshots[0]) < 1e-12) or t == cuts[-1]:
            flux = np.asarray(_kernels.face_flux(p, a_lo, a_hi, True))
            fields.append(Field(Chart.X, nodes, dx, p.copy(), time=t, bc="periodic", face_flux=flux))
            if snapshots and abs(t - snapshots[0]) < 1e-12:
                snapshots.pop(0)

    # close the record at t_end with the final instantaneous current
    a_lo, a_hi, _ = _phase_faces(profile, coeffs, nodes, dx, t_end + 1e-12)
    final_cur = float(np.sum(np.asarray(_kernels.face_flux(p, a_lo, a_hi, True)))) * dx
    times = np.concatenate(times_all + [np.array([t_end])])
    curs = np.concatenate(curs_all + [np.array([final_cur])])

    mass1 = float(np.sum(p)) * dx
    drift = abs(mass1 - mass0)
    if drift > mass_drift_limit * mass0:
        raise MassDriftError(f"reduced run mass drifted by {drift:.3e}")
    return ReducedRun(
        fields=fields,
        record=CurrentRecord.from_samples(times, curs),
        mass_drift=drift,
        min_density=min_p,
    )


def seebeck_steady_current(profile: StrengthProfile) -> float:
    """Steady current of a static positive profile: -1/<g^-2>.

    In steady state the flux is constant and periodicity forces g^2 P to be
    constant, so P is proportional to g^-2 and the space-integrated flux is
    -L / int g^-2 dx (verified against the time-marched solver in the test
    suite before being relied on).
    """
    if not profile.is_static:
        raise ProfileError("Seebeck closed form requires a static profile")
    return -1.0 / profile.mean_inverse_sq()
