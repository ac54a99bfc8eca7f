"""Continuum limit of the walk: flux-form drift-diffusion solver.

The density obeys dP/dt = -dJ/dx with J = mu P - d(D P)/dx.  Coefficients in
the three charts, for a strength form factor g:

    x chart:      mu = g^2 tanh x          D = g^2 / 2
    theta chart:  mu = -g^2 sin(4 theta)/8 D = g^2 sin^2(2 theta)/8
    Pi chart:     mu = 0                   D = 2 Pi^2 (Pi-1)^2 g^2

Spatial scheme: finite volumes with exponentially fitted face fluxes.  With
Q = D P the one-face two-point problem J = (mu/D) Q - dQ/dx has the exact
solution J = [B(-Pe) Q_i - B(Pe) Q_{i+1}]/dx, Pe = (mu/D) dx at the face and
B(z) = z/(e^z - 1), which is what each face uses (pure upwinding in the
D -> 0 limit).  Time stepping is two-stage strong-stability-preserving
Runge-Kutta with dt = safety * min(dx^2/(2 max D), dx/max|mu|).

For the x chart note mu/D = 2 tanh x independent of g, so the fitted weights
depend only on the grid; the scheme then reproduces spatially uniform steady
currents exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from . import _kernels
from .measurement import Chart

__all__ = [
    "FpCoefficients",
    "Field",
    "SolveResult",
    "CflError",
    "MassDriftError",
    "unit_form_factor",
    "coefficients_x",
    "coefficients_theta",
    "coefficients_pi",
    "change_coordinates",
    "potential",
    "point_source_density",
    "solve",
    "drift_velocity",
    "save_checkpoint",
    "load_checkpoint",
]

MASS_DRIFT_LIMIT = 1e-8
CHECKPOINT_FORMAT_VERSION = 1


class CflError(RuntimeError):
    """Requested time step exceeds the stability bound."""


class MassDriftError(RuntimeError):
    """Conservative run lost or gained more mass than the solver tolerance."""


FormFactor = Union[float, Callable[[np.ndarray, float], np.ndarray]]


def _as_fn(g: FormFactor) -> Callable[[np.ndarray, float], np.ndarray]:
    if callable(g):
        return g
    val = float(g)
    return lambda y, t: np.full_like(np.asarray(y, dtype=float), val)


def unit_form_factor(y, t):
    return np.ones_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class FpCoefficients:
    """Drift and diffusion fields of one chart; D >= 0 everywhere."""

    chart: Chart
    mu: Callable[[np.ndarray, float], np.ndarray]
    D: Callable[[np.ndarray, float], np.ndarray]
    time_dependent: bool = False


def coefficients_x(g: FormFactor = 1.0, time_dependent: bool = False) -> FpCoefficients:
    gf = _as_fn(g)
    return FpCoefficients(
        chart=Chart.X,
        mu=lambda x, t: gf(x, t) ** 2 * np.tanh(x),
        D=lambda x, t: 0.5 * gf(x, t) ** 2,
        time_dependent=time_dependent,
    )


def coefficients_theta(g: FormFactor = 1.0, time_dependent: bool = False) -> FpCoefficients:
    gf = _as_fn(g)
    return FpCoefficients(
        chart=Chart.THETA,
        mu=lambda th, t: -(gf(th, t) ** 2) * np.sin(4.0 * th) / 8.0,
        D=lambda th, t: gf(th, t) ** 2 * np.sin(2.0 * th) ** 2 / 8.0,
        time_dependent=time_dependent,
    )


def coefficients_pi(g: FormFactor = 1.0, time_dependent: bool = False) -> FpCoefficients:
    gf = _as_fn(g)
    return FpCoefficients(
        chart=Chart.PI,
        mu=lambda p, t: np.zeros_like(np.asarray(p, dtype=float)),
        D=lambda p, t: 2.0 * (p - 1.0) ** 2 * p**2 * gf(p, t) ** 2,
        time_dependent=time_dependent,
    )


def change_coordinates(
    coeffs: FpCoefficients,
    forward: Callable[[np.ndarray], np.ndarray],
    dforward: Callable[[np.ndarray], np.ndarray],
    d2forward: Callable[[np.ndarray], np.ndarray],
    inverse: Callable[[np.ndarray], np.ndarray],
    new_chart: Chart,
    probe: Optional[np.ndarray] = None,
) -> FpCoefficients:
    """Transported coefficients under y = forward(x).

    mu(y) = mu(x) y'(x) + D(x) y''(x) and D(y) = D(x) y'(x)^2, evaluated at
    x = inverse(y).  The map must be monotone; probed on `probe` and rejected
    otherwise.  The default probe stops at |x| = 15 because the derivative of
    the x->Pi map underflows to zero in float64 shortly beyond that.
    """
    if probe is None:
        probe = np.linspace(-15.0, 15.0, 2001)
    dp = dforward(probe)
    if np.any(dp == 0.0) or (np.any(dp > 0.0) and np.any(dp < 0.0)):
        raise ValueError("coordinate map must be strictly monotone on its domain")

    def mu_new(y, t):
        x = inverse(np.asarray(y, dtype=float))
        return coeffs.mu(x, t) * dforward(x) + coeffs.D(x, t) * d2forward(x)

    def d_new(y, t):
        x = inverse(np.asarray(y, dtype=float))
        return coeffs.D(x, t) * dforward(x) ** 2

    return FpCoefficients(
        chart=new_chart, mu=mu_new, D=d_new, time_dependent=coeffs.time_dependent
    )


def potential(coeffs: FpCoefficients) -> Callable[[float, float], float]:
    """V(x, t) = -integral of mu from 0 to x (adaptive quadrature)."""

    def v(x: float, t: float = 0.0) -> float:
        val, _ = integrate.quad(
            lambda u: float(coeffs.mu(np.asarray(u), t)), 0.0, x, epsabs=1e-12, epsrel=1e-12
        )
        return -val

    return v


def _log_cosh(u):
    a = np.abs(u)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def point_source_density(t: float, x, start: float):
    """Exact density of the g=1 walk started as a point mass at `start`.

    P(t, x) = (2 pi t)^{-1/2} (cosh x / cosh start) exp(-(t^2+(x-start)^2)/(2t)),
    evaluated through logs so extreme cosh ratios stay finite.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    xx = np.asarray(x, dtype=float)
    ln = (
        _log_cosh(xx)
        - _log_cosh(np.asarray(start))
        - 0.5 * math.log(2.0 * math.pi * t)
        - (t * t + (xx - start) ** 2) / (2.0 * t)
    )
    out = np.exp(ln)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Field:
    """Density snapshot on a uniform grid with its boundary condition tag."""

    chart: Chart
    nodes: np.ndarray
    dx: float
    values: np.ndarray
    time: float = 0.0
    bc: str = "zero-flux"  # zero-flux | periodic | absorbing
    face_flux: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.bc not in ("zero-flux", "periodic", "absorbing"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")

    def mass(self) -> float:
        return float(np.sum(self.values)) * self.dx


@dataclass(frozen=True)
class SolveResult:
    fields: List[Field]
    mass_initial: float
    mass_final: float
    min_density: float
    clipped_mass: float

    @property
    def final(self) -> Field:
        return self.fields[-1]

    @property
    def mass_drift(self) -> float:
        return abs(self.mass_final - self.mass_initial)


def _bernoulli(z):
    """B(z) = z/(e^z - 1), stable for all float z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-8
    out[small] = 1.0 - 0.5 * z[small]
    zb = np.clip(z[~small], -700.0, 700.0)
    out[~small] = zb / np.expm1(zb)
    return out


def face_arrays(
    nodes: np.ndarray, dx: float, coeffs: FpCoefficients, t: float, bc: str
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-face coefficients (a_lo, a_hi): J_f = a_lo P_left - a_hi P_right."""
    n = nodes.size
    if bc == "periodic":
        faces = nodes - 0.5 * dx
        left = np.roll(np.arange(n), 1)
        right = np.arange(n)
    else:
        faces = np.concatenate([nodes - 0.5 * dx, [nodes[-1] + 0.5 * dx]])
        left = np.concatenate([[0], np.arange(n)])  # dummy at f=0
        right = np.concatenate([np.arange(n), [n - 1]])  # dummy at f=n
    mu_f = np.asarray(coeffs.mu(faces, t), dtype=float)
    d_f = np.asarray(coeffs.D(faces, t), dtype=float)
    d_cell = np.asarray(coeffs.D(nodes, t), dtype=float)
    if np.any(d_cell < 0.0) or np.any(d_f < 0.0):
        raise ValueError("diffusion coefficient must be nonnegative")
    a_lo = np.empty(faces.size)
    a_hi = np.empty(faces.size)
    diffusive = d_f > 0.0
    pe = np.zeros(faces.size)
    pe[diffusive] = mu_f[diffusive] / d_f[diffusive] * dx
    a_lo[diffusive] = (_bernoulli(-pe[diffusive]) * d_cell[left][diffusive]) / dx
    a_hi[diffusive] = (_bernoulli(pe[diffusive]) * d_cell[right][diffusive]) / dx
    adv = ~diffusive
    a_lo[adv] = np.maximum(mu_f[adv], 0.0)
    a_hi[adv] = np.maximum(-mu_f[adv], 0.0)
    if bc == "zero-flux":
        a_lo[0] = a_hi[0] = a_lo[-1] = a_hi[-1] = 0.0
    elif bc == "absorbing":
        a_lo[0] = 0.0  # ghost density zero outside
        a_hi[-1] = 0.0
    return a_lo, a_hi


def stable_dt(nodes, dx, coeffs: FpCoefficients, t: float, safety: float = 0.4) -> float:
    max_d = float(np.max(coeffs.D(nodes, t)))
    max_mu = float(np.max(np.abs(coeffs.mu(nodes, t))))
    bounds = []
    if max_d > 0.0:
        bounds.append(dx * dx / (2.0 * max_d))
    if max_mu > 0.0:
        bounds.append(dx / max_mu)
    if not bounds:
        raise ValueError("coefficients vanish identically; nothing to evolve")
    return safety * min(bounds)


def _absorbing_sweep(p, a_lo, a_hi, dx, dt, n_steps):
    """Outflow boundaries keep the kernel out of the hot path; python loop."""

    def rhs(q):
        j = np.empty(q.size + 1)
        j[0] = -a_hi[0] * q[0]
        j[-1] = a_lo[-1] * q[-1]
        j[1:-1] = a_lo[1:-1] * q[:-1] - a_hi[1:-1] * q[1:]
        return -np.diff(j) / dx

    for _ in range(n_steps):
        stage = p + dt * rhs(p)
        stage += dt * rhs(stage)
        p[:] = 0.5 * (p + stage)
    return p


def solve(
    initial: Field,
    coeffs: FpCoefficients,
    t_end: float,
    dt: Optional[float] = None,
    safety: float = 0.4,
    snapshot_times: Sequence[float] = (),
    mass_drift_limit: Optional[float] = MASS_DRIFT_LIMIT,
) -> SolveResult:
    """Evolve `initial` to t_end; returns snapshots plus the final field.

    dt defaults to the stability bound; an explicit dt above that bound
    raises CflError.  Conservative boundary conditions are audited against
    `mass_drift_limit` (relative).
    """
    if initial.chart is not coeffs.chart:
        raise ValueError("field and coefficients use different charts")
    nodes, dx, bc = initial.nodes, initial.dx, initial.bc
    t = initial.time
    if t_end < t:
        raise ValueError("t_end precedes the initial time")
    dt_max = stable_dt(nodes, dx, coeffs, t, safety)
    if dt is not None and dt > dt_max * (1.0 + 1e-12):
        raise CflError(f"dt={dt:.3e} exceeds the stability bound {dt_max:.3e}")
    dt_use = dt if dt is not None else dt_max

    times = sorted({float(s) for s in snapshot_times if t < float(s) <= t_end} | {t_end})
    p = initial.values.astype(float).copy()
    mass0 = float(np.sum(p)) * dx
    periodic = bc == "periodic"
    min_p = float(np.min(p))
    clipped = 0.0
    fields: List[Field] = []
    rebuild_each_step = coeffs.time_dependent

    for target in times:
        span = target - t
        n_steps = max(1, int(math.ceil(span / dt_use - 1e-12)))
        dt_seg = span / n_steps
        if bc == "absorbing":
            a_lo, a_hi = face_arrays(nodes, dx, coeffs, t, bc)
            _absorbing_sweep(p, a_lo, a_hi, dx, dt_seg, n_steps)
        elif rebuild_each_step:
            for k in range(n_steps):
                a_lo, a_hi = face_arrays(nodes, dx, coeffs, t + k * dt_seg, bc)
                _, m, c = _kernels.fv_sweep(p, a_lo, a_hi, dx, dt_seg, 1, periodic)
                min_p = min(min_p, m)
                clipped += c
        else:
            a_lo, a_hi = face_arrays(nodes, dx, coeffs, t, bc)
            _, m, c = _kernels.fv_sweep(p, a_lo, a_hi, dx, dt_seg, n_steps, periodic)
            min_p = min(min_p, m)
            clipped += c
        t = target
        a_lo, a_hi = face_arrays(nodes, dx, coeffs, t, bc)
        flux = np.asarray(_kernels.face_flux(p, a_lo, a_hi, periodic))
        fields.append(replace(initial, values=p.copy(), time=t, face_flux=flux))

    mass1 = float(np.sum(p)) * dx
    if bc in ("zero-flux", "periodic") and mass_drift_limit is not None:
        if abs(mass1 - mass0) > mass_drift_limit * max(mass0, 1e-300):
            raise MassDriftError(
                f"mass drifted by {abs(mass1 - mass0):.3e} (limit {mass_drift_limit:.1e})"
            )
    return SolveResult(
        fields=fields,
        mass_initial=mass0,
        mass_final=mass1,
        min_density=min_p,
        clipped_mass=clipped,
    )


def drift_velocity(f: Field) -> float:
    """Space-integrated flux of a snapshot (the ensemble drift velocity)."""
    if f.face_flux is None:
        raise ValueError("field carries no flux; take it from a solve() snapshot")
    if f.bc == "periodic":
        return float(np.sum(f.face_flux)) * f.dx
    return float(np.sum(f.face_flux[1:-1])) * f.dx


def save_checkpoint(path, f: Field) -> None:
    np.savez(
        path,
        format_version=CHECKPOINT_FORMAT_VERSION,
        chart=f.chart.value,
        nodes=f.nodes,
        dx=f.dx,
        values=f.values,
        time=f.time,
        bc=f.bc,
    )


def load_checkpoint(path) -> Field:
    data = np.load(path, allow_pickle=False)
    version = int(data["format_version"])
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    return Field(
        chart=Chart(str(data["chart"])),
        nodes=data["nodes"],
        dx=float(data["dx"]),
        values=data["values"],
        time=float(data["time"]),
        bc=str(data["bc"]),
    )
