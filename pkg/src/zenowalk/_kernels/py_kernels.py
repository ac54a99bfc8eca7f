"""Pure-numpy reference kernels (fallback when the compiled core is absent).

Semantics must match `_core.pyx` exactly; the compiled twin is only a faster
rendering of the same loops.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def walk_const(x, frozen, u, p_base, p_slope, eps0, eps1, x_max, x_out=None, oc_out=None):
    """Advance walkers through u.shape[1] constant-parameter steps.

    p0(x) = p_base + p_slope*tanh(x); outcome 1 is drawn when u >= p0.
    Walkers freeze once |x| > x_max but keep consuming uniforms so records
    do not depend on freezing history.
    """
    n_steps = u.shape[1]
    for k in range(n_steps):
        p0 = p_base + p_slope * np.tanh(x)
        oc = (u[:, k] >= p0).astype(np.int8)
        step = np.where(oc == 1, eps1, eps0)
        active = frozen == 0
        x[active] += step[active]
        oc[~active] = -1
        frozen[np.abs(x) > x_max] = 1
        if x_out is not None:
            x_out[k] = x
        if oc_out is not None:
            oc_out[k] = oc


def walk_localized(
    x,
    frozen,
    u,
    alpha,
    delta_scale,
    pi_lock,
    band,
    sustain,
    counters,
    latched,
    x_max,
    x_out=None,
    oc_out=None,
):
    """Walk with strength vanishing at Pi = pi_lock (both sides of it).

    g = (pi_lock - Pi)/(1 - Pi) below the lock point and (Pi - pi_lock)/Pi
    above it; per-step delta is delta_scale*g.  `counters`/`latched` implement
    the sustained-neighborhood arrival criterion: a walker latches once
    |Pi - pi_lock| < band for `sustain` consecutive post-step positions.

    Returns the maximum x reached by any walker during the call.
    """
    ca = np.cos(alpha) ** 2
    sa = np.sin(alpha) ** 2
    n_steps = u.shape[1]
    max_x = float(np.max(x)) if x.size else -np.inf
    pi = 1.0 / (1.0 + np.exp(-2.0 * x))
    for k in range(n_steps):
        g = np.where(pi < pi_lock, (pi_lock - pi) / (1.0 - pi), (pi - pi_lock) / pi)
        dn = delta_scale * g
        cd = np.cos(alpha + dn) ** 2
        sd = np.sin(alpha + dn) ** 2
        p0 = pi * cd + (1.0 - pi) * ca
        oc = (u[:, k] >= p0).astype(np.int8)
        step = np.where(oc == 1, 0.5 * np.log(sd / sa), 0.5 * np.log(cd / ca))
        active = frozen == 0
        x[active] += step[active]
        oc[~active] = -1
        frozen[np.abs(x) > x_max] = 1
        pi = 1.0 / (1.0 + np.exp(-2.0 * x))
        inband = np.abs(pi - pi_lock) < band
        counters[:] = np.where(inband, counters + 1, 0)
        latched[counters >= sustain] = 1
        m = float(np.max(x)) if x.size else -np.inf
        if m > max_x:
            max_x = m
        if x_out is not None:
            x_out[k] = x
        if oc_out is not None:
            oc_out[k] = oc
    return max_x


def _rhs_periodic(p, a_lo, a_hi, dx, j_buf):
    # J at the left face of cell f: a_lo[f]*P[f-1] - a_hi[f]*P[f]
    np.multiply(a_lo, np.roll(p, 1), out=j_buf)
    j_buf -= a_hi * p
    return -(np.roll(j_buf, -1) - j_buf) / dx


def _rhs_walls(p, a_lo, a_hi, dx, j_buf):
    # faces 0..N with J[0] = J[N] = 0
    j_buf[0] = 0.0
    j_buf[-1] = 0.0
    np.multiply(a_lo[1:-1], p[:-1], out=j_buf[1:-1])
    j_buf[1:-1] -= a_hi[1:-1] * p[1:]
    return -np.diff(j_buf) / dx


def face_flux(p, a_lo, a_hi, periodic):
    """Face fluxes of the current state (periodic: N faces; walls: N+1)."""
    if periodic:
        return a_lo * np.roll(p, 1) - a_hi * p
    j = np.empty(p.size + 1)
    j[0] = 0.0
    j[-1] = 0.0
    j[1:-1] = a_lo[1:-1] * p[:-1] - a_hi[1:-1] * p[1:]
    return j


def fv_sweep(
    p,
    a_lo,
    a_hi,
    dx,
    dt,
    n_steps,
    periodic,
    cur_out=None,
    cur_stride=0,
    clip_tol=1e-12,
):
    """n_steps of SSP-RK2 on dP/dt = -dJ/dx with frozen face coefficients.

    J at a face is a_lo*P_left - a_hi*P_right (coefficients already include
    the diffusion weight and 1/dx Bernoulli factors).  If cur_out is given,
    the space-integrated flux is recorded every cur_stride steps (local step
    0 included).  Returns (samples_written, min_p_seen, clipped_mass).
    """
    n = p.size
    j_buf = np.empty(n if periodic else n + 1)
    rhs = _rhs_periodic if periodic else _rhs_walls
    written = 0
    min_p = float(np.min(p))
    clipped = 0.0
    for k in range(n_steps):
        if cur_out is not None and cur_stride > 0 and k % cur_stride == 0:
            cur_out[written] = float(np.sum(face_flux(p, a_lo, a_hi, periodic))) * dx
            written += 1
        stage = p + dt * rhs(p, a_lo, a_hi, dx, j_buf)
        stage += dt * rhs(stage, a_lo, a_hi, dx, j_buf)
        p[:] = 0.5 * (p + stage)
        m = float(np.min(p))
        if m < min_p:
            min_p = m
        if m < 0.0:
            neg = p < 0.0
            clipped += -float(np.sum(p[neg])) * dx
            p[neg] = 0.0
    return written, min_p, clipped
