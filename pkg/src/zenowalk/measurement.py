"""Single weak-measurement step of a qubit on the |0>-|1> line.

A qubit cos(theta)|0> + sin(theta)|1> is measured indirectly through an
ancilla: a conditional rotation by 2*delta entangles them, an unconditional
rotation by alpha mixes the ancilla, and the ancilla is read out in the
computational basis.  The post-measurement qubit stays pure and on the same
line, so the whole process is a random walk in any of three equivalent
coordinates:

    x     = atanh(-cos 2*theta) = ln(tan theta)     (full real line)
    theta in (0, pi/2)
    Pi    = sin^2 theta = (1 + tanh x)/2            (probability of |1>)

Outcome probabilities in the x chart are

    p0(x) = Pi(x) cos^2(delta+alpha) + (1-Pi(x)) cos^2(alpha)
    p1(x) = Pi(x) sin^2(delta+alpha) + (1-Pi(x)) sin^2(alpha)

and the induced displacements are independent of x:

    eps0 = (1/2) ln(cos^2(delta+alpha)/cos^2 alpha)
    eps1 = (1/2) ln(sin^2(delta+alpha)/sin^2 alpha)

(the log form is the atanh expression 2c_d/(c_d+c_a) - 1 rewritten exactly).
For delta > 0 outcome 0 steps toward |0> (eps0 < 0) and outcome 1 toward |1>.
`step_size_at_x` keeps the x-dependent-looking formula as an independent
oracle for that constancy.

All functions are pure and accept scalars or numpy arrays.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Chart",
    "StateCoordinate",
    "MeasurementParams",
    "AmplitudeMatrix",
    "KrausPair",
    "BasisStateError",
    "SingularMeasurementError",
    "SaturationWarning",
    "x_of_theta",
    "theta_of_x",
    "pi_of_x",
    "pi_complement_of_x",
    "x_of_pi",
    "amplitude_matrix",
    "kraus_pair",
    "outcome_probabilities",
    "step_sizes",
    "step_size_at_x",
    "post_measurement_state",
    "mean_step",
    "mean_step_components",
    "diffusion_step",
]

# |eps| beyond this corresponds to an atanh argument within 1e-15 of +-1;
# such steps are clamped and flagged instead of returning +-inf.
_EPS_MAX = math.atanh(1.0 - 1e-15)


class BasisStateError(ValueError):
    """Coordinate sits on a basis state (theta in {0, pi/2}, Pi in {0, 1})."""


class SingularMeasurementError(ValueError):
    """Parameters make one outcome deterministic (singular step size)."""


class SaturationWarning(UserWarning):
    """Near-projective step size was clamped to stay finite."""


class Chart(enum.Enum):
    X = "x"
    THETA = "theta"
    PI = "pi"


def x_of_theta(theta):
    """x = ln(tan theta); rejects theta at or outside (0, pi/2)."""
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0.0) or np.any(th >= 0.5 * np.pi):
        raise BasisStateError("theta must lie strictly inside (0, pi/2)")
    out = np.log(np.tan(th))
    return out if out.ndim else float(out)


def theta_of_x(x):
    """theta = atan(e^x), the stable inverse of x_of_theta."""
    out = np.arctan(np.exp(np.asarray(x, dtype=float)))
    return out if out.ndim else float(out)


def pi_of_x(x):
    """Pi(x) = (1 + tanh x)/2, computed as a logistic for accuracy."""
    out = 1.0 / (1.0 + np.exp(-2.0 * np.asarray(x, dtype=float)))
    return out if out.ndim else float(out)


def pi_complement_of_x(x):
    """1 - Pi(x) without cancellation (needed near Pi -> 1)."""
    out = 1.0 / (1.0 + np.exp(2.0 * np.asarray(x, dtype=float)))
    return out if out.ndim else float(out)


def x_of_pi(p):
    """x = (1/2) logit(Pi); rejects Pi at or outside (0, 1)."""
    pp = np.asarray(p, dtype=float)
    if np.any(pp <= 0.0) or np.any(pp >= 1.0):
        raise BasisStateError("Pi must lie strictly inside (0, 1)")
    out = 0.5 * (np.log(pp) - np.log1p(-pp))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class StateCoordinate:
    """A point on the |0>-|1> line tagged with the chart it was given in.

    The value is stored canonically as x regardless of chart, so converting
    between charts and back is lossless even where a bare float theta or Pi
    would saturate (|x| beyond ~8 and ~18 respectively).
    """

    chart: Chart
    x: float

    @classmethod
    def from_x(cls, x: float) -> "StateCoordinate":
        if not math.isfinite(x):
            raise BasisStateError("x must be finite")
        return cls(Chart.X, float(x))

    @classmethod
    def from_theta(cls, theta: float) -> "StateCoordinate":
        return cls(Chart.THETA, x_of_theta(theta))

    @classmethod
    def from_pi(cls, p: float) -> "StateCoordinate":
        return cls(Chart.PI, x_of_pi(p))

    @property
    def value(self) -> float:
        if self.chart is Chart.X:
            return self.x
        if self.chart is Chart.THETA:
            return theta_of_x(self.x)
        return pi_of_x(self.x)

    def to(self, chart: Chart) -> "StateCoordinate":
        return StateCoordinate(chart, self.x)

    @property
    def theta(self) -> float:
        return theta_of_x(self.x)

    @property
    def pi(self) -> float:
        return pi_of_x(self.x)


@dataclass(frozen=True)
class MeasurementParams:
    """Rotation angles of one weak measurement (radians).

    alpha must stay strictly inside (0, pi/2): at the edges one outcome
    becomes deterministic and the step sizes diverge.
    """

    alpha: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 0.5 * math.pi):
            raise SingularMeasurementError(
                f"alpha={self.alpha} outside the nondegenerate range (0, pi/2)"
            )
        if not math.isfinite(self.delta) or abs(self.delta) >= 0.5 * math.pi:
            raise SingularMeasurementError(f"delta={self.delta} outside (-pi/2, pi/2)")

    def trig(self):
        """(cos^2 a, sin^2 a, cos^2(d+a), sin^2(d+a)) shared by most formulas."""
        ca = math.cos(self.alpha) ** 2
        sa = math.sin(self.alpha) ** 2
        cd = math.cos(self.delta + self.alpha) ** 2
        sd = math.sin(self.delta + self.alpha) ** 2
        return ca, sa, cd, sd


@dataclass(frozen=True)
class AmplitudeMatrix:
    """Unnormalized post-branch amplitudes b[outcome, basis] for one step."""

    b: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.b, dtype=float)
        if arr.shape != (2, 2):
            raise ValueError("amplitude matrix must be 2x2")
        object.__setattr__(self, "b", arr)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(self.b**2))


@dataclass(frozen=True)
class KrausPair:
    """Diagonal measurement operators B0 = diag(b0), B1 = diag(b1).

    Completeness: b0[j]^2 + b1[j]^2 = 1 for each basis index j.
    """

    b0_diag: tuple
    b1_diag: tuple

    def completeness_defect(self) -> float:
        d0 = self.b0_diag[0] ** 2 + self.b1_diag[0] ** 2 - 1.0
        d1 = self.b0_diag[1] ** 2 + self.b1_diag[1] ** 2 - 1.0
        return max(abs(d0), abs(d1))


def amplitude_matrix(theta: float, p: MeasurementParams) -> AmplitudeMatrix:
    """Amplitudes of (outcome, qubit-basis) branches for a qubit at theta.

    Row i is outcome i; column j is basis state |j>.  The four entries square
    to 1 (global normalization of the entangled state).
    """
    ct, st = math.cos(theta), math.sin(theta)
    cda, sda = math.cos(p.delta + p.alpha), math.sin(p.delta + p.alpha)
    b = np.array(
        [
            [ct * math.cos(p.alpha), st * cda],
            [ct * math.sin(p.alpha), st * sda],
        ]
    )
    return AmplitudeMatrix(b)


def kraus_pair(p: MeasurementParams) -> KrausPair:
    """State-independent measurement operators of the step."""
    return KrausPair(
        b0_diag=(math.cos(p.alpha), math.cos(p.delta + p.alpha)),
        b1_diag=(math.sin(p.alpha), math.sin(p.delta + p.alpha)),
    )


def outcome_probabilities(s: StateCoordinate, p: MeasurementParams):
    """(p0, p1) for one step from state s.  p0 + p1 = 1 up to rounding."""
    ca, sa, cd, sd = p.trig()
    pi = pi_of_x(s.x)
    pic = pi_complement_of_x(s.x)
    return pi * cd + pic * ca, pi * sd + pic * sa


def outcome_probabilities_theta(theta: float, p: MeasurementParams):
    """Same probabilities from the theta-chart formula (cross-check path)."""
    ca, sa, cd, sd = p.trig()
    ct2 = math.cos(theta) ** 2
    st2 = math.sin(theta) ** 2
    return ct2 * ca + st2 * cd, ct2 * sa + st2 * sd


def _half_log_ratio(num: float, den: float) -> float:
    if num == 0.0 or den == 0.0:
        raise SingularMeasurementError(
            "deterministic projection: step size is infinite (atanh argument hit +-1)"
        )
    eps = 0.5 * math.log(num / den)
    if abs(eps) > _EPS_MAX:
        warnings.warn(
            "near-projective parameters: step size clamped", SaturationWarning, stacklevel=3
        )
        eps = math.copysign(_EPS_MAX, eps)
    return eps


def step_sizes(p: MeasurementParams):
    """(eps0, eps1): the x displacements of the two outcomes.

    Independent of the current position; see `step_size_at_x` for the
    x-dependent-looking expression retained as an oracle of that fact.
    """
    ca, sa, cd, sd = p.trig()
    return _half_log_ratio(cd, ca), _half_log_ratio(sd, sa)


def step_size_at_x(x, p: MeasurementParams, outcome: int):
    """Displacement computed from the position-explicit formula.

    Evaluates atanh((1+tanh x) q / p_outcome(x)) - x with q = cos^2(d+a) or
    sin^2(d+a), written as a log ratio of the stable logistic factors.  Must
    agree with `step_sizes` for every x.
    """
    ca, sa, cd, sd = p.trig()
    xx = np.asarray(x, dtype=float)
    pi = 1.0 / (1.0 + np.exp(-2.0 * xx))
    pic = 1.0 / (1.0 + np.exp(2.0 * xx))
    if outcome == 0:
        num, rest = pi * cd, pic * ca
    elif outcome == 1:
        num, rest = pi * sd, pic * sa
    else:
        raise ValueError("outcome must be 0 or 1")
    if np.any(num == 0.0) or np.any(rest == 0.0):
        raise SingularMeasurementError("deterministic projection at this parameter set")
    # atanh(2u - 1) = (1/2) ln(u/(1-u)) with u = num/p_outcome; the identity
    # p_outcome - num = rest is applied exactly (subtracting the computed
    # p_outcome loses ~e^{2|x|} ulp to cancellation)
    out = 0.5 * (np.log(num) - np.log(rest)) - xx
    return out if out.ndim else float(out)


def post_measurement_state(
    s: StateCoordinate, p: MeasurementParams, outcome: int
) -> StateCoordinate:
    """State after one step, via the amplitude-level update.

    Computed from the branch amplitudes (tan theta' = b[i,1]/b[i,0]), not by
    adding a precomputed step, so it cross-checks the random-walk form
    x' = x + eps_outcome.
    """
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    # stable sin/cos of theta for any x: sin^2 = Pi, cos^2 = 1 - Pi
    st = math.sqrt(pi_of_x(s.x))
    ct = math.sqrt(pi_complement_of_x(s.x))
    cda, sda = math.cos(p.delta + p.alpha), math.sin(p.delta + p.alpha)
    if outcome == 0:
        b_q0, b_q1 = ct * math.cos(p.alpha), st * cda
    else:
        b_q0, b_q1 = ct * math.sin(p.alpha), st * sda
    if b_q0 == 0.0 or b_q1 == 0.0:
        raise SingularMeasurementError("post-measurement state hit a basis state exactly")
    # tan(theta') is the ratio of the branch amplitudes
    return StateCoordinate(s.chart, math.log(abs(b_q1) / abs(b_q0)))


def mean_step_components(x, p: MeasurementParams):
    """(mu0, mu1) with mu_i = eps_i p_i(x); constant-parameter walks only."""
    eps0, eps1 = step_sizes(p)
    ca, sa, cd, sd = p.trig()
    xx = np.asarray(x, dtype=float)
    pi = 1.0 / (1.0 + np.exp(-2.0 * xx))
    pic = 1.0 / (1.0 + np.exp(2.0 * xx))
    mu0 = eps0 * (pi * cd + pic * ca)
    mu1 = eps1 * (pi * sd + pic * sa)
    if mu0.ndim:
        return mu0, mu1
    return float(mu0), float(mu1)


def mean_step(x, p: MeasurementParams):
    """Average displacement mu(x) = eps0 p0(x) + eps1 p1(x).

    For small delta, mu(x) = delta^2 tanh(x) + O(delta^3): a weak attraction
    toward the nearest basis state.
    """
    mu0, mu1 = mean_step_components(x, p)
    return mu0 + mu1


def diffusion_step(x, p: MeasurementParams):
    """D(x) = (1/2) sum_i p_i(x) eps_i^2 = delta^2/2 + O(delta^3)."""
    eps0, eps1 = step_sizes(p)
    ca, sa, cd, sd = p.trig()
    xx = np.asarray(x, dtype=float)
    pi = 1.0 / (1.0 + np.exp(-2.0 * xx))
    pic = 1.0 / (1.0 + np.exp(2.0 * xx))
    out = 0.5 * ((pi * cd + pic * ca) * eps0**2 + (pi * sd + pic * sa) * eps1**2)
    return out if out.ndim else float(out)
