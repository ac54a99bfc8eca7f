"""Measurement-strength form factors for the ratchet and localization runs.

A profile is g(x, t) = C(t) (1 + F(x) f(t)) with F a mean-zero Fourier sum of
spatial period L, f a periodic switching function, and C(t) fixed by the
normalization <g(t)^2> = (1/L) int g^2 dx = 1 at every instant.  The
normalization forbids trading current for a plain global reduction of the
measurement strength; since <F> = 0 and <F^2> = (sum of squared Fourier
coefficients)/2, C has the closed form (1 + f(t)^2 <F^2>)^{-1/2}.

Profiles must stay nonnegative; construction rejects parameter sets where
1 + F f changes sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

__all__ = [
    "StrengthProfile",
    "ProfileError",
    "onoff_sawtooth_profile",
    "sign_sawtooth_profile",
    "static_sine_profile",
    "unit_profile",
    "random_static_profile",
    "localization_profile",
    "RescaledProblem",
    "rescale_equivalence",
    "build_state_X",
]

_TEMPORAL_KINDS = ("const", "zero", "onoff", "sign")


class ProfileError(ValueError):
    """Invalid strength profile (negative strength or bad parameters)."""


def _temporal_values(kind: str) -> Tuple[float, ...]:
    """The values f(t) attains (all piecewise constant kinds)."""
    return {
        "const": (1.0,),
        "zero": (0.0,),
        "onoff": (0.0, -1.0),  # (sign(sin t) - 1)/2
        "sign": (1.0, -1.0),
    }[kind]


@dataclass(frozen=True)
class StrengthProfile:
    spatial_sin: Tuple[float, ...] = ()
    spatial_cos: Tuple[float, ...] = ()
    temporal: str = "const"
    length: float = 2.0 * math.pi

    def __post_init__(self):
        if self.temporal not in _TEMPORAL_KINDS:
            raise ProfileError(f"unknown temporal kind {self.temporal!r}")
        if self.length <= 0.0:
            raise ProfileError("spatial period must be positive")
        if self.min_strength() < 0.0:
            raise ProfileError("profile strength goes negative")

    # -- pieces ---------------------------------------------------------

    def spatial(self, x):
        x = np.asarray(x, dtype=float)
        k0 = 2.0 * math.pi / self.length
        out = np.zeros_like(x)
        for k, a in enumerate(self.spatial_sin, start=1):
            out += a * np.sin(k * k0 * x)
        for k, a in enumerate(self.spatial_cos, start=1):
            out += a * np.cos(k * k0 * x)
        return out

    def temporal_value(self, t: float) -> float:
        if self.temporal == "const":
            return 1.0
        if self.temporal == "zero":
            return 0.0
        s = 1.0 if math.sin(t) > 0.0 else -1.0
        if self.temporal == "sign":
            return s
        return 0.5 * (s - 1.0)

    def mean_sq_spatial(self) -> float:
        return 0.5 * (
            sum(a * a for a in self.spatial_sin) + sum(a * a for a in self.spatial_cos)
        )

    def normalizer(self, t: float) -> float:
        f = self.temporal_value(t)
        return 1.0 / math.sqrt(1.0 + f * f * self.mean_sq_spatial())

    def __call__(self, x, t: float = 0.0):
        f = self.temporal_value(t)
        return self.normalizer(t) * (1.0 + self.spatial(x) * f)

    # -- structure queries ----------------------------------------------

    @property
    def is_static(self) -> bool:
        if self.temporal in ("const", "zero"):
            return True
        return not (self.spatial_sin or self.spatial_cos)  # C absorbs pure f(t)

    @property
    def switching_period(self) -> float:
        """Temporal period of f (switch instants at multiples of pi)."""
        return 2.0 * math.pi

    def phases(self):
        """((phase length, f value), ...) covering one temporal period."""
        if self.temporal in ("const", "zero"):
            return ((math.inf, self.temporal_value(0.0)),)
        a, b = _temporal_values(self.temporal)
        return ((math.pi, a), (math.pi, b))

    def min_strength(self, n_probe: int = 4096) -> float:
        x = np.linspace(-0.5 * self.length, 0.5 * self.length, n_probe, endpoint=False)
        fx = self.spatial(x)
        vals = []
        for f in _temporal_values(self.temporal):
            c = 1.0 / math.sqrt(1.0 + f * f * self.mean_sq_spatial())
            vals.append(float(np.min(c * (1.0 + fx * f))))
        return min(vals)

    def mean_inverse_sq(self, n_probe: int = 8192) -> float:
        """<g^-2> by periodic midpoint quadrature (static profiles only)."""
        if not self.is_static:
            raise ProfileError("mean_inverse_sq requires a static profile")
        x = (np.arange(n_probe) + 0.5) / n_probe * self.length - 0.5 * self.length
        g = self(x, 0.0)
        if float(np.min(g)) <= 1e-12:
            raise ProfileError("strength touches zero: localization regime")
        return float(np.mean(g**-2.0))


def onoff_sawtooth_profile(a: float = -0.6, b: float = -0.5) -> StrengthProfile:
    """Two-mode sawtooth switched on half of every temporal period."""
    return StrengthProfile(spatial_sin=(a, a * b), temporal="onoff")


def sign_sawtooth_profile(a: float = -0.8, b: float = 0.0) -> StrengthProfile:
    """Two-mode sawtooth with alternating sign drive."""
    return StrengthProfile(spatial_sin=(a, a * b), temporal="sign")


def static_sine_profile(a: float = -0.8) -> StrengthProfile:
    """Time-independent single-mode profile (the Seebeck configuration)."""
    return StrengthProfile(spatial_sin=(a,), temporal="const")


def unit_profile() -> StrengthProfile:
    return StrengthProfile()


def random_static_profile(seed: int, n_modes: int = 3, max_amp: float = 0.8) -> StrengthProfile:
    """Random positive static profile for steady-state cross-checks."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    sin_c = rng.uniform(-1.0, 1.0, n_modes)
    cos_c = rng.uniform(-1.0, 1.0, n_modes)
    probe = StrengthProfile(tuple(sin_c), tuple(cos_c), temporal="zero")
    fx = probe.spatial(np.linspace(-math.pi, math.pi, 4096, endpoint=False))
    scale = max_amp / float(np.max(np.abs(fx)))
    return StrengthProfile(
        tuple(scale * sin_c), tuple(scale * cos_c), temporal="const"
    )


# -- localization at a strength zero ------------------------------------


def localization_profile(
    pi_lock: float, tilde_g: Union[float, Callable] = 1.0
) -> Callable[[np.ndarray, float], np.ndarray]:
    """Strength over the Pi chart vanishing linearly at pi_lock.

    g(Pi) = (pi_lock - Pi)/(1 - Pi) * tilde_g(Pi), defined for Pi <= pi_lock
    with g(pi_lock) = 0 (evaluations above pi_lock are rejected: that branch
    belongs to the mirrored problem).
    """
    if not 0.0 < pi_lock < 1.0:
        raise ValueError("pi_lock must lie inside (0, 1)")
    tg = tilde_g if callable(tilde_g) else (lambda p, _v=float(tilde_g): np.full_like(p, _v))

    def g(p, t: float = 0.0):
        p = np.asarray(p, dtype=float)
        if np.any(p > pi_lock) or np.any(p < 0.0):
            raise ValueError("localization profile is defined for 0 <= Pi <= pi_lock")
        return (pi_lock - p) / (1.0 - p) * tg(p)

    return g


@dataclass(frozen=True)
class RescaledProblem:
    """Unit-interval image of the walk locked at pi_lock.

    Under Pi -> Pi/pi_lock and t -> pi_lock^2 t the locked problem becomes
    the plain (0,1) problem with strength tilde_g; densities map by
    P(Pi) = P_tilde(Pi/pi_lock)/pi_lock.
    """

    pi_lock: float
    tilde_g: Callable

    @property
    def time_scale(self) -> float:
        return self.pi_lock**2

    def diffusion(self, p_tilde, t: float = 0.0):
        p_tilde = np.asarray(p_tilde, dtype=float)
        return 2.0 * (p_tilde - 1.0) ** 2 * p_tilde**2 * self.tilde_g(p_tilde * self.pi_lock) ** 2

    def map_time(self, t: float) -> float:
        return self.time_scale * t

    def map_density_to_unit(self, pi_nodes, values):
        return np.asarray(pi_nodes) / self.pi_lock, np.asarray(values) * self.pi_lock

    def map_density_from_unit(self, pt_nodes, values):
        return np.asarray(pt_nodes) * self.pi_lock, np.asarray(values) / self.pi_lock


def rescale_equivalence(pi_lock: float, tilde_g: Union[float, Callable] = 1.0) -> RescaledProblem:
    if not 0.0 < pi_lock < 1.0:
        raise ValueError("pi_lock must lie inside (0, 1)")
    tg = tilde_g if callable(tilde_g) else (lambda p, _v=float(tilde_g): np.full_like(np.asarray(p, dtype=float), _v))
    return RescaledProblem(pi_lock=pi_lock, tilde_g=tg)


def build_state_X(pi_lock: float) -> Tuple[float, float]:
    """Amplitudes (A, B) of the artificial limit state at Pi = pi_lock."""
    if not 0.0 < pi_lock < 1.0:
        raise ValueError("pi_lock must lie inside (0, 1)")
    return math.sqrt(pi_lock), math.sqrt(1.0 - pi_lock)
