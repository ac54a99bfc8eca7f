"""Declarative per-step measurement schedules.

A schedule fixes, for step n taken from position x, the rotation angle alpha
and the scaled strength delta_n = delta_scale * g_delta(n, x) together with
the step duration tau_n = delta_scale^2 * g_tau(n, x).  Profiles are named
registry entries with numeric parameters (never arbitrary code), so configs
stay serializable and the engine can route hot profiles to compiled kernels.

The effective continuum form factor of a schedule is g = g_delta/sqrt(g_tau):
the drift is (g_delta^2/g_tau) tanh x and the diffusion g_delta^2/(2 g_tau).
All built-in profiles use g_tau = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Tuple

import numpy as np

from .measurement import pi_of_x

__all__ = [
    "ProfileSpec",
    "Schedule",
    "register_profile",
    "profile_evaluator",
    "uniform_schedule",
    "pi_localization_schedule",
]

# evaluator(step_index, x_array) -> strength multiplier array
Evaluator = Callable[[int, np.ndarray], np.ndarray]

_REGISTRY: Dict[str, Callable[[Mapping[str, float]], Evaluator]] = {}


def register_profile(name: str):
    """Register a factory params -> evaluator under `name`."""

    def deco(factory):
        _REGISTRY[name] = factory
        return factory

    return deco


@register_profile("uniform")
def _uniform(params: Mapping[str, float]) -> Evaluator:
    value = float(params.get("value", 1.0))

    def ev(n, x):
        return np.full_like(np.asarray(x, dtype=float), value)

    return ev


@register_profile("pi_localization")
def _pi_localization(params: Mapping[str, float]) -> Evaluator:
    """Strength vanishing at Pi = pi_lock, linear in Pi on either side."""
    pi_lock = float(params["pi_lock"])
    if not 0.0 < pi_lock < 1.0:
        raise ValueError("pi_lock must lie inside (0, 1)")

    def ev(n, x):
        pi = pi_of_x(np.asarray(x, dtype=float))
        return np.where(pi < pi_lock, (pi_lock - pi) / (1.0 - pi), (pi - pi_lock) / pi)

    return ev


@dataclass(frozen=True)
class ProfileSpec:
    name: str
    params: Tuple[Tuple[str, float], ...] = ()

    @classmethod
    def make(cls, name: str, **params: float) -> "ProfileSpec":
        if name not in _REGISTRY:
            raise KeyError(f"unknown strength profile {name!r}")
        return cls(name, tuple(sorted(params.items())))

    def evaluator(self) -> Evaluator:
        return _REGISTRY[self.name](dict(self.params))


def profile_evaluator(spec: ProfileSpec) -> Evaluator:
    return spec.evaluator()


@dataclass(frozen=True)
class Schedule:
    """Step- and state-conditioned measurement parameters for a walk."""

    delta_scale: float
    alpha: float = math.pi / 4
    strength: ProfileSpec = field(default_factory=lambda: ProfileSpec("uniform"))
    tau: ProfileSpec = field(default_factory=lambda: ProfileSpec("uniform"))

    def __post_init__(self):
        if not math.isfinite(self.delta_scale) or self.delta_scale < 0.0:
            raise ValueError("delta_scale must be finite and nonnegative")
        if not 0.0 < self.alpha < 0.5 * math.pi:
            raise ValueError("alpha must lie inside (0, pi/2)")

    def step_duration(self) -> float:
        """tau of one step for unit g_tau (built-ins only)."""
        return self.delta_scale**2


def uniform_schedule(delta_scale: float, alpha: float = math.pi / 4) -> Schedule:
    return Schedule(delta_scale=delta_scale, alpha=alpha)


def pi_localization_schedule(
    delta_scale: float, pi_lock: float, alpha: float = math.pi / 4
) -> Schedule:
    return Schedule(
        delta_scale=delta_scale,
        alpha=alpha,
        strength=ProfileSpec.make("pi_localization", pi_lock=pi_lock),
    )
