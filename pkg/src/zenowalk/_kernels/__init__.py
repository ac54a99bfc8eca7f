"""Kernel backend selection.

Two interchangeable implementations of the hot loops exist: a Cython core
(_core) and a numpy fallback (py_kernels).  The finite-volume sweep is bound
to the compiled core whenever it is importable (it is step-bound and ~70x
faster there).  The ensemble walks dispatch on width: the scalar compiled
loop wins for narrow ensembles (single recorded trajectories), numpy's SIMD
batch math wins beyond ~1000 walkers.  The choice is a pure function of the
inputs, so results stay reproducible; set ZENOWALK_BACKEND=py or =cy to force
one side everywhere (=cy raises if the core is not built).
"""

import os

from . import py_kernels

try:
    from . import _core
except ImportError:
    _core = None

_choice = os.environ.get("ZENOWALK_BACKEND", "").strip().lower()
if _choice not in ("", "py", "python", "cy", "compiled"):
    raise ValueError(f"unknown ZENOWALK_BACKEND={_choice!r} (use 'py' or 'cy')")
if _choice in ("cy", "compiled") and _core is None:
    raise ImportError(
        "ZENOWALK_BACKEND=cy requested but the compiled core is not built; "
        "reinstall with a C compiler or unset ZENOWALK_BACKEND"
    )

_FORCE_PY = _choice in ("py", "python")
_FORCE_CY = _choice in ("cy", "compiled")
_active = py_kernels if (_FORCE_PY or _core is None) else _core

# crossover measured in benchmarks/bench_backends.py
WALK_VECTOR_MIN = 1024

BACKEND = _active.BACKEND_NAME
fv_sweep = _active.fv_sweep
face_flux = _active.face_flux


def walk_backend(n_walkers: int):
    """Kernel module for ensemble walks of the given width."""
    if _active is py_kernels:
        return py_kernels
    if _FORCE_CY or n_walkers < WALK_VECTOR_MIN:
        return _core
    return py_kernels


__all__ = [
    "BACKEND",
    "WALK_VECTOR_MIN",
    "walk_backend",
    "fv_sweep",
    "face_flux",
    "py_kernels",
]
