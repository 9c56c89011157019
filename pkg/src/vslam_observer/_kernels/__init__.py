"""Per-landmark hot kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``VSLAM_OBSERVER_BACKEND``
(``numba`` or ``numpy``). Without the variable, numba is used when it can
be imported. Both modules stay importable so tests and benchmarks can
compare them side by side.
"""

import os

from . import _numpy

BACKEND_ENV = "VSLAM_OBSERVER_BACKEND"
KERNEL_NAMES = (
    "so3_exp_batch",
    "normalize_rows",
    "transform_reps",
    "upsilon_reps",
    "lift_w",
    "landmark_innovation",
    "riccati_step",
    "pose_system",
    "sot_step",
    "lift_step",
)


def _load_numba():
    try:
        from . import _numba
    except ImportError:
        return None
    return _numba


def _select():
    requested = os.environ.get(BACKEND_ENV, "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numpy":
        return "numpy", _numpy
    mod = _load_numba()
    if mod is None:
        if requested == "numba":
            raise ImportError(f"{BACKEND_ENV}=numba but numba is not importable")
        return "numpy", _numpy
    return "numba", mod


BACKEND, _impl = _select()

so3_exp_batch = _impl.so3_exp_batch
normalize_rows = _impl.normalize_rows
transform_reps = _impl.transform_reps
upsilon_reps = _impl.upsilon_reps
lift_w = _impl.lift_w
landmark_innovation = _impl.landmark_innovation
riccati_step = _impl.riccati_step
pose_system = _impl.pose_system
sot_step = _impl.sot_step
lift_step = _impl.lift_step


def get_backend(name):
    """Return the kernel module for ``name`` regardless of the active selection."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        mod = _load_numba()
        if mod is None:
            raise ImportError("numba is not importable")
        return mod
    raise ValueError(name)


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs (no-op for numpy)."""
    import numpy as np

    theta = np.array([[0.0, 0.0, 1.0, 1.0]])
    rot = np.eye(3)[None]
    one = np.ones(1)
    vec = np.array([[0.1, 0.2, 0.3]])
    so3_exp_batch(vec)
    normalize_rows(theta)
    transform_reps(np.eye(4), theta)
    upsilon_reps(np.eye(4), np.eye(4), rot, one, theta)
    lift_w(vec[0], vec[0], theta)
    landmark_innovation(vec, np.array([[0.0, 0.0, 1.0]]), rot, one, 1.0)
    riccati_step(rot, vec[0], vec, 1.0, 1.0, 0.01)
    pose_system(theta, vec, one)
    sot_step(rot, one, vec, one, 0.01)
    lift_step(np.eye(3), vec[0], theta)
