"""Equivariant VSLAM observer: Riccati landmark gains, innovations, and the step map."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels as kern
from .errors import DimensionMismatch, InvalidState, LandmarkAtOrigin, RiccatiBlowup
from .projective import BearingMeasurement, ProjectivePoint, Twist, exp_se3
from .symmetry import (
    SotVelocity,
    TotalState,
    VslamGroupElement,
    VslamVelocity,
    _lift_arrays,
    action_upsilon,
    group_step,
)
from .tolerances import TOL

log = logging.getLogger(__name__)

_EYE4 = np.eye(4)


@dataclass(frozen=True)
class GainConfig:
    k_G: float = 2.0
    k_H: float = 0.5
    k: float = 1.0
    sigma0_scale: float = 25.0

    def __post_init__(self):
        if not (self.k_G > 0 and self.k_H > 0):
            raise InvalidState("k_G and k_H must be positive")
        if not self.k > 0.5:
            raise InvalidState("k must exceed 0.5")
        if not self.sigma0_scale > 0:
            raise InvalidState("sigma0_scale must be positive")


def check_riccati(sigma: np.ndarray) -> np.ndarray:
    """Validate a stack of Riccati matrices; return their eigenvalues, shape ``(m, 3)``."""
    if sigma.size == 0:
        return np.zeros((0, 3))
    if not np.all(np.isfinite(sigma)):
        raise RiccatiBlowup("Riccati matrix has non-finite entries")
    if np.max(np.abs(sigma - np.swapaxes(sigma, 1, 2))) > TOL.symmetric:
        raise InvalidState("Riccati matrix is not symmetric")
    eig = np.linalg.eigvalsh(sigma)
    if eig[:, 0].min() < TOL.riccati_min_eig or eig[:, -1].max() > TOL.riccati_max_eig:
        raise RiccatiBlowup(
            f"Riccati eigenvalues left [{TOL.riccati_min_eig:g}, {TOL.riccati_max_eig:g}]: "
            f"min {eig[:, 0].min():.3e}, max {eig[:, -1].max():.3e}"
        )
    return eig


@dataclass(frozen=True, eq=False)
class ObserverState:
    """Group estimate, Riccati matrices for point landmarks, reference and gains.

    ``sigma`` has shape ``(n_points, 3, 3)`` and is indexed like the first
    ``n_points`` landmarks of ``reference``.
    """

    X: VslamGroupElement
    sigma: np.ndarray
    reference: TotalState
    gains: GainConfig

    def __post_init__(self):
        if self.X.n != self.reference.n:
            raise DimensionMismatch("group element and reference disagree on n")
        sigma = np.ascontiguousarray(self.sigma, dtype=float).reshape(-1, 3, 3)
        if sigma.shape[0] != self.reference.n_points:
            raise DimensionMismatch("one Riccati matrix is required per point landmark")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def initial(cls, reference: TotalState, gains: GainConfig | None = None) -> ObserverState:
        gains = gains or GainConfig()
        sigma = np.tile(gains.sigma0_scale * np.eye(3), (reference.n_points, 1, 1))
        return cls(VslamGroupElement.identity(reference.n), sigma, reference, gains)

    @cached_property
    def estimate(self) -> TotalState:
        """``Upsilon(X, reference)``, computed once per state."""
        return action_upsilon(self.X, self.reference)

    @property
    def n(self) -> int:
        return self.reference.n

    @property
    def is_point(self) -> np.ndarray:
        return self.reference.is_point


@dataclass(frozen=True, eq=False)
class InnovationBundle:
    delta_A: Twist
    delta_w: np.ndarray
    delta_s: np.ndarray
    rank: int

    @property
    def delta_Q(self) -> tuple[SotVelocity, ...]:
        return tuple(SotVelocity(w, s) for w, s in zip(self.delta_w, self.delta_s))

    def as_velocity(self) -> VslamVelocity:
        return VslamVelocity(self.delta_A, self.delta_w, self.delta_s)


def estimated_state(obs: ObserverState) -> TotalState:
    return obs.estimate


def measure(xi: TotalState) -> tuple[np.ndarray, np.ndarray]:
    """Body coordinates and unit bearings of every landmark.

    Returns ``(theta, y)`` with ``theta`` of shape ``(n, 4)`` and ``y`` of
    shape ``(n, 3)``. This is the batched form of ``output_h`` used by both the
    observer and the simulator.
    """
    theta = xi.body_coordinates()
    y = kern.normalize_rows(np.ascontiguousarray(theta[:, :3]))
    return theta, y


def _gain_arrays(is_point: np.ndarray, sigma: np.ndarray, gains: GainConfig):
    n = is_point.shape[0]
    sig = np.tile(np.eye(3), (n, 1, 1))
    n_p = sigma.shape[0]
    sig[:n_p] = sigma
    g = np.where(is_point, gains.k_G, 1.0)
    return sig, g


def landmark_innovation(
    y_hat,
    y,
    sigma,
    gains: GainConfig,
    is_point: bool = True,
) -> SotVelocity:
    """Innovation for one landmark.

    Point landmarks use ``K = k Sigma Pi_y G`` with ``G = k_G I``; bearing
    landmarks use ``Sigma = G = I``.
    """
    yh = y_hat.rep if isinstance(y_hat, BearingMeasurement) else np.asarray(y_hat, dtype=float)
    ym = y.rep if isinstance(y, BearingMeasurement) else np.asarray(y, dtype=float)
    yh = yh / np.linalg.norm(yh)
    ym = ym / np.linalg.norm(ym)
    sig = np.asarray(sigma, dtype=float).reshape(1, 3, 3) if is_point else np.eye(3)[None]
    g = np.array([gains.k_G if is_point else 1.0])
    w, s = kern.landmark_innovation(yh[None], ym[None], np.ascontiguousarray(sig), g, gains.k)
    return SotVelocity(w[0], s[0])


def riccati_step(sigma, omega, y, gains, dt: float) -> np.ndarray:
    """One Euler step of the landmark Riccati equation, symmetrised.

    ``gains`` only needs ``k_G`` and ``k_H`` attributes. Raises
    :class:`RiccatiBlowup` if the result is not safely positive definite.
    """
    ym = y.rep if isinstance(y, BearingMeasurement) else np.asarray(y, dtype=float)
    out = kern.riccati_step(
        np.ascontiguousarray(np.asarray(sigma, dtype=float).reshape(1, 3, 3)),
        np.asarray(omega, dtype=float).reshape(3),
        np.ascontiguousarray(ym.reshape(1, 3)),
        float(gains.k_G),
        float(gains.k_H),
        float(dt),
    )
    check_riccati(out)
    return out[0]


def _as_theta(theta) -> np.ndarray:
    if isinstance(theta, np.ndarray):
        return np.ascontiguousarray(theta, dtype=float).reshape(-1, 4)
    return np.array([t.rep if isinstance(t, ProjectivePoint) else t for t in theta], dtype=float)


def _as_dq(delta_q):
    if isinstance(delta_q, tuple) and len(delta_q) == 2 and isinstance(delta_q[0], np.ndarray):
        w, s = delta_q
    else:
        delta_q = list(delta_q)
        w = np.array([d.w for d in delta_q]).reshape(-1, 3)
        s = np.array([d.s for d in delta_q])
    return np.ascontiguousarray(w, dtype=float), np.ascontiguousarray(s, dtype=float)


def pose_innovation_system(theta, delta_q) -> tuple[np.ndarray, np.ndarray]:
    """Stacked ``(A, b)`` such that the pose cost is ``|A d - b|^2`` for ``d = (dR, dx)``."""
    theta = _as_theta(theta)
    w, s = _as_dq(delta_q)
    if theta.shape[0] != w.shape[0]:
        raise DimensionMismatch("theta and delta_q differ in length")
    return kern.pose_system(theta, w, s)


def pose_innovation_cost(theta, delta_q, d) -> float:
    a, b = pose_innovation_system(theta, delta_q)
    r = a @ np.asarray(d, dtype=float) - b
    return float(r @ r)


def solve_pose_innovation(theta, delta_q) -> tuple[np.ndarray, int]:
    """Minimum-norm least-squares ``d = (dR, dx)`` and the numerical rank."""
    a, b = pose_innovation_system(theta, delta_q)
    if a.shape[0] == 0:
        return np.zeros(6), 0
    d, _, rank, _ = np.linalg.lstsq(a, b, rcond=TOL.lstsq_rcond)
    return d, int(rank)


def pose_innovation(theta, delta_q) -> Twist:
    d, _ = solve_pose_innovation(theta, delta_q)
    return Twist(d[:3], d[3:])


def compute_innovation(obs: ObserverState, y: np.ndarray):
    """Innovation for measurements ``y`` (shape ``(n, 3)``).

    Returns ``(bundle, theta_hat, y_hat)`` so callers can inspect the
    predicted outputs the innovation was built from.
    """
    xi_hat = estimated_state(obs)
    theta_hat, y_hat = measure(xi_hat)
    y = kern.normalize_rows(np.ascontiguousarray(y, dtype=float).reshape(-1, 3))
    if y.shape[0] != obs.n:
        raise DimensionMismatch(f"expected {obs.n} measurements, got {y.shape[0]}")
    sig, g = _gain_arrays(obs.is_point, obs.sigma, obs.gains)
    w, s = kern.landmark_innovation(y_hat, y, sig, g, obs.gains.k)
    d, rank = solve_pose_innovation(theta_hat, (w, s))
    bundle = InnovationBundle(Twist(d[:3], d[3:]), w, s, rank)
    return bundle, theta_hat, y_hat


def _measurement_array(y) -> np.ndarray:
    if isinstance(y, np.ndarray):
        return y
    return np.array([m.rep if isinstance(m, BearingMeasurement) else m for m in y], dtype=float)


INTEGRATORS = ("exact", "euler")


def observer_step(
    obs: ObserverState,
    U: Twist,
    y,
    dt: float,
    innovation: bool = True,
    integrator: str = "exact",
) -> ObserverState:
    """Advance the observer by ``dt`` given body velocity ``U`` and bearings ``y``.

    ``integrator="euler"`` takes ``X <- X exp((lambda + Delta) dt)`` with the
    lift frozen at the start of the step. ``"exact"`` (default) applies the
    innovation ``X <- X exp(Delta dt)`` and then the discrete lift: the group
    increment whose action reproduces the exact constant-velocity motion of
    every landmark over ``dt``. Both agree to first order in ``dt``; only the
    exact variant tracks a perfectly initialised state without drift.

    ``innovation=False`` integrates the lifted kinematics alone. The input
    state is never modified; on :class:`RiccatiBlowup` nothing is returned.
    """
    if not dt > 0:
        raise InvalidState("dt must be positive")
    if integrator not in INTEGRATORS:
        raise ValueError(f"integrator must be one of {INTEGRATORS}")
    y = _measurement_array(y)
    bundle, theta_hat, _ = compute_innovation(obs, y)
    n = obs.n
    if innovation:
        delta = bundle.as_velocity()
    else:
        delta = VslamVelocity(Twist.zero(), np.zeros((n, 3)), np.zeros(n))

    if integrator == "euler":
        w_lift, s_lift = _lift_arrays(U, theta_hat)
        vel = VslamVelocity(U + delta.U, w_lift + delta.w, s_lift + delta.s)
        X = group_step(obs.X, vel, dt)
    else:
        X = group_step(obs.X, delta, dt) if innovation else obs.X
        ref = obs.reference
        # body coordinates Q^{-1} P_ref^{-1} eta_ref do not depend on A
        theta = kern.upsilon_reps(ref.pose.inverse_matrix(), _EYE4, X.rot, X.scale, ref.reps)
        step = exp_se3(U, dt)
        if np.any(np.linalg.norm(theta[:, :3], axis=1) <= TOL.degenerate):
            raise LandmarkAtOrigin("estimated landmark at the camera centre")
        rot, scale = kern.lift_step(step.R, step.x, theta)
        X = VslamGroupElement(X.A @ step, X.rot @ rot, X.scale * scale)

    n_p = obs.reference.n_points
    sigma = obs.sigma
    if n_p:
        y_p = kern.normalize_rows(np.ascontiguousarray(y[:n_p], dtype=float))
        sigma = kern.riccati_step(obs.sigma, U.omega, y_p, obs.gains.k_G, obs.gains.k_H, float(dt))
        check_riccati(sigma)
    if bundle.rank < 6:
        log.debug("pose innovation rank %d < 6", bundle.rank)
    return ObserverState(X, sigma, obs.reference, obs.gains)
