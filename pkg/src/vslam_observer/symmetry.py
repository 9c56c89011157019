"""SOT(3) and VSLAM_n(3) groups, their action on the total space, and the velocity lift.

Group elements with ``n`` landmark factors are stored as stacked arrays
(``rot`` of shape ``(n, 3, 3)``, ``scale`` of shape ``(n,)``) so that the
per-landmark work runs through the kernels in :mod:`vslam_observer._kernels`.
Single-factor views (:class:`SotElement`, :class:`SotVelocity`) are provided
for convenience and tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .errors import DimensionMismatch, InvalidState, LandmarkAtOrigin
from .projective import (
    Kind,
    Pose,
    ProjectivePoint,
    Twist,
    check_rotation,
    exp_se3,
    exp_so3,
    skew,
)
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class SotElement:
    """``diag(R, a)`` with ``R`` in SO(3) and ``a`` nonzero."""

    R: np.ndarray
    a: float

    def __post_init__(self):
        object.__setattr__(self, "R", check_rotation(self.R))
        a = float(self.a)
        if not np.isfinite(a) or abs(a) <= TOL.degenerate:
            raise InvalidState(f"SOT scale must be nonzero, got {a}")
        object.__setattr__(self, "a", a)

    @classmethod
    def identity(cls) -> SotElement:
        return cls(np.eye(3), 1.0)

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((4, 4))
        m[:3, :3] = self.R
        m[3, 3] = self.a
        return m


@dataclass(frozen=True, eq=False)
class SotVelocity:
    """``diag(skew(w), s)`` in the Lie algebra of SOT(3)."""

    w: np.ndarray
    s: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.array(self.w, dtype=float).reshape(3))
        object.__setattr__(self, "s", float(self.s))

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((4, 4))
        m[:3, :3] = skew(self.w)
        m[3, 3] = self.s
        return m


def sot_compose(q1: SotElement, q2: SotElement) -> SotElement:
    return SotElement(q1.R @ q2.R, q1.a * q2.a)


def sot_inverse(q: SotElement) -> SotElement:
    return SotElement(q.R.T, 1.0 / q.a)


def sot_exp(w: SotVelocity, dt: float = 1.0) -> SotElement:
    return SotElement(exp_so3(w.w * dt), np.exp(w.s * dt))


def _stack_rot(rot, n_hint=None) -> np.ndarray:
    rot = np.ascontiguousarray(rot, dtype=float)
    if rot.ndim != 3 or rot.shape[1:] != (3, 3):
        raise InvalidState("rotation stack must have shape (n, 3, 3)")
    return rot


@dataclass(frozen=True, eq=False)
class VslamGroupElement:
    """``(A, Q_1..Q_n)`` in SE(3) x SOT(3)^n."""

    A: Pose
    rot: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        rot = _stack_rot(self.rot)
        scale = np.ascontiguousarray(self.scale, dtype=float).reshape(-1)
        if scale.shape[0] != rot.shape[0]:
            raise DimensionMismatch("rotation and scale stacks differ in length")
        if np.any(np.abs(scale) <= TOL.degenerate) or not np.all(np.isfinite(scale)):
            raise InvalidState("SOT scales must be finite and nonzero")
        object.__setattr__(self, "rot", rot)
        object.__setattr__(self, "scale", scale)

    @property
    def n(self) -> int:
        return self.rot.shape[0]

    @classmethod
    def identity(cls, n: int) -> VslamGroupElement:
        return cls(Pose.identity(), np.tile(np.eye(3), (n, 1, 1)), np.ones(n))

    @classmethod
    def from_factors(cls, A: Pose, Q) -> VslamGroupElement:
        Q = list(Q)
        rot = np.array([q.R for q in Q]).reshape(len(Q), 3, 3)
        return cls(A, rot, np.array([q.a for q in Q]))

    @property
    def Q(self) -> tuple[SotElement, ...]:
        return tuple(SotElement(r, a) for r, a in zip(self.rot, self.scale))


@dataclass(frozen=True, eq=False)
class VslamVelocity:
    """``(U, W_1..W_n)`` in the Lie algebra of VSLAM_n(3)."""

    U: Twist
    w: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=float).reshape(-1, 3)
        s = np.ascontiguousarray(self.s, dtype=float).reshape(-1)
        if w.shape[0] != s.shape[0]:
            raise DimensionMismatch("w and s stacks differ in length")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @property
    def W(self) -> tuple[SotVelocity, ...]:
        return tuple(SotVelocity(w, s) for w, s in zip(self.w, self.s))

    def __add__(self, other: VslamVelocity) -> VslamVelocity:
        _check_n(self.n, other.n)
        return VslamVelocity(self.U + other.U, self.w + other.w, self.s + other.s)


def _check_n(n1: int, n2: int) -> None:
    if n1 != n2:
        raise DimensionMismatch(f"landmark counts differ: {n1} != {n2}")


def group_compose(x1: VslamGroupElement, x2: VslamGroupElement) -> VslamGroupElement:
    _check_n(x1.n, x2.n)
    return VslamGroupElement(x1.A @ x2.A, x1.rot @ x2.rot, x1.scale * x2.scale)


def group_inverse(x: VslamGroupElement) -> VslamGroupElement:
    return VslamGroupElement(x.A.inverse(), np.swapaxes(x.rot, 1, 2), 1.0 / x.scale)


def group_exp(v: VslamVelocity, dt: float = 1.0) -> VslamGroupElement:
    """Componentwise exponential of ``v * dt``."""
    return VslamGroupElement(exp_se3(v.U, dt), kern.so3_exp_batch(v.w * dt), np.exp(v.s * dt))


def group_step(x: VslamGroupElement, v: VslamVelocity, dt: float) -> VslamGroupElement:
    """``x * exp(v * dt)``, fused per landmark."""
    _check_n(x.n, v.n)
    rot, scale = kern.sot_step(x.rot, x.scale, v.w, v.s, float(dt))
    return VslamGroupElement(x.A @ exp_se3(v.U, dt), rot, scale)


@dataclass(frozen=True, eq=False)
class TotalState:
    """Robot pose and ``n`` landmark classes, point-type landmarks first.

    ``reps`` holds unit representatives row-wise; ``is_point`` holds the
    declared landmark kinds.
    """

    pose: Pose
    reps: np.ndarray
    is_point: np.ndarray

    def __post_init__(self):
        reps = np.ascontiguousarray(self.reps, dtype=float).reshape(-1, 4)
        is_point = np.asarray(self.is_point, dtype=bool).reshape(-1)
        if reps.shape[0] != is_point.shape[0]:
            raise DimensionMismatch("reps and kinds differ in length")
        if not np.all(np.isfinite(reps)):
            raise InvalidState("landmark representatives must be finite")
        n_p = int(is_point.sum())
        if not np.all(is_point[:n_p]):
            raise InvalidState("point-type landmarks must precede bearing-type landmarks")
        bearing_w = np.abs(reps[:, 3]) <= TOL.bearing_w
        if np.any(bearing_w == is_point):
            raise InvalidState("landmark kinds disagree with fourth coordinates")
        body = reps @ self.pose.inverse_matrix().T
        if np.any(np.linalg.norm(body[:, :3], axis=1) <= TOL.degenerate):
            raise LandmarkAtOrigin("a landmark coincides with the robot origin")
        reps = reps.copy()
        reps[~is_point, 3] = 0.0
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "is_point", is_point)

    @classmethod
    def _unchecked(cls, pose: Pose, reps: np.ndarray, is_point: np.ndarray) -> TotalState:
        obj = object.__new__(cls)
        object.__setattr__(obj, "pose", pose)
        object.__setattr__(obj, "reps", reps)
        object.__setattr__(obj, "is_point", is_point)
        return obj

    @classmethod
    def from_landmarks(cls, pose: Pose, landmarks) -> TotalState:
        landmarks = list(landmarks)
        reps = np.array([eta.rep for eta in landmarks]).reshape(len(landmarks), 4)
        return cls(pose, reps, np.array([eta.is_point for eta in landmarks], dtype=bool))

    @property
    def n(self) -> int:
        return self.reps.shape[0]

    @property
    def n_points(self) -> int:
        return int(self.is_point.sum())

    @property
    def landmarks(self) -> tuple[ProjectivePoint, ...]:
        return tuple(
            ProjectivePoint(r, Kind.POINT if p else Kind.BEARING)
            for r, p in zip(self.reps, self.is_point)
        )

    def body_coordinates(self) -> np.ndarray:
        """Unit representatives of ``P^{-1} eta_i``, shape ``(n, 4)``."""
        return kern.transform_reps(self.pose.inverse_matrix(), self.reps)


def action_upsilon(x: VslamGroupElement, xi: TotalState) -> TotalState:
    """Right action ``(P, eta_i) -> (P A, P A Q_i^{-1} P^{-1} eta_i)``."""
    _check_n(x.n, xi.n)
    new_pose = xi.pose @ x.A
    p_inv = xi.pose.inverse_matrix()
    reps = kern.upsilon_reps(p_inv, new_pose.matrix, x.rot, x.scale, xi.reps)
    # kinds are preserved by SE(3) x SOT(3); only the e4 exclusion needs checking
    reps[~xi.is_point, 3] = 0.0
    body = reps @ new_pose.inverse_matrix().T
    if np.any(np.einsum("ni,ni->n", body[:, :3], body[:, :3]) <= TOL.degenerate**2):
        raise LandmarkAtOrigin("group action moved a landmark onto the robot origin")
    return TotalState._unchecked(new_pose, reps, xi.is_point)


def _lift_arrays(U: Twist, theta: np.ndarray):
    qn = np.linalg.norm(theta[:, :3], axis=1)
    if np.any(qn <= TOL.degenerate * np.linalg.norm(theta, axis=1)):
        raise LandmarkAtOrigin("lift undefined at the class of e4")
    return kern.lift_w(U.omega, U.v, np.ascontiguousarray(theta))


def lift_W(U: Twist, theta: ProjectivePoint | np.ndarray) -> SotVelocity:
    """SOT(3) velocity that keeps the landmark with body coordinates ``theta`` fixed."""
    rep = theta.rep if isinstance(theta, ProjectivePoint) else np.asarray(theta, dtype=float)
    w, s = _lift_arrays(U, rep.reshape(1, 4))
    return SotVelocity(w[0], s[0])


def lift_lambda(xi: TotalState, U: Twist) -> VslamVelocity:
    w, s = _lift_arrays(U, xi.body_coordinates())
    return VslamVelocity(U, w, s)
