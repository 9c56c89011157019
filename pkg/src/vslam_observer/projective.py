"""Rigid-body and projective-geometry primitives.

Conventions: a ``Pose`` is the 4x4 matrix ``[[R, x], [0, 1]]``; a ``Twist``
is the se(3) matrix ``[[skew(omega), v], [0, 0]]``. Elements of RP^3 and RP^2
are stored as unit-norm representatives; comparisons are up to sign.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateVector, InvalidState, LandmarkAtOrigin, SingularMatrix
from .tolerances import TOL


def _vec(x, dim: int, name: str = "vector") -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (dim,):
        raise InvalidState(f"{name} must have {dim} entries, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise InvalidState(f"{name} has non-finite entries")
    return arr


def skew(omega) -> np.ndarray:
    """Return the matrix ``S`` with ``S @ v == cross(omega, v)``."""
    w = np.asarray(omega, dtype=float)
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def vee(m) -> np.ndarray:
    """Inverse of :func:`skew` (reads the skew part only)."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def _projector(y, dim: int) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(dim)
    nn = float(y @ y)
    if np.sqrt(nn) <= TOL.degenerate:
        raise DegenerateVector(f"projector of near-zero vector {y}")
    return np.eye(dim) - np.outer(y, y) / nn


def projector3(y) -> np.ndarray:
    """Orthogonal projector onto the plane normal to ``y`` in R^3."""
    return _projector(y, 3)


def projector4(y) -> np.ndarray:
    """Orthogonal projector onto the hyperplane normal to ``y`` in R^4."""
    return _projector(y, 4)


def check_rotation(R, tol: float = TOL.orthonormal) -> np.ndarray:
    R = np.array(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidState("rotation must be a finite 3x3 matrix")
    if np.linalg.norm(R.T @ R - np.eye(3)) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise InvalidState("matrix is not in SO(3)")
    return R


@dataclass(frozen=True, eq=False)
class Pose:
    """Element of SE(3)."""

    R: np.ndarray
    x: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "R", check_rotation(self.R))
        object.__setattr__(self, "x", _vec(self.x, 3, "translation"))

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def _unchecked(cls, R: np.ndarray, x: np.ndarray) -> Pose:
        # products and exponentials of valid poses; skips the SO(3) check
        obj = object.__new__(cls)
        object.__setattr__(obj, "R", R)
        object.__setattr__(obj, "x", x)
        return obj

    @classmethod
    def from_matrix(cls, m) -> Pose:
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4) or np.any(m[3] != (0.0, 0.0, 0.0, 1.0)):
            raise InvalidState("pose matrix must be 4x4 with bottom row (0, 0, 0, 1)")
        return cls(m[:3, :3], m[:3, 3])

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.R
        m[:3, 3] = self.x
        return m

    def inverse(self) -> Pose:
        return Pose._unchecked(self.R.T.copy(), -self.R.T @ self.x)

    def inverse_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.R.T
        m[:3, 3] = -self.R.T @ self.x
        return m

    def __matmul__(self, other: Pose) -> Pose:
        return Pose._unchecked(self.R @ other.R, self.R @ other.x + self.x)


@dataclass(frozen=True, eq=False)
class Twist:
    """Element of se(3): angular velocity ``omega`` (rad/s), linear ``v`` (m/s)."""

    omega: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _vec(self.omega, 3, "omega"))
        object.__setattr__(self, "v", _vec(self.v, 3, "v"))

    @classmethod
    def zero(cls) -> Twist:
        return cls(np.zeros(3), np.zeros(3))

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((4, 4))
        m[:3, :3] = skew(self.omega)
        m[:3, 3] = self.v
        return m

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.omega, self.v])

    def __add__(self, other: Twist) -> Twist:
        return Twist(self.omega + other.omega, self.v + other.v)

    def __mul__(self, c: float) -> Twist:
        return Twist(self.omega * c, self.v * c)

    __rmul__ = __mul__


class Kind(enum.Enum):
    POINT = "point"
    BEARING = "bearing"


def _kind_of(rep4: float) -> Kind:
    return Kind.BEARING if abs(rep4) <= TOL.bearing_w else Kind.POINT


def _same_up_to_sign(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) < tol


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Element of RP^3 with a unit-norm representative and a point/bearing tag.

    Construct through :meth:`from_vector` (or :func:`alpha`); the raw
    constructor expects an already-normalised representative.
    """

    rep: np.ndarray
    kind: Kind

    def __post_init__(self):
        rep = _vec(self.rep, 4, "representative")
        if abs(np.linalg.norm(rep) - 1.0) > 1e-9:
            raise InvalidState("representative must be unit norm")
        if _kind_of(rep[3]) is not self.kind:
            raise InvalidState(f"kind {self.kind} inconsistent with fourth coordinate {rep[3]}")
        if self.kind is Kind.BEARING:
            rep[3] = 0.0
        object.__setattr__(self, "rep", rep)

    @classmethod
    def from_vector(cls, x, kind: Kind | None = None) -> ProjectivePoint:
        x = _vec(x, 4, "homogeneous vector")
        nrm = np.linalg.norm(x)
        if nrm <= TOL.degenerate:
            raise DegenerateVector("zero vector has no projective class")
        rep = x / nrm
        inferred = _kind_of(rep[3])
        if kind is not None and kind is not inferred:
            raise InvalidState(f"requested kind {kind} but vector is {inferred}")
        return cls(rep, inferred)

    @property
    def is_point(self) -> bool:
        return self.kind is Kind.POINT

    def same_class(self, other: ProjectivePoint, tol: float = TOL.class_equal) -> bool:
        return self.kind is other.kind and _same_up_to_sign(self.rep, other.rep, tol)

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        return self.same_class(other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BearingMeasurement:
    """Element of RP^2 (an unsigned unit direction)."""

    rep: np.ndarray

    def __post_init__(self):
        rep = _vec(self.rep, 3, "bearing")
        nrm = np.linalg.norm(rep)
        if nrm <= TOL.degenerate:
            raise DegenerateVector("zero bearing")
        object.__setattr__(self, "rep", rep / nrm)

    def same_class(self, other: BearingMeasurement, tol: float = TOL.class_equal) -> bool:
        return _same_up_to_sign(self.rep, other.rep, tol)

    def __eq__(self, other):
        if not isinstance(other, BearingMeasurement):
            return NotImplemented
        return self.same_class(other)

    __hash__ = None


def alpha(v, kind: Kind = Kind.POINT) -> ProjectivePoint:
    """Embed a position (``kind=POINT``) or a unit bearing (``kind=BEARING``) in RP^3."""
    v = _vec(v, 3)
    if kind is Kind.POINT:
        return ProjectivePoint.from_vector(np.append(v, 1.0))
    if abs(np.linalg.norm(v) - 1.0) > TOL.unit_norm:
        raise InvalidState("bearing input to alpha must be unit norm")
    return ProjectivePoint.from_vector(np.append(v, 0.0))


def alpha_bearing(b) -> ProjectivePoint:
    return alpha(b, Kind.BEARING)


def gamma(eta: ProjectivePoint) -> np.ndarray | BearingMeasurement:
    """Return the position of a point-type class or the unsigned direction of a bearing."""
    if eta.is_point:
        return eta.rep[:3] / eta.rep[3]
    return BearingMeasurement(eta.rep[:3])


def beta(v, kind: Kind) -> np.ndarray | BearingMeasurement:
    """Identity on positions, sign quotient on unit bearings."""
    v = _vec(v, 3)
    return v if kind is Kind.POINT else BearingMeasurement(v)


def transform(A, eta: ProjectivePoint) -> ProjectivePoint:
    """Apply a full-rank 4x4 matrix to a projective class."""
    A = np.asarray(A, dtype=float)
    if A.shape != (4, 4):
        raise InvalidState("transform expects a 4x4 matrix")
    if abs(np.linalg.det(A)) <= TOL.singular_det:
        raise SingularMatrix("transform matrix is singular")
    return ProjectivePoint.from_vector(A @ eta.rep)


def exp_so3(phi) -> np.ndarray:
    """Rodrigues exponential of a rotation vector."""
    phi = np.asarray(phi, dtype=float)
    t2 = float(phi @ phi)
    if t2 < 1e-12:
        a, b = 1.0 - t2 / 6.0, 0.5 - t2 / 24.0
    else:
        t = np.sqrt(t2)
        a, b = np.sin(t) / t, (1.0 - np.cos(t)) / t2
    K = skew(phi)
    return np.eye(3) + a * K + b * (K @ K)


def exp_se3(U: Twist, dt: float = 1.0) -> Pose:
    """Closed-form exponential of ``U * dt``."""
    phi = U.omega * dt
    rho = U.v * dt
    t2 = float(phi @ phi)
    if t2 < 1e-12:
        b, c = 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    else:
        t = np.sqrt(t2)
        b = (1.0 - np.cos(t)) / t2
        c = (t - np.sin(t)) / (t2 * t)
    K = skew(phi)
    V = np.eye(3) + b * K + c * (K @ K)
    return Pose._unchecked(exp_so3(phi), V @ rho)


def output_h(P: Pose, eta: ProjectivePoint) -> BearingMeasurement:
    """Body-frame bearing ``(I 0) P^{-1} eta`` as an RP^2 class."""
    body = P.inverse_matrix() @ eta.rep
    if np.linalg.norm(body[:3]) <= TOL.degenerate:
        raise LandmarkAtOrigin("landmark coincides with the camera centre")
    return BearingMeasurement(body[:3])
