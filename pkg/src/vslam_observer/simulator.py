"""Ground-truth simulation, reference construction and convergence monitors.

The default :class:`ScenarioConfig` is a camera circling at 3 m height with
constant body twist ``omega = (0, 0, -0.5)`` rad/s, ``v = (1.5, 0, 0)`` m/s,
observing four points and two bearings.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .errors import (
    DegenerateReference,
    EmptyHistory,
    InsufficientHistory,
    InvalidState,
    LandmarkAtOrigin,
    ValidationError,
)
from .observer import GainConfig, ObserverState, estimated_state, measure, observer_step
from .projective import Pose, Twist, alpha, alpha_bearing, check_rotation, exp_se3
from .symmetry import TotalState
from .tolerances import TOL

log = logging.getLogger(__name__)

REFERENCE_MODES = ("kind_matched", "literal")

DEFAULT_POINTS = ((4.0, 4.0, 0.0), (-4.0, 4.0, 0.0), (-4.0, -4.0, 0.0), (4.0, -4.0, 0.0))
DEFAULT_BEARINGS = ((0.0, 0.0, -1.0), (1.0, 0.0, 0.0))
# Body x is the heading (0, -1, 0), body z is world up: clockwise circle of radius 3 about the z-axis.
DEFAULT_ROTATION = ((0.0, 1.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 0.0, 1.0))


def _arr(x, shape=None):
    a = np.array(x, dtype=float)
    if shape is not None:
        a = a.reshape(shape)
    return a


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    points: np.ndarray = field(default_factory=lambda: _arr(DEFAULT_POINTS))
    bearings: np.ndarray = field(default_factory=lambda: _arr(DEFAULT_BEARINGS))
    initial_position: np.ndarray = field(default_factory=lambda: _arr((3.0, 0.0, 3.0)))
    initial_rotation: np.ndarray = field(default_factory=lambda: _arr(DEFAULT_ROTATION))
    angular_velocity: np.ndarray = field(default_factory=lambda: _arr((0.0, 0.0, -0.5)))
    linear_velocity: np.ndarray = field(default_factory=lambda: _arr((1.5, 0.0, 0.0)))
    dt: float = 0.02
    duration: float = 40.0
    epsilon_bound: float = 0.1
    seed: int = 0
    gains: GainConfig = field(default_factory=GainConfig)
    reference_mode: str = "kind_matched"
    camera_matrix: np.ndarray | None = None
    pe_window: float = 2.0

    def __post_init__(self):
        try:
            pts = _arr(self.points).reshape(-1, 3)
            brs = _arr(self.bearings).reshape(-1, 3)
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "bearings", brs)
            for name in ("initial_position", "angular_velocity", "linear_velocity"):
                object.__setattr__(self, name, _arr(getattr(self, name), (3,)))
            object.__setattr__(self, "initial_rotation", check_rotation(self.initial_rotation))
            if self.camera_matrix is not None:
                K = _arr(self.camera_matrix, (3, 3))
                if abs(np.linalg.det(K)) <= TOL.singular_det:
                    raise ValidationError("camera_matrix must be invertible")
                object.__setattr__(self, "camera_matrix", K)
        except (ValueError, InvalidState) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(str(exc)) from exc
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not (np.isfinite(self.duration) and self.duration >= 0):
            raise ValidationError(f"duration must be >= 0, got {self.duration}")
        if not (self.epsilon_bound >= 0):
            raise ValidationError("epsilon_bound must be >= 0")
        if not self.pe_window > 0:
            raise ValidationError("pe_window must be > 0")
        if self.reference_mode not in REFERENCE_MODES:
            raise ValidationError(f"reference_mode must be one of {REFERENCE_MODES}")
        if len(self.points) + len(self.bearings) == 0:
            raise ValidationError("at least one landmark is required")
        nb = np.linalg.norm(self.bearings, axis=1)
        if np.any(np.abs(nb - 1.0) > TOL.unit_norm):
            raise ValidationError("bearing directions must be unit norm")
        if np.any(np.linalg.norm(self.points - self.initial_position, axis=1) <= TOL.degenerate):
            raise ValidationError("a point landmark coincides with the initial camera origin")
        if not all(np.all(np.isfinite(a)) for a in (self.points, self.bearings)):
            raise ValidationError("landmarks must be finite")

    @property
    def twist(self) -> Twist:
        return Twist(self.angular_velocity, self.linear_velocity)

    @property
    def initial_pose(self) -> Pose:
        return Pose(self.initial_rotation, self.initial_position)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def n(self) -> int:
        return len(self.points) + len(self.bearings)


def initial_truth(cfg: ScenarioConfig) -> TotalState:
    marks = [alpha(p) for p in cfg.points] + [alpha_bearing(b) for b in cfg.bearings]
    return TotalState.from_landmarks(cfg.initial_pose, marks)


def propagate_truth(xi: TotalState, U: Twist, dt: float) -> TotalState:
    """Move the robot by ``exp(U dt)`` in its body frame; landmarks are static."""
    return TotalState._unchecked(xi.pose @ exp_se3(U, dt), xi.reps, xi.is_point)


def synthesize_measurements(xi: TotalState, camera_matrix=None) -> np.ndarray:
    """Unit body-frame bearings, shape ``(n, 3)``.

    With ``camera_matrix`` the bearings go through pixel coordinates
    ``(K 0) P^{-1} eta`` and back through ``K^{-1}``.
    """
    theta, y = measure(xi)
    if np.any(np.linalg.norm(theta[:, :3], axis=1) <= TOL.degenerate):
        raise LandmarkAtOrigin("landmark at the camera centre")
    if camera_matrix is None:
        return y
    K = np.asarray(camera_matrix, dtype=float)
    pixels = theta[:, :3] @ K.T
    back = np.linalg.solve(K, pixels.T).T
    return kern.normalize_rows(np.ascontiguousarray(back))


def build_reference(xi0: TotalState, eps, literal: bool = False) -> TotalState:
    """Reference configuration at identity pose from perturbed initial bearings.

    Point landmarks become ``alpha(2 (b_i + eps_i))``, with ``b_i`` the
    measured bearing oriented towards positive depth. Bearing landmarks become
    the normalised perturbed direction, embedded as bearings. With
    ``literal=True`` every landmark, bearings included, is embedded as a point.
    """
    eps = np.asarray(eps, dtype=float).reshape(xi0.n, 3)
    theta, y = measure(xi0)
    marks = []
    for i in range(xi0.n):
        b = y[i]
        if xi0.is_point[i] and theta[i, 3] < 0:
            b = -b
        d = b + eps[i]
        nd = np.linalg.norm(d)
        if nd <= TOL.reference_min_norm:
            raise DegenerateReference(f"perturbed bearing of landmark {i} vanishes")
        if xi0.is_point[i] or literal:
            marks.append(alpha(2.0 * d))
        else:
            marks.append(alpha_bearing(d / nd))
    return TotalState.from_landmarks(Pose.identity(), marks)


def draw_epsilon(cfg: ScenarioConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    return rng.uniform(-cfg.epsilon_bound, cfg.epsilon_bound, size=(cfg.n, 3))


def lyapunov_monitor(xi: TotalState, obs: ObserverState) -> tuple[np.ndarray, float]:
    """Per-landmark storage ``l_i`` and their sum.

    Point landmarks (point-type in both truth and estimate):
    ``0.5 e^T Sigma^{-1} e`` with ``e`` the difference of body-frame positions.
    Otherwise the squared-cosine storage ``0.5 (1 - (y . y_hat)^2)``.
    """
    theta, y = measure(xi)
    theta_hat, y_hat = measure(estimated_state(obs))
    l = np.empty(xi.n)
    both = xi.is_point & obs.is_point
    c = np.einsum("ni,ni->n", y, y_hat)
    l[:] = np.maximum(0.5 * (1.0 - c * c), 0.0)
    if np.any(both):
        idx = np.flatnonzero(both)
        e = theta_hat[idx, :3] / theta_hat[idx, 3:] - theta[idx, :3] / theta[idx, 3:]
        sig = obs.sigma[idx]
        sol = np.linalg.solve(sig, e[:, :, None])[:, :, 0]
        l[idx] = 0.5 * np.einsum("ni,ni->n", e, sol)
    return l, float(l.sum())


def pe_monitor(times, world_bearings, window: float) -> np.ndarray:
    """Empirical excitation level per landmark.

    ``world_bearings`` has shape ``(T, n, 3)`` (samples of ``R_P y_i``).
    Returns the minimum eigenvalue of the trapezoidal average of
    ``Pi_{R_P y_i}`` over the trailing ``window`` seconds.
    """
    times = np.asarray(times, dtype=float)
    wb = np.asarray(world_bearings, dtype=float)
    if times.size < 2 or times[-1] - times[0] < window * (1.0 - 1e-9):
        raise InsufficientHistory(f"need {window} s of history")
    start = np.searchsorted(times, times[-1] - window * (1.0 + 1e-9))
    t = times[start:]
    u = wb[start:]
    u = u / np.linalg.norm(u, axis=2, keepdims=True)
    proj = np.eye(3) - np.einsum("tni,tnj->tnij", u, u)
    avg = np.trapezoid(proj, t, axis=0) / (t[-1] - t[0])
    # a PSD average; clip round-off below zero
    return np.maximum(np.linalg.eigvalsh(avg)[:, 0], 0.0)


def align_trajectories(true_poses, est_poses, est_landmarks=None):
    """Left-apply ``S = P(T) P_hat(T)^{-1}`` to the whole estimated history.

    ``true_poses`` and ``est_poses`` are sequences of 4x4 matrices;
    ``est_landmarks`` is an optional ``(T, n, 4)`` stack of representatives.
    Returns ``(aligned_poses, aligned_landmarks)``.
    """
    if len(true_poses) == 0 or len(est_poses) == 0:
        raise EmptyHistory("cannot align empty histories")
    if len(true_poses) != len(est_poses):
        raise InvalidState("histories differ in length")
    S = np.asarray(true_poses[-1]) @ Pose.from_matrix(est_poses[-1]).inverse_matrix()
    poses = np.einsum("ij,tjk->tik", S, np.asarray(est_poses, dtype=float))
    marks = None
    if est_landmarks is not None:
        lm = np.asarray(est_landmarks, dtype=float)
        moved = np.einsum("ij,tnj->tni", S, lm)
        marks = moved / np.linalg.norm(moved, axis=2, keepdims=True)
    return poses, marks


@dataclass(eq=False)
class FrameRecord:
    t: float
    true_pose: np.ndarray
    est_pose: np.ndarray
    est_landmarks: np.ndarray
    l: np.ndarray
    V: float
    mu: np.ndarray
    sigma_min: float
    sigma_max: float
    est_pose_aligned: np.ndarray | None = None
    est_landmarks_aligned: np.ndarray | None = None


def _sigma_extrema(sigma: np.ndarray) -> tuple[float, float]:
    if sigma.shape[0] == 0:
        return float("nan"), float("nan")
    eig = np.linalg.eigvalsh(sigma)
    return float(eig[:, 0].min()), float(eig[:, -1].max())


def run_simulation(
    cfg: ScenarioConfig,
    innovation: bool = True,
    reference: TotalState | None = None,
) -> list[FrameRecord]:
    """Simulate truth and observer; one record at t = 0 and after every step.

    A run with zero steps returns an empty list. ``reference`` overrides the
    perturbed reference built from ``cfg``.
    """
    n_steps = cfg.n_steps
    if n_steps == 0:
        return []
    xi = initial_truth(cfg)
    U = cfg.twist
    if reference is None:
        reference = build_reference(xi, draw_epsilon(cfg), literal=cfg.reference_mode == "literal")
    obs = ObserverState.initial(reference, cfg.gains)

    window_len = int(round(cfg.pe_window / cfg.dt)) + 1
    times: list[float] = []
    wbear: list[np.ndarray] = []
    records: list[FrameRecord] = []
    mu_min = np.full(cfg.n, np.inf)

    def record(t, xi, obs, y):
        times.append(t)
        wbear.append(y @ xi.pose.R.T)
        if len(times) > window_len:
            del times[0], wbear[0]
        try:
            mu = pe_monitor(times, np.array(wbear), cfg.pe_window)
            np.minimum(mu_min, mu, out=mu_min)
        except InsufficientHistory:
            mu = np.full(cfg.n, np.nan)
        l, V = lyapunov_monitor(xi, obs)
        smin, smax = _sigma_extrema(obs.sigma)
        xi_hat = estimated_state(obs)
        records.append(
            FrameRecord(t, xi.pose.matrix, xi_hat.pose.matrix, xi_hat.reps, l, V, mu, smin, smax)
        )

    y = synthesize_measurements(xi, cfg.camera_matrix)
    record(0.0, xi, obs, y)
    for step in range(1, n_steps + 1):
        obs = observer_step(obs, U, y, cfg.dt, innovation=innovation)
        xi = propagate_truth(xi, U, cfg.dt)
        y = synthesize_measurements(xi, cfg.camera_matrix)
        record(step * cfg.dt, xi, obs, y)

    weak = np.flatnonzero(xi.is_point & np.isfinite(mu_min) & (mu_min <= 1e-6))
    if weak.size:
        log.warning("persistence of excitation weak for point landmarks %s", weak.tolist())

    aligned_poses, aligned_marks = align_trajectories(
        [r.true_pose for r in records],
        [r.est_pose for r in records],
        np.array([r.est_landmarks for r in records]),
    )
    for r, p, m in zip(records, aligned_poses, aligned_marks):
        r.est_pose_aligned = p
        r.est_landmarks_aligned = m
    return records


def fit_log_decay(times, V, floor: float = TOL.log_floor):
    """Least-squares line through ``log10 V`` on samples with ``V > floor``.

    Returns ``(slope, r_squared, n_samples)``; slope and R^2 are ``None`` when
    fewer than 10 samples qualify.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(V, dtype=float)
    mask = v > floor
    n = int(mask.sum())
    if n < 10:
        return None, None, n
    x = t[mask]
    y = np.log10(v[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2, n


def landmark_errors(truth: TotalState, est_reps: np.ndarray) -> np.ndarray:
    """Per-landmark error of aligned estimates against the true map.

    Point landmarks: Euclidean distance in metres (``inf`` if the estimate
    has degenerated to a bearing). Bearing landmarks: unsigned angle in
    radians between the directions.
    """
    est = np.asarray(est_reps, dtype=float)
    err = np.empty(truth.n)
    for i in range(truth.n):
        t, e = truth.reps[i], est[i]
        if truth.is_point[i]:
            if abs(e[3]) <= TOL.bearing_w:
                err[i] = np.inf
            else:
                err[i] = np.linalg.norm(e[:3] / e[3] - t[:3] / t[3])
        else:
            cross = np.linalg.norm(np.cross(t[:3], e[:3]))
            err[i] = np.arctan2(cross, abs(float(t[:3] @ e[:3])))
    return err
