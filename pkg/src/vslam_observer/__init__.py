"""Equivariant observer for visual SLAM with point and bearing landmarks.

The observer state lives on the symmetry group SE(3) x SOT(3)^n; landmarks
are classes in RP^3 so that points and directions at infinity share one
representation. Hot per-landmark loops are compiled with numba when
available (``VSLAM_OBSERVER_BACKEND=numpy`` forces the pure-numpy kernels).
"""

from ._kernels import BACKEND
from .errors import (
    DegenerateReference,
    DegenerateVector,
    DimensionMismatch,
    EmptyHistory,
    InsufficientHistory,
    InvalidState,
    LandmarkAtOrigin,
    OriginLandmark,
    ParseError,
    RiccatiBlowup,
    SingularMatrix,
    ValidationError,
    VslamError,
)
from .observer import (
    GainConfig,
    InnovationBundle,
    ObserverState,
    compute_innovation,
    estimated_state,
    landmark_innovation,
    observer_step,
    pose_innovation,
    pose_innovation_cost,
    riccati_step,
)
from .projective import (
    BearingMeasurement,
    Kind,
    Pose,
    ProjectivePoint,
    Twist,
    alpha,
    alpha_bearing,
    beta,
    exp_se3,
    exp_so3,
    gamma,
    output_h,
    projector3,
    projector4,
    skew,
    transform,
    vee,
)
from .simulator import (
    FrameRecord,
    ScenarioConfig,
    align_trajectories,
    build_reference,
    lyapunov_monitor,
    pe_monitor,
    run_simulation,
    synthesize_measurements,
)
from .symmetry import (
    SotElement,
    SotVelocity,
    TotalState,
    VslamGroupElement,
    VslamVelocity,
    action_upsilon,
    group_compose,
    group_exp,
    group_inverse,
    lift_lambda,
    lift_W,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
