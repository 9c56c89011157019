"""Numerical thresholds used across the package, kept in one place."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    orthonormal: float = 1e-9  # |R^T R - I|_F and |det R - 1|
    unit_norm: float = 1e-9  # bearing inputs to alpha
    degenerate: float = 1e-12  # |y| below this is treated as zero
    bearing_w: float = 1e-12  # |rep_4| below this marks a bearing
    singular_det: float = 1e-12
    class_equal: float = 1e-9  # default for projective class comparison
    symmetric: float = 1e-9
    riccati_min_eig: float = 1e-12
    riccati_max_eig: float = 1e12
    lstsq_rcond: float = 1e-10
    reference_min_norm: float = 1e-9
    log_floor: float = 1e-10  # V below this is excluded from the decay fit


TOL = Tolerances()
