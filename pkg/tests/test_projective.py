import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from _oracles import class_dist, rand_pose, rand_rotation, se3_expm, skew_oracle
from vslam_observer import (
    BearingMeasurement,
    DegenerateVector,
    Kind,
    LandmarkAtOrigin,
    Pose,
    ProjectivePoint,
    SingularMatrix,
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
from vslam_observer.errors import InvalidState

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vec3 = arrays(float, 3, elements=finite)
vec4 = arrays(float, 4, elements=finite)
nonzero3 = vec3.filter(lambda v: np.linalg.norm(v) > 1e-3)
nonzero4 = vec4.filter(lambda v: np.linalg.norm(v) > 1e-3)
scale = st.floats(0.01, 100).flatmap(lambda a: st.sampled_from([a, -a]))


def test_skew_example():
    expected = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
    assert np.array_equal(skew([1, 2, 3]), expected)
    assert np.array_equal(skew(np.zeros(3)), np.zeros((3, 3)))


@given(vec3, vec3)
def test_skew_is_cross_product(w, v):
    assert np.allclose(skew(w) @ v, np.cross(w, v), atol=1e-12 * (1 + np.abs(w).max() * np.abs(v).max()))
    assert np.array_equal(skew(w), -skew(w).T)
    assert np.allclose(vee(skew(w)), w)
    assert np.allclose(skew(w), skew_oracle(w), atol=1e-14)


def test_projector_examples():
    assert np.allclose(projector3([0, 0, 1]), np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(DegenerateVector):
        projector3(np.zeros(3))
    with pytest.raises(DegenerateVector):
        projector4([0, 0, 0, 1e-13])


@given(nonzero3, scale)
def test_projector3_properties(y, a):
    P = projector3(y)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P @ y, 0, atol=1e-12 * np.linalg.norm(y))
    assert np.allclose(projector3(a * y), P, atol=1e-12)
    # projector-skew identity
    assert np.allclose(P, -skew(y) @ skew(y) / (y @ y), atol=1e-12)


@given(nonzero4, scale)
def test_projector4_properties(y, a):
    P = projector4(y)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P @ y, 0, atol=1e-12 * np.linalg.norm(y))
    assert np.allclose(projector4(a * y), P, atol=1e-12)


def test_projector_skew_identity_1000(rng):
    for _ in range(1000):
        y = rng.normal(size=3) * rng.uniform(1e-3, 1e3)
        P = projector3(y)
        assert np.max(np.abs(P + skew(y) @ skew(y) / (y @ y))) < 1e-12


def test_alpha_examples():
    eta = alpha([1, 2, 3])
    assert eta.kind is Kind.POINT
    assert eta.same_class(ProjectivePoint(np.array([1, 2, 3, 1]) / np.sqrt(15), Kind.POINT))
    b = alpha_bearing([0, 0, 1])
    assert b.kind is Kind.BEARING and class_dist(b.rep, [0, 0, 1, 0]) == 0.0
    # the origin is allowed here
    assert alpha([0, 0, 0]).same_class(ProjectivePoint(np.array([0, 0, 0, 1.0]), Kind.POINT))
    with pytest.raises(InvalidState):
        alpha_bearing([0, 0, 2])


def test_gamma_examples():
    assert np.allclose(gamma(ProjectivePoint.from_vector([2, 4, 6, 2])), [1, 2, 3])
    assert gamma(ProjectivePoint.from_vector([0.6, 0.8, 0, 0])) == BearingMeasurement([0.6, 0.8, 0])
    assert np.allclose(gamma(ProjectivePoint.from_vector([-1, -2, -3, -1])), [1, 2, 3])


@given(vec3)
def test_gamma_alpha_is_beta_points(p):
    assert np.allclose(gamma(alpha(p)), beta(p, Kind.POINT), atol=1e-9 * (1 + np.abs(p).max()))


@given(nonzero3)
def test_gamma_alpha_is_beta_bearings(v):
    b = v / np.linalg.norm(v)
    assert gamma(alpha_bearing(b)) == beta(b, Kind.BEARING)
    assert gamma(alpha_bearing(-b)) == beta(b, Kind.BEARING)


def test_projective_point_invariants():
    with pytest.raises(DegenerateVector):
        ProjectivePoint.from_vector(np.zeros(4))
    with pytest.raises(InvalidState):
        ProjectivePoint(np.array([1.0, 0, 0, 0]), Kind.POINT)
    with pytest.raises(InvalidState):
        ProjectivePoint(np.array([2.0, 0, 0, 0]), Kind.BEARING)
    with pytest.raises(InvalidState):
        ProjectivePoint.from_vector([1, 0, 0, np.nan])
    p = ProjectivePoint.from_vector([1, 2, 3, 4])
    assert p == ProjectivePoint.from_vector([-2, -4, -6, -8])
    assert p != ProjectivePoint.from_vector([1, 2, 3, 5])
    assert alpha_bearing([1, 0, 0]) != alpha([1, 0, 0])
    # tiny fourth coordinate is a bearing, stored as exactly zero
    q = ProjectivePoint.from_vector([1, 0, 0, 1e-14])
    assert q.kind is Kind.BEARING and q.rep[3] == 0.0


def test_transform_examples(rng):
    eta = ProjectivePoint.from_vector(rng.normal(size=4))
    assert transform(np.eye(4), eta) == eta
    flipped = ProjectivePoint.from_vector(-3.0 * eta.rep)
    A = rand_pose(rng).matrix
    assert transform(A, eta) == transform(A, flipped)
    P = Pose(np.eye(3), [1, 0, 0])
    assert transform(P.matrix, alpha([0, 0, 0])) == alpha([1, 0, 0])
    with pytest.raises(SingularMatrix):
        transform(np.diag([1, 1, 1, 0.0]), eta)


def test_transform_respects_composition(rng):
    for _ in range(200):
        A = rng.normal(size=(4, 4))
        B = rng.normal(size=(4, 4))
        eta = ProjectivePoint.from_vector(rng.normal(size=4))
        lhs = transform(A @ B, eta)
        rhs = transform(A, transform(B, eta))
        assert class_dist(lhs.rep, rhs.rep) < 1e-10


def test_transform_kind_recomputed():
    # a general matrix can move a bearing off the plane at infinity
    A = np.eye(4)
    A[3, 0] = 1.0
    assert transform(A, alpha_bearing([1, 0, 0])).kind is Kind.POINT


def test_exp_examples():
    assert np.array_equal(exp_se3(Twist.zero(), 0.3).matrix, np.eye(4))
    R = exp_so3([0, 0, np.pi / 2])
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_exp_against_expm(rng):
    for _ in range(200):
        U = Twist(rng.normal(size=3) * rng.choice([1e-9, 1e-4, 1.0, 3.0]), rng.normal(size=3))
        dt = rng.uniform(0.0, 2.0)
        assert np.max(np.abs(exp_se3(U, dt).matrix - se3_expm(U, dt))) < 1e-10
        assert np.max(np.abs(exp_so3(U.omega * dt) - expm(skew_oracle(U.omega * dt)))) < 1e-10


@given(arrays(float, 3, elements=st.floats(-4, 4)))
def test_exp_so3_is_rotation(phi):
    R = exp_so3(phi)
    assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-12
    assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_twist_matrix_bottom_row_zero(rng):
    U = Twist(rng.normal(size=3), rng.normal(size=3))
    m = U.matrix
    assert np.array_equal(m[3], np.zeros(4))
    assert np.array_equal(m[:3, :3], -m[:3, :3].T)


def test_pose_invariants(rng):
    P = rand_pose(rng)
    assert np.array_equal(P.matrix[3], [0, 0, 0, 1])
    assert np.allclose((P @ P.inverse()).matrix, np.eye(4), atol=1e-12)
    assert np.allclose(P.inverse_matrix(), np.linalg.inv(P.matrix), atol=1e-12)
    with pytest.raises(InvalidState):
        Pose(2 * np.eye(3))
    with pytest.raises(InvalidState):
        Pose(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(InvalidState):
        Pose(np.eye(3), [0, np.inf, 0])
    m = P.matrix.copy()
    m[3, 3] = 1.0 + 1e-15
    with pytest.raises(InvalidState):
        Pose.from_matrix(m)


def test_output_h_examples():
    assert output_h(Pose.identity(), alpha([0, 0, 5])) == BearingMeasurement([0, 0, 1])
    assert output_h(Pose.identity(), alpha_bearing([1, 0, 0])) == BearingMeasurement([1, 0, 0])
    with pytest.raises(LandmarkAtOrigin):
        output_h(Pose(np.eye(3), [1, 2, 3]), alpha([1, 2, 3]))


def test_output_h_frame_change_invariance(rng):
    for _ in range(500):
        S = rand_pose(rng)
        P = rand_pose(rng)
        eta = ProjectivePoint.from_vector(np.append(rng.normal(size=3) * 5, rng.choice([0.0, 1.0])))
        lhs = output_h(S.inverse() @ P, transform(S.inverse_matrix(), eta))
        rhs = output_h(P, eta)
        assert class_dist(lhs.rep, rhs.rep) < 1e-12


def test_bearing_measurement_sign_equality():
    assert BearingMeasurement([1, 2, 3]) == BearingMeasurement([-2, -4, -6])
    with pytest.raises(DegenerateVector):
        BearingMeasurement(np.zeros(3))


def test_rotation_generator_sanity(rng):
    R = rand_rotation(rng)
    assert np.allclose(R.T @ R, np.eye(3)) and np.isclose(np.linalg.det(R), 1.0)
