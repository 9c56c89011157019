"""Vectorised numpy kernels over stacks of landmarks.

Every function takes row-stacked arrays (leading axis = landmark index) and
returns fresh arrays. Input validation is the caller's job.
"""

import numpy as np

_EYE3 = np.eye(3)
_EYE4 = np.eye(4)


def skew_batch(v):
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def normalize_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def so3_exp_batch(phi):
    """Rodrigues formula for an (n, 3) stack of rotation vectors."""
    theta2 = np.einsum("ni,ni->n", phi, phi)
    theta = np.sqrt(theta2)
    small = theta < 1e-6
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(safe)) / (safe * safe))
    K = skew_batch(phi)
    return _EYE3 + a[:, None, None] * K + b[:, None, None] * (K @ K)


def transform_reps(M, reps):
    return normalize_rows(reps @ M.T)


def upsilon_reps(p_inv, pa, rot, scale, reps):
    """Landmark part of the group action: P A Q_i^{-1} P^{-1} eta_i."""
    body = reps @ p_inv.T
    q = np.einsum("nji,nj->ni", rot, body[:, :3])
    r = body[:, 3] / scale
    moved = np.concatenate([q, r[:, None]], axis=1) @ pa.T
    return normalize_rows(moved)


def lift_w(omega, v, theta):
    q = theta[:, :3]
    r = theta[:, 3]
    qq = np.einsum("ni,ni->n", q, q)
    coef = (r / qq)[:, None]
    w = omega[None, :] - coef * np.cross(v[None, :], q)
    s = -(r / qq) * (q @ v)
    return w, s


def landmark_innovation(y_hat, y, sigma, gain, k):
    yy = np.einsum("ni,ni->n", y, y)
    pi_y = _EYE3 - np.einsum("ni,nj->nij", y, y) / yy[:, None, None]
    pi_y_hat = np.einsum("nij,nj->ni", pi_y, y_hat)
    # K = k Sigma Pi_y G with G = gain * I
    kmat = (k * gain)[:, None, None] * (sigma @ pi_y)
    v = np.einsum("nij,nj->ni", kmat, pi_y_hat)
    w = np.cross(y_hat, v)
    s = -np.einsum("ni,ni->n", y_hat, v)
    return w, s


def riccati_step(sigma, omega, y, k_g, k_h, dt):
    yy = np.einsum("ni,ni->n", y, y)
    pi_y = _EYE3 - np.einsum("ni,nj->nij", y, y) / yy[:, None, None]
    om = skew_batch(omega)
    sp = sigma @ pi_y
    dot = sigma @ om - om @ sigma + k_h * _EYE3 - k_g * (sp @ np.swapaxes(sp, 1, 2))
    out = sigma + dt * dot
    return 0.5 * (out + np.swapaxes(out, 1, 2))


def pose_system(theta, w, s):
    """Stacked weighted residual system (A, b) with residual = A d - b, d = (dR, dx)."""
    n = theta.shape[0]
    q = theta[:, :3]
    r = theta[:, 3]
    norm2 = np.einsum("ni,ni->n", theta, theta)
    proj = _EYE4 - np.einsum("ni,nj->nij", theta, theta) / norm2[:, None, None]
    m = np.zeros((n, 4, 6))
    m[:, :3, :3] = -skew_batch(q)
    m[:, :3, 3:] = r[:, None, None] * _EYE3
    c = np.empty((n, 4))
    c[:, :3] = np.cross(w, q)
    c[:, 3] = s * r
    inv_norm = 1.0 / np.sqrt(norm2)
    a = inv_norm[:, None, None] * (proj @ m)
    b = -inv_norm[:, None] * np.einsum("nij,nj->ni", proj, c)
    return a.reshape(4 * n, 6), b.reshape(4 * n)


def sot_step(rot, scale, w, s, dt):
    return rot @ so3_exp_batch(w * dt), scale * np.exp(s * dt)


def lift_step(rot_e, x_e, theta):
    """SOT(3) factors reproducing the body-frame motion of each landmark over one step.

    For a rigid step ``E = (rot_e, x_e)`` and body coordinates ``(q, r)``, the
    returned ``(R_Q, a)`` satisfies ``Q^{-1} (q, r) ~ E^{-1} (q, r)``; ``R_Q`` is
    ``rot_e`` followed by the smallest rotation that closes the gap.
    """
    q = theta[:, :3]
    r = theta[:, 3]
    q_new = (q - r[:, None] * x_e[None, :]) @ rot_e
    nq = np.linalg.norm(q, axis=1)
    nq_new = np.linalg.norm(q_new, axis=1)
    u = q_new / nq_new[:, None]
    v = (q @ rot_e) / nq[:, None]
    # minimal rotation taking u to v: I + K + K^2 / (1 + c)
    K = skew_batch(np.cross(u, v))
    c = np.einsum("ni,ni->n", u, v)
    corr = _EYE3 + K + (K @ K) / (1.0 + c)[:, None, None]
    return rot_e[None] @ corr, nq_new / nq
