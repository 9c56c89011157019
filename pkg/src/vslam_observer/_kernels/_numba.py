"""Loop-form kernels compiled with numba.

Same contracts as the numpy versions in ``_numpy``; results agree to
rounding (summation order differs).
"""

import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, fastmath=False, nogil=True)


@njit(**_JIT)
def _so3_exp(px, py, pz, out):
    t2 = px * px + py * py + pz * pz
    if t2 < 1e-12:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        t = math.sqrt(t2)
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    out[0, 0] = 1.0 - b * (py * py + pz * pz)
    out[1, 1] = 1.0 - b * (px * px + pz * pz)
    out[2, 2] = 1.0 - b * (px * px + py * py)
    out[0, 1] = -a * pz + b * px * py
    out[1, 0] = a * pz + b * px * py
    out[0, 2] = a * py + b * px * pz
    out[2, 0] = -a * py + b * px * pz
    out[1, 2] = -a * px + b * py * pz
    out[2, 1] = a * px + b * py * pz


@njit(**_JIT)
def so3_exp_batch(phi):
    n = phi.shape[0]
    out = np.empty((n, 3, 3))
    for i in range(n):
        _so3_exp(phi[i, 0], phi[i, 1], phi[i, 2], out[i])
    return out


@njit(**_JIT)
def normalize_rows(x):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        acc = 0.0
        for j in range(x.shape[1]):
            acc += x[i, j] * x[i, j]
        inv = 1.0 / math.sqrt(acc)
        for j in range(x.shape[1]):
            out[i, j] = x[i, j] * inv
    return out


@njit(**_JIT)
def transform_reps(M, reps):
    n = reps.shape[0]
    out = np.empty((n, 4))
    for i in range(n):
        for r in range(4):
            acc = 0.0
            for c in range(4):
                acc += M[r, c] * reps[i, c]
            out[i, r] = acc
    return normalize_rows(out)


@njit(**_JIT)
def upsilon_reps(p_inv, pa, rot, scale, reps):
    n = reps.shape[0]
    out = np.empty((n, 4))
    body = np.empty(4)
    moved = np.empty(4)
    for i in range(n):
        for r in range(4):
            acc = 0.0
            for c in range(4):
                acc += p_inv[r, c] * reps[i, c]
            body[r] = acc
        # Q^{-1} = diag(R^T, 1/a)
        for r in range(3):
            moved[r] = rot[i, 0, r] * body[0] + rot[i, 1, r] * body[1] + rot[i, 2, r] * body[2]
        moved[3] = body[3] / scale[i]
        nrm = 0.0
        for r in range(4):
            acc = 0.0
            for c in range(4):
                acc += pa[r, c] * moved[c]
            out[i, r] = acc
            nrm += acc * acc
        nrm = 1.0 / math.sqrt(nrm)
        for r in range(4):
            out[i, r] *= nrm
    return out


@njit(**_JIT)
def lift_w(omega, v, theta):
    n = theta.shape[0]
    w = np.empty((n, 3))
    s = np.empty(n)
    for i in range(n):
        q0, q1, q2, r = theta[i, 0], theta[i, 1], theta[i, 2], theta[i, 3]
        coef = r / (q0 * q0 + q1 * q1 + q2 * q2)
        w[i, 0] = omega[0] - coef * (v[1] * q2 - v[2] * q1)
        w[i, 1] = omega[1] - coef * (v[2] * q0 - v[0] * q2)
        w[i, 2] = omega[2] - coef * (v[0] * q1 - v[1] * q0)
        s[i] = -coef * (v[0] * q0 + v[1] * q1 + v[2] * q2)
    return w, s


@njit(**_JIT)
def _projector3(y, out):
    yy = y[0] * y[0] + y[1] * y[1] + y[2] * y[2]
    for r in range(3):
        for c in range(3):
            out[r, c] = (1.0 if r == c else 0.0) - y[r] * y[c] / yy


@njit(**_JIT)
def landmark_innovation(y_hat, y, sigma, gain, k):
    n = y.shape[0]
    w = np.empty((n, 3))
    s = np.empty(n)
    pi = np.empty((3, 3))
    u = np.empty(3)
    u2 = np.empty(3)
    v = np.empty(3)
    for i in range(n):
        _projector3(y[i], pi)
        for r in range(3):
            u[r] = pi[r, 0] * y_hat[i, 0] + pi[r, 1] * y_hat[i, 1] + pi[r, 2] * y_hat[i, 2]
        for r in range(3):
            u2[r] = pi[r, 0] * u[0] + pi[r, 1] * u[1] + pi[r, 2] * u[2]
        g = k * gain[i]
        for r in range(3):
            v[r] = g * (sigma[i, r, 0] * u2[0] + sigma[i, r, 1] * u2[1] + sigma[i, r, 2] * u2[2])
        yh = y_hat[i]
        w[i, 0] = yh[1] * v[2] - yh[2] * v[1]
        w[i, 1] = yh[2] * v[0] - yh[0] * v[2]
        w[i, 2] = yh[0] * v[1] - yh[1] * v[0]
        s[i] = -(yh[0] * v[0] + yh[1] * v[1] + yh[2] * v[2])
    return w, s


@njit(**_JIT)
def riccati_step(sigma, omega, y, k_g, k_h, dt):
    m = sigma.shape[0]
    out = np.empty_like(sigma)
    pi = np.empty((3, 3))
    sp = np.empty((3, 3))
    om = np.zeros((3, 3))
    om[0, 1] = -omega[2]
    om[0, 2] = omega[1]
    om[1, 0] = omega[2]
    om[1, 2] = -omega[0]
    om[2, 0] = -omega[1]
    om[2, 1] = omega[0]
    for i in range(m):
        S = sigma[i]
        _projector3(y[i], pi)
        for r in range(3):
            for c in range(3):
                sp[r, c] = S[r, 0] * pi[0, c] + S[r, 1] * pi[1, c] + S[r, 2] * pi[2, c]
        for r in range(3):
            for c in range(3):
                comm = 0.0
                quad = 0.0
                for j in range(3):
                    comm += S[r, j] * om[j, c] - om[r, j] * S[j, c]
                    quad += sp[r, j] * sp[c, j]
                h = k_h if r == c else 0.0
                out[i, r, c] = S[r, c] + dt * (comm + h - k_g * quad)
        for r in range(3):
            for c in range(r + 1, 3):
                avg = 0.5 * (out[i, r, c] + out[i, c, r])
                out[i, r, c] = avg
                out[i, c, r] = avg
    return out


@njit(**_JIT)
def pose_system(theta, w, s):
    n = theta.shape[0]
    a = np.zeros((4 * n, 6))
    b = np.empty(4 * n)
    m = np.zeros((4, 6))
    c = np.empty(4)
    for i in range(n):
        q0, q1, q2, r = theta[i, 0], theta[i, 1], theta[i, 2], theta[i, 3]
        norm2 = q0 * q0 + q1 * q1 + q2 * q2 + r * r
        inv_norm = 1.0 / math.sqrt(norm2)
        # rows 0..2: -q^x | r I
        m[0, 0] = 0.0
        m[0, 1] = q2
        m[0, 2] = -q1
        m[1, 0] = -q2
        m[1, 1] = 0.0
        m[1, 2] = q0
        m[2, 0] = q1
        m[2, 1] = -q0
        m[2, 2] = 0.0
        for j in range(3):
            for kk in range(3):
                m[j, 3 + kk] = r if j == kk else 0.0
        c[0] = w[i, 1] * q2 - w[i, 2] * q1
        c[1] = w[i, 2] * q0 - w[i, 0] * q2
        c[2] = w[i, 0] * q1 - w[i, 1] * q0
        c[3] = s[i] * r
        for row in range(4):
            th_row = theta[i, row]
            for col in range(6):
                acc = m[row, col]
                for j in range(4):
                    acc -= th_row * theta[i, j] * m[j, col] / norm2
                a[4 * i + row, col] = inv_norm * acc
            acc = c[row]
            for j in range(4):
                acc -= th_row * theta[i, j] * c[j] / norm2
            b[4 * i + row] = -inv_norm * acc
    return a, b


@njit(**_JIT)
def sot_step(rot, scale, w, s, dt):
    n = rot.shape[0]
    out_r = np.empty_like(rot)
    out_a = np.empty_like(scale)
    e = np.empty((3, 3))
    for i in range(n):
        _so3_exp(w[i, 0] * dt, w[i, 1] * dt, w[i, 2] * dt, e)
        for r in range(3):
            for c in range(3):
                out_r[i, r, c] = rot[i, r, 0] * e[0, c] + rot[i, r, 1] * e[1, c] + rot[i, r, 2] * e[2, c]
        out_a[i] = scale[i] * math.exp(s[i] * dt)
    return out_r, out_a


@njit(**_JIT)
def lift_step(rot_e, x_e, theta):
    n = theta.shape[0]
    out_r = np.empty((n, 3, 3))
    out_a = np.empty(n)
    u = np.empty(3)
    v = np.empty(3)
    corr = np.empty((3, 3))
    for i in range(n):
        r = theta[i, 3]
        nq = 0.0
        nqn = 0.0
        for c in range(3):
            acc_u = 0.0
            acc_v = 0.0
            for j in range(3):
                acc_u += (theta[i, j] - r * x_e[j]) * rot_e[j, c]
                acc_v += theta[i, j] * rot_e[j, c]
            u[c] = acc_u
            v[c] = acc_v
            nq += theta[i, c] * theta[i, c]
        for c in range(3):
            nqn += u[c] * u[c]
        nq = math.sqrt(nq)
        nqn = math.sqrt(nqn)
        for c in range(3):
            u[c] /= nqn
            v[c] /= nq
        k0 = u[1] * v[2] - u[2] * v[1]
        k1 = u[2] * v[0] - u[0] * v[2]
        k2 = u[0] * v[1] - u[1] * v[0]
        f = 1.0 / (1.0 + u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
        corr[0, 0] = 1.0 - f * (k1 * k1 + k2 * k2)
        corr[1, 1] = 1.0 - f * (k0 * k0 + k2 * k2)
        corr[2, 2] = 1.0 - f * (k0 * k0 + k1 * k1)
        corr[0, 1] = -k2 + f * k0 * k1
        corr[1, 0] = k2 + f * k0 * k1
        corr[0, 2] = k1 + f * k0 * k2
        corr[2, 0] = -k1 + f * k0 * k2
        corr[1, 2] = -k0 + f * k1 * k2
        corr[2, 1] = k0 + f * k1 * k2
        for a in range(3):
            for b in range(3):
                out_r[i, a, b] = rot_e[a, 0] * corr[0, b] + rot_e[a, 1] * corr[1, b] + rot_e[a, 2] * corr[2, b]
        out_a[i] = nqn / nq
    return out_r, out_a
