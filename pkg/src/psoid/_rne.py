"""Recursive Newton-Euler kernels (standard DH), batched over samples.

Two interchangeable implementations live here:

* ``rne_loops`` / ``cost_loops``: scalar loops, compiled with numba when it
  is available (they still run, slowly, as plain Python otherwise).
* ``rne_numpy`` / ``cost_numpy``: vectorized over the sample axis with numpy.

``rne_batch`` and ``cost_batch`` dispatch to whichever backend is active.

Flat parameter layout per link (12 values)::

    m, sx, sy, sz, Ixx, Iyy, Izz, Ixy, Iyz, Ixz, fc, fv

Inertia is about the center of mass in the link frame; the products are the
off-diagonal tensor entries as stored (no sign flip).
"""
import numpy as np

from ._accel import HAS_NUMBA, njit

NPARAM = 12


# ---------------------------------------------------------------------------
# loop kernels (numba)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(cache=True, nogil=True)
def _rne_sample(a, alpha, d, theta0, prismatic, gravity, p, q, qd, qdd, tau, R, ps, w, wd, vd, Fm, Nm):
    n = a.shape[0]
    # link rotations and p* (origin of frame i seen from frame i-1, in frame i)
    for i in range(n):
        if prismatic[i]:
            th = theta0[i]
            di = d[i] + q[i]
        else:
            th = theta0[i] + q[i]
            di = d[i]
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(alpha[i]), np.sin(alpha[i])
        R[i, 0, 0] = ct
        R[i, 0, 1] = -st * ca
        R[i, 0, 2] = st * sa
        R[i, 1, 0] = st
        R[i, 1, 1] = ct * ca
        R[i, 1, 2] = -ct * sa
        R[i, 2, 0] = 0.0
        R[i, 2, 1] = sa
        R[i, 2, 2] = ca
        ps[i, 0] = a[i]
        ps[i, 1] = di * sa
        ps[i, 2] = di * ca

    # outward pass
    w0, w1, w2 = 0.0, 0.0, 0.0
    wd0, wd1, wd2 = 0.0, 0.0, 0.0
    v0, v1, v2 = -gravity[0], -gravity[1], -gravity[2]
    for i in range(n):
        # Rᵀ applied to vectors expressed in frame i-1
        if prismatic[i]:
            pw0, pw1, pw2 = w0, w1, w2
            pwd0, pwd1, pwd2 = wd0, wd1, wd2
            pv0, pv1, pv2 = v0, v1, v2 + qdd[i]
        else:
            pw0, pw1, pw2 = w0, w1, w2 + qd[i]
            c0, c1, c2 = _cross(w0, w1, w2, 0.0, 0.0, qd[i])
            pwd0, pwd1, pwd2 = wd0 + c0, wd1 + c1, wd2 + c2 + qdd[i]
            pv0, pv1, pv2 = v0, v1, v2
        nw0 = R[i, 0, 0] * pw0 + R[i, 1, 0] * pw1 + R[i, 2, 0] * pw2
        nw1 = R[i, 0, 1] * pw0 + R[i, 1, 1] * pw1 + R[i, 2, 1] * pw2
        nw2 = R[i, 0, 2] * pw0 + R[i, 1, 2] * pw1 + R[i, 2, 2] * pw2
        nwd0 = R[i, 0, 0] * pwd0 + R[i, 1, 0] * pwd1 + R[i, 2, 0] * pwd2
        nwd1 = R[i, 0, 1] * pwd0 + R[i, 1, 1] * pwd1 + R[i, 2, 1] * pwd2
        nwd2 = R[i, 0, 2] * pwd0 + R[i, 1, 2] * pwd1 + R[i, 2, 2] * pwd2
        nv0 = R[i, 0, 0] * pv0 + R[i, 1, 0] * pv1 + R[i, 2, 0] * pv2
        nv1 = R[i, 0, 1] * pv0 + R[i, 1, 1] * pv1 + R[i, 2, 1] * pv2
        nv2 = R[i, 0, 2] * pv0 + R[i, 1, 2] * pv1 + R[i, 2, 2] * pv2
        s0, s1, s2 = ps[i, 0], ps[i, 1], ps[i, 2]
        c0, c1, c2 = _cross(nwd0, nwd1, nwd2, s0, s1, s2)
        e0, e1, e2 = _cross(nw0, nw1, nw2, s0, s1, s2)
        f0, f1, f2 = _cross(nw0, nw1, nw2, e0, e1, e2)
        nv0 += c0 + f0
        nv1 += c1 + f1
        nv2 += c2 + f2
        if prismatic[i]:
            # Coriolis term 2 ω × (Rᵀ z0 q̇)
            z0, z1, z2 = R[i, 2, 0] * qd[i], R[i, 2, 1] * qd[i], R[i, 2, 2] * qd[i]
            g0, g1, g2 = _cross(nw0, nw1, nw2, z0, z1, z2)
            nv0 += 2.0 * g0
            nv1 += 2.0 * g1
            nv2 += 2.0 * g2
        w0, w1, w2 = nw0, nw1, nw2
        wd0, wd1, wd2 = nwd0, nwd1, nwd2
        v0, v1, v2 = nv0, nv1, nv2
        w[i, 0], w[i, 1], w[i, 2] = w0, w1, w2
        wd[i, 0], wd[i, 1], wd[i, 2] = wd0, wd1, wd2
        vd[i, 0], vd[i, 1], vd[i, 2] = v0, v1, v2

        k = NPARAM * i
        m = p[k]
        r0, r1, r2 = p[k + 1], p[k + 2], p[k + 3]
        ixx, iyy, izz = p[k + 4], p[k + 5], p[k + 6]
        ixy, iyz, ixz = p[k + 7], p[k + 8], p[k + 9]
        c0, c1, c2 = _cross(wd0, wd1, wd2, r0, r1, r2)
        e0, e1, e2 = _cross(w0, w1, w2, r0, r1, r2)
        f0, f1, f2 = _cross(w0, w1, w2, e0, e1, e2)
        Fm[i, 0] = m * (c0 + f0 + v0)
        Fm[i, 1] = m * (c1 + f1 + v1)
        Fm[i, 2] = m * (c2 + f2 + v2)
        iw0 = ixx * w0 + ixy * w1 + ixz * w2
        iw1 = ixy * w0 + iyy * w1 + iyz * w2
        iw2 = ixz * w0 + iyz * w1 + izz * w2
        g0, g1, g2 = _cross(w0, w1, w2, iw0, iw1, iw2)
        Nm[i, 0] = ixx * wd0 + ixy * wd1 + ixz * wd2 + g0
        Nm[i, 1] = ixy * wd0 + iyy * wd1 + iyz * wd2 + g1
        Nm[i, 2] = ixz * wd0 + iyz * wd1 + izz * wd2 + g2

    # inward pass
    f0, f1, f2 = 0.0, 0.0, 0.0
    m0, m1, m2 = 0.0, 0.0, 0.0
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            j = i + 1
            rf0 = R[j, 0, 0] * f0 + R[j, 0, 1] * f1 + R[j, 0, 2] * f2
            rf1 = R[j, 1, 0] * f0 + R[j, 1, 1] * f1 + R[j, 1, 2] * f2
            rf2 = R[j, 2, 0] * f0 + R[j, 2, 1] * f1 + R[j, 2, 2] * f2
            rm0 = R[j, 0, 0] * m0 + R[j, 0, 1] * m1 + R[j, 0, 2] * m2
            rm1 = R[j, 1, 0] * m0 + R[j, 1, 1] * m1 + R[j, 1, 2] * m2
            rm2 = R[j, 2, 0] * m0 + R[j, 2, 1] * m1 + R[j, 2, 2] * m2
        else:
            rf0, rf1, rf2 = 0.0, 0.0, 0.0
            rm0, rm1, rm2 = 0.0, 0.0, 0.0
        s0, s1, s2 = ps[i, 0], ps[i, 1], ps[i, 2]
        k = NPARAM * i
        c0, c1, c2 = _cross(s0, s1, s2, rf0, rf1, rf2)
        e0, e1, e2 = _cross(s0 + p[k + 1], s1 + p[k + 2], s2 + p[k + 3], Fm[i, 0], Fm[i, 1], Fm[i, 2])
        m0 = rm0 + c0 + e0 + Nm[i, 0]
        m1 = rm1 + c1 + e1 + Nm[i, 1]
        m2 = rm2 + c2 + e2 + Nm[i, 2]
        f0 = rf0 + Fm[i, 0]
        f1 = rf1 + Fm[i, 1]
        f2 = rf2 + Fm[i, 2]
        # joint axis z_{i-1} expressed in frame i is the last row of R_i
        if prismatic[i]:
            t = R[i, 2, 0] * f0 + R[i, 2, 1] * f1 + R[i, 2, 2] * f2
        else:
            t = R[i, 2, 0] * m0 + R[i, 2, 1] * m1 + R[i, 2, 2] * m2
        v = qd[i]
        sgn = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
        tau[i] = t + p[k + 10] * sgn + p[k + 11] * v


@njit(cache=True, nogil=True)
def rne_loops(a, alpha, d, theta0, prismatic, gravity, p, Q, QD, QDD):
    N, n = Q.shape
    out = np.empty((N, n))
    R = np.empty((n, 3, 3))
    ps = np.empty((n, 3))
    w = np.empty((n, 3))
    wd = np.empty((n, 3))
    vd = np.empty((n, 3))
    Fm = np.empty((n, 3))
    Nm = np.empty((n, 3))
    for s in range(N):
        _rne_sample(a, alpha, d, theta0, prismatic, gravity, p, Q[s], QD[s], QDD[s], out[s], R, ps, w, wd, vd, Fm, Nm)
    return out


@njit(cache=True, nogil=True)
def cost_loops(a, alpha, d, theta0, prismatic, gravity, P, Q, QD, QDD, TAU):
    """Frobenius norm of the prediction error for each row of ``P``."""
    K = P.shape[0]
    N, n = Q.shape
    out = np.empty(K)
    tau = np.empty(n)
    R = np.empty((n, 3, 3))
    ps = np.empty((n, 3))
    w = np.empty((n, 3))
    wd = np.empty((n, 3))
    vd = np.empty((n, 3))
    Fm = np.empty((n, 3))
    Nm = np.empty((n, 3))
    for k in range(K):
        acc = 0.0
        for s in range(N):
            _rne_sample(a, alpha, d, theta0, prismatic, gravity, P[k], Q[s], QD[s], QDD[s], tau, R, ps, w, wd, vd, Fm, Nm)
            for j in range(n):
                e = TAU[s, j] - tau[j]
                acc += e * e
        out[k] = np.sqrt(acc)
    return out


# ---------------------------------------------------------------------------
# vectorized numpy path
# ---------------------------------------------------------------------------


def _rt(R, v):
    # Rᵀ v, batched
    return np.einsum("bji,bj->bi", R, v)


def _r(R, v):
    return np.einsum("bij,bj->bi", R, v)


def rne_numpy(a, alpha, d, theta0, prismatic, gravity, p, Q, QD, QDD):
    Q = np.asarray(Q, dtype=float)
    QD = np.asarray(QD, dtype=float)
    QDD = np.asarray(QDD, dtype=float)
    B, n = Q.shape
    P = np.asarray(p, dtype=float).reshape(n, NPARAM)

    th = np.where(prismatic, theta0, theta0 + Q)
    dd = np.where(prismatic, d + Q, d)
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(alpha), np.sin(alpha)
    R = np.empty((B, n, 3, 3))
    R[..., 0, 0] = ct
    R[..., 0, 1] = -st * ca
    R[..., 0, 2] = st * sa
    R[..., 1, 0] = st
    R[..., 1, 1] = ct * ca
    R[..., 1, 2] = -ct * sa
    R[..., 2, 0] = 0.0
    R[..., 2, 1] = sa
    R[..., 2, 2] = ca
    pstar = np.stack([np.broadcast_to(a, (B, n)), dd * sa, dd * ca], axis=-1)

    z0 = np.zeros((B, 3))
    z0[:, 2] = 1.0
    w = np.zeros((B, 3))
    wd = np.zeros((B, 3))
    vd = np.broadcast_to(-np.asarray(gravity, dtype=float), (B, 3)).copy()
    F = np.empty((B, n, 3))
    Nm = np.empty((B, n, 3))
    for i in range(n):
        Ri = R[:, i]
        ps = pstar[:, i]
        if prismatic[i]:
            w_new = _rt(Ri, w)
            wd_new = _rt(Ri, wd)
            vd_new = (
                _rt(Ri, vd + z0 * QDD[:, i, None])
                + np.cross(wd_new, ps)
                + 2.0 * np.cross(w_new, _rt(Ri, z0 * QD[:, i, None]))
                + np.cross(w_new, np.cross(w_new, ps))
            )
        else:
            w_new = _rt(Ri, w + z0 * QD[:, i, None])
            wd_new = _rt(Ri, wd + z0 * QDD[:, i, None] + np.cross(w, z0 * QD[:, i, None]))
            vd_new = np.cross(wd_new, ps) + np.cross(w_new, np.cross(w_new, ps)) + _rt(Ri, vd)
        w, wd, vd = w_new, wd_new, vd_new

        m = P[i, 0]
        r = P[i, 1:4]
        ixx, iyy, izz, ixy, iyz, ixz = P[i, 4:10]
        I = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
        vc = np.cross(wd, r) + np.cross(w, np.cross(w, r)) + vd
        F[:, i] = m * vc
        Nm[:, i] = wd @ I + np.cross(w, w @ I)

    tau = np.empty((B, n))
    f = np.zeros((B, 3))
    nn = np.zeros((B, 3))
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            Rn = R[:, i + 1]
            rf = _r(Rn, f)
            rn = _r(Rn, nn)
        else:
            rf = np.zeros((B, 3))
            rn = np.zeros((B, 3))
        ps = pstar[:, i]
        nn = rn + np.cross(ps, rf) + np.cross(ps + P[i, 1:4], F[:, i]) + Nm[:, i]
        f = rf + F[:, i]
        axis = R[:, i, 2, :]
        tau[:, i] = np.einsum("bj,bj->b", axis, f if prismatic[i] else nn)
    tau += P[:, 10] * np.sign(QD) + P[:, 11] * QD
    return tau


def cost_numpy(a, alpha, d, theta0, prismatic, gravity, P, Q, QD, QDD, TAU):
    P = np.atleast_2d(P)
    out = np.empty(P.shape[0])
    for k in range(P.shape[0]):
        E = TAU - rne_numpy(a, alpha, d, theta0, prismatic, gravity, P[k], Q, QD, QDD)
        out[k] = np.sqrt(np.sum(E * E))
    return out


if HAS_NUMBA:
    rne_batch = rne_loops
    cost_batch = cost_loops
else:
    rne_batch = rne_numpy
    cost_batch = cost_numpy
