"""Pure-Python integration kernels.

Reference implementation of the compiled ``_kernels`` extension; both expose
the same two entry points and status codes. The extension is preferred at
import time, see ``_backend``.
"""
import math

import numpy as np

OK = 0
UMBILIC = 1
THETA_SATURATION = 2
DENOMINATOR = 3
STEP_UNDERFLOW = 4
CONSTRAINT_BLOWUP = 5

NAME = "python"

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

MAX_STEPS = 1_000_000
SAFETY = 0.9


def _cubic(k1, k2, K):
    p = -(K - k1) * (K - k2) * (K + k1 + k2) / 3.0
    dp = (k1 * k1 + k1 * k2 + k2 * k2 - 3.0 * K * K) / 3.0
    return p, dp


def _sqrt_disc(p, X, A):
    """sqrt(p^2 X - A^2), or -1.0 when the radicand is negative."""
    pp = p * p * X
    D = pp - A * A
    if D < 0.0:
        return -1.0
    return math.sqrt(D)


def rhs_h(k1, k2, c, A, sign, K, H):
    """dH/dK and a status code."""
    p, dp = _cubic(k1, k2, K)
    X = H * H - K + c
    if X <= 0.0:
        return 0.0, UMBILIC
    sD = _sqrt_disc(p, X, A)
    if sD < 0.0:
        return 0.0, THETA_SATURATION
    den = p * H + sign * sD
    if abs(den) <= 1e-12 * (abs(p * H) + sD):
        return 0.0, DENOMINATOR
    return (p - 2.0 * dp * X) / (2.0 * den), OK


def integrate_h(k1, k2, c, A, sign, K0, H0, K_targets, rtol, atol, max_step, event_tol):
    """Integrate dH/dK from (K0, H0) through the monotone targets.

    Returns (H_out, dH_out, n_done, status, K_stop, H_stop); the first
    ``n_done`` outputs are valid.
    """
    K_targets = np.asarray(K_targets, dtype=float)
    n = K_targets.shape[0]
    H_out = np.zeros(n)
    dH_out = np.zeros(n)
    K, H = float(K0), float(H0)
    f0, st = rhs_h(k1, k2, c, A, sign, K, H)
    if st != OK:
        return H_out, dH_out, 0, st, K, H
    if n == 0:
        return H_out, dH_out, 0, OK, K, H
    direction = 1.0 if K_targets[-1] >= K else -1.0
    h = min(max_step, 1e-3 * max(abs(K_targets[-1] - K), 1e-8))
    k = [0.0] * 7
    steps = 0
    for i in range(n):
        target = K_targets[i]
        while direction * (target - K) > 0.0:
            steps += 1
            if steps > MAX_STEPS:
                return H_out, dH_out, i, STEP_UNDERFLOW, K, H
            remaining = direction * (target - K)
            h_try = min(h, max_step, remaining)
            hs = direction * h_try
            k[0] = f0
            bad = OK
            for s in range(1, 7):
                y = H
                a = _A[s]
                for j in range(s):
                    y += hs * a[j] * k[j]
                k[s], st = rhs_h(k1, k2, c, A, sign, K + _C[s] * hs, y)
                if st != OK:
                    bad = st
                    break
            if bad != OK:
                h = 0.5 * h_try
                if h < event_tol:
                    return H_out, dH_out, i, bad, K, H
                continue
            H_new = H
            err = 0.0
            for s in range(7):
                H_new += hs * _B[s] * k[s]
                err += hs * _E[s] * k[s]
            scale = atol + rtol * max(abs(H), abs(H_new))
            ratio = abs(err) / scale
            if ratio <= 1.0:
                K = target if h_try == remaining else K + hs
                H = H_new
                f0 = k[6]
                fac = 5.0 if ratio == 0.0 else min(5.0, SAFETY * ratio ** -0.2)
                h = max(h, h_try * fac) if h_try < h else h_try * fac
            else:
                h = h_try * max(0.2, SAFETY * ratio ** -0.2)
                if h < event_tol:
                    return H_out, dH_out, i, DENOMINATOR, K, H
        H_out[i] = H
        dH_out[i] = f0
    return H_out, dH_out, n, OK, K, H


def _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, y, out):
    K, H = y[0], y[1]
    p, dp = _cubic(k1, k2, K)
    X = H * H - K + c
    if X <= 0.0:
        return UMBILIC
    sD = _sqrt_disc(p, X, A)
    if sD < 0.0:
        return THETA_SATURATION
    den = p * H + sign * sD
    if abs(den) <= 1e-12 * (abs(p * H) + sD):
        return DENOMINATOR
    out[0] = 2.0 * p
    out[1] = p * (p - 2.0 * dp * X) / den
    Hs = H * h_scale
    if h_scale != 1.0:
        Xs = Hs * Hs - K + c
        if Xs <= 0.0:
            return UMBILIC
        sD = _sqrt_disc(p, Xs, A)
        if sD < 0.0:
            return THETA_SATURATION
    eu = 4.0 * p
    # e^u sqrt(X) cos(theta) = 4 cos_sign sqrt(p^2 X - A^2)
    h11 = eu * Hs + 4.0 * cos_sign * sD
    h12 = -4.0 * A
    half_ux = dp
    ceu = c * eu
    for j in range(4):
        r = y[2 + j]
        rx = y[6 + j]
        ry = y[10 + j]
        nv = y[14 + j]
        out[2 + j] = rx
        out[6 + j] = half_ux * rx + h11 * nv - ceu * r
        out[10 + j] = half_ux * ry + h12 * nv
        out[14 + j] = -(h11 * rx + h12 * ry) / eu
    return OK


def frame_drift(k1, k2, c, eta4, K, S):
    """Largest deviation of the scaled frame from its model Gram matrix."""
    p, _ = _cubic(k1, k2, K)
    seu = math.sqrt(4.0 * p)
    vecs = [[S[1][j] / seu for j in range(4)], [S[2][j] / seu for j in range(4)], list(S[3])]
    target = [1.0, 1.0, 1.0]
    if c != 0.0:
        sc = math.sqrt(abs(c))
        vecs.insert(0, [S[0][j] * sc for j in range(4)])
        target.insert(0, 1.0 if c > 0 else -1.0)
    g = (1.0, 1.0, 1.0, eta4)
    drift = 0.0
    m = len(vecs)
    for a in range(m):
        for b in range(a, m):
            ip = sum(g[j] * vecs[a][j] * vecs[b][j] for j in range(4))
            ref = target[a] if a == b else 0.0
            drift = max(drift, abs(ip - ref))
    return drift


def repair_frame(k1, k2, c, eta4, K, S):
    """Gram-Schmidt against the model inner product, then rescale."""
    p, _ = _cubic(k1, k2, K)
    seu = math.sqrt(4.0 * p)
    g = (1.0, 1.0, 1.0, eta4)

    def ip(u, v):
        return sum(g[j] * u[j] * v[j] for j in range(4))

    rows = []
    if c != 0.0:
        rows.append((0, 1.0 / math.sqrt(abs(c))))
    rows += [(1, seu), (2, seu), (3, 1.0)]
    done = []
    for idx, scale in rows:
        v = [S[idx][j] for j in range(4)]
        for e, ee in done:
            coef = ip(v, e) / ee
            v = [v[j] - coef * e[j] for j in range(4)]
        nn = ip(v, v)
        norm = math.sqrt(abs(nn))
        e = [v[j] / norm for j in range(4)]
        ee = 1.0 if nn > 0 else -1.0
        done.append((e, ee))
        for j in range(4):
            S[idx][j] = e[j] * scale


def integrate_frame(k1, k2, c, A, sign, cos_sign, h_scale, eta4, xs, K0, H0, S0,
                    rtol, atol, repair_tol, blowup_tol, max_step):
    """Integrate (K, H, frame) in x from xs[0] through xs[1:].

    The frame is the 4x4 array of rows (r, r_x, r_y, n). Returns
    (K_out, H_out, S_out, n_done, status, repairs, max_drift) with outputs
    at every entry of ``xs`` (entry 0 is the initial state).
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[0]
    K_out = np.zeros(n)
    H_out = np.zeros(n)
    S_out = np.zeros((n, 4, 4))
    y = [float(K0), float(H0)] + [float(v) for v in np.asarray(S0, dtype=float).ravel()]
    dim = 18
    K_out[0], H_out[0] = y[0], y[1]
    S_out[0] = np.asarray(S0, dtype=float)
    repairs = 0
    max_drift = frame_drift(k1, k2, c, eta4, y[0], S_out[0])
    f0 = [0.0] * dim
    st = _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, y, f0)
    if st != OK:
        return K_out, H_out, S_out, 1, st, repairs, max_drift
    if n == 1:
        return K_out, H_out, S_out, 1, OK, repairs, max_drift
    direction = 1.0 if xs[-1] >= xs[0] else -1.0
    x = xs[0]
    h = min(max_step, abs(xs[1] - xs[0]))
    ks = [[0.0] * dim for _ in range(7)]
    ytmp = [0.0] * dim
    steps = 0
    for i in range(1, n):
        target = xs[i]
        while direction * (target - x) > 0.0:
            steps += 1
            if steps > MAX_STEPS:
                return K_out, H_out, S_out, i, STEP_UNDERFLOW, repairs, max_drift
            remaining = direction * (target - x)
            h_try = min(h, max_step, remaining)
            hs = direction * h_try
            ks[0][:] = f0
            bad = OK
            for s in range(1, 7):
                a = _A[s]
                for d in range(dim):
                    acc = y[d]
                    for j in range(s):
                        acc += hs * a[j] * ks[j][d]
                    ytmp[d] = acc
                st = _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, ytmp, ks[s])
                if st != OK:
                    bad = st
                    break
            if bad != OK:
                h = 0.5 * h_try
                if h < 1e-14:
                    return K_out, H_out, S_out, i, bad, repairs, max_drift
                continue
            ratio = 0.0
            y_new = [0.0] * dim
            for d in range(dim):
                acc = y[d]
                err = 0.0
                for s in range(7):
                    acc += hs * _B[s] * ks[s][d]
                    err += hs * _E[s] * ks[s][d]
                y_new[d] = acc
                sc = atol + rtol * max(abs(y[d]), abs(acc))
                ratio = max(ratio, abs(err) / sc)
            if ratio <= 1.0:
                x = target if h_try == remaining else x + hs
                y = y_new
                f0 = list(ks[6])
                fac = 5.0 if ratio == 0.0 else min(5.0, SAFETY * ratio ** -0.2)
                h = max(h, h_try * fac) if h_try < h else h_try * fac
            else:
                h = h_try * max(0.2, SAFETY * ratio ** -0.2)
                if h < 1e-14:
                    return K_out, H_out, S_out, i, STEP_UNDERFLOW, repairs, max_drift
        S = [y[2 + 4 * r:6 + 4 * r] for r in range(4)]
        drift = frame_drift(k1, k2, c, eta4, y[0], S)
        max_drift = max(max_drift, drift)
        if drift > blowup_tol:
            return K_out, H_out, S_out, i, CONSTRAINT_BLOWUP, repairs, max_drift
        if drift > repair_tol:
            repair_frame(k1, k2, c, eta4, y[0], S)
            y = y[:2] + [v for row in S for v in row]
            _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, y, f0)
            repairs += 1
        K_out[i], H_out[i] = y[0], y[1]
        S_out[i] = np.array(S)
    return K_out, H_out, S_out, n, OK, repairs, max_drift
