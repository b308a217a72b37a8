# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels, mirroring ``_kernels_py`` call for call."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow

cnp.import_array()

DEF DIM = 18

OK = 0
UMBILIC = 1
THETA_SATURATION = 2
DENOMINATOR = 3
STEP_UNDERFLOW = 4
CONSTRAINT_BLOWUP = 5

NAME = "cython"

cdef int MAX_STEPS = 1000000
cdef double SAFETY = 0.9

cdef double C_[7]
cdef double A_[7][6]
cdef double B_[7]
cdef double E_[7]

C_[:] = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
A_[0][:] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
A_[1][:] = [1.0 / 5, 0.0, 0.0, 0.0, 0.0, 0.0]
A_[2][:] = [3.0 / 40, 9.0 / 40, 0.0, 0.0, 0.0, 0.0]
A_[3][:] = [44.0 / 45, -56.0 / 15, 32.0 / 9, 0.0, 0.0, 0.0]
A_[4][:] = [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0.0, 0.0]
A_[5][:] = [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0.0]
A_[6][:] = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]
B_[:] = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0]
E_[:] = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40]


cdef inline void _cubic(double k1, double k2, double K, double* p, double* dp) nogil:
    p[0] = -(K - k1) * (K - k2) * (K + k1 + k2) / 3.0
    dp[0] = (k1 * k1 + k1 * k2 + k2 * k2 - 3.0 * K * K) / 3.0


cdef inline double _sqrt_disc(double p, double X, double A) nogil:
    cdef double pp = p * p * X
    cdef double D = pp - A * A
    if D < 0.0:
        return -1.0
    return sqrt(D)


cdef inline int _rhs_h(double k1, double k2, double c, double A, double sign,
                       double K, double H, double* out) nogil:
    cdef double p, dp, X, sD, den
    _cubic(k1, k2, K, &p, &dp)
    X = H * H - K + c
    if X <= 0.0:
        return 1
    sD = _sqrt_disc(p, X, A)
    if sD < 0.0:
        return 2
    den = p * H + sign * sD
    if fabs(den) <= 1e-12 * (fabs(p * H) + sD):
        return 3
    out[0] = (p - 2.0 * dp * X) / (2.0 * den)
    return 0


def rhs_h(double k1, double k2, double c, double A, double sign, double K, double H):
    cdef double out = 0.0
    cdef int st = _rhs_h(k1, k2, c, A, sign, K, H, &out)
    return out, st


def integrate_h(double k1, double k2, double c, double A, double sign, double K0, double H0,
                K_targets, double rtol, double atol, double max_step, double event_tol):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] Kt = np.ascontiguousarray(K_targets, dtype=np.float64)
    cdef Py_ssize_t n = Kt.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] H_out = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dH_out = np.zeros(n)
    cdef double K = K0, H = H0, f0 = 0.0, h, h_try, hs, target, remaining, direction
    cdef double y, H_new, err, scale, ratio, fac
    cdef double k[7]
    cdef int st, bad, s, j
    cdef Py_ssize_t i
    cdef long steps = 0
    st = _rhs_h(k1, k2, c, A, sign, K, H, &f0)
    if st != 0:
        return H_out, dH_out, 0, st, K, H
    if n == 0:
        return H_out, dH_out, 0, 0, K, H
    direction = 1.0 if Kt[n - 1] >= K else -1.0
    h = min(max_step, 1e-3 * max(fabs(Kt[n - 1] - K), 1e-8))
    for i in range(n):
        target = Kt[i]
        while direction * (target - K) > 0.0:
            steps += 1
            if steps > MAX_STEPS:
                return H_out, dH_out, i, 4, K, H
            remaining = direction * (target - K)
            h_try = min(h, min(max_step, remaining))
            hs = direction * h_try
            k[0] = f0
            bad = 0
            for s in range(1, 7):
                y = H
                for j in range(s):
                    y += hs * A_[s][j] * k[j]
                st = _rhs_h(k1, k2, c, A, sign, K + C_[s] * hs, y, &k[s])
                if st != 0:
                    bad = st
                    break
            if bad != 0:
                h = 0.5 * h_try
                if h < event_tol:
                    return H_out, dH_out, i, bad, K, H
                continue
            H_new = H
            err = 0.0
            for s in range(7):
                H_new += hs * B_[s] * k[s]
                err += hs * E_[s] * k[s]
            scale = atol + rtol * max(fabs(H), fabs(H_new))
            ratio = fabs(err) / scale
            if ratio <= 1.0:
                K = target if h_try == remaining else K + hs
                H = H_new
                f0 = k[6]
                fac = 5.0 if ratio == 0.0 else min(5.0, SAFETY * pow(ratio, -0.2))
                h = max(h, h_try * fac) if h_try < h else h_try * fac
            else:
                h = h_try * max(0.2, SAFETY * pow(ratio, -0.2))
                if h < event_tol:
                    return H_out, dH_out, i, 3, K, H
        H_out[i] = H
        dH_out[i] = f0
    return H_out, dH_out, n, 0, K, H


cdef int _frame_rhs(double k1, double k2, double c, double A, double sign, double cos_sign,
                    double h_scale, double* y, double* out) nogil:
    cdef double K = y[0], H = y[1], p, dp, X, sD, den, Hs, Xs, eu, h11, h12, ceu
    cdef int j
    _cubic(k1, k2, K, &p, &dp)
    X = H * H - K + c
    if X <= 0.0:
        return 1
    sD = _sqrt_disc(p, X, A)
    if sD < 0.0:
        return 2
    den = p * H + sign * sD
    if fabs(den) <= 1e-12 * (fabs(p * H) + sD):
        return 3
    out[0] = 2.0 * p
    out[1] = p * (p - 2.0 * dp * X) / den
    Hs = H * h_scale
    if h_scale != 1.0:
        Xs = Hs * Hs - K + c
        if Xs <= 0.0:
            return 1
        sD = _sqrt_disc(p, Xs, A)
        if sD < 0.0:
            return 2
    eu = 4.0 * p
    h11 = eu * Hs + 4.0 * cos_sign * sD
    h12 = -4.0 * A
    ceu = c * eu
    for j in range(4):
        out[2 + j] = y[6 + j]
        out[6 + j] = dp * y[6 + j] + h11 * y[14 + j] - ceu * y[2 + j]
        out[10 + j] = dp * y[10 + j] + h12 * y[14 + j]
        out[14 + j] = -(h11 * y[6 + j] + h12 * y[10 + j]) / eu
    return 0


cdef double _frame_drift(double k1, double k2, double c, double eta4, double* y) nogil:
    cdef double p, dp, seu, sc, ip, ref, drift = 0.0
    cdef double v[4][4]
    cdef double target[4]
    cdef double g[4]
    cdef int a, b, j, m, off
    _cubic(k1, k2, y[0], &p, &dp)
    seu = sqrt(4.0 * p)
    g[0] = 1.0; g[1] = 1.0; g[2] = 1.0; g[3] = eta4
    off = 0
    if c != 0.0:
        sc = sqrt(fabs(c))
        for j in range(4):
            v[0][j] = y[2 + j] * sc
        target[0] = 1.0 if c > 0 else -1.0
        off = 1
    for j in range(4):
        v[off][j] = y[6 + j] / seu
        v[off + 1][j] = y[10 + j] / seu
        v[off + 2][j] = y[14 + j]
    target[off] = 1.0; target[off + 1] = 1.0; target[off + 2] = 1.0
    m = off + 3
    for a in range(m):
        for b in range(a, m):
            ip = 0.0
            for j in range(4):
                ip += g[j] * v[a][j] * v[b][j]
            ref = target[a] if a == b else 0.0
            if fabs(ip - ref) > drift:
                drift = fabs(ip - ref)
    return drift


cdef void _repair_frame(double k1, double k2, double c, double eta4, double* y) nogil:
    cdef double p, dp, seu, nn, norm, coef, ip
    cdef double e[4][4]
    cdef double ee[4]
    cdef double v[4]
    cdef double g[4]
    cdef int rows[4]
    cdef double scales[4]
    cdef int nrows = 0, r, q, j, idx
    _cubic(k1, k2, y[0], &p, &dp)
    seu = sqrt(4.0 * p)
    g[0] = 1.0; g[1] = 1.0; g[2] = 1.0; g[3] = eta4
    if c != 0.0:
        rows[0] = 0; scales[0] = 1.0 / sqrt(fabs(c)); nrows = 1
    rows[nrows] = 1; scales[nrows] = seu
    rows[nrows + 1] = 2; scales[nrows + 1] = seu
    rows[nrows + 2] = 3; scales[nrows + 2] = 1.0
    nrows += 3
    for r in range(nrows):
        idx = rows[r]
        for j in range(4):
            v[j] = y[2 + 4 * idx + j]
        for q in range(r):
            ip = 0.0
            for j in range(4):
                ip += g[j] * v[j] * e[q][j]
            coef = ip / ee[q]
            for j in range(4):
                v[j] -= coef * e[q][j]
        nn = 0.0
        for j in range(4):
            nn += g[j] * v[j] * v[j]
        norm = sqrt(fabs(nn))
        for j in range(4):
            e[r][j] = v[j] / norm
            y[2 + 4 * idx + j] = e[r][j] * scales[r]
        ee[r] = 1.0 if nn > 0 else -1.0


def frame_drift(double k1, double k2, double c, double eta4, double K, S):
    cdef double y[DIM]
    cdef int r, j
    y[0] = K
    for r in range(4):
        for j in range(4):
            y[2 + 4 * r + j] = S[r][j]
    return _frame_drift(k1, k2, c, eta4, y)


def integrate_frame(double k1, double k2, double c, double A, double sign, double cos_sign,
                    double h_scale, double eta4, xs, double K0, double H0, S0,
                    double rtol, double atol, double repair_tol, double blowup_tol,
                    double max_step):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] S0a = np.ascontiguousarray(S0, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] K_out = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] H_out = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] S_out = np.zeros((n, 4, 4))
    cdef double y[DIM]
    cdef double ynew[DIM]
    cdef double ytmp[DIM]
    cdef double f0[DIM]
    cdef double ks[7][DIM]
    cdef double x, h, h_try, hs, target, remaining, direction, ratio, acc, err, sc, fac
    cdef double drift, max_drift
    cdef int st, bad, s, j, d, r
    cdef int repairs = 0
    cdef long steps = 0
    cdef Py_ssize_t i
    y[0] = K0
    y[1] = H0
    for r in range(4):
        for j in range(4):
            y[2 + 4 * r + j] = S0a[r, j]
            S_out[0, r, j] = S0a[r, j]
    K_out[0] = K0
    H_out[0] = H0
    max_drift = _frame_drift(k1, k2, c, eta4, y)
    st = _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, y, f0)
    if st != 0:
        return K_out, H_out, S_out, 1, st, repairs, max_drift
    if n == 1:
        return K_out, H_out, S_out, 1, 0, repairs, max_drift
    direction = 1.0 if X[n - 1] >= X[0] else -1.0
    x = X[0]
    h = min(max_step, fabs(X[1] - X[0]))
    for i in range(1, n):
        target = X[i]
        while direction * (target - x) > 0.0:
            steps += 1
            if steps > MAX_STEPS:
                return K_out, H_out, S_out, i, 4, repairs, max_drift
            remaining = direction * (target - x)
            h_try = min(h, min(max_step, remaining))
            hs = direction * h_try
            for d in range(DIM):
                ks[0][d] = f0[d]
            bad = 0
            for s in range(1, 7):
                for d in range(DIM):
                    acc = y[d]
                    for j in range(s):
                        acc += hs * A_[s][j] * ks[j][d]
                    ytmp[d] = acc
                st = _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, ytmp, ks[s])
                if st != 0:
                    bad = st
                    break
            if bad != 0:
                h = 0.5 * h_try
                if h < 1e-14:
                    return K_out, H_out, S_out, i, bad, repairs, max_drift
                continue
            ratio = 0.0
            for d in range(DIM):
                acc = y[d]
                err = 0.0
                for s in range(7):
                    acc += hs * B_[s] * ks[s][d]
                    err += hs * E_[s] * ks[s][d]
                ynew[d] = acc
                sc = atol + rtol * max(fabs(y[d]), fabs(acc))
                if fabs(err) / sc > ratio:
                    ratio = fabs(err) / sc
            if ratio <= 1.0:
                x = target if h_try == remaining else x + hs
                for d in range(DIM):
                    y[d] = ynew[d]
                    f0[d] = ks[6][d]
                fac = 5.0 if ratio == 0.0 else min(5.0, SAFETY * pow(ratio, -0.2))
                h = max(h, h_try * fac) if h_try < h else h_try * fac
            else:
                h = h_try * max(0.2, SAFETY * pow(ratio, -0.2))
                if h < 1e-14:
                    return K_out, H_out, S_out, i, 4, repairs, max_drift
        drift = _frame_drift(k1, k2, c, eta4, y)
        if drift > max_drift:
            max_drift = drift
        if drift > blowup_tol:
            return K_out, H_out, S_out, i, 5, repairs, max_drift
        if drift > repair_tol:
            _repair_frame(k1, k2, c, eta4, y)
            _frame_rhs(k1, k2, c, A, sign, cos_sign, h_scale, y, f0)
            repairs += 1
        K_out[i] = y[0]
        H_out[i] = y[1]
        for r in range(4):
            for j in range(4):
                S_out[i, r, j] = y[2 + 4 * r + j]
    return K_out, H_out, S_out, n, 0, repairs, max_drift
