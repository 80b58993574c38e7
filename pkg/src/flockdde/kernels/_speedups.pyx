# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: weight matrices, alignment forces, RK4 stepping.

Same primitive interface as the numpy fallback (see _numpy.py for the code
conventions); the integrator runs the whole stepping loop without returning
to Python.
"""

import numpy as np

from libc.math cimport pow, sqrt

OK = -1
DEGENERATE = -2

cdef int C_OK = -1
cdef int C_DEGENERATE = -2


cdef inline double psi_eval(int kind, double param, double[::1] ts,
                            double[::1] tp, double s) noexcept nogil:
    cdef int lo, hi, mid, n
    cdef double th, val
    if kind == 0:
        return param
    if kind == 1:
        return pow(1.0 + s * s, -param)
    n = ts.shape[0]
    if s <= ts[0]:
        return tp[0]
    if s >= ts[n - 1]:
        return tp[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if ts[mid] <= s:
            lo = mid
        else:
            hi = mid
    th = (s - ts[lo]) / (ts[hi] - ts[lo])
    val = tp[lo] + th * (tp[hi] - tp[lo])
    if val < 0.0:
        val = 0.0
    elif val > 1.0:
        val = 1.0
    return val


cdef int weights_into(double[:, :] pos, int kind, double param, double[::1] ts,
                      double[::1] tp, int scheme, double kappa,
                      double[:, ::1] w) noexcept nogil:
    cdef int n = pos.shape[0]
    cdef int d = pos.shape[1]
    cdef int i, j, k
    cdef double s2, diff, p, row, psi0
    if scheme == 2:
        for i in range(n):
            for j in range(n):
                w[i, j] = kappa
            w[i, i] = 0.0
        return 0
    psi0 = psi_eval(kind, param, ts, tp, 0.0)
    for i in range(n):
        w[i, i] = psi0
        for j in range(i + 1, n):
            s2 = 0.0
            for k in range(d):
                diff = pos[j, k] - pos[i, k]
                s2 += diff * diff
            p = psi_eval(kind, param, ts, tp, sqrt(s2))
            w[i, j] = p
            w[j, i] = p
    if scheme == 0:
        for i in range(n):
            for j in range(n):
                w[i, j] /= n
        return 0
    # normalized: row-stochastic, with a second pass so each row re-sums to 1
    # within a couple ulp
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += w[i, j]
        if not row > 0.0:
            return 1
        for j in range(n):
            w[i, j] /= row
        row = 0.0
        for j in range(n):
            row += w[i, j]
        for j in range(n):
            w[i, j] /= row
    return 0


cdef void accel_into(double[:, ::1] w, double[:, :] vel,
                     double[:, ::1] out) noexcept nogil:
    cdef int n = w.shape[0]
    cdef int d = vel.shape[1]
    cdef int i, j, k
    cdef double acc
    for i in range(n):
        for k in range(d):
            acc = 0.0
            for j in range(n):
                acc += w[i, j] * (vel[j, k] - vel[i, k])
            out[i, k] = acc


def weights(pos, int kind, double param, table_s, table_psi, int scheme, double kappa):
    cdef double[:, :] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef double[::1] ts = np.ascontiguousarray(table_s, dtype=np.float64)
    cdef double[::1] tp = np.ascontiguousarray(table_psi, dtype=np.float64)
    out = np.empty((p.shape[0], p.shape[0]))
    cdef double[:, ::1] w = out
    cdef int rc
    with nogil:
        rc = weights_into(p, kind, param, ts, tp, scheme, kappa, w)
    return out, (DEGENERATE if rc else OK)


def accelerations(w, vel):
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :] v = np.ascontiguousarray(vel, dtype=np.float64)
    out = np.empty((v.shape[0], v.shape[1]))
    cdef double[:, ::1] o = out
    with nogil:
        accel_into(wv, v, o)
    return out


def pairwise_diameter(arr):
    cdef double[:, :] a = np.ascontiguousarray(arr, dtype=np.float64)
    cdef int n = a.shape[0]
    cdef int d = a.shape[1]
    cdef int i, j, k
    cdef double best = 0.0, s2, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                s2 = 0.0
                for k in range(d):
                    diff = a[j, k] - a[i, k]
                    s2 += diff * diff
                if s2 > best:
                    best = s2
    return sqrt(best)


cdef int _integrate_impl(double[:, :, ::1] X, double[:, :, ::1] V, double[:, :, ::1] A,
                         double[:, :, ::1] xd_init, double[:, :, ::1] vd_init,
                         double h, int m, int n_steps,
                         int kind, double param, double[::1] ts, double[::1] tp,
                         int scheme, double kappa, double guard,
                         double[:, ::1] w, double[:, ::1] xm, double[:, ::1] vm,
                         double[:, ::1] g2, double[:, ::1] g3) noexcept nogil:
    cdef int n = X.shape[1]
    cdef int d = X.shape[2]
    cdef double guard2 = guard * guard
    cdef double ch = 0.125 * h
    cdef double h26 = h * h / 6.0
    cdef double h6 = h / 6.0
    cdef int k, s, i, c, rc, hist
    cdef double vmax2, v2

    # right-hand side at t = 0 from the frame one delay back
    rc = weights_into(X[0], kind, param, ts, tp, scheme, kappa, w)
    if rc:
        return C_DEGENERATE
    accel_into(w, V[0], g3)
    for i in range(n):
        for c in range(d):
            A[m, i, c] = g3[i, c]

    for k in range(m, m + n_steps):
        s = k - m
        # Hermite midpoint of segment [s, s+1]; initial-interval segments use
        # the history's own derivative estimates
        hist = 1 if s + 1 <= m else 0
        for i in range(n):
            for c in range(d):
                if hist:
                    xm[i, c] = 0.5 * (X[s, i, c] + X[s + 1, i, c]) + ch * (xd_init[s, i, c] - xd_init[s + 1, i, c])
                    vm[i, c] = 0.5 * (V[s, i, c] + V[s + 1, i, c]) + ch * (vd_init[s, i, c] - vd_init[s + 1, i, c])
                else:
                    xm[i, c] = 0.5 * (X[s, i, c] + X[s + 1, i, c]) + ch * (V[s, i, c] - V[s + 1, i, c])
                    vm[i, c] = 0.5 * (V[s, i, c] + V[s + 1, i, c]) + ch * (A[s, i, c] - A[s + 1, i, c])
        rc = weights_into(xm, kind, param, ts, tp, scheme, kappa, w)
        if rc:
            return C_DEGENERATE
        accel_into(w, vm, g2)
        rc = weights_into(X[s + 1], kind, param, ts, tp, scheme, kappa, w)
        if rc:
            return C_DEGENERATE
        accel_into(w, V[s + 1], g3)
        vmax2 = 0.0
        for i in range(n):
            v2 = 0.0
            for c in range(d):
                X[k + 1, i, c] = X[k, i, c] + h * V[k, i, c] + h26 * (A[k, i, c] + 2.0 * g2[i, c])
                V[k + 1, i, c] = V[k, i, c] + h6 * (A[k, i, c] + 4.0 * g2[i, c] + g3[i, c])
                A[k + 1, i, c] = g3[i, c]
                v2 += V[k + 1, i, c] * V[k + 1, i, c]
            if v2 > vmax2 or v2 != v2:
                vmax2 = v2
        if not vmax2 <= guard2:  # catches NaN as well
            return k + 1
    return C_OK


def integrate_arrays(X, V, A, xd_init, vd_init, double h, int m, int n_steps,
                     int kind, double param, table_s, table_psi,
                     int scheme, double kappa, double guard):
    """Fixed-step RK4 over the delayed dynamics; see the fallback for the
    frame-layout contract. Returns -1, -2 or the first bad frame index."""
    cdef double[:, :, ::1] Xv = X
    cdef double[:, :, ::1] Vv = V
    cdef double[:, :, ::1] Av = A
    cdef double[:, :, ::1] xdv = np.ascontiguousarray(xd_init, dtype=np.float64)
    cdef double[:, :, ::1] vdv = np.ascontiguousarray(vd_init, dtype=np.float64)
    cdef double[::1] ts = np.ascontiguousarray(table_s, dtype=np.float64)
    cdef double[::1] tp = np.ascontiguousarray(table_psi, dtype=np.float64)
    cdef int n = Xv.shape[1]
    cdef int d = Xv.shape[2]
    w_arr = np.empty((n, n))
    xm_arr = np.empty((n, d))
    vm_arr = np.empty((n, d))
    g2_arr = np.empty((n, d))
    g3_arr = np.empty((n, d))
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] xm = xm_arr
    cdef double[:, ::1] vm = vm_arr
    cdef double[:, ::1] g2 = g2_arr
    cdef double[:, ::1] g3 = g3_arr
    cdef int rc
    with nogil:
        rc = _integrate_impl(Xv, Vv, Av, xdv, vdv, h, m, n_steps, kind, param,
                             ts, tp, scheme, kappa, guard, w, xm, vm, g2, g3)
    return rc
