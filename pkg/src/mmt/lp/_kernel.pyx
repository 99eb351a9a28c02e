# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pivot loop for the bounded revised simplex method.

Same contract and pivoting rules as ``_kernel_py.pivot_loop``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY
from scipy.linalg.cython_blas cimport dgemv, dger

cnp.import_array()

DEF OPTIMAL = 0
DEF UNBOUNDED = 1
DEF REFACTOR = 2
DEF ITER_LIMIT = 3
DEF TIE_TOL = 1e-12


def pivot_loop(double[:, ::1] A, double[::1] b, double[::1] c,
               double[::1] lo, double[::1] hi, long[::1] basis,
               signed char[::1] status, double[::1] x, double[:, ::1] Binv,
               long max_pivots, long bland_after, long iters, long max_iters,
               double tol_opt, double tol_piv, trace):
    cdef Py_ssize_t nrows = A.shape[0]
    cdef Py_ssize_t ncols = A.shape[1]
    cdef Py_ssize_t i, j, k, q, r
    cdef long pivots = 0
    cdef int direction, bland, st, has_trace = trace is not None
    cdef double dj, best, ai, ti, tmin, tflip, step, piv
    cdef long leaving

    cdef double[::1] y = np.empty(nrows)
    cdef double[::1] d = np.empty(ncols)
    cdef double[::1] alpha = np.empty(nrows)
    cdef double[::1] t = np.empty(nrows)
    cdef double[::1] rowr = np.empty(nrows)
    cdef double[::1] cb = np.empty(nrows)
    cdef double[::1] aq = np.empty(nrows)
    # BLAS sees the row-major arrays as their column-major transposes
    cdef int ir = <int>nrows, ic = <int>ncols, one = 1
    cdef double d_one = 1.0, d_zero = 0.0, d_mone = -1.0
    cdef char trans_n = b'N', trans_t = b'T'

    while True:
        if iters >= max_iters:
            return ITER_LIMIT, iters, -1
        if pivots >= max_pivots:
            return REFACTOR, iters, -1

        # y = Binv^T c_B ;  d = c - A^T y
        for k in range(nrows):
            cb[k] = c[basis[k]]
        if nrows > 0:
            dgemv(&trans_n, &ir, &ir, &d_one, &Binv[0, 0], &ir, &cb[0], &one,
                  &d_zero, &y[0], &one)
        for j in range(ncols):
            d[j] = c[j]
        if nrows > 0 and ncols > 0:
            dgemv(&trans_n, &ic, &ir, &d_mone, &A[0, 0], &ic, &y[0], &one,
                  &d_one, &d[0], &one)

        bland = iters >= bland_after
        q = -1
        direction = 0
        best = -1.0
        for j in range(ncols):
            st = status[j]
            if st == 0:
                continue
            dj = d[j]
            if st == 1:
                if not (hi[j] > lo[j]) or dj >= -tol_opt:
                    continue
                k = 1
            elif st == 2:
                if not (hi[j] > lo[j]) or dj <= tol_opt:
                    continue
                k = -1
            else:
                if -tol_opt <= dj <= tol_opt:
                    continue
                k = 1 if dj < 0 else -1
            if bland:
                q = j
                direction = <int>k
                break
            if fabs(dj) > best:
                best = fabs(dj)
                q = j
                direction = <int>k
        if q < 0:
            return OPTIMAL, iters, -1

        # alpha = Binv A[:, q]
        for k in range(nrows):
            aq[k] = A[k, q]
        if nrows > 0:
            dgemv(&trans_t, &ir, &ir, &d_one, &Binv[0, 0], &ir, &aq[0], &one,
                  &d_zero, &alpha[0], &one)

        tmin = INFINITY
        for i in range(nrows):
            ai = direction * alpha[i]
            ti = INFINITY
            if ai > tol_piv:
                if lo[basis[i]] > -INFINITY:
                    ti = (x[basis[i]] - lo[basis[i]]) / ai
            elif ai < -tol_piv:
                if hi[basis[i]] < INFINITY:
                    ti = (hi[basis[i]] - x[basis[i]]) / (-ai)
            if ti < 0.0:
                ti = 0.0
            t[i] = ti
            if ti < tmin:
                tmin = ti
        tflip = hi[q] - lo[q]

        if tflip <= tmin:
            if tflip == INFINITY:
                return UNBOUNDED, iters, q
            for i in range(nrows):
                x[basis[i]] -= tflip * direction * alpha[i]
            if direction > 0:
                x[q] = hi[q]
                status[q] = 2
            else:
                x[q] = lo[q]
                status[q] = 1
            iters += 1
            pivots += 1
            if has_trace:
                trace.append((q, -1))
            continue

        r = -1
        for i in range(nrows):
            if t[i] <= tmin + TIE_TOL:
                if r < 0:
                    r = i
                elif bland:
                    if basis[i] < basis[r]:
                        r = i
                elif fabs(alpha[i]) > fabs(alpha[r]):
                    r = i
        step = t[r]
        x[q] += direction * step
        for i in range(nrows):
            x[basis[i]] -= step * direction * alpha[i]
        leaving = basis[r]
        if direction * alpha[r] > 0:
            status[leaving] = 1
            x[leaving] = lo[leaving]
        else:
            status[leaving] = 2
            x[leaving] = hi[leaving]
        basis[r] = q
        status[q] = 0
        iters += 1
        pivots += 1
        if has_trace:
            trace.append((q, leaving))

        piv = alpha[r]
        for k in range(nrows):
            Binv[r, k] /= piv
            rowr[k] = Binv[r, k]
        alpha[r] = 0.0
        dger(&ir, &ir, &d_mone, &rowr[0], &one, &alpha[0], &one, &Binv[0, 0], &ir)
