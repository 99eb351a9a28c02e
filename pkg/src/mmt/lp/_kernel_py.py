"""Vectorized numpy pivot loop for the bounded revised simplex method.

This is the fallback for the compiled ``_kernel`` extension and follows the
same pivoting rules, so both backends agree on the pivot sequence up to
floating-point summation order.

Variable status codes (``status`` array, one entry per column)::

    0  basic
    1  nonbasic at lower bound
    2  nonbasic at upper bound
    3  nonbasic free (value 0)

Return codes of :func:`pivot_loop`::

    0  optimal
    1  unbounded (entering column in ``info``)
    2  pivot budget exhausted, caller should refactorize and call again
    3  iteration limit reached
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
REFACTOR = 2
ITER_LIMIT = 3

TIE_TOL = 1e-12


def pivot_loop(A, b, c, lo, hi, basis, status, x, Binv, max_pivots,
               bland_after, iters, max_iters, tol_opt, tol_piv, trace):
    """Run at most ``max_pivots`` simplex pivots, updating the state in place.

    Pricing is Dantzig (largest reduced-cost violation, lowest index on ties)
    until ``iters`` reaches ``bland_after``; afterwards Bland's rule.
    Returns ``(code, iters, info)``.
    """
    nrows = A.shape[0]
    movable = hi > lo
    pivots = 0
    while True:
        if iters >= max_iters:
            return ITER_LIMIT, iters, -1
        if pivots >= max_pivots:
            return REFACTOR, iters, -1

        y = Binv.T @ c[basis]
        d = c - A.T @ y
        bland = iters >= bland_after

        up = ((status == 1) & movable & (d < -tol_opt)) | ((status == 3) & (d < -tol_opt))
        down = ((status == 2) & movable & (d > tol_opt)) | ((status == 3) & (d > tol_opt))
        eligible = up | down
        if not eligible.any():
            return OPTIMAL, iters, -1
        if bland:
            q = int(np.flatnonzero(eligible)[0])
        else:
            q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
        direction = 1 if up[q] else -1

        alpha = Binv @ A[:, q]

        # basic variable i moves by -direction * alpha[i] * t
        a = direction * alpha
        xb = x[basis]
        lob = lo[basis]
        hib = hi[basis]
        t = np.full(nrows, np.inf)
        dec = (a > tol_piv) & (lob > -np.inf)
        inc = (a < -tol_piv) & (hib < np.inf)
        t[dec] = (xb[dec] - lob[dec]) / a[dec]
        t[inc] = (hib[inc] - xb[inc]) / (-a[inc])
        np.maximum(t, 0.0, out=t)
        tmin = t.min() if nrows else np.inf
        tflip = hi[q] - lo[q]

        if tflip <= tmin:
            if tflip == np.inf:
                return UNBOUNDED, iters, q
            x[q] += direction * tflip
            x[basis] -= tflip * a
            x[q] = hi[q] if direction > 0 else lo[q]
            status[q] = 2 if direction > 0 else 1
            iters += 1
            pivots += 1
            if trace is not None:
                trace.append((q, -1))
            continue

        ties = np.flatnonzero(t <= tmin + TIE_TOL)
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            # largest pivot among ties, lowest row index after that
            r = int(ties[np.argmax(np.abs(a[ties]))])
        step = t[r]
        x[q] += direction * step
        x[basis] -= step * a
        leaving = int(basis[r])
        if a[r] > 0:
            status[leaving] = 1
            x[leaving] = lo[leaving]
        else:
            status[leaving] = 2
            x[leaving] = hi[leaving]
        basis[r] = q
        status[q] = 0
        iters += 1
        pivots += 1
        if trace is not None:
            trace.append((q, leaving))

        Binv[r, :] /= alpha[r]
        alpha[r] = 0.0
        Binv -= np.outer(alpha, Binv[r, :])
