"""Two-phase bounded revised simplex on ``min c.x  s.t.  A x = b,  lo <= x <= hi``.

The explicit basis inverse is carried through product-form row updates by the
pivot kernel and rebuilt from a fresh LU factorization every
``REFACTOR_EVERY`` pivots.
"""
import logging
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

logger = logging.getLogger(__name__)

if os.environ.get("MMT_PURE_PYTHON", "") not in ("", "0"):
    from ._kernel_py import pivot_loop
    BACKEND = "python"
else:
    try:
        from ._kernel import pivot_loop
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        from ._kernel_py import pivot_loop
        BACKEND = "python"

REFACTOR_EVERY = 64
TOL_OPT = 1e-9
TOL_PIV = 1e-9
PHASE1_TOL = 1e-9
SINGULAR_TOL = 1e-13

_OPTIMAL, _UNBOUNDED, _REFACTOR, _ITER_LIMIT = 0, 1, 2, 3


@dataclass
class StandardResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit" | "numerical"
    x: np.ndarray
    y: np.ndarray
    objective: float
    iterations: int
    basis: np.ndarray
    trace: list = field(default_factory=list)


def _kernel(name=None):
    if name is None:
        return pivot_loop
    if name == "python":
        from ._kernel_py import pivot_loop as fn
        return fn
    from ._kernel import pivot_loop as fn
    return fn


def _initial_values(lo, hi):
    x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    status = np.where(np.isfinite(lo), 1, np.where(np.isfinite(hi), 2, 3)).astype(np.int8)
    return x, status


class SingularBasis(np.linalg.LinAlgError):
    pass


def _refactor(A, basis, x, b):
    B = A[:, basis]
    if len(basis) == 0:
        return np.zeros((0, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(B, check_finite=False)
    diag = np.abs(np.diag(lu[0]))
    if not np.all(np.isfinite(diag)) or diag.min() <= SINGULAR_TOL * max(1.0, diag.max()):
        raise SingularBasis("basis matrix is numerically singular")
    Binv, info = scipy.linalg.lapack.dgetri(lu[0], lu[1])
    if info != 0:
        raise SingularBasis("basis inversion failed")
    nonbasic = np.ones(A.shape[1], dtype=bool)
    nonbasic[basis] = False
    rhs = b - A[:, nonbasic] @ x[nonbasic]
    x[basis] = Binv @ rhs
    return np.ascontiguousarray(Binv)


def _run(A, b, c, lo, hi, basis, status, x, Binv, iters, max_iters, bland_after,
         trace, kernel):
    while True:
        code, iters, info = kernel(A, b, c, lo, hi, basis, status, x, Binv,
                                   REFACTOR_EVERY, bland_after, iters, max_iters,
                                   TOL_OPT, TOL_PIV, trace)
        if code == _REFACTOR:
            try:
                Binv[...] = _refactor(A, basis, x, b)
            except (np.linalg.LinAlgError, ValueError):
                return "numerical", iters, Binv
            continue
        if code == _OPTIMAL:
            # one clean refactorization before declaring optimality
            try:
                Binv[...] = _refactor(A, basis, x, b)
            except np.linalg.LinAlgError:
                return "numerical", iters, Binv
            code, iters, info = kernel(A, b, c, lo, hi, basis, status, x, Binv,
                                       REFACTOR_EVERY, bland_after, iters, max_iters,
                                       TOL_OPT, TOL_PIV, trace)
            if code == _REFACTOR:
                continue
        if code == _OPTIMAL:
            return "optimal", iters, Binv
        if code == _UNBOUNDED:
            return "unbounded", iters, Binv
        return "iteration_limit", iters, Binv


def solve_standard(c, A, b, lo, hi, max_iters=None, record_trace=False, kernel=None):
    """Minimize ``c.x`` subject to ``A x = b`` and ``lo <= x <= hi``.

    Parameters
    ----------
    c, A, b, lo, hi : array_like
        Problem data.  ``lo``/``hi`` may contain infinities.
    max_iters : int, optional
        Pivot cap over both phases; defaults to ``50 * (rows + cols) + 1000``.
    record_trace : bool
        Keep the ``(entering, leaving)`` column sequence of every pivot.
    kernel : {None, "python", "compiled"}
        Force a pivot backend (benchmarks and backend parity tests).

    Returns
    -------
    StandardResult
        ``y`` holds the row duals ``B^-T c_B`` of the final basis.
    """
    pivot = _kernel(kernel)
    A = np.ascontiguousarray(A, dtype=float)
    nrows, ncols = A.shape
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if max_iters is None:
        max_iters = 50 * (nrows + ncols) + 1000
    bland_after = 50 * max(nrows, 1)
    trace = [] if record_trace else None

    x0, st0 = _initial_values(lo, hi)
    resid = b - A @ x0

    # Phase 1: crash slack-like unit columns where their bounds allow, else artificials.
    basis = np.full(nrows, -1, dtype=np.int64)
    art_cols = []
    art_sign = []
    for i in range(nrows):
        art_cols.append(i)
        art_sign.append(1.0 if resid[i] >= 0 else -1.0)
    nart = nrows
    Aa = np.zeros((nrows, ncols + nart))
    Aa[:, :ncols] = A
    for k, i in enumerate(art_cols):
        Aa[i, ncols + k] = art_sign[k]
    lo_a = np.concatenate([lo, np.zeros(nart)])
    hi_a = np.concatenate([hi, np.full(nart, np.inf)])
    x = np.concatenate([x0, np.abs(resid)])
    status = np.concatenate([st0, np.zeros(nart, dtype=np.int8)])
    basis[:] = ncols + np.arange(nart)

    # crash: swap in unit structural columns that stay within their bounds
    for j in range(ncols):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if len(nz) != 1:
            continue
        i = nz[0]
        if basis[i] < ncols:
            continue
        val = x0[j] + resid[i] / col[i]
        if lo[j] - 1e-12 <= val <= hi[j] + 1e-12:
            k = basis[i]
            status[k] = 1
            x[k] = 0.0
            basis[i] = j
            status[j] = 0
            x[j] = val

    Aa = np.ascontiguousarray(Aa)
    c1 = np.concatenate([np.zeros(ncols), np.ones(nart)])
    Binv = _refactor(Aa, basis, x, b)  # crash basis is a signed permutation
    iters = 0
    need_phase1 = np.any(basis >= ncols) and np.any(x[ncols:] > 0)
    if need_phase1:
        state, iters, Binv = _run(Aa, b, c1, lo_a, hi_a, basis, status, x, Binv,
                                  iters, max_iters, bland_after, trace, pivot)
        if state in ("iteration_limit", "numerical"):
            return StandardResult(state, x[:ncols], np.zeros(nrows), np.nan, iters, basis, trace or [])
        infeas = x[ncols:].sum()
        if infeas > PHASE1_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            logger.debug("phase 1 residual %.3e, declaring infeasible", infeas)
            return StandardResult("infeasible", x[:ncols], np.zeros(nrows), np.nan, iters,
                                  basis, trace or [])

    # drive basic artificials out where possible; fix all artificials at zero
    for r in range(nrows):
        k = basis[r]
        if k < ncols:
            continue
        row = Binv[r, :] @ Aa[:, :ncols]
        row[status[:ncols] == 0] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) <= 1e-9:
            continue  # redundant row; artificial stays basic at zero
        alpha = Binv @ Aa[:, j]
        basis[r] = j
        status[j] = 0
        status[k] = 1
        x[k] = 0.0
        if trace is not None:
            trace.append((j, int(k)))
        piv = alpha[r]
        Binv[r, :] /= piv
        alpha[r] = 0.0
        Binv -= np.outer(alpha, Binv[r, :])
    hi_a[ncols:] = 0.0
    x[ncols:] = np.where(status[ncols:] == 0, x[ncols:], 0.0)
    try:
        Binv = _refactor(Aa, basis, x, b)
    except np.linalg.LinAlgError:
        return StandardResult("numerical", x[:ncols].copy(), np.zeros(nrows), np.nan, iters,
                              basis.copy(), trace or [])

    c2 = np.concatenate([c, np.zeros(nart)])
    state, iters, Binv = _run(Aa, b, c2, lo_a, hi_a, basis, status, x, Binv,
                              iters, max_iters, bland_after, trace, pivot)
    y = Binv.T @ c2[basis]
    xs = x[:ncols].copy()
    return StandardResult(state, xs, y, float(c @ xs), iters, basis.copy(), trace or [])
