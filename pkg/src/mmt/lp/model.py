"""Linear programs in the form used throughout the package and their solution.

A :class:`LinearProgram` reads::

    minimize    c . x
    subject to  A x  = b
                G x <= d
                lower <= x <= upper      (default: x free)

:func:`solve_lp` returns primal ``x``, equality duals ``y`` and inequality
duals ``lam >= 0`` such that at optimality ``A^T y - G^T lam + z = c`` with
reduced costs ``z`` supported on active bounds, and
``c.x = b.y - d.lam + (bound terms)``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import simplex

logger = logging.getLogger(__name__)

PRIMAL_TOL = 1e-8
DUAL_TOL = 1e-8
GAP_TOL = 1e-7


class LpError(ValueError):
    """Malformed linear program."""


def _as_matrix(M, ncols):
    if M is None:
        return np.zeros((0, ncols))
    M = np.asarray(M, dtype=float)
    if M.ndim == 1 and M.size == 0:
        return np.zeros((0, ncols))
    if M.ndim != 2:
        raise LpError("constraint matrices must be 2-d")
    return M


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    G: np.ndarray = None
    d: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = _as_matrix(self.A, n)
        G = _as_matrix(self.G, n)
        b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).ravel()
        d = np.zeros(0) if self.d is None else np.asarray(self.d, dtype=float).ravel()
        lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if A.shape != (b.size, n):
            raise LpError(f"equality block has shape {A.shape}, expected ({b.size}, {n})")
        if G.shape != (d.size, n):
            raise LpError(f"inequality block has shape {G.shape}, expected ({d.size}, {n})")
        if lower.size != n or upper.size != n:
            raise LpError("bounds must have one entry per variable")
        for name, arr in (("c", c), ("A", A), ("b", b), ("G", G), ("d", d)):
            if not np.all(np.isfinite(arr)):
                raise LpError(f"{name} contains non-finite entries")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower > upper):
            raise LpError("inconsistent variable bounds")
        for name, arr in (("c", c), ("A", A), ("b", b), ("G", G), ("d", d),
                          ("lower", lower), ("upper", upper)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.c.size

    def dual(self):
        """Explicit dual as a minimization over ``(y, lam)``.

        Finite variable bounds become extra inequality rows first.  The
        returned program minimizes ``-b.y + d'.lam`` subject to
        ``A^T y - G'^T lam = c``, ``lam >= 0``; its optimal value is the
        negated primal optimum.
        """
        G, d = self._bounds_as_rows()
        p, q = self.A.shape[0], G.shape[0]
        cost = np.concatenate([-self.b, d])
        Aeq = np.hstack([self.A.T, -G.T])
        lower = np.concatenate([np.full(p, -np.inf), np.zeros(q)])
        return LinearProgram(cost, Aeq, self.c, lower=lower)

    def _bounds_as_rows(self):
        n = self.n
        lo_idx = np.flatnonzero(np.isfinite(self.lower))
        hi_idx = np.flatnonzero(np.isfinite(self.upper))
        rows = [self.G]
        rhs = [self.d]
        if lo_idx.size:
            R = np.zeros((lo_idx.size, n))
            R[np.arange(lo_idx.size), lo_idx] = -1.0
            rows.append(R)
            rhs.append(-self.lower[lo_idx])
        if hi_idx.size:
            R = np.zeros((hi_idx.size, n))
            R[np.arange(hi_idx.size), hi_idx] = 1.0
            rows.append(R)
            rhs.append(self.upper[hi_idx])
        return np.vstack(rows), np.concatenate(rhs)


@dataclass
class LpSolution:
    status: str  # "optimal", "infeasible", "unbounded" or "numerical"
    x: np.ndarray
    objective: float
    y: np.ndarray
    lam: np.ndarray
    reduced_costs: np.ndarray
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    gap: float = np.nan
    complementarity: float = np.nan
    iterations: int = 0
    route: str = "primal"
    trace: list = field(default_factory=list)
    message: str = ""

    @property
    def optimal(self):
        return self.status == "optimal"

    @property
    def dual_objective(self):
        return self.objective - self.gap if np.isfinite(self.gap) else np.nan


def _residuals(lp, x, y, lam):
    """Primal/dual feasibility residuals, duality gap, reduced costs."""
    pr = 0.0
    if lp.A.shape[0]:
        pr = max(pr, np.abs(lp.A @ x - lp.b).max())
    if lp.G.shape[0]:
        pr = max(pr, np.maximum(lp.G @ x - lp.d, 0.0).max())
    pr = max(pr, np.maximum(lp.lower - x, 0.0).max(initial=0.0),
             np.maximum(x - lp.upper, 0.0).max(initial=0.0))
    z = lp.c - lp.A.T @ y + lp.G.T @ lam
    # z_j > 0 needs a finite lower bound, z_j < 0 a finite upper bound
    viol = np.where(z > 0, np.where(np.isfinite(lp.lower), 0.0, z),
                    np.where(np.isfinite(lp.upper), 0.0, -z))
    dr = max(np.abs(viol).max(initial=0.0), np.maximum(-lam, 0.0).max(initial=0.0))
    zl = np.where(z > 0, np.where(np.isfinite(lp.lower), lp.lower, 0.0), 0.0)
    zu = np.where(z < 0, np.where(np.isfinite(lp.upper), lp.upper, 0.0), 0.0)
    dual_obj = lp.b @ y - lp.d @ lam + z @ zl + z @ zu
    primal_obj = lp.c @ x
    comp = np.abs(lam * (lp.d - lp.G @ x)).max(initial=0.0) if lp.G.shape[0] else 0.0
    return pr, dr, primal_obj - dual_obj, comp, z


def _solve_primal(lp, record_trace, kernel):
    p, q, n = lp.A.shape[0], lp.G.shape[0], lp.n
    A = np.zeros((p + q, n + q))
    A[:p, :n] = lp.A
    A[p:, :n] = lp.G
    A[p:, n:] = np.eye(q)
    b = np.concatenate([lp.b, lp.d])
    c = np.concatenate([lp.c, np.zeros(q)])
    lo = np.concatenate([lp.lower, np.zeros(q)])
    hi = np.concatenate([lp.upper, np.full(q, np.inf)])
    res = simplex.solve_standard(c, A, b, lo, hi, record_trace=record_trace, kernel=kernel)
    x = res.x[:n]
    y = res.y[:p]
    lam = -res.y[p:]
    return res.status, x, y, lam, res.iterations, res.trace


def _solve_dual(lp, record_trace, kernel):
    D = lp.dual()
    p = lp.A.shape[0]
    q = lp.G.shape[0]
    res = simplex.solve_standard(D.c, D.A, D.b, D.lower, D.upper,
                                 record_trace=record_trace, kernel=kernel)
    if res.status == "infeasible":
        return "dual_infeasible", None, None, None, res.iterations, res.trace
    if res.status == "unbounded":
        return "infeasible", None, None, None, res.iterations, res.trace
    y = res.x[:p]
    lam = res.x[p:p + q]
    x = -res.y
    return res.status, x, y, lam, res.iterations, res.trace


def solve_lp(lp, method="auto", record_trace=False, kernel=None):
    """Solve ``lp`` by the two-phase bounded simplex method.

    Parameters
    ----------
    lp : LinearProgram
    method : {"auto", "primal", "dual"}
        ``"dual"`` runs the simplex on the explicit dual and reads the primal
        solution off its row multipliers.  ``"auto"`` picks whichever
        standard form has fewer rows (ties go to the primal).
    record_trace : bool
        Store the pivot sequence on the solution.
    kernel : {None, "python", "compiled"}
        Force a pivot backend.

    Returns
    -------
    LpSolution
        ``status`` is ``"numerical"`` when the final point misses the
        feasibility or gap tolerances; values are still returned for
        inspection.
    """
    n = lp.n
    p, q = lp.A.shape[0], lp.G.shape[0]
    if method == "auto":
        nbnd = int(np.isfinite(lp.lower).sum() + np.isfinite(lp.upper).sum())
        method = "dual" if n < p + q and nbnd == 0 else "primal"

    if method == "dual":
        status, x, y, lam, iters, trace = _solve_dual(lp, record_trace, kernel)
        if status == "dual_infeasible":
            # primal is unbounded or infeasible; let the primal route decide
            status, x, y, lam, it2, trace2 = _solve_primal(lp, record_trace, kernel)
            iters += it2
            trace = trace + trace2
            method = "primal"
        if status == "infeasible" and x is None:
            x, y, lam = np.full(n, np.nan), np.zeros(p), np.zeros(q)
    else:
        status, x, y, lam, iters, trace = _solve_primal(lp, record_trace, kernel)

    if status != "optimal":
        if status == "iteration_limit":
            status = "numerical"
        obj = -np.inf if status == "unbounded" else np.nan
        return LpSolution(status, x, obj, y, lam, np.full(n, np.nan), iterations=iters,
                          route=method, trace=trace, message=f"simplex ended with {status}")

    lam_raw = lam
    lam = np.maximum(lam, 0.0)
    pr, dr, gap, comp, z = _residuals(lp, x, y, lam)
    dr = max(dr, np.maximum(-lam_raw, 0.0).max(initial=0.0))
    obj = float(lp.c @ x)
    sol = LpSolution("optimal", x, obj, y, lam, z, pr, dr, gap, comp, iters, method, trace)
    if not (pr <= PRIMAL_TOL and dr <= DUAL_TOL and abs(gap) <= GAP_TOL * (1.0 + abs(obj))):
        sol.status = "numerical"
        sol.message = (f"tolerances missed: primal {pr:.2e}, dual {dr:.2e}, gap {gap:.2e}")
        logger.warning("LP %s", sol.message)
    return sol


# ---------------------------------------------------------------------------
# plain-text dump for external cross-checking

def write_lp_text(lp, path_or_file):
    """Write ``lp`` in the fixed OBJ/EQ/INEQ/BOUNDS text format."""
    lines = [f"NVARS {lp.n}", "OBJ"]
    lines.append(" ".join(repr(float(v)) for v in lp.c))
    lines.append(f"EQ {lp.A.shape[0]}")
    for row, rhs in zip(lp.A, lp.b):
        lines.append(" ".join(repr(float(v)) for v in row) + " = " + repr(float(rhs)))
    lines.append(f"INEQ {lp.G.shape[0]}")
    for row, rhs in zip(lp.G, lp.d):
        lines.append(" ".join(repr(float(v)) for v in row) + " <= " + repr(float(rhs)))
    lines.append("BOUNDS")
    for j in range(lp.n):
        lines.append(f"{j} {float(lp.lower[j])!r} {float(lp.upper[j])!r}")
    lines.append("END")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def _expect(line, word):
    if line.split()[:1] != [word]:
        raise LpError(f"expected {word} section, got {line!r}")
    return line


def read_lp_text(path_or_file):
    """Inverse of :func:`write_lp_text`."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file) as fh:
            text = fh.read()
    it = iter(text.splitlines())
    n = int(_expect(next(it), "NVARS").split()[1])
    _expect(next(it), "OBJ")
    c = [float(v) for v in next(it).split()]

    def block(sep):
        k = int(next(it).split()[1])
        rows, rhs = [], []
        for _ in range(k):
            left, right = next(it).split(sep)
            rows.append([float(v) for v in left.split()])
            rhs.append(float(right))
        return np.array(rows).reshape(k, n), np.array(rhs)

    A, b = block(" = ")
    G, d = block(" <= ")
    _expect(next(it), "BOUNDS")
    lower = np.empty(n)
    upper = np.empty(n)
    for _ in range(n):
        j, lo, hi = next(it).split()
        lower[int(j)] = float(lo)
        upper[int(j)] = float(hi)
    return LinearProgram(np.array(c), A, b, G, d, lower, upper)
