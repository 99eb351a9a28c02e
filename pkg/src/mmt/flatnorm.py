"""Grid flat norms and microstructure approximations of diffuse fluxes.

The flat norm of a grid k-chain ``P`` is::

    min  M_h(P - dQ) + M_h(Q)     over (k+1)-chains Q on the same grid

with ``M_h`` the grid cost (``sum h(coefficient) * delta^k``).  It is an
exact LP over the cubical complex.
"""
import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .chains import ChainError, GridChain, PolyChain1, TestForm1, _box_rule, mass_Mh, pair
from .lp import LinearProgram, solve_lp

logger = logging.getLogger(__name__)

PRUNE_TOL = 1e-12
STUDY_ORDER = 24


class FlatNormError(RuntimeError):
    """The flat-norm LP did not reach an optimal solution."""


@dataclass(frozen=True)
class FlatNormResult:
    """Flat norm value with its optimal split ``input = remainder + boundary(filling)``."""

    value: float
    remainder: GridChain
    filling: GridChain
    mass_remainder: float
    mass_filling: float
    lp_objective: float

    def to_dict(self):
        return {"value": self.value, "mass_remainder": self.mass_remainder,
                "mass_filling": self.mass_filling, "lp_objective": self.lp_objective,
                "remainder": self.remainder.to_dict(), "filling": self.filling.to_dict()}


def _flat_lp(P, h, form):
    grid, k = P.grid, P.k
    D = grid.boundary_matrix(k + 1).toarray()
    nr, nq = D.shape
    m = h.m
    wr, wq = grid.delta ** k, grid.delta ** (k + 1)
    rhs = P.coefficients.ravel()
    if form == "gauge":
        V = h.primal_vertices
        J = len(V)
        Ar = np.kron(np.eye(nr), V.T)
        Aq = np.kron(D, V.T)
        c = np.concatenate([np.full(nr * J, wr), np.full(nq * J, wq)])
        ncols = (nr + nq) * J
        lp = LinearProgram(c, np.hstack([Ar, Aq]), rhs,
                           lower=np.zeros(ncols), upper=np.full(ncols, np.inf))

        def filling(x):
            return x[nr * J:].reshape(nq, J) @ V
        return lp, filling
    if form == "epigraph":
        # variables: q (nq*m), s (nr), t (nq); remainder r = P - D q
        Gv = h.dual_vertices
        K = len(Gv)
        nv = nq * m + nr + nq
        c = np.concatenate([np.zeros(nq * m), np.full(nr, wr), np.full(nq, wq)])
        Dq = np.kron(D, np.eye(m))
        rows, d = [], []
        for f in range(nr):
            blk = np.zeros((K, nv))
            blk[:, :nq * m] = -Gv @ Dq[f * m:(f + 1) * m]
            blk[:, nq * m + f] = -1.0
            rows.append(blk)
            d.append(-Gv @ P.coefficients[f])
        for cidx in range(nq):
            blk = np.zeros((K, nv))
            blk[:, cidx * m:(cidx + 1) * m] = Gv
            blk[:, nq * m + nr + cidx] = -1.0
            rows.append(blk)
            d.append(np.zeros(K))
        lp = LinearProgram(c, G=np.vstack(rows), d=np.concatenate(d))

        def filling(x):
            return x[:nq * m].reshape(nq, m)
        return lp, filling
    raise ChainError(f"unknown LP form {form!r}")


def grid_flat_norm(P, h, form="gauge"):
    """Flat norm of a grid 0- or 1-chain.

    Parameters
    ----------
    P : GridChain
        Degree 0 or 1.
    h : PolyhedralNorm
    form : {"gauge", "epigraph"}
        LP formulation; both give the same optimum.

    Returns
    -------
    FlatNormResult
    """
    if P.k not in (0, 1):
        raise ChainError("flat norms are computed for grid 0- and 1-chains")
    if P.m != h.m:
        raise ChainError("chain and norm disagree on the number of materials")
    empty = GridChain.zeros(P.grid, P.k + 1, P.m)
    if P.is_zero():
        return FlatNormResult(0.0, P, empty, 0.0, 0.0, 0.0)
    lp, filling = _flat_lp(P, h, form)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise FlatNormError(f"flat-norm LP ended with status {sol.status}: {sol.message}")
    Q = filling(np.asarray(sol.x))
    Q[np.abs(Q) < PRUNE_TOL] = 0.0
    Qc = GridChain(P.grid, P.k + 1, Q)
    R = P - Qc.boundary()
    R = GridChain(P.grid, P.k, np.where(np.abs(R.coefficients) < PRUNE_TOL, 0.0, R.coefficients))
    mr, mq = mass_Mh(h, R), mass_Mh(h, Qc)
    return FlatNormResult(mr + mq, R, Qc, mr, mq, float(sol.objective))


def flat_distance(P, P2, h, form="gauge"):
    """Flat norm of ``P - P2``."""
    return grid_flat_norm(P - P2, h, form).value


# ----------------------------------------------------------------------------
# microstructure
# ----------------------------------------------------------------------------

def _clip(poly, a, b):
    """Part of a convex polygon with ``a . x <= b``."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = a @ p - b, a @ q - b
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            out.append(p + (q - p) * (fp / (fp - fq)))
    return out


def _area(poly):
    if len(poly) < 3:
        return 0.0
    P = np.array(poly)
    x, y = P[:, 0], P[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _chord(lo, hi, nu, e, u):
    """Intersection of the line ``{nu . x = u}`` with the box, as ``(a, b)``."""
    x0 = u * nu
    t_lo, t_hi = -np.inf, np.inf
    for ax in range(2):
        if abs(e[ax]) < 1e-15:
            if not lo[ax] - 1e-15 <= x0[ax] <= hi[ax] + 1e-15:
                return None
            continue
        t1, t2 = (lo[ax] - x0[ax]) / e[ax], (hi[ax] - x0[ax]) / e[ax]
        t_lo, t_hi = max(t_lo, min(t1, t2)), min(t_hi, max(t1, t2))
    if t_hi - t_lo <= 1e-14:
        return None
    return x0 + t_lo * e, x0 + t_hi * e


def microstructure_chain(decomposition, k, box=((0.0, 0.0), (1.0, 1.0))):
    """Families of parallel segments whose cost and flux match ``sum theta_i x e_i``.

    Each family ``(theta, e)`` fills the box with lines in direction ``e``
    spaced ``1/k`` apart, starting from the extreme corner in the normal
    direction.  The line through the middle of each strip carries
    ``theta * (strip area in box) / (line length in box)``, so the cost of
    the family is exactly ``h(theta) * area(box)``.
    """
    if k < 1:
        raise ChainError("refinement k must be a positive integer")
    lo, hi = (np.asarray(v, float) for v in box)
    corners = [np.array(c) for c in ((lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1]))]
    w = 1.0 / k
    segs = []
    m = None
    for theta, e in decomposition:
        theta = np.asarray(theta, float)
        e = np.asarray(e, float)
        m = len(theta)
        ne = np.linalg.norm(e)
        if ne < 1e-12:
            raise ChainError("microstructure direction must be nonzero")
        e = e / ne
        nu = np.array([-e[1], e[0]])
        proj = [nu @ c for c in corners]
        smin, smax = min(proj), max(proj)
        nstrips = int(np.ceil((smax - smin) / w - 1e-12))
        for j in range(nstrips):
            u1 = smin + j * w
            u2 = min(smin + (j + 1) * w, smax)
            strip = _clip(_clip(corners, nu, u2), -nu, -u1)
            A = _area(strip)
            ch = _chord(lo, hi, nu, e, 0.5 * (u1 + u2))
            if ch is None or A <= 0:
                continue
            a, b = ch
            L = np.linalg.norm(b - a)
            segs.append((a, b, theta * (A / L)))
    if m is None:
        return PolyChain1.empty(2, 1)
    return PolyChain1.from_segments(segs, n=2, m=m)


def diffuse_pairing(M, omega, box=((0.0, 0.0), (1.0, 1.0)), order=STUDY_ORDER):
    """``integral over box of M : omega(x) dx`` by a tensor Gauss rule."""
    lo, hi = (np.asarray(v, float) for v in box)
    X, W = _box_rule(lo, hi, order)
    return float(np.einsum("k,kij,ij->", W, omega(X), np.asarray(M, float)))


@dataclass(frozen=True)
class StudyRow:
    k: int
    mass: float
    max_pairing_error: float
    segments: int
    flat_value: float = float("nan")


@dataclass(frozen=True)
class RelaxationStudy:
    rows: list
    expected_mass: float
    masses_constant: bool
    errors_decreasing: bool

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "mass", "max_pairing_error", "segments", "flat_value"])
        for r in self.rows:
            w.writerow([r.k, repr(r.mass), repr(r.max_pairing_error), r.segments, repr(r.flat_value)])
        return buf.getvalue()

    def to_dict(self):
        return {"expected_mass": self.expected_mass, "masses_constant": self.masses_constant,
                "errors_decreasing": self.errors_decreasing,
                "rows": [r.__dict__.copy() for r in self.rows]}


def default_forms(m=2, n=2, order=16):
    """Three smooth test forms: an affine field and two waves."""
    rng = np.random.default_rng(12345)
    affine = TestForm1.affine(rng.normal(size=(m, n)), rng.normal(size=(n, m, n)), order=order)
    wave1 = TestForm1.trig(rng.normal(size=(m, n)), [2 * np.pi, np.pi], rng.uniform(0, 2 * np.pi, (m, n)), order=order)
    wave2 = TestForm1.trig(rng.normal(size=(m, n)), [-np.pi, 3 * np.pi], rng.uniform(0, 2 * np.pi, (m, n)), order=order)
    return [affine, wave1, wave2]


def relaxation_study(M, decomposition, ks, forms, h, box=((0.0, 0.0), (1.0, 1.0)), mass_tol=1e-9):
    """Cost and weak distance of microstructures approximating a diffuse flux.

    For each ``k`` the microstructure chain is built; its cost is compared
    with ``sum h(theta_i) * area`` and its pairing with each form against
    the exact pairing of the diffuse density ``M``.
    """
    M = np.asarray(M, float)
    decomposition = [(np.asarray(t, float), np.asarray(e, float) / np.linalg.norm(e))
                     for t, e in decomposition]
    recon = sum((np.outer(t, e) for t, e in decomposition), np.zeros_like(M))
    if np.max(np.abs(recon - M), initial=0.0) > 1e-9:
        raise ChainError("decomposition does not sum to the flux matrix")
    lo, hi = (np.asarray(v, float) for v in box)
    area = float(np.prod(hi - lo))
    expected = sum(h(t) for t, _ in decomposition) * area
    exact = [diffuse_pairing(M, w, box) for w in forms]
    rows = []
    for k in ks:
        if not decomposition:
            rows.append(StudyRow(int(k), 0.0, 0.0, 0))
            continue
        P = microstructure_chain(decomposition, k, box)
        err = max((abs(pair(P, w) - ex) for w, ex in zip(forms, exact)), default=0.0)
        rows.append(StudyRow(int(k), mass_Mh(h, P), float(err), len(P)))
    const = all(abs(r.mass - expected) <= mass_tol for r in rows)
    errs = [r.max_pairing_error for r in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:])) if decomposition else True
    return RelaxationStudy(rows, float(expected), const, decreasing)


__all__ = [
    "FlatNormError", "FlatNormResult", "RelaxationStudy", "StudyRow", "default_forms",
    "diffuse_pairing", "flat_distance", "grid_flat_norm", "microstructure_chain",
    "relaxation_study",
]
