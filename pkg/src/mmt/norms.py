"""Material cost norms ``h`` on R^m and the generated matrix norms ``H`` on R^{m x n}.

A :class:`PolyhedralNorm` is stored by the vertices ``g_k`` of its dual unit
ball, so ``h(theta) = max_k g_k . theta``.  The vertices of the primal unit
ball are enumerated once at construction (polar of the dual ball) and give
the dual norm ``h_*(y) = max_j v_j . y``.

The generated norm ``H`` is the largest convex function with
``H(theta (x) e) = h(theta)`` for unit ``e``.  Its dual is an operator norm,
``H_*(N) = sup_{|e|=1} h_*(N e) = max_j |N^T v_j|``, which is exact for
polyhedral ``h``.  ``H`` itself is only bracketed: an LP over a finite set of
rank-one directions gives an upper bound, dual certificates ``N`` with
``H_*(N) <= 1`` give lower bounds.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .lp import LinearProgram, solve_lp

logger = logging.getLogger(__name__)

DUP_TOL = 1e-12
SYM_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9
GAP_TOL = 1e-6
ASCENT_CAP = 10_000


class NormError(ValueError):
    """Invalid norm data or dimension mismatch."""


def _vec(x, dim, what="vector"):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise NormError(f"{what} must have shape ({dim},), got {x.shape}")
    return x


def _dedupe(D, tol=1e-12):
    D = np.asarray(D, dtype=float)
    keep = []
    for i, e in enumerate(D):
        if not keep or np.max(np.abs(D[keep] - e), axis=1).min() > tol:
            keep.append(i)
    return D[keep]


def _polar_vertices(V):
    """Vertices of ``{x : v . x <= 1 for all rows v of V}``.

    ``V`` must be symmetric and span R^m so that the polar is a bounded
    polytope containing 0 in its interior.
    """
    m = V.shape[1]
    if np.linalg.matrix_rank(V, tol=1e-10) < m:
        raise NormError("vertex set does not span R^m; the polar ball is unbounded")
    if m == 1:
        r = np.abs(V[:, 0]).max()
        return np.array([[1.0 / r], [-1.0 / r]])
    hull = ConvexHull(V)
    out = []
    for eq in hull.equations:
        normal, offset = eq[:-1], eq[-1]
        if offset >= -1e-14:
            raise NormError("origin is not interior to the vertex hull")
        out.append(normal / -offset)
    scale = max(1.0, np.abs(out).max())
    return _dedupe(np.array(out), 1e-9 * scale)


class PolyhedralNorm:
    """Norm ``h(theta) = max_k g_k . theta`` given by dual-ball vertices.

    Parameters
    ----------
    dual_vertices : array_like, shape (K, m)
        Vertices of the dual unit ball ``dh(0)``.  Must be symmetric under
        negation, free of duplicates and span R^m.
    name : str, optional
        Label used in serialization of the built-in norms.
    """

    def __init__(self, dual_vertices, name=None):
        G = np.atleast_2d(np.asarray(dual_vertices, dtype=float))
        if G.ndim != 2 or G.shape[0] == 0 or G.shape[1] == 0:
            raise NormError("dual_vertices must be a non-empty (K, m) array")
        if not np.all(np.isfinite(G)):
            raise NormError("dual_vertices must be finite")
        for i, j in itertools.combinations(range(G.shape[0]), 2):
            if np.max(np.abs(G[i] - G[j])) <= DUP_TOL:
                raise NormError(f"duplicate dual vertices {i} and {j}")
        scale = max(1.0, np.abs(G).max())
        for i, g in enumerate(G):
            if not np.any(np.max(np.abs(G + g), axis=1) <= SYM_TOL * scale):
                raise NormError(f"dual vertex {i} has no negated partner")
        self.m = G.shape[1]
        self.name = name
        self.dual_vertices = G
        self.primal_vertices = _polar_vertices(G)
        G.setflags(write=False)
        self.primal_vertices.setflags(write=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_primal_vertices(cls, primal_vertices, name=None):
        """Norm whose primal unit ball is ``conv(primal_vertices)``."""
        V = np.atleast_2d(np.asarray(primal_vertices, dtype=float))
        V = np.vstack([V, -V])
        V = _dedupe(V, DUP_TOL)
        if V.shape[1] >= 2:
            hull = ConvexHull(V)
            V = V[np.sort(hull.vertices)]
        return cls(_polar_vertices(V), name=name)

    @classmethod
    def hexagonal(cls):
        """``h(theta) = max(|theta_1|, |theta_2|, |theta_1 - theta_2|)``."""
        G = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, -1], [-1, 1]]
        return cls(G, name="linf-hex")

    @classmethod
    def l1(cls, m=2):
        G = list(itertools.product((-1.0, 1.0), repeat=m))
        return cls(G, name="l1")

    @classmethod
    def euclidean(cls, m=2, samples=64):
        """Symmetric sampling of the Euclidean norm.

        For ``m = 2`` the dual vertices are ``samples`` equally spaced unit
        vectors, so ``cos(pi / samples) |theta| <= h(theta) <= |theta|``
        (relative error below 1.3e-3 for the default 64).  For ``m = 3`` a
        golden-spiral sample of the sphere is used, for ``m >= 4`` normalized
        points of the lattice ``{-1, 0, 1}^m``.
        """
        if m == 1:
            G = [[1.0], [-1.0]]
        elif m == 2:
            if samples < 4 or samples % 2:
                raise NormError("euclidean sampling needs an even count >= 4")
            ang = 2 * np.pi * np.arange(samples) / samples
            G = np.column_stack([np.cos(ang), np.sin(ang)])
        elif m == 3:
            half = max(samples // 2, 4)
            k = np.arange(half) + 0.5
            z = k / half
            phi = np.pi * (1 + 5 ** 0.5) * k
            r = np.sqrt(1 - z ** 2)
            P = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
            G = np.vstack([P, -P])
        else:
            pts = np.array([p for p in itertools.product((-1, 0, 1), repeat=m) if any(p)], float)
            G = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        return cls(np.asarray(G, float), name="euclidean")

    @classmethod
    def named(cls, name, m=2, samples=64):
        if name == "linf-hex":
            if m != 2:
                raise NormError("linf-hex is defined for m = 2 only")
            return cls.hexagonal()
        if name == "l1":
            return cls.l1(m)
        if name == "euclidean":
            return cls.euclidean(m, samples)
        raise NormError(f"unknown norm name {name!r}")

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        return {"m": self.m, "dual_vertices": self.dual_vertices.tolist()}

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, str):
            return cls.named(data)
        if "name" in data and "dual_vertices" not in data:
            return cls.named(data["name"], m=data.get("m", 2), samples=data.get("samples", 64))
        if "primal_vertices" in data:
            return cls.from_primal_vertices(data["primal_vertices"])
        norm = cls(data["dual_vertices"])
        if "m" in data and data["m"] != norm.m:
            raise NormError(f"m = {data['m']} does not match vertex dimension {norm.m}")
        return norm

    def to_json(self):
        return json.dumps(self.to_dict())

    def __repr__(self):
        label = self.name or "custom"
        return f"PolyhedralNorm({label}, m={self.m}, K={len(self.dual_vertices)})"

    # -- evaluation -------------------------------------------------------
    def __call__(self, theta):
        return eval_h(self, theta)

    def values(self, thetas):
        """``h`` applied row-wise to an ``(N, m)`` array."""
        T = np.asarray(thetas, dtype=float).reshape(-1, self.m)
        return np.max(T @ self.dual_vertices.T, axis=1) if len(T) else np.zeros(0)

    def dual(self, y):
        return eval_h_dual(self, y)

    def argmax_dual_vertex(self, theta):
        theta = _vec(theta, self.m, "theta")
        return self.dual_vertices[int(np.argmax(self.dual_vertices @ theta))]


def eval_h(h, theta):
    """``h(theta) = max_k g_k . theta``."""
    theta = _vec(theta, h.m, "theta")
    return float(np.max(h.dual_vertices @ theta))


def eval_h_dual(h, y):
    """Dual norm ``h_*(y) = max_j v_j . y`` over primal-ball vertices."""
    y = _vec(y, h.m, "y")
    return float(np.max(h.primal_vertices @ y))


def in_dual_ball(h, g, tol=MEMBERSHIP_TOL):
    """Membership ``g in dh(0)``, i.e. ``h_*(g) <= 1 + tol``."""
    return eval_h_dual(h, g) <= 1.0 + tol


# ---------------------------------------------------------------------------
# generated matrix norm


def _icosa_directions():
    """62 symmetric unit vectors: icosahedron vertices, face and edge centers."""
    p = (1 + 5 ** 0.5) / 2
    V = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            V += [(0, s1, s2 * p), (s1, s2 * p, 0), (s2 * p, 0, s1)]
    V = np.array(V, float)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    D = V @ V.T
    edge = D.max(where=~np.eye(12, dtype=bool), initial=-1)
    pts = list(V)
    for i, j in itertools.combinations(range(12), 2):
        if abs(D[i, j] - edge) < 1e-9:
            pts.append(V[i] + V[j])
    for i, j, k in itertools.combinations(range(12), 3):
        if all(abs(D[a, b] - edge) < 1e-9 for a, b in ((i, j), (j, k), (i, k))):
            pts.append(V[i] + V[j] + V[k])
    P = np.array(pts)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def default_directions(n):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = 2 * np.pi * np.arange(32) / 32
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        return _icosa_directions()
    raise NormError("default direction sets exist for n <= 3 only")


def _symmetrize(D):
    D = np.asarray(D, dtype=float)
    return _dedupe(np.vstack([D, -D]))


def _half(D):
    """One representative of each +-pair."""
    D = _dedupe(np.asarray(D, dtype=float))
    keep = []
    for i, e in enumerate(D):
        if not keep or np.max(np.abs(D[keep] + e), axis=1).min() > 1e-12:
            keep.append(i)
    return D[keep]


@dataclass(frozen=True)
class HBracket:
    """Certified interval ``lower <= H(M) <= upper``."""

    lower: float
    upper: float
    certificate: np.ndarray
    decomposition: list
    status: str = "ok"
    refinements: int = 0

    @property
    def gap(self):
        return self.upper - self.lower

    @property
    def midpoint(self):
        return 0.5 * (self.lower + self.upper)

    def __contains__(self, value):
        return self.lower <= value <= self.upper


@dataclass
class LowerBound:
    value: float
    certificate: np.ndarray
    converged: bool
    iterations: int = 0


class GeneratedNorm:
    """The norm ``H`` on ``m x n`` matrices generated by ``h``.

    Parameters
    ----------
    h : PolyhedralNorm
    n : int
        Spatial dimension.
    directions : array_like, optional
        Unit vectors used by the upper-bound LP; defaults to 32 uniform
        angles (n=2) or a 62-point sphere covering (n=3).  The set is
        closed under negation.
    extra_directions : array_like, optional
        Appended to ``directions`` (normalized).
    """

    def __init__(self, h, n, directions=None, extra_directions=None):
        if n < 1:
            raise NormError("n must be positive")
        self.h = h
        self.n = n
        D = default_directions(n) if directions is None else np.atleast_2d(np.asarray(directions, float))
        if extra_directions is not None:
            E = np.atleast_2d(np.asarray(extra_directions, float))
            D = np.vstack([D, E / np.linalg.norm(E, axis=1, keepdims=True)])
        if D.shape[1] != n:
            raise NormError(f"directions must have {n} columns")
        if np.any(np.abs(np.linalg.norm(D, axis=1) - 1.0) > 1e-12):
            raise NormError("directions must be unit vectors")
        self.directions = _symmetrize(D)
        self.directions.setflags(write=False)

    @property
    def m(self):
        return self.h.m

    def _mat(self, M):
        M = np.asarray(M, dtype=float)
        if M.shape != (self.m, self.n):
            raise NormError(f"matrix must have shape ({self.m}, {self.n}), got {M.shape}")
        return M

    def with_directions(self, extra):
        return GeneratedNorm(self.h, self.n, self.directions, extra)


def eval_H_dual(G, M):
    """``H_*(M) = max_j |M^T v_j|_2`` over primal vertices ``v_j`` of ``h``."""
    M = G._mat(M)
    return float(np.max(np.linalg.norm(G.h.primal_vertices @ M, axis=1)))


def in_dH0(G, M, tol=MEMBERSHIP_TOL):
    """``M B_1(0) subset dh(0)``, equivalently ``H_*(M) <= 1 + tol``."""
    return eval_H_dual(G, M) <= 1.0 + tol


def _upper_lp(G, M, directions):
    m, n = G.m, G.n
    D = _half(directions)
    nd = len(D)
    K = len(G.h.dual_vertices)
    nv = nd * (m + 1)
    c = np.zeros(nv)
    c[m::m + 1] = 1.0
    A = np.zeros((m * n, nv))
    for i, e in enumerate(D):
        base = i * (m + 1)
        for a in range(m):
            A[a * n:(a + 1) * n, base + a] = e
    Gm = np.zeros((nd * K, nv))
    for i in range(nd):
        base = i * (m + 1)
        Gm[i * K:(i + 1) * K, base:base + m] = G.h.dual_vertices
        Gm[i * K:(i + 1) * K, base + m] = -1.0
    lp = LinearProgram(c, A, M.ravel(), Gm, np.zeros(nd * K))
    return lp, D


def eval_H_upper(G, M, directions=None):
    """Upper bound ``min sum_i h(theta_i)`` over ``M = sum_i theta_i (x) e_i``.

    The ``e_i`` range over ``directions`` (default: ``G.directions``).

    Returns
    -------
    value : float
    decomposition : list of (theta, e)
        Active rank-one terms.
    N : ndarray
        Equality multipliers of the LP; they satisfy ``h_*(N e) <= 1`` on the
        sampled directions only.
    """
    M = G._mat(M)
    D = G.directions if directions is None else directions
    if np.linalg.matrix_rank(D) < G.n:
        raise NormError("direction set does not span R^n")
    lp, Dh = _upper_lp(G, M, D)
    sol = solve_lp(lp)
    if sol.status not in ("optimal", "numerical"):
        raise NormError(f"rank-one decomposition LP failed: {sol.status}")
    m = G.m
    X = sol.x.reshape(len(Dh), m + 1)
    decomp = []
    for i, e in enumerate(Dh):
        theta = X[i, :m]
        if np.max(np.abs(theta)) > 1e-12:
            decomp.append((theta.copy(), e.copy()))
    value = float(sum(eval_h(G.h, t) for t, _ in decomp))
    N = sol.y.reshape(m, G.n)
    return value, decomp, N


def _rank_one_candidates(G, M):
    best, bestN = 0.0, np.zeros_like(M)
    for g in G.h.dual_vertices:
        w = M.T @ g
        nw = np.linalg.norm(w)
        if nw > best:
            best, bestN = nw, np.outer(g, w / nw)
    return best, bestN


def _project_dH0(G, N, cycles=50, tol=1e-13):
    """Dykstra projection onto ``{N : |N^T v_j| <= 1 for all j}``."""
    V = _half(G.h.primal_vertices)
    vv = np.einsum("ij,ij->i", V, V)
    incr = np.zeros((len(V),) + N.shape)
    X = N.copy()
    for _ in range(cycles):
        moved = 0.0
        for j, v in enumerate(V):
            Z = X + incr[j]
            u = Z.T @ v
            s = np.linalg.norm(u)
            P = Z if s <= 1.0 else Z - np.outer(v, u) * ((1.0 - 1.0 / s) / vv[j])
            incr[j] = Z - P
            moved = max(moved, np.abs(P - X).max())
            X = P
        if moved <= tol:
            break
    return X


def _feasible_value(G, M, N):
    s = eval_H_dual(G, N)
    if s <= 0.0:
        return 0.0, np.zeros_like(N)
    N = N / max(1.0, s)
    return float(np.sum(M * N)), N


def eval_H_lower(G, M, warm_start=None, max_iter=ASCENT_CAP, patience=200):
    """Lower bound ``M:N`` with ``H_*(N) <= 1`` by projected ascent.

    Starts from the best of the rank-one certificates ``g_k (x) M^T g_k /
    |M^T g_k|`` and ``warm_start`` (rescaled into the dual ball), then runs
    projected supergradient steps ``N <- P(N + eta M)``.  Every iterate is
    rescaled by ``max(1, H_*(N))`` before its value is recorded, so the
    returned value is always a valid lower bound.  ``converged`` is false
    when ``max_iter`` was hit while the value was still improving.
    """
    M = G._mat(M)
    normM = np.linalg.norm(M)
    if normM == 0.0:
        return LowerBound(0.0, np.zeros_like(M), True, 0)
    best, bestN = _rank_one_candidates(G, M)
    if warm_start is not None:
        v, Nw = _feasible_value(G, M, np.asarray(warm_start, float).reshape(M.shape))
        if v > best:
            best, bestN = v, Nw
    N = bestN.copy()
    eta = 0.5 / normM
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        N = _project_dH0(G, N + eta * M)
        v, Nf = _feasible_value(G, M, N)
        if v > best + 1e-15 * max(1.0, abs(best)):
            best, bestN = v, Nf
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                return LowerBound(best, bestN, True, it)
    return LowerBound(best, bestN, False, it)


def _refine(G, D, decomp, N):
    """New directions: violated directions of ``N`` and bisected neighbours."""
    new = []
    V = G.h.primal_vertices
    U = V @ N
    norms = np.linalg.norm(U, axis=1)
    worst = int(np.argmax(norms))
    if norms[worst] > 1.0 + 1e-12:
        new.append(U[worst] / norms[worst])
    if G.n == 2:
        ang = np.sort(np.mod(np.arctan2(D[:, 1], D[:, 0]), 2 * np.pi))
        for _, e in decomp:
            a = math.atan2(e[1], e[0]) % (2 * np.pi)
            k = int(np.argmin(np.abs(ang - a)))
            for nb in ((k - 1) % len(ang), (k + 1) % len(ang)):
                lo, hi = ang[k], ang[nb]
                if nb == (k - 1) % len(ang) and hi > lo:
                    hi -= 2 * np.pi
                if nb == (k + 1) % len(ang) and hi < lo:
                    hi += 2 * np.pi
                mid = 0.5 * (lo + hi)
                new.append([math.cos(mid), math.sin(mid)])
    elif G.n == 3:
        for _, e in decomp:
            dots = D @ e
            order = np.argsort(-dots)[1:4]
            for k in order:
                mid = e + D[k]
                nm = np.linalg.norm(mid)
                if nm > 1e-9:
                    new.append(mid / nm)
    if not new:
        return D
    return _symmetrize(np.vstack([D, np.array(new)]))


def _svd_upper(G, M):
    """Upper bound from the singular value decomposition ``sum s_i u_i (x) v_i``."""
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    decomp = [(S[i] * U[:, i], Vt[i].copy()) for i in range(len(S)) if S[i] > 0.0]
    return float(sum(eval_h(G.h, t) for t, _ in decomp)), decomp


def eval_H(G, M, gap_tol=GAP_TOL, max_refinements=12, warm_start=None):
    """Bracket ``H(M)`` to within ``gap_tol``.

    The singular value decomposition gives a first upper bound, which
    already closes the bracket for rank-one input.  Otherwise alternates
    the direction LP (upper bound, plus its multipliers as a dual candidate) with refinement of the direction set around active and
    violated directions.  When the refinement budget is spent, projected
    ascent polishes the lower bound and the result carries
    ``status="gap-not-reached"`` if the bracket is still too wide.
    """
    if gap_tol <= 0:
        raise NormError("gap_tol must be positive")
    M = G._mat(M)
    if not np.any(M):
        return HBracket(0.0, 0.0, np.zeros_like(M), [])
    D = G.directions
    best_lo, best_N = _rank_one_candidates(G, M)
    if warm_start is not None:
        v, Nw = _feasible_value(G, M, np.asarray(warm_start, float).reshape(M.shape))
        if v > best_lo:
            best_lo, best_N = v, Nw
    upper, decomp = _svd_upper(G, M)
    if upper - best_lo <= gap_tol:
        return HBracket(min(best_lo, upper), upper, best_N, decomp, "ok", 0)
    for r in range(max_refinements + 1):
        up, dec, Nlp = eval_H_upper(G, M, D)
        if up < upper:
            upper, decomp = up, dec
        v, Nf = _feasible_value(G, M, Nlp)
        if v > best_lo:
            best_lo, best_N = v, Nf
        if upper - best_lo <= gap_tol:
            return HBracket(min(best_lo, upper), upper, best_N, decomp, "ok", r)
        D = _refine(G, D, dec, Nlp)
    lb = eval_H_lower(G, M, warm_start=best_N)
    if lb.value > best_lo:
        best_lo, best_N = lb.value, lb.certificate
    status = "ok" if upper - best_lo <= gap_tol else "gap-not-reached"
    if status != "ok":
        logger.warning("H bracket width %.3e exceeds gap_tol %.1e", upper - best_lo, gap_tol)
    return HBracket(min(best_lo, upper), upper, best_N, decomp, status, max_refinements)
