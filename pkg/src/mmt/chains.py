"""Finite chains with vector coefficients: point chains, segment chains, grid chains.

Coefficients live in ``R^m`` (one entry per material), positions in ``R^n``.
All chain types are immutable values; arithmetic returns new objects.

Orientation conventions
-----------------------
* A segment ``(a, b, theta)`` carries ``theta`` from ``a`` to ``b``; its
  boundary is ``theta * delta_b - theta * delta_a``.
* On a 2-d grid, edges point along the positive axes and cells are
  oriented counterclockwise, so the boundary of a cell is
  ``bottom + right - top - left``.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
from scipy.spatial import cKDTree

from .norms import GAP_TOL, GeneratedNorm, eval_H

MERGE_TOL = 1e-12
LENGTH_TOL = 1e-12
QUAD_ORDER = 8


class ChainError(ValueError):
    """Malformed chain or incompatible operands."""


def _rows(x, width, what):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.zeros((0, width))
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise ChainError(f"{what} must have {width} columns, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ChainError(f"{what} contains non-finite entries")
    return x


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)


# ----------------------------------------------------------------------------
# 0-chains
# ----------------------------------------------------------------------------

class PointChain0:
    """Finite sum of weighted Dirac atoms ``sum_j theta_j delta_{x_j}``.

    Atoms closer than ``MERGE_TOL`` (max-norm) are merged by adding weights;
    atoms whose weight vanishes within ``MERGE_TOL`` are dropped.

    Parameters
    ----------
    positions : array_like, shape (N, n)
    weights : array_like, shape (N, m)
    n, m : int, optional
        Needed only when the chain is empty.
    """

    def __init__(self, positions, weights, n=None, m=None):
        P = np.asarray(positions, dtype=float)
        W = np.asarray(weights, dtype=float)
        if n is None:
            if P.size == 0:
                raise ChainError("n is required for an empty point chain")
            n = P.shape[-1]
        if m is None:
            if W.size == 0:
                raise ChainError("m is required for an empty point chain")
            m = W.shape[-1]
        P = _rows(P, n, "positions")
        W = _rows(W, m, "weights")
        if len(P) != len(W):
            raise ChainError("positions and weights differ in length")
        self.n, self.m = int(n), int(m)
        self.positions, self.weights = self._normalize(P, W)
        _readonly(self.positions, self.weights)

    @staticmethod
    def _normalize(P, W):
        if len(P) == 0:
            return P.copy(), W.copy()
        pairs = cKDTree(P).query_pairs(MERGE_TOL, p=np.inf, output_type="ndarray")
        if len(pairs):
            graph = scipy.sparse.coo_matrix(
                (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(P), len(P)))
            _, label = scipy.sparse.csgraph.connected_components(graph, directed=False)
        else:
            label = np.arange(len(P))
        # representatives in order of first appearance keep the output stable
        _, first, inverse = np.unique(label, return_index=True, return_inverse=True)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        groups = rank[inverse]
        Pm = P[first[order]]
        Wm = np.zeros((len(order), W.shape[1]))
        np.add.at(Wm, groups, W)
        keep = np.max(np.abs(Wm), axis=1) > MERGE_TOL if Wm.shape[1] else np.zeros(len(Wm), bool)
        return Pm[keep], Wm[keep]

    @classmethod
    def empty(cls, n, m):
        return cls(np.zeros((0, n)), np.zeros((0, m)), n=n, m=m)

    @classmethod
    def from_atoms(cls, atoms, n=None, m=None):
        """Build from ``[(x, theta), ...]``."""
        atoms = list(atoms)
        if not atoms:
            return cls.empty(n, m)
        P = [np.asarray(x, float) for x, _ in atoms]
        W = [np.asarray(t, float) for _, t in atoms]
        return cls(np.array(P), np.array(W), n=n, m=m)

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(zip(self.positions, self.weights))

    def __repr__(self):
        return f"PointChain0({len(self)} atoms, n={self.n}, m={self.m})"

    def _check(self, other):
        if (self.n, self.m) != (other.n, other.m):
            raise ChainError("point chains live in different spaces")

    def __add__(self, other):
        self._check(other)
        return PointChain0(np.vstack([self.positions, other.positions]),
                           np.vstack([self.weights, other.weights]), self.n, self.m)

    def __neg__(self):
        return PointChain0(self.positions, -self.weights, self.n, self.m)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        return PointChain0(self.positions, float(s) * self.weights, self.n, self.m)

    __rmul__ = __mul__

    def total(self):
        """Componentwise total weight."""
        return self.weights.sum(axis=0) if len(self) else np.zeros(self.m)

    def is_admissible(self, tol=1e-10):
        """True when the total weight vanishes in every material."""
        return bool(np.all(np.abs(self.total()) <= tol))

    def weight_at(self, x, tol=MERGE_TOL):
        x = np.asarray(x, float)
        if len(self) == 0:
            return np.zeros(self.m)
        hit = np.max(np.abs(self.positions - x), axis=1) <= tol
        return self.weights[hit].sum(axis=0)

    def is_zero(self):
        return len(self) == 0

    def allclose(self, other, atol=1e-10):
        """Equality up to ``atol`` in weights (positions matched within ``atol``)."""
        self._check(other)
        diff = PointChain0(np.vstack([self.positions, other.positions]),
                           np.vstack([self.weights, -other.weights]), self.n, self.m)
        return len(diff) == 0 or bool(np.max(np.abs(diff.weights)) <= atol)

    def pair_potential(self, phi):
        """``sum_j phi(x_j) . theta_j`` for a callable ``phi: R^n -> R^m``."""
        return float(sum(np.dot(phi(x), t) for x, t in self))

    def to_dict(self):
        return {"n": self.n, "m": self.m,
                "atoms": [{"x": x.tolist(), "theta": t.tolist()} for x, t in self]}

    @classmethod
    def from_dict(cls, data):
        atoms = data.get("atoms", [])
        return cls.from_atoms([(a["x"], a["theta"]) for a in atoms], n=data.get("n"), m=data.get("m"))


# ----------------------------------------------------------------------------
# free segment chains
# ----------------------------------------------------------------------------

class PolyChain1:
    """Finite sum of weighted oriented segments ``sum_s theta_s [a_s, b_s]``.

    Segments shorter than ``LENGTH_TOL`` or with zero coefficient are
    dropped on construction.  Segments are stored independently; no vertex
    pool is shared.
    """

    def __init__(self, a, b, theta, n=None, m=None):
        A = np.asarray(a, dtype=float)
        if n is None:
            if A.size == 0:
                raise ChainError("n is required for an empty segment chain")
            n = A.shape[-1]
        T = np.asarray(theta, dtype=float)
        if m is None:
            if T.size == 0:
                raise ChainError("m is required for an empty segment chain")
            m = T.shape[-1]
        A = _rows(A, n, "segment starts")
        B = _rows(b, n, "segment ends")
        T = _rows(T, m, "segment coefficients")
        if not (len(A) == len(B) == len(T)):
            raise ChainError("segment arrays differ in length")
        L = np.linalg.norm(B - A, axis=1)
        keep = (L > LENGTH_TOL) & (np.max(np.abs(T), axis=1, initial=0.0) > 0)
        self.n, self.m = int(n), int(m)
        self.a, self.b, self.theta = A[keep].copy(), B[keep].copy(), T[keep].copy()
        self.lengths = L[keep]
        self.directions = (self.b - self.a) / self.lengths[:, None] if len(self.a) else np.zeros((0, n))
        _readonly(self.a, self.b, self.theta, self.lengths, self.directions)

    @classmethod
    def empty(cls, n, m):
        return cls(np.zeros((0, n)), np.zeros((0, n)), np.zeros((0, m)), n=n, m=m)

    @classmethod
    def from_segments(cls, segments, n=None, m=None):
        """Build from ``[(a, b, theta), ...]``."""
        segments = list(segments)
        if not segments:
            return cls.empty(n, m)
        a, b, t = zip(*segments)
        return cls(np.array(a, float), np.array(b, float), np.array(t, float), n=n, m=m)

    def __len__(self):
        return len(self.a)

    def __iter__(self):
        return iter(zip(self.a, self.b, self.theta))

    def __repr__(self):
        return f"PolyChain1({len(self)} segments, n={self.n}, m={self.m})"

    def __add__(self, other):
        if (self.n, self.m) != (other.n, other.m):
            raise ChainError("segment chains live in different spaces")
        return PolyChain1(np.vstack([self.a, other.a]), np.vstack([self.b, other.b]),
                          np.vstack([self.theta, other.theta]), self.n, self.m)

    def __neg__(self):
        return PolyChain1(self.a, self.b, -self.theta, self.n, self.m)

    def __mul__(self, s):
        return PolyChain1(self.a, self.b, float(s) * self.theta, self.n, self.m)

    __rmul__ = __mul__

    def reversed(self):
        """Same chain written with every segment flipped and negated."""
        return PolyChain1(self.b, self.a, -self.theta, self.n, self.m)

    def subdivided(self, t=0.5):
        """Split every segment at parameter ``t`` in (0, 1)."""
        if not 0 < t < 1:
            raise ChainError("subdivision parameter must lie in (0, 1)")
        mid = self.a + t * (self.b - self.a)
        return PolyChain1(np.vstack([self.a, mid]), np.vstack([mid, self.b]),
                          np.vstack([self.theta, self.theta]), self.n, self.m)

    def boundary(self):
        """Signed endpoint sum, merged."""
        return PointChain0(np.vstack([self.b, self.a]),
                           np.vstack([self.theta, -self.theta]), self.n, self.m)

    def vertices(self, tol=MERGE_TOL):
        """Distinct segment endpoints (merged within ``tol``)."""
        if len(self) == 0:
            return np.zeros((0, self.n))
        pts = np.vstack([self.a, self.b])
        keep = []
        for i, p in enumerate(pts):
            if not keep or np.max(np.abs(pts[keep] - p), axis=1).min() > tol:
                keep.append(i)
        return pts[keep]

    def to_dict(self):
        return {"n": self.n, "m": self.m,
                "segments": [{"a": a.tolist(), "b": b.tolist(), "theta": t.tolist()}
                             for a, b, t in self]}

    @classmethod
    def from_dict(cls, data):
        segs = data.get("segments", [])
        return cls.from_segments([(s["a"], s["b"], s["theta"]) for s in segs],
                                 n=data.get("n"), m=data.get("m"))


# ----------------------------------------------------------------------------
# grids
# ----------------------------------------------------------------------------

class Grid2D:
    """Uniform square grid on an axis-aligned box with spacing ``delta``.

    Node ``(i, j)`` sits at ``lo + delta * (i, j)`` and has index
    ``i + j * (nx + 1)``.  Horizontal edges come first (index ``i + j * nx``,
    from node ``(i, j)`` to ``(i + 1, j)``), then vertical edges (index
    ``H + i + j * (nx + 1)``, from ``(i, j)`` to ``(i, j + 1)``).  Cell
    ``(i, j)`` has index ``i + j * nx``.
    """

    n = 2

    def __init__(self, lo=(0.0, 0.0), hi=(1.0, 1.0), delta=1.0 / 16):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        if lo.shape != (2,) or hi.shape != (2,) or np.any(hi <= lo):
            raise ChainError("grid box must be a non-degenerate 2-d box")
        if not delta > 0:
            raise ChainError("grid spacing must be positive")
        counts = (hi - lo) / delta
        nx, ny = np.rint(counts).astype(int)
        if np.max(np.abs(counts - (nx, ny))) > 1e-9 * max(1.0, counts.max()):
            raise ChainError("box sides must be integer multiples of delta")
        self.lo, self.hi, self.delta = lo, hi, float(delta)
        self.nx, self.ny = int(nx), int(ny)
        self.n_nodes = (nx + 1) * (ny + 1)
        self.n_hedges = nx * (ny + 1)
        self.n_edges = self.n_hedges + (nx + 1) * ny
        self.n_cells = nx * ny
        self._d1 = None
        self._d2 = None

    def __eq__(self, other):
        return (isinstance(other, Grid2D) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi) and self.delta == other.delta)

    def __hash__(self):
        return hash((tuple(self.lo), tuple(self.hi), self.delta))

    def __repr__(self):
        return f"Grid2D(lo={self.lo.tolist()}, hi={self.hi.tolist()}, delta={self.delta})"

    def n_faces(self, k):
        return (self.n_nodes, self.n_edges, self.n_cells)[k]

    def node(self, i, j):
        return i + j * (self.nx + 1)

    def hedge(self, i, j):
        return i + j * self.nx

    def vedge(self, i, j):
        return self.n_hedges + i + j * (self.nx + 1)

    def cell(self, i, j):
        return i + j * self.nx

    def node_positions(self):
        j, i = np.divmod(np.arange(self.n_nodes), self.nx + 1)
        return self.lo + self.delta * np.column_stack([i, j])

    def edge_endpoints(self):
        """``(tails, heads)`` node indices of every edge."""
        e = np.arange(self.n_hedges)
        j, i = np.divmod(e, self.nx)
        tails_h = i + j * (self.nx + 1)
        heads_h = tails_h + 1
        e = np.arange(self.n_edges - self.n_hedges)
        j, i = np.divmod(e, self.nx + 1)
        tails_v = i + j * (self.nx + 1)
        heads_v = tails_v + self.nx + 1
        return np.concatenate([tails_h, tails_v]), np.concatenate([heads_h, heads_v])

    def cell_corners(self):
        """Lower-left corner of every cell."""
        j, i = np.divmod(np.arange(self.n_cells), self.nx)
        return self.lo + self.delta * np.column_stack([i, j])

    def boundary_matrix(self, k):
        """Sparse signed incidence from k-faces to (k-1)-faces (k = 1, 2)."""
        if k == 1:
            if self._d1 is None:
                tails, heads = self.edge_endpoints()
                E = self.n_edges
                rows = np.concatenate([heads, tails])
                cols = np.concatenate([np.arange(E), np.arange(E)])
                vals = np.concatenate([np.ones(E), -np.ones(E)])
                self._d1 = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_nodes, E))
            return self._d1
        if k == 2:
            if self._d2 is None:
                j, i = np.divmod(np.arange(self.n_cells), self.nx)
                bottom = i + j * self.nx
                top = i + (j + 1) * self.nx
                left = self.n_hedges + i + j * (self.nx + 1)
                right = left + 1
                C = self.n_cells
                cols = np.tile(np.arange(C), 4)
                rows = np.concatenate([bottom, right, top, left])
                vals = np.concatenate([np.ones(C), np.ones(C), -np.ones(C), -np.ones(C)])
                self._d2 = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_edges, C))
            return self._d2
        raise ChainError("boundary matrices exist for k = 1 and k = 2 only")

    def nearest_node(self, x, tol=1e-9):
        """Lattice coordinates of the node closest to ``x`` (which must lie in the box)."""
        x = np.asarray(x, float)
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            raise ChainError(f"point {x.tolist()} lies outside the grid box")
        ij = np.rint((x - self.lo) / self.delta).astype(int)
        return int(np.clip(ij[0], 0, self.nx)), int(np.clip(ij[1], 0, self.ny))

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "delta": self.delta}

    @classmethod
    def from_dict(cls, data):
        return cls(data.get("lo", (0.0, 0.0)), data.get("hi", (1.0, 1.0)), data.get("delta", 1.0 / 16))


class GridChain:
    """A k-chain on a :class:`Grid2D` with one ``R^m`` coefficient per k-face."""

    def __init__(self, grid, k, coefficients):
        if k not in (0, 1, 2):
            raise ChainError("grid chains have degree 0, 1 or 2")
        C = np.asarray(coefficients, dtype=float)
        if C.ndim != 2 or C.shape[0] != grid.n_faces(k):
            raise ChainError(f"expected {grid.n_faces(k)} rows of coefficients for k={k}")
        if not np.all(np.isfinite(C)):
            raise ChainError("grid coefficients must be finite")
        self.grid, self.k = grid, int(k)
        self.coefficients = C.copy()
        _readonly(self.coefficients)

    @property
    def m(self):
        return self.coefficients.shape[1]

    @classmethod
    def zeros(cls, grid, k, m):
        return cls(grid, k, np.zeros((grid.n_faces(k), m)))

    @classmethod
    def from_faces(cls, grid, k, m, faces):
        """Build from ``{face_index: theta}``."""
        C = np.zeros((grid.n_faces(k), m))
        for f, t in faces.items():
            C[int(f)] += np.asarray(t, float)
        return cls(grid, k, C)

    def __repr__(self):
        return f"GridChain(k={self.k}, support={len(self.support())}, m={self.m}, {self.grid!r})"

    def _check(self, other):
        if self.grid != other.grid or self.k != other.k or self.m != other.m:
            raise ChainError("grid chains are incompatible")

    def __add__(self, other):
        self._check(other)
        return GridChain(self.grid, self.k, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check(other)
        return GridChain(self.grid, self.k, self.coefficients - other.coefficients)

    def __neg__(self):
        return GridChain(self.grid, self.k, -self.coefficients)

    def __mul__(self, s):
        return GridChain(self.grid, self.k, float(s) * self.coefficients)

    __rmul__ = __mul__

    def support(self, tol=0.0):
        return np.flatnonzero(np.max(np.abs(self.coefficients), axis=1) > tol)

    def is_zero(self, tol=0.0):
        return len(self.support(tol)) == 0

    def boundary(self):
        if self.k == 0:
            raise ChainError("a 0-chain has no boundary")
        D = self.grid.boundary_matrix(self.k)
        return GridChain(self.grid, self.k - 1, D @ self.coefficients)

    def face_measure(self):
        return self.grid.delta ** self.k

    def to_point_chain(self):
        if self.k != 0:
            raise ChainError("only 0-chains convert to point chains")
        s = self.support()
        return PointChain0(self.grid.node_positions()[s], self.coefficients[s], n=2, m=self.m)

    def to_polychain(self):
        if self.k != 1:
            raise ChainError("only 1-chains convert to segment chains")
        s = self.support()
        tails, heads = self.grid.edge_endpoints()
        X = self.grid.node_positions()
        return PolyChain1(X[tails[s]], X[heads[s]], self.coefficients[s], n=2, m=self.m)

    def to_dict(self):
        s = self.support()
        return {"grid": self.grid.to_dict(), "k": self.k, "m": self.m,
                "faces": [{"index": int(f), "theta": self.coefficients[f].tolist()} for f in s]}

    @classmethod
    def from_dict(cls, data):
        grid = Grid2D.from_dict(data["grid"])
        faces = {f["index"]: f["theta"] for f in data.get("faces", [])}
        return cls.from_faces(grid, int(data["k"]), int(data["m"]), faces)


# ----------------------------------------------------------------------------
# mixed fluxes and test forms
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MixedFlux:
    """Segment part plus a cellwise constant diffuse density.

    ``diffuse`` is a list of ``(lo, hi, M)``: the density ``M`` (shape
    ``m x n``, per unit volume) on the axis-aligned box ``[lo, hi]``.
    """

    rect: PolyChain1
    diffuse: list = field(default_factory=list)

    def __post_init__(self):
        cells = []
        for lo, hi, M in self.diffuse:
            lo, hi = np.asarray(lo, float), np.asarray(hi, float)
            M = np.asarray(M, float)
            if lo.shape != (self.rect.n,) or hi.shape != lo.shape or np.any(hi <= lo):
                raise ChainError("diffuse cells must be non-degenerate boxes in R^n")
            if M.shape != (self.rect.m, self.rect.n):
                raise ChainError(f"diffuse density must be {self.rect.m}x{self.rect.n}")
            cells.append((lo, hi, M))
        object.__setattr__(self, "diffuse", cells)

    @classmethod
    def uniform(cls, M, lo, hi, rect=None):
        """Constant density ``M`` on one box, optional segment part."""
        M = np.asarray(M, float)
        m, n = M.shape
        rect = rect if rect is not None else PolyChain1.empty(n, m)
        return cls(rect, [(lo, hi, M)])

    @classmethod
    def on_grid(cls, grid, densities, rect=None):
        """Densities given as ``{cell_index: M}`` on a :class:`Grid2D`."""
        corners = grid.cell_corners()
        cells = [(corners[c], corners[c] + grid.delta, M) for c, M in sorted(densities.items())]
        if rect is None:
            M0 = np.asarray(next(iter(densities.values())), float)
            rect = PolyChain1.empty(2, M0.shape[0])
        return cls(rect, cells)


class TestForm1:
    """Smooth ``R^{m x n}``-valued field ``omega`` used to probe chains.

    Families
    --------
    constant : ``omega(x) = W``
    affine : ``omega(x) = W + sum_l x_l S[l]``
    trig : ``omega(x)_{ij} = A_{ij} sin(f . x + phase_{ij})``
    """

    __test__ = False  # not a pytest class

    def __init__(self, kind, m, n, order=QUAD_ORDER, **params):
        if order < 1:
            raise ChainError("quadrature order must be at least 1")
        self.kind, self.m, self.n, self.order = kind, int(m), int(n), int(order)
        shape = (self.m, self.n)
        if kind == "constant":
            self.W = np.asarray(params["W"], float).reshape(shape)
        elif kind == "affine":
            self.W = np.asarray(params.get("W", np.zeros(shape)), float).reshape(shape)
            self.S = np.asarray(params["S"], float).reshape((self.n,) + shape)
        elif kind == "trig":
            self.A = np.asarray(params["A"], float).reshape(shape)
            self.freq = np.asarray(params["freq"], float).reshape(self.n)
            self.phase = np.asarray(params.get("phase", np.zeros(shape)), float).reshape(shape)
        else:
            raise ChainError(f"unknown test form family {kind!r}")

    @classmethod
    def constant(cls, W, order=QUAD_ORDER):
        W = np.atleast_2d(np.asarray(W, float))
        return cls("constant", W.shape[0], W.shape[1], order, W=W)

    @classmethod
    def affine(cls, W, S, order=QUAD_ORDER):
        W = np.atleast_2d(np.asarray(W, float))
        return cls("affine", W.shape[0], W.shape[1], order, W=W, S=S)

    @classmethod
    def trig(cls, A, freq, phase=None, order=QUAD_ORDER):
        A = np.atleast_2d(np.asarray(A, float))
        return cls("trig", A.shape[0], A.shape[1], order, A=A, freq=freq,
                   phase=np.zeros_like(A) if phase is None else phase)

    def __call__(self, X):
        """Evaluate at points ``X`` of shape ``(..., n)``; returns ``(..., m, n)``."""
        X = np.asarray(X, float)
        if self.kind == "constant":
            return np.broadcast_to(self.W, X.shape[:-1] + self.W.shape)
        if self.kind == "affine":
            return self.W + np.tensordot(X, self.S, axes=([-1], [0]))
        arg = (X @ self.freq)[..., None, None] + self.phase
        return self.A * np.sin(arg)


# ----------------------------------------------------------------------------
# masses, pairing, rasterization
# ----------------------------------------------------------------------------

def mass_Mh(h, chain):
    """Cost ``sum h(theta) * measure`` of a segment chain or a grid chain."""
    if isinstance(chain, PolyChain1):
        if chain.m != h.m:
            raise ChainError("chain and norm disagree on the number of materials")
        if len(chain) == 0:
            return 0.0
        return float(h.values(chain.theta) @ chain.lengths)
    if isinstance(chain, GridChain):
        if chain.m != h.m:
            raise ChainError("chain and norm disagree on the number of materials")
        s = chain.support()
        if len(s) == 0:
            return 0.0
        return float(h.values(chain.coefficients[s]).sum() * chain.face_measure())
    raise ChainError(f"cannot take the mass of {type(chain).__name__}")


@dataclass(frozen=True)
class MassInterval:
    lower: float
    upper: float

    @property
    def gap(self):
        return self.upper - self.lower

    def __contains__(self, v):
        return self.lower <= v <= self.upper


def mass_H(G, flux, gap_tol=GAP_TOL):
    """Bracket the cost of a :class:`MixedFlux`.

    The segment part contributes its exact cost; each diffuse cell
    contributes ``H(M) * volume`` with ``H`` bracketed by
    :func:`mmt.norms.eval_H`.  Identical densities are evaluated once.
    """
    if not isinstance(G, GeneratedNorm):
        raise ChainError("mass_H needs a GeneratedNorm")
    if (flux.rect.m, flux.rect.n) != (G.m, G.n):
        raise ChainError("flux and norm dimensions disagree")
    base = mass_Mh(G.h, flux.rect)
    lo = hi = base
    cache = {}
    total_vol = sum(float(np.prod(b - a)) for a, b, _ in flux.diffuse) or 1.0
    for a, b, M in flux.diffuse:
        key = M.tobytes()
        if key not in cache:
            cache[key] = eval_H(G, M, gap_tol=gap_tol / total_vol)
        br = cache[key]
        vol = float(np.prod(b - a))
        lo += br.lower * vol
        hi += br.upper * vol
    return MassInterval(lo, hi)


def _box_rule(lo, hi, order):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(lo, hi):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    grids = np.meshgrid(*nodes, indexing="ij")
    W = weights[0]
    for w_ in weights[1:]:
        W = np.multiply.outer(W, w_)
    return np.stack([g.ravel() for g in grids], axis=1), W.ravel()


def pair(chain, omega, cell_order=1):
    """Evaluate the chain on a test form.

    Segments use Gauss-Legendre quadrature of ``omega.order`` points; each
    diffuse cell uses a tensor rule with ``cell_order`` points per axis
    (1 is the midpoint rule).  Grid 1-chains pair as segment chains.
    """
    if cell_order < 1:
        raise ChainError("quadrature order must be at least 1")
    if isinstance(chain, GridChain):
        chain = chain.to_polychain()
    if isinstance(chain, MixedFlux):
        total = pair(chain.rect, omega)
        for lo, hi, M in chain.diffuse:
            X, W = _box_rule(lo, hi, cell_order)
            total += float(np.einsum("k,kij,ij->", W, omega(X), M))
        return total
    if not isinstance(chain, PolyChain1):
        raise ChainError(f"cannot pair {type(chain).__name__}")
    if (chain.m, chain.n) != (omega.m, omega.n):
        raise ChainError("chain and test form dimensions disagree")
    if len(chain) == 0:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(omega.order)
    s = 0.5 * (x + 1.0)
    X = chain.a[:, None, :] + s[None, :, None] * (chain.b - chain.a)[:, None, :]
    vals = omega(X)  # (S, q, m, n)
    integrand = np.einsum("sqij,sj,si->sq", vals, chain.directions, chain.theta)
    return float(np.sum(integrand @ (0.5 * w) * chain.lengths))


def _staircase(start, end):
    """Lattice path from ``start`` to ``end`` hugging the straight line."""
    (i, j), (i1, j1) = start, end
    di, dj = i1 - i, j1 - j
    si, sj = (di > 0) - (di < 0), (dj > 0) - (dj < 0)
    steps = []
    ci = cj = 0
    while (ci, cj) != (abs(di), abs(dj)):
        if ci == abs(di):
            move = 1
        elif cj == abs(dj):
            move = 0
        else:
            # pick the step that keeps the lattice point nearest the line
            ex = abs((ci + 1) * abs(dj) - cj * abs(di))
            ey = abs(ci * abs(dj) - (cj + 1) * abs(di))
            move = 0 if ex <= ey else 1
        if move == 0:
            steps.append((0, i + si * ci, j + sj * cj, si))
            ci += 1
        else:
            steps.append((1, i + si * ci, j + sj * cj, sj))
            cj += 1
    return steps


def rasterize(chain, grid):
    """Replace every segment by a monotone lattice path between snapped endpoints.

    The boundary of the result equals the boundary of ``chain`` with every
    atom moved to its nearest lattice node.
    """
    if chain.n != 2:
        raise ChainError("rasterization is implemented for planar chains")
    C = np.zeros((grid.n_edges, chain.m))
    for a, b, theta in chain:
        p, q = grid.nearest_node(a), grid.nearest_node(b)
        for axis, i, j, sign in _staircase(p, q):
            if axis == 0:
                e = grid.hedge(i if sign > 0 else i - 1, j)
            else:
                e = grid.vedge(i, j if sign > 0 else j - 1)
            C[e] += sign * theta
    return GridChain(grid, 1, C)


def snap(points, grid):
    """Point chain with every atom moved to its nearest lattice node."""
    X = grid.node_positions()
    pos = [X[grid.node(*grid.nearest_node(x))] for x in points.positions]
    return PointChain0(np.array(pos).reshape(-1, points.n), points.weights, points.n, points.m)


__all__ = [
    "ChainError", "Grid2D", "GridChain", "MassInterval", "MixedFlux", "PointChain0",
    "PolyChain1", "TestForm1", "mass_H", "mass_Mh", "pair", "rasterize", "snap",
]
