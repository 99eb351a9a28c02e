"""Optimality certificates for multi-material flows.

A potential ``phi`` (one ``R^m`` value per point) is feasible when
``h_*(phi(b) - phi(a)) <= |b - a|`` along every admissible segment.  A
feasible potential whose value ``sum_j phi(x_j) . theta_j`` on the boundary
equals the cost of a flow proves that flow optimal; this module checks such
pairs on graphs and for piecewise constant gradient fields in the plane.
"""
import csv
import io
import logging
from collections import deque
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .chains import mass_Mh
from .flow import FlowSolution, GeometricGraph, flow_to_polychain
from .lp import LinearProgram, solve_lp
from .norms import MEMBERSHIP_TOL, GeneratedNorm, eval_H_dual

logger = logging.getLogger(__name__)

VALUE_TOL = 1e-7
CONTINUITY_TOL = 1e-9
FEAS_TOL = 1e-7
COVER_SAMPLES = 64


class CertificateError(ValueError):
    """Inputs that cannot be checked (dimension or vertex mismatch)."""


# ----------------------------------------------------------------------------
# potentials on graphs
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """Node values ``phi_v`` on a :class:`GeometricGraph`."""

    graph: GeometricGraph
    values: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.values, float)
        if V.ndim != 2 or len(V) != self.graph.n_nodes:
            raise CertificateError("potential needs one row per graph node")
        if not np.all(np.isfinite(V)):
            raise CertificateError("potential values must be finite")
        V = V.copy()
        V.setflags(write=False)
        object.__setattr__(self, "values", V)

    @classmethod
    def from_function(cls, graph, phi):
        return cls(graph, np.array([phi(x) for x in graph.nodes], float))

    @classmethod
    def affine(cls, graph, Phi, c=None):
        Phi = np.asarray(Phi, float)
        c = np.zeros(Phi.shape[0]) if c is None else np.asarray(c, float)
        return cls(graph, graph.nodes @ Phi.T + c)

    def at(self, x):
        v = self.graph.node_index(x)
        if v is None:
            raise CertificateError(f"{np.asarray(x).tolist()} is not a graph node")
        return self.values[v]

    def __mul__(self, s):
        return Potential(self.graph, float(s) * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PotentialCheck:
    slacks: np.ndarray
    feasible: bool

    @property
    def min_slack(self):
        return float(self.slacks.min()) if len(self.slacks) else np.inf


def check_potential(graph, phi, h, tol=FEAS_TOL):
    """Per-edge slack ``L_e - h_*(phi(head) - phi(tail))``."""
    if not isinstance(phi, Potential):
        phi = Potential(graph, phi)
    if phi.graph is not graph and phi.values.shape[0] != graph.n_nodes:
        raise CertificateError("potential and graph do not match")
    if phi.values.shape[1] != h.m:
        raise CertificateError("potential and norm disagree on the number of materials")
    E = graph.edges
    drops = phi.values[E[:, 1]] - phi.values[E[:, 0]]
    slacks = graph.lengths - np.array([h.dual(d) for d in drops]).reshape(-1)
    return PotentialCheck(slacks, bool(len(slacks) == 0 or slacks.min() >= -tol))


# ----------------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------------

@dataclass
class CalibrationReport:
    """Outcome of a calibration check.

    ``verdict`` is ``"certified-optimal"`` exactly when ``feasible`` holds
    and ``|gap| <= tol * (1 + primal_value)``.
    """

    feasible: bool
    primal_value: float
    dual_value: float
    continuity_residual: float = 0.0
    tightness: np.ndarray = field(default_factory=lambda: np.zeros(0))
    slacks: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reasons: list = field(default_factory=list)
    tol: float = VALUE_TOL

    @property
    def gap(self):
        return self.primal_value - self.dual_value

    @property
    def verdict(self):
        if not self.feasible:
            return "infeasible"
        if abs(self.gap) <= self.tol * (1.0 + abs(self.primal_value)):
            return "certified-optimal"
        return "gap-positive"

    @property
    def certified(self):
        return self.verdict == "certified-optimal"

    def to_dict(self):
        return {"verdict": self.verdict, "feasible": self.feasible,
                "primal_value": self.primal_value, "dual_value": self.dual_value,
                "gap": self.gap, "continuity_residual": self.continuity_residual,
                "tightness": np.asarray(self.tightness).tolist(),
                "slacks": np.asarray(self.slacks).tolist(), "reasons": list(self.reasons)}

    def residuals_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "tightness", "slack"])
        n = max(len(self.tightness), len(self.slacks))
        for i in range(n):
            t = repr(float(self.tightness[i])) if i < len(self.tightness) else ""
            s = repr(float(self.slacks[i])) if i < len(self.slacks) else ""
            w.writerow([i, t, s])
        return buf.getvalue()


def _tightness(chain, phi_at, h):
    if len(chain) == 0:
        return np.zeros(0)
    drops = np.array([phi_at(b) - phi_at(a) for a, b, _ in chain])
    return np.einsum("si,si->s", chain.theta, drops) - h.values(chain.theta) * chain.lengths


def verify_calibration_graph(graph, flow, phi, boundary, h, tol=VALUE_TOL):
    """Check that a flow and a node potential form an optimal pair on a graph.

    Parameters
    ----------
    graph : GeometricGraph
    flow : PolyChain1 or FlowSolution
        Segments must join graph nodes.
    phi : Potential or array_like, shape (N, m)
    boundary : PointChain0
        Prescribed boundary; its atoms must be graph nodes.
    h : PolyhedralNorm
    """
    if isinstance(flow, FlowSolution):
        flow = flow_to_polychain(flow)
    if not isinstance(phi, Potential):
        phi = Potential(graph, phi)
    reasons = []
    feasible = True
    if not flow.boundary().allclose(boundary, atol=1e-8):
        feasible = False
        reasons.append("infeasible-primal: boundary of the flow differs from the prescribed boundary")
    check = check_potential(graph, phi, h)
    if not check.feasible:
        feasible = False
        worst = int(np.argmin(check.slacks))
        reasons.append(f"infeasible-dual: edge {worst} violated by {-check.slacks[worst]:.3e}")
    primal = mass_Mh(h, flow)
    dual = float(sum(np.dot(phi.at(x), t) for x, t in boundary))
    tight = _tightness(flow, phi.at, h)
    return CalibrationReport(feasible, primal, dual, 0.0, tight, check.slacks, reasons, tol)


def certify_solution(solution, tol=VALUE_TOL):
    """Graph calibration check of a solver's own flow and potentials."""
    p = solution.problem
    return verify_calibration_graph(p.graph, flow_to_polychain(solution),
                                    Potential(p.graph, solution.potentials), p.boundary, p.h, tol)


# ----------------------------------------------------------------------------
# piecewise constant fields
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """Open convex polygon ``{x : A x < b}`` carrying the constant matrix ``Phi``."""

    A: np.ndarray
    b: np.ndarray
    Phi: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float)).reshape(-1, 2) if np.size(self.A) else np.zeros((0, 2))
        b = np.asarray(self.b, float).reshape(-1)
        if len(A) != len(b):
            raise CertificateError("halfspace data must have matching lengths")
        scale = np.linalg.norm(A, axis=1)
        if np.any(scale == 0):
            raise CertificateError("zero halfspace normal")
        object.__setattr__(self, "A", A / scale[:, None])
        object.__setattr__(self, "b", b / scale)
        object.__setattr__(self, "Phi", np.asarray(self.Phi, float))

    def contains(self, x, tol=1e-12):
        return bool(np.all(self.A @ np.asarray(x, float) <= self.b + tol))


class PiecewiseCalibration:
    """Planar matrix field that is constant on convex regions of a box.

    Parameters
    ----------
    regions : list of Region
    box : ((x0, y0), (x1, y1))
        Working box; regions are intersected with it.
    """

    def __init__(self, regions, box):
        lo, hi = (np.asarray(v, float) for v in box)
        if lo.shape != (2,) or hi.shape != (2,) or np.any(hi <= lo):
            raise CertificateError("field box must be a non-degenerate planar box")
        if not regions:
            raise CertificateError("a field needs at least one region")
        shapes = {np.shape(r.Phi) for r in regions}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2 or next(iter(shapes))[1] != 2:
            raise CertificateError("all region matrices must share one m x 2 shape")
        self.regions = list(regions)
        self.lo, self.hi = lo, hi
        boxA = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
        boxb = np.array([hi[0], -lo[0], hi[1], -lo[1]])
        self._clipped = [(np.vstack([r.A, boxA]), np.concatenate([r.b, boxb])) for r in self.regions]
        self.adjacency = self._facets()

    @property
    def m(self):
        return self.regions[0].Phi.shape[0]

    @classmethod
    def constant(cls, Phi, box):
        return cls([Region(np.zeros((0, 2)), np.zeros(0), Phi, "all")], box)

    def _facet_segment(self, i, j, a, beta):
        """Common piece of the line ``a.x = beta`` on both closed regions."""
        t = np.array([-a[1], a[0]])
        x0 = a * beta
        s_lo, s_hi = -np.inf, np.inf
        for A, b in (self._clipped[i], self._clipped[j]):
            for ak, bk in zip(A, b):
                da = ak @ t
                rhs = bk - ak @ x0
                if abs(da) <= 1e-14:
                    if rhs < -1e-12:
                        return None
                    continue
                if da > 0:
                    s_hi = min(s_hi, rhs / da)
                else:
                    s_lo = max(s_lo, rhs / da)
        if s_hi - s_lo <= 1e-9:
            return None
        return x0 + s_lo * t, x0 + s_hi * t, t

    def _facets(self):
        """Shared facets of positive length: ``(i, j, p, q, tangent)``."""
        out = []
        for i in range(len(self.regions)):
            for j in range(i + 1, len(self.regions)):
                Ri, Rj = self.regions[i], self.regions[j]
                for a, beta in zip(Ri.A, Ri.b):
                    match = np.flatnonzero((np.abs(Rj.A + a).max(axis=1) <= 1e-9)
                                           & (np.abs(Rj.b + beta) <= 1e-9)) if len(Rj.A) else []
                    if len(match) == 0:
                        continue
                    seg = self._facet_segment(i, j, a, beta)
                    if seg is not None:
                        out.append((i, j) + seg)
        return out

    def locate(self, x, tol=1e-9):
        """Index of a closed region containing ``x``, or ``None``."""
        x = np.asarray(x, float)
        for k, (A, b) in enumerate(self._clipped):
            if np.all(A @ x <= b + tol):
                return k
        return None

    def overlap(self, i, j):
        """Radius of the largest disc inside both regions (0 when interiors are disjoint)."""
        A = np.vstack([self._clipped[i][0], self._clipped[j][0]])
        b = np.concatenate([self._clipped[i][1], self._clipped[j][1]])
        # maximize r subject to A x + r |a_k| <= b, 0 <= r
        G = np.column_stack([A, np.ones(len(A))])
        lp = LinearProgram(np.array([0.0, 0.0, -1.0]), G=G, d=b,
                           lower=np.array([-np.inf, -np.inf, 0.0]),
                           upper=np.array([np.inf, np.inf, np.inf]))
        sol = solve_lp(lp)
        if sol.status == "infeasible":
            return 0.0
        return max(0.0, float(-sol.objective))

    def coverage_gaps(self, samples=COVER_SAMPLES):
        """Sample points of the box (uniform lattice) not covered by any region."""
        u = (np.arange(samples) + 0.5) / samples
        X, Y = np.meshgrid(self.lo[0] + u * (self.hi - self.lo)[0],
                           self.lo[1] + u * (self.hi - self.lo)[1], indexing="ij")
        P = np.column_stack([X.ravel(), Y.ravel()])
        covered = np.zeros(len(P), bool)
        for A, b in self._clipped:
            covered |= np.all(P @ A.T <= b + 1e-12, axis=1)
        return P[~covered]

    def reconstruct(self, root=None):
        """Offsets ``c_r`` making ``phi = Phi_r x + c_r`` continuous.

        Returns ``(offsets, residual, bad_facets)``; the residual is the
        largest mismatch of the two affine pieces over all facet endpoints.
        """
        R = len(self.regions)
        if root is None:
            root = self.locate(np.zeros(2))
            root = 0 if root is None else root
        nbrs = {k: [] for k in range(R)}
        for f, (i, j, p, q, _) in enumerate(self.adjacency):
            nbrs[i].append((j, f))
            nbrs[j].append((i, f))
        c = [None] * R
        c[root] = np.zeros(self.m)
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j, f in nbrs[i]:
                if c[j] is None:
                    _, _, p, q, _ = self.adjacency[f]
                    mid = 0.5 * (p + q)
                    c[j] = c[i] + (self.regions[i].Phi - self.regions[j].Phi) @ mid
                    queue.append(j)
        residual, bad = 0.0, []
        for f, (i, j, p, q, _) in enumerate(self.adjacency):
            if c[i] is None or c[j] is None:
                continue
            for x in (p, q):
                r = np.max(np.abs(self.regions[i].Phi @ x + c[i] - self.regions[j].Phi @ x - c[j]))
                if r > residual:
                    residual = float(r)
                if r > CONTINUITY_TOL and f not in bad:
                    bad.append(f)
        return c, residual, bad

    def potential(self):
        """Callable continuous potential built from :meth:`reconstruct`."""
        c, _, _ = self.reconstruct()

        def phi(x):
            k = self.locate(x)
            if k is None or c[k] is None:
                raise CertificateError(f"point {np.asarray(x).tolist()} is outside the field")
            return self.regions[k].Phi @ np.asarray(x, float) + c[k]

        return phi


def verify_calibration_field(field_, flow, boundary, G, tol=VALUE_TOL):
    """Check a piecewise constant field against a flow and its boundary.

    The checks are: every region matrix lies in the unit ball of ``H_*``;
    regions cover the box and have disjoint interiors; the jump across
    every shared facet is normal to it (tangential continuity); the
    reconstructed potential is single valued; the flow has the prescribed
    boundary; finally the flow cost is compared with the potential's value
    on the boundary.
    """
    if not isinstance(G, GeneratedNorm):
        raise CertificateError("field calibrations need a GeneratedNorm")
    if field_.m != G.m or G.n != 2 or flow.n != 2:
        raise CertificateError("field, flow and norm dimensions disagree")
    h = G.h
    reasons = []
    feasible = True
    for k, r in enumerate(field_.regions):
        val = eval_H_dual(G, r.Phi)
        if val > 1.0 + MEMBERSHIP_TOL:
            feasible = False
            reasons.append(f"region {r.name or k}: H_*(Phi) = {val:.12g} > 1")
    gaps = field_.coverage_gaps()
    if len(gaps):
        feasible = False
        reasons.append(f"field leaves {len(gaps)} sample points uncovered, e.g. {gaps[0].tolist()}")
    for i in range(len(field_.regions)):
        for j in range(i + 1, len(field_.regions)):
            if field_.overlap(i, j) > 1e-9:
                feasible = False
                reasons.append(f"regions {i} and {j} overlap")
    jump = 0.0
    for i, j, p, q, t in field_.adjacency:
        r = float(np.max(np.abs((field_.regions[i].Phi - field_.regions[j].Phi) @ t)))
        jump = max(jump, r)
        if r > CONTINUITY_TOL:
            feasible = False
            reasons.append(f"tangential jump {r:.3e} across facet between regions {i} and {j}")
    offsets, residual, bad = field_.reconstruct()
    if bad:
        feasible = False
        cyc = [(field_.adjacency[f][0], field_.adjacency[f][1]) for f in bad]
        reasons.append(f"not a gradient field: inconsistent offsets on facets {cyc}")
    if any(c is None for c in offsets):
        feasible = False
        reasons.append("region adjacency graph is disconnected")
    pts = [x for x in boundary.positions] + [p for seg in zip(flow.a, flow.b) for p in seg]
    for x in pts:
        if field_.locate(x) is None:
            raise CertificateError(f"point {x.tolist()} lies outside the field box")
    if not flow.boundary().allclose(boundary, atol=1e-8):
        feasible = False
        reasons.append("infeasible-primal: boundary of the flow differs from the prescribed boundary")
    primal = mass_Mh(h, flow)
    if any(c is None for c in offsets):
        return CalibrationReport(False, primal, float("nan"), max(jump, residual), reasons=reasons, tol=tol)
    phi = field_.potential()
    dual = float(sum(np.dot(phi(x), t) for x, t in boundary))
    tight = _tightness(flow, phi, h)
    return CalibrationReport(feasible, primal, dual, max(jump, residual), tight, np.zeros(0),
                             reasons, tol)


# ----------------------------------------------------------------------------
# junction analytics
# ----------------------------------------------------------------------------

def momentum_residual(flow, x, h, tol=1e-9):
    """``sum_out h(theta) e - sum_in h(theta) e`` over segments meeting ``x``.

    A segment leaves ``x`` when it starts there and enters when it ends
    there.
    """
    x = np.asarray(x, float)
    if len(flow) == 0:
        raise CertificateError("empty chain has no vertices")
    out_ = np.max(np.abs(flow.a - x), axis=1) <= tol
    in_ = np.max(np.abs(flow.b - x), axis=1) <= tol
    if not (out_.any() or in_.any()):
        raise CertificateError(f"{x.tolist()} is not a vertex of the chain")
    w = h.values(flow.theta)[:, None] * flow.directions
    return w[out_].sum(axis=0) - w[in_].sum(axis=0)


def _support_graph(flow, tol=1e-12):
    verts = flow.vertices(tol)

    def vid(p):
        return int(np.argmin(np.max(np.abs(verts - p), axis=1)))

    g = nx.MultiGraph()
    g.add_nodes_from(range(len(verts)))
    for s, (a, b, _) in enumerate(flow):
        g.add_edge(vid(a), vid(b), segment=s)
    return g, verts, vid


@dataclass(frozen=True)
class Landscape:
    vertices: np.ndarray
    values: np.ndarray
    increments: np.ndarray
    expected: np.ndarray

    def at(self, x, tol=1e-12):
        i = int(np.argmin(np.max(np.abs(self.vertices - np.asarray(x, float)), axis=1)))
        return float(self.values[i])

    @property
    def residual(self):
        return float(np.max(np.abs(self.increments - self.expected))) if len(self.increments) else 0.0


def landscape(flow, root, phi, h):
    """Landscape function on an acyclic, connected flow support.

    ``Z(root) = 0``; across a segment ``(a, b, theta)`` traversed from
    ``a`` to ``b`` the value changes by ``theta . (phi(b) - phi(a)) / |theta|_1``
    (and by the opposite amount when traversed from ``b`` to ``a``).  For a
    calibrating ``phi`` each change equals ``h(theta) L / |theta|_1``;
    ``expected`` holds that reference value per segment.
    """
    if len(flow) == 0:
        raise CertificateError("empty chain has no landscape")
    g, verts, vid = _support_graph(flow)
    if not nx.is_connected(g):
        comps = [sorted(verts[list(c)].tolist()) for c in nx.connected_components(g)]
        raise CertificateError(f"support is disconnected; components: {comps}")
    try:
        cyc = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        cyc = None
    if cyc is not None:
        named = [verts[e[0]].tolist() for e in cyc]
        raise CertificateError(f"support contains a cycle through {named}")
    r = vid(np.asarray(root, float))
    if np.max(np.abs(verts[r] - root)) > 1e-9:
        raise CertificateError(f"{np.asarray(root).tolist()} is not a vertex of the chain")
    Z = np.full(len(verts), np.nan)
    Z[r] = 0.0
    inc = np.zeros(len(flow))
    expected = h.values(flow.theta) * flow.lengths / np.abs(flow.theta).sum(axis=1)
    for u, v in nx.bfs_edges(g, r):
        s = next(iter(g.get_edge_data(u, v).values()))["segment"]
        a, b, theta = flow.a[s], flow.b[s], flow.theta[s]
        step = float(theta @ (phi(b) - phi(a))) / float(np.abs(theta).sum())
        inc[s] = step
        Z[v] = Z[u] + (step if vid(b) == v else -step)
    return Landscape(verts, Z, inc, expected)


def find_cycle(flow):
    """Vertex positions of one cycle in the support, or ``None``."""
    g, verts, _ = _support_graph(flow)
    try:
        cyc = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return None
    return verts[[e[0] for e in cyc]]


def generic_junction_degree(m):
    """``floor(m (m + 1) / (2 m - 2))`` for ``m >= 2``."""
    if int(m) != m or m < 2:
        raise CertificateError("the junction degree estimate needs an integer m >= 2")
    m = int(m)
    return (m * (m + 1)) // (2 * m - 2)


__all__ = [
    "CalibrationReport", "CertificateError", "Landscape", "PiecewiseCalibration", "Potential",
    "PotentialCheck", "Region", "certify_solution", "check_potential", "find_cycle",
    "generic_junction_degree", "landscape", "momentum_residual", "verify_calibration_field",
    "verify_calibration_graph",
]
