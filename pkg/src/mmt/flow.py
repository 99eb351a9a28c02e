"""Multi-material minimum-cost flow on a geometric candidate graph.

The discrete problem is::

    minimize    sum_e h(theta_e) * L_e
    subject to  sum_e inc(v, e) theta_e = F0(v)   for every node v

with ``inc(v, e) = +1`` at the head of ``e`` and ``-1`` at its tail, so that
the edge ``e = (u, w)`` carrying ``theta_e`` contributes the boundary
``theta_e (delta_w - delta_u)``.  ``h`` enters either in epigraph form
``g_k . theta_e <= t_e`` or in gauge form (``theta_e`` as a nonnegative
combination of primal unit-ball vertices).  The equality multipliers are node
potentials
``phi_v`` with ``h_*(phi_w - phi_u) <= L_e`` on every edge, and
``sum_v phi_v . F0(v)`` equals the optimal cost.
"""
import csv
import io
import itertools
import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay

from .chains import PointChain0, PolyChain1
from .lp import LinearProgram, solve_lp
from .norms import PolyhedralNorm

logger = logging.getLogger(__name__)

PRUNE_TOL = 1e-10
NODE_TOL = 1e-9
COST_TOL = 1e-7


class FlowError(ValueError):
    """Malformed flow problem."""


class FlowInfeasible(FlowError):
    """No flow meets the boundary; ``atom`` names an unreachable atom."""

    def __init__(self, message, atom=None):
        super().__init__(message)
        self.atom = atom


class GeometricGraph:
    """Undirected graph with node positions; each edge has a reference orientation.

    Parameters
    ----------
    nodes : array_like, shape (N, n)
    edges : sequence of (u, w)
        Node index pairs; the edge is oriented from ``u`` to ``w``.
    """

    def __init__(self, nodes, edges):
        X = np.asarray(nodes, dtype=float)
        if X.ndim != 2 or len(X) == 0:
            raise FlowError("nodes must be a non-empty (N, n) array")
        if not np.all(np.isfinite(X)):
            raise FlowError("node positions must be finite")
        E = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(E) and (E.min() < 0 or E.max() >= len(X)):
            raise FlowError("edge refers to a missing node")
        if np.any(E[:, 0] == E[:, 1]):
            raise FlowError("self-loops are not allowed")
        seen = set()
        for u, w in E:
            key = (min(u, w), max(u, w))
            if key in seen:
                raise FlowError(f"duplicate edge {key}")
            seen.add(key)
        L = np.linalg.norm(X[E[:, 1]] - X[E[:, 0]], axis=1) if len(E) else np.zeros(0)
        if np.any(L <= 1e-12):
            raise FlowError("zero-length edge")
        self.nodes, self.edges, self.lengths = X, E, L
        for a in (self.nodes, self.edges, self.lengths):
            a.setflags(write=False)

    @property
    def n(self):
        return self.nodes.shape[1]

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.edges)

    def __repr__(self):
        return f"GeometricGraph({self.n_nodes} nodes, {self.n_edges} edges, n={self.n})"

    def node_index(self, x, tol=NODE_TOL):
        """Index of the node at ``x`` or ``None``."""
        d = np.max(np.abs(self.nodes - np.asarray(x, float)), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None

    def edge_index(self, u, w):
        """``(index, sign)`` of the edge joining ``u`` and ``w``; sign -1 if reversed."""
        hit = np.flatnonzero((self.edges[:, 0] == u) & (self.edges[:, 1] == w))
        if len(hit):
            return int(hit[0]), 1
        hit = np.flatnonzero((self.edges[:, 0] == w) & (self.edges[:, 1] == u))
        if len(hit):
            return int(hit[0]), -1
        return None, 0

    def incidence(self):
        """Dense ``(N, E)`` signed incidence: +1 at heads, -1 at tails."""
        D = np.zeros((self.n_nodes, self.n_edges))
        idx = np.arange(self.n_edges)
        D[self.edges[:, 1], idx] = 1.0
        D[self.edges[:, 0], idx] = -1.0
        return D

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from((int(u), int(w), {"index": i}) for i, (u, w) in enumerate(self.edges))
        return g

    def components(self):
        """Node-index sets of connected components, ordered by smallest member."""
        comps = [sorted(c) for c in nx.connected_components(self.to_networkx())]
        return sorted(comps, key=lambda c: c[0])

    def to_dict(self):
        return {"nodes": self.nodes.tolist(), "edges": self.edges.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["nodes"], data["edges"])


def candidate_graph(terminals, lattice=0, box=None, chords=True, extra_nodes=()):
    """Candidate network from terminals, a square lattice and terminal chords.

    Parameters
    ----------
    terminals : array_like, shape (T, 2)
    lattice : int
        Lattice resolution ``r``: an ``(r+1) x (r+1)`` node array over
        ``box`` joined to its 8 neighbours.  0 disables the lattice.
    box : ((x0, y0), (x1, y1)), optional
        Defaults to the terminals' bounding box.
    chords : bool
        Join every pair of terminals by a straight edge.
    extra_nodes : array_like
        Additional fixed nodes (e.g. known junctions) linked like terminals.

    Terminals and extra nodes are linked to the lattice nodes of the cell
    containing them.
    """
    T = np.asarray(terminals, float).reshape(-1, 2)
    extra = np.asarray(extra_nodes, float).reshape(-1, 2)
    fixed = np.vstack([T, extra])
    nodes = [tuple(p) for p in fixed]
    index = {}
    for i, p in enumerate(nodes):
        index.setdefault(p, i)
    edges = set()

    def add_node(p):
        p = tuple(float(v) for v in p)
        for q, i in index.items():
            if max(abs(q[0] - p[0]), abs(q[1] - p[1])) <= NODE_TOL:
                return i
        index[p] = len(nodes)
        nodes.append(p)
        return index[p]

    def add_edge(i, j):
        if i != j:
            edges.add((min(i, j), max(i, j)))

    fixed_ids = [add_node(p) for p in fixed]
    if chords:
        for i, j in itertools.combinations(fixed_ids[:len(T)], 2):
            add_edge(i, j)
    if lattice:
        if box is None:
            lo, hi = fixed.min(axis=0), fixed.max(axis=0)
        else:
            lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
        r = int(lattice)
        step = (hi - lo) / r
        grid = {}
        for i in range(r + 1):
            for j in range(r + 1):
                grid[i, j] = add_node(lo + step * (i, j))
        for i in range(r + 1):
            for j in range(r + 1):
                for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
                    if (i + di, j + dj) in grid:
                        add_edge(grid[i, j], grid[i + di, j + dj])
        for k, p in zip(fixed_ids, fixed):
            c = np.clip(np.floor((p - lo) / np.where(step > 0, step, 1)), 0, r - 1).astype(int)
            for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
                add_edge(k, grid[c[0] + di, c[1] + dj])
    X = np.array(nodes)
    E = sorted(e for e in edges if np.linalg.norm(X[e[0]] - X[e[1]]) > 1e-12)
    return GeometricGraph(X, E)


def delaunay_graph(points):
    """Graph of the Delaunay triangulation of planar points."""
    P = np.asarray(points, float)
    tri = Delaunay(P)
    edges = set()
    for s in tri.simplices:
        for i, j in itertools.combinations(sorted(s), 2):
            edges.add((int(i), int(j)))
    return GeometricGraph(P, sorted(edges))


@dataclass(frozen=True)
class FlowProblem:
    """Candidate graph, boundary distribution and material cost."""

    graph: GeometricGraph
    boundary: PointChain0
    h: PolyhedralNorm

    def __post_init__(self):
        if self.boundary.n != self.graph.n:
            raise FlowError("boundary and graph live in different dimensions")
        if self.boundary.m != self.h.m:
            raise FlowError("boundary and norm disagree on the number of materials")
        if not self.boundary.is_admissible():
            raise FlowError(f"boundary is not balanced: total weight {self.boundary.total().tolist()}")
        rhs = np.zeros((self.graph.n_nodes, self.h.m))
        for x, theta in self.boundary:
            v = self.graph.node_index(x)
            if v is None:
                raise FlowError(f"atom at {x.tolist()} is not a graph node")
            rhs[v] += theta
        rhs.setflags(write=False)
        object.__setattr__(self, "node_weights", rhs)

    @property
    def m(self):
        return self.h.m

    def with_boundary(self, boundary):
        return FlowProblem(self.graph, boundary, self.h)

    def to_dict(self):
        return {"graph": self.graph.to_dict(), "boundary": self.boundary.to_dict(),
                "norm": self.h.to_dict()}

    @classmethod
    def from_dict(cls, data):
        return cls(GeometricGraph.from_dict(data["graph"]), PointChain0.from_dict(data["boundary"]),
                   PolyhedralNorm.from_dict(data["norm"]))


def assemble_flow_lp(problem, form="epigraph"):
    """LP of a :class:`FlowProblem`.

    Parameters
    ----------
    form : {"epigraph", "gauge"}
        ``"epigraph"``: variables ``theta`` (edge-major, ``E * m`` entries)
        then ``t`` (``E`` entries); inequality row ``e * K + k`` reads
        ``g_k . theta_e - t_e <= 0``.
        ``"gauge"``: nonnegative weights ``mu_ej`` on the primal unit-ball
        vertices ``v_j`` with ``theta_e = sum_j mu_ej v_j`` and cost
        ``L_e sum_j mu_ej``; no inequality rows.

    In both forms equality row ``v * m + i`` is the balance of material
    ``i`` at node ``v``, so the equality duals are the node potentials.
    """
    g, h = problem.graph, problem.h
    E, N, m = g.n_edges, g.n_nodes, h.m
    D = g.incidence()
    b = problem.node_weights.ravel()
    if form == "epigraph":
        K = len(h.dual_vertices)
        nth = E * m
        c = np.concatenate([np.zeros(nth), g.lengths])
        A = np.zeros((N * m, nth + E))
        for i in range(m):
            A[i::m, i:nth:m] = D
        Gm = np.zeros((E * K, nth + E))
        for e in range(E):
            Gm[e * K:(e + 1) * K, e * m:(e + 1) * m] = h.dual_vertices
            Gm[e * K:(e + 1) * K, nth + e] = -1.0
        return LinearProgram(c, A, b, Gm, np.zeros(E * K))
    if form == "gauge":
        V = h.primal_vertices
        J = len(V)
        c = np.repeat(g.lengths, J)
        # column e * J + j carries v_j along edge e
        A = np.einsum("ve,ji->viej", D, V).reshape(N * m, E * J)
        return LinearProgram(c, A, b, lower=np.zeros(E * J), upper=np.full(E * J, np.inf))
    raise FlowError(f"unknown LP form {form!r}")


def _edge_flows(problem, x, form):
    E, m = problem.graph.n_edges, problem.m
    if form == "epigraph":
        return np.array(x[:E * m]).reshape(E, m)
    V = problem.h.primal_vertices
    return np.asarray(x).reshape(E, len(V)) @ V


def _check_reachability(problem):
    g = problem.graph
    for comp in g.components():
        w = problem.node_weights[comp].sum(axis=0)
        if np.any(np.abs(w) > 1e-10):
            heavy = [v for v in comp if np.any(problem.node_weights[v] != 0)]
            v = heavy[0]
            raise FlowInfeasible(
                f"atom at {g.nodes[v].tolist()} cannot be balanced: its component carries "
                f"net weight {w.tolist()}", atom=g.nodes[v].copy())


@dataclass(frozen=True)
class FlowSolution:
    """Optimal flow, its cost and node potentials.

    ``theta`` has one row per edge (pruned below ``PRUNE_TOL``), ``cost`` is
    ``sum h(theta_e) L_e`` of the pruned flow and ``lp_objective`` the raw
    LP value.  ``potentials`` are anchored at zero on the smallest node of
    each connected component.
    """

    problem: FlowProblem
    theta: np.ndarray
    cost: float
    potentials: np.ndarray
    status: str
    lp_objective: float = float("nan")
    gap: float = float("nan")
    iterations: int = 0
    route: str = ""

    @property
    def support(self):
        return np.flatnonzero(np.any(self.theta != 0, axis=1))

    def dual_value(self):
        return float(np.sum(self.potentials * self.problem.node_weights))

    def edge_drops(self):
        """``phi(head) - phi(tail)`` per edge."""
        E = self.problem.graph.edges
        return self.potentials[E[:, 1]] - self.potentials[E[:, 0]]

    def tightness(self):
        """``theta_e . (phi(head) - phi(tail)) - h(theta_e) L_e`` per edge."""
        h = self.problem.h
        return (np.einsum("ei,ei->e", self.theta, self.edge_drops())
                - h.values(self.theta) * self.problem.graph.lengths)

    def slacks(self):
        """``L_e - h_*(phi(head) - phi(tail))`` per edge."""
        h = self.problem.h
        return self.problem.graph.lengths - np.array([h.dual(d) for d in self.edge_drops()])

    def to_dict(self):
        return {"status": self.status, "cost": self.cost, "lp_objective": self.lp_objective,
                "dual_value": self.dual_value(), "gap": self.gap, "route": self.route,
                "iterations": self.iterations, "theta": self.theta.tolist(),
                "potentials": self.potentials.tolist()}

    @classmethod
    def from_dict(cls, problem, data):
        return cls(problem, np.array(data["theta"], float).reshape(-1, problem.m), data["cost"],
                   np.array(data["potentials"], float).reshape(-1, problem.m), data["status"],
                   data.get("lp_objective", float("nan")), data.get("gap", float("nan")),
                   data.get("iterations", 0), data.get("route", ""))

    def edges_csv(self):
        """CSV table of the edges (plot data)."""
        g, h = self.problem.graph, self.problem.h
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        m, n = h.m, g.n
        w.writerow(["edge", "tail", "head"] + [f"a{j}" for j in range(n)]
                   + [f"b{j}" for j in range(n)] + [f"theta{i}" for i in range(m)]
                   + ["h_theta", "length", "tightness"])
        tight = self.tightness()
        for e, (u, v) in enumerate(g.edges):
            w.writerow([e, int(u), int(v)] + [repr(float(x)) for x in g.nodes[u]]
                       + [repr(float(x)) for x in g.nodes[v]]
                       + [repr(float(x)) for x in self.theta[e]]
                       + [repr(h(self.theta[e])), repr(float(g.lengths[e])), repr(float(tight[e]))])
        return buf.getvalue()


def solve_flow(problem, form="gauge", method="auto"):
    """Solve the flow LP and return flow, cost and potentials.

    ``form`` selects the LP written by :func:`assemble_flow_lp`; both forms
    have the same optimum and the same equality rows.  The gauge form has
    far fewer rows and is the default.

    Raises
    ------
    FlowInfeasible
        When some connected component of the graph carries unbalanced
        boundary weight.
    """
    g, h, m = problem.graph, problem.h, problem.m
    _check_reachability(problem)
    lp = assemble_flow_lp(problem, form)
    sol = solve_lp(lp, method=method)
    if sol.status == "infeasible":  # pragma: no cover - excluded by the reachability check
        raise FlowInfeasible("flow LP is infeasible")
    if sol.status != "optimal":
        logger.warning("flow LP ended with status %s: %s", sol.status, sol.message)
    E, N = g.n_edges, g.n_nodes
    theta = _edge_flows(problem, sol.x, form)
    theta[np.abs(theta) < PRUNE_TOL] = 0.0
    phi = np.array(sol.y).reshape(N, m)
    for comp in g.components():
        phi[comp] -= phi[comp[0]]
    cost = float(h.values(theta) @ g.lengths) if E else 0.0
    return FlowSolution(problem, theta, cost, phi, sol.status, float(sol.objective),
                        float(sol.gap), int(sol.iterations), sol.route)


def divergence(graph, theta):
    """Boundary ``sum_e theta_e (delta_head - delta_tail)`` as a point chain."""
    theta = np.asarray(theta, float).reshape(graph.n_edges, -1)
    W = graph.incidence() @ theta
    return PointChain0(graph.nodes, W, n=graph.n, m=theta.shape[1])


def flow_to_polychain(solution):
    """Segments of the edges that carry flow."""
    g = solution.problem.graph
    s = solution.support
    return PolyChain1(g.nodes[g.edges[s, 0]], g.nodes[g.edges[s, 1]], solution.theta[s],
                      n=g.n, m=solution.problem.m)


def polychain_to_flow(graph, chain, tol=NODE_TOL):
    """Edge coefficients of a segment chain whose segments are graph edges."""
    theta = np.zeros((graph.n_edges, chain.m))
    for a, b, t in chain:
        u, w = graph.node_index(a, tol), graph.node_index(b, tol)
        if u is None or w is None:
            raise FlowError(f"segment {a.tolist()}->{b.tolist()} does not start and end at nodes")
        e, sign = graph.edge_index(u, w)
        if e is None:
            raise FlowError(f"segment {a.tolist()}->{b.tolist()} is not a graph edge")
        theta[e] += sign * t
    return theta


@dataclass(frozen=True)
class SubadditivityReport:
    cost_a: float
    cost_b: float
    cost_ab: float
    holds: bool
    discount: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "discount", self.cost_a + self.cost_b - self.cost_ab)


def subadditivity_probe(problem, boundary_a, boundary_b, tol=COST_TOL):
    """Costs of two boundaries alone and merged on the same graph."""
    ca = solve_flow(problem.with_boundary(boundary_a)).cost
    cb = solve_flow(problem.with_boundary(boundary_b)).cost
    cab = solve_flow(problem.with_boundary(boundary_a + boundary_b)).cost
    holds = cab <= ca + cb + tol
    if not holds:
        logger.warning("merged cost %.12g exceeds separate costs %.12g + %.12g", cab, ca, cb)
    return SubadditivityReport(ca, cb, cab, holds)


def random_flow_problem(rng, h, n_nodes=20, n_atoms=4):
    """Random balanced problem on the Delaunay graph of uniform points."""
    P = rng.uniform(0.0, 1.0, size=(n_nodes, 2))
    g = delaunay_graph(P)
    idx = rng.choice(n_nodes, size=n_atoms, replace=False)
    W = rng.normal(size=(n_atoms, h.m))
    W -= W.mean(axis=0)
    return FlowProblem(g, PointChain0(P[idx], W), h)


__all__ = [
    "FlowError", "FlowInfeasible", "FlowProblem", "FlowSolution", "GeometricGraph",
    "SubadditivityReport", "assemble_flow_lp", "candidate_graph", "delaunay_graph",
    "divergence", "flow_to_polychain", "polychain_to_flow", "random_flow_problem",
    "solve_flow", "subadditivity_probe",
]
