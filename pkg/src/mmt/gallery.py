"""Geometry and data of the built-in worked examples.

Every builder returns plain objects from :mod:`mmt.chains`, :mod:`mmt.flow`
and :mod:`mmt.duality`; the scenario runner turns them into results.
"""
from dataclasses import dataclass

import numpy as np

from .chains import PointChain0, PolyChain1
from .duality import PiecewiseCalibration, Region
from .flow import GeometricGraph, candidate_graph
from .norms import GeneratedNorm, PolyhedralNorm

SQ3 = np.sqrt(3.0)

# three unit directions at 120 degree spacing and the three material bundles
E1 = np.array([1.0, 0.0])
E2 = np.array([0.5, SQ3 / 2])
E3 = np.array([0.5, -SQ3 / 2])
THETA1 = np.array([1.0, 1.0])
THETA2 = np.array([1.0, 0.0])
THETA3 = np.array([0.0, 1.0])
THETA4 = np.array([-1.0, 1.0])

# field making the hexagonal cost calibrate the tripod networks
PHI_BAR = 0.5 * np.array([[1.0, SQ3], [1.0, -SQ3]])
PHI_BAR_FLIPPED = 0.5 * np.array([[1.0, -SQ3], [1.0, SQ3]])

# homogenization of the identity for the hexagonal cost
M_BAR = np.array([[1 + SQ3, 1 - SQ3], [1 - SQ3, 1 + SQ3]]) / (2 * np.sqrt(2))
H_OF_IDENTITY = (1 + SQ3) / np.sqrt(2)
HOMOG_DIRECTIONS = np.array([[1 + SQ3, 1 - SQ3], [1 - SQ3, 1 + SQ3], [2.0, 2.0]]) / (2 * np.sqrt(2))
HOMOG_BUNDLES = np.array([[np.sqrt(2 / 3), 0.0], [0.0, np.sqrt(2 / 3)],
                          [(SQ3 - 1) / np.sqrt(6), (SQ3 - 1) / np.sqrt(6)]])


def hex_norm():
    return PolyhedralNorm.hexagonal()


def tripod_points():
    """Terminals ``p-1, p-2, p-3, p+1, p+2, p+3`` of the tripod examples."""
    pm = {1: E1, 2: E1 + E2, 3: E1 + E3}
    pts = {f"p-{i}": v for i, v in pm.items()}
    pts.update({f"p+{i}": -v for i, v in pm.items()})
    return pts


def _seg(a, b, theta):
    return (np.asarray(a, float), np.asarray(b, float), np.asarray(theta, float))


@dataclass(frozen=True)
class WorkedExample:
    """Boundary, candidate graph, reference networks and calibration field."""

    name: str
    h: PolyhedralNorm
    boundary: PointChain0
    graph: GeometricGraph
    networks: dict
    field: PiecewiseCalibration
    expected_cost: float


def two_sources(crossed=False):
    """Two bundles crossing a tripod; ``crossed`` swaps the two sinks."""
    p = tripod_points()
    h = hex_norm()
    if not crossed:
        F0 = PointChain0([p["p-2"], p["p+2"], p["p-3"], p["p+3"]],
                         [THETA2, -THETA2, THETA3, -THETA3])
        F = PolyChain1.from_segments([
            _seg(p["p+1"], p["p-1"], THETA1),
            _seg(p["p+2"], p["p+1"], THETA2), _seg(p["p-1"], p["p-2"], THETA2),
            _seg(p["p+3"], p["p+1"], THETA3), _seg(p["p-1"], p["p-3"], THETA3)])
        networks = {"F": F}
        field = PiecewiseCalibration.constant(PHI_BAR, _box(p))
    else:
        F0 = PointChain0([p["p-2"], p["p+3"], p["p-3"], p["p+2"]],
                         [THETA2, -THETA2, THETA3, -THETA3])
        F = PolyChain1.from_segments([
            _seg(p["p+1"], p["p-1"], THETA1),
            _seg(p["p+3"], p["p+1"], THETA2), _seg(p["p-1"], p["p-2"], THETA2),
            _seg(p["p+2"], p["p+1"], THETA3), _seg(p["p-1"], p["p-3"], THETA3)])
        G = PolyChain1.from_segments([
            _seg(p["p+3"], p["p-2"], THETA2), _seg(p["p+2"], p["p-3"], THETA3)])
        networks = {"F": F, "G": G}
        field = four_region_field(_box(p))
    terminals = np.array([p[k] for k in ("p-1", "p-2", "p-3", "p+1", "p+2", "p+3")])
    graph = candidate_graph(terminals, lattice=0, chords=True)
    name = "paper/two-sources-crossed" if crossed else "paper/two-sources"
    return WorkedExample(name, h, F0, graph, networks, field, 6.0)


def _box(points, pad=0.5):
    P = np.array(list(points.values()) if isinstance(points, dict) else points)
    return (P.min(axis=0) - pad, P.max(axis=0) + pad)


def four_region_field(box, literal=False):
    """Discontinuous field on the four sectors cut out by the lines ``x1 = +-sqrt(3) x2``.

    The right sector carries ``PHI_BAR`` and the left sector its row-swapped
    version; ``literal=True`` exchanges the two, which breaks both the
    dual-ball condition at the sector boundaries and tangential continuity.
    """
    right, left = (PHI_BAR_FLIPPED, PHI_BAR) if literal else (PHI_BAR, PHI_BAR_FLIPPED)
    regions = [
        Region([[-1.0, SQ3], [-1.0, -SQ3]], [0.0, 0.0], right, "A+"),
        Region([[1.0, SQ3], [1.0, -SQ3]], [0.0, 0.0], left, "A-"),
        Region([[1.0, -SQ3], [-1.0, -SQ3]], [0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]], "B+"),
        Region([[1.0, SQ3], [-1.0, SQ3]], [0.0, 0.0], [[0.0, 0.0], [1.0, 0.0]], "B-"),
    ]
    return PiecewiseCalibration(regions, box)


def cycle():
    """Network whose only optimizer on its candidate graph contains a loop."""
    h = hex_norm()
    pts = {"p+1": (0.0, 1.0), "p-1": (0.0, -1.0), "p+2": (-1.0, 0.0),
           "p3": (-1 / SQ3, 0.0), "p4": (1 / SQ3, 0.0), "p-2": (1.0, 0.0)}
    p = {k: np.array(v) for k, v in pts.items()}
    F0 = PointChain0([p["p-1"], p["p+1"], p["p-2"], p["p+2"]],
                     [THETA4, -THETA4, THETA1, -THETA1])
    F = PolyChain1.from_segments([
        _seg(p["p+2"], p["p3"], THETA1), _seg(p["p4"], p["p-2"], THETA1),
        _seg(p["p3"], p["p+1"], THETA2), _seg(p["p-1"], p["p4"], THETA2),
        _seg(p["p3"], p["p-1"], THETA3), _seg(p["p+1"], p["p4"], THETA3)])
    terminals = np.array([p[k] for k in ("p+1", "p-1", "p+2", "p-2")])
    graph = candidate_graph(terminals, chords=True, extra_nodes=[p["p3"], p["p4"]])
    graph = _with_edges(graph, [(p["p+2"], p["p3"]), (p["p4"], p["p-2"]), (p["p3"], p["p+1"]),
                                (p["p-1"], p["p4"]), (p["p3"], p["p-1"]), (p["p+1"], p["p4"])])
    field = PiecewiseCalibration.constant(PHI_BAR, _box(p))
    return WorkedExample("paper/cycle", h, F0, graph, {"F": F}, field, 2 + 2 * SQ3)


def _with_edges(graph, pairs):
    """Graph plus edges between the given node positions."""
    edges = {tuple(sorted(map(int, e))) for e in graph.edges}
    for a, b in pairs:
        u, w = graph.node_index(a), graph.node_index(b)
        edges.add((min(u, w), max(u, w)))
    return GeometricGraph(graph.nodes, sorted(edges))


def star_junction(k=5, seed=0):
    """Degree-``k`` junction at the origin with seeded directions, weights and lengths.

    Directions are distinct unit vectors in the closed first quadrant,
    weights ``a`` solve ``sum a_i e_i = 0`` (random vector projected onto
    the null space) and bundles are ``|a_i| e_i``.  The cost is the
    largest norm with ``h(e_i) = 1``, for which the identity field
    calibrates the star.
    """
    if k < 3:
        raise ValueError("a junction needs k >= 3 branches")
    rng = np.random.default_rng(seed)
    while True:
        ang = np.sort(rng.uniform(0.0, np.pi / 2, size=k))
        if np.min(np.diff(ang)) < 0.05:
            continue
        E = np.column_stack([np.cos(ang), np.sin(ang)])
        a = rng.normal(size=k)
        a -= np.linalg.pinv(E.T) @ (E.T @ a)
        if np.min(np.abs(a)) > 0.1:
            break
    lengths = rng.uniform(0.5, 1.5, size=k)
    h = PolyhedralNorm.from_primal_vertices(np.vstack([E, -E]), name=f"star-{k}")
    theta = np.abs(a)[:, None] * E
    pos = np.where(a[:, None] > 0, 1.0, -1.0) * lengths[:, None] * E
    sign = np.where(a > 0, 1.0, -1.0)
    F0 = PointChain0(pos, sign[:, None] * theta)
    segs = []
    for i in range(k):
        if a[i] > 0:
            segs.append(_seg(np.zeros(2), pos[i], theta[i]))
        else:
            segs.append(_seg(pos[i], np.zeros(2), theta[i]))
    F = PolyChain1.from_segments(segs)
    graph = candidate_graph(pos, chords=True, extra_nodes=[np.zeros(2)])
    graph = _with_edges(graph, [(np.zeros(2), x) for x in pos])
    field = PiecewiseCalibration.constant(np.eye(2), _box(np.vstack([pos, np.zeros((1, 2))])))
    ex = WorkedExample(f"paper/star-junction:{k}", h, F0, graph, {"F": F}, field,
                       float(np.abs(a) @ lengths))
    return ex, {"a": a, "directions": E, "lengths": lengths}


def hex_generated_norm(extra=True):
    """Generated matrix norm of the hexagonal cost on 2x2 matrices."""
    return GeneratedNorm(hex_norm(), 2, extra_directions=HOMOG_DIRECTIONS if extra else None)


__all__ = [
    "E1", "E2", "E3", "H_OF_IDENTITY", "HOMOG_BUNDLES", "HOMOG_DIRECTIONS", "M_BAR", "PHI_BAR",
    "PHI_BAR_FLIPPED", "THETA1", "THETA2", "THETA3", "THETA4", "WorkedExample", "cycle",
    "four_region_field", "hex_generated_norm", "hex_norm", "star_junction", "tripod_points",
    "two_sources",
]
