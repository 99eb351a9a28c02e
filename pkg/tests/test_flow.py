import json

import numpy as np
import pytest

from mmt.chains import PointChain0, mass_Mh
from mmt.flow import (PRUNE_TOL, FlowError, FlowInfeasible, FlowProblem, FlowSolution, GeometricGraph,
                      assemble_flow_lp, candidate_graph, divergence, flow_to_polychain,
                      polychain_to_flow, random_flow_problem, solve_flow, subadditivity_probe)
from mmt.gallery import cycle, two_sources
from mmt.norms import PolyhedralNorm

from oracles import flow_dual_oracle as dual_oracle

ABS = PolyhedralNorm([[1.0], [-1.0]])


def line_problem(theta, h, length=2.0):
    g = GeometricGraph([[0.0, 0.0], [length, 0.0]], [[0, 1]])
    theta = np.asarray(theta, float)
    return FlowProblem(g, PointChain0([[length, 0.0], [0.0, 0.0]], [theta, -theta]), h)


# -- graphs ------------------------------------------------------------------------

@pytest.mark.parametrize("nodes,edges", [
    ([[0, 0], [1, 0]], [[0, 0]]),
    ([[0, 0], [1, 0]], [[0, 1], [1, 0]]),
    ([[0, 0], [0, 0]], [[0, 1]]),
    ([[0, 0], [1, 0]], [[0, 2]]),
])
def test_graph_validation(nodes, edges):
    with pytest.raises(FlowError):
        GeometricGraph(nodes, edges)


def test_graph_lengths_and_roundtrip():
    g = GeometricGraph([[0, 0], [3, 4], [3, 0]], [[0, 1], [1, 2]])
    np.testing.assert_allclose(g.lengths, [5.0, 4.0])
    g2 = GeometricGraph.from_dict(json.loads(json.dumps(g.to_dict())))
    np.testing.assert_array_equal(g2.nodes, g.nodes)
    np.testing.assert_array_equal(g2.edges, g.edges)


def test_candidate_graph_generator():
    T = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    g0 = candidate_graph(T, lattice=0, chords=True)
    assert g0.n_nodes == 3 and g0.n_edges == 3
    g2 = candidate_graph(T, lattice=2, chords=True)
    assert g2.n_nodes > 3
    for t in T:
        assert g2.node_index(t) is not None


# -- LP assembly ------------------------------------------------------------------------

def test_epigraph_rows():
    lp = assemble_flow_lp(line_problem([1.0], ABS), form="epigraph")
    assert lp.G.shape[0] == 2
    hexn = PolyhedralNorm.hexagonal()
    lp = assemble_flow_lp(line_problem([1.0, 0.0], hexn), form="epigraph")
    assert lp.G.shape[0] == 6
    assert lp.A.shape[0] == 2 * 2


@pytest.mark.parametrize("form", ["epigraph", "gauge"])
def test_single_edge(form):
    h = PolyhedralNorm.hexagonal()
    theta = np.array([0.7, -0.4])
    sol = solve_flow(line_problem(theta, h, 2.5), form=form)
    assert sol.status == "optimal"
    assert sol.cost == pytest.approx(h(theta) * 2.5)
    np.testing.assert_allclose(sol.theta[0], theta, atol=1e-12)
    assert sol.dual_value() == pytest.approx(sol.cost, abs=1e-9)


def test_shortest_path_scalar():
    g = GeometricGraph([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]])
    p = FlowProblem(g, PointChain0([[0, 0], [1, 1]], [[-1.0], [1.0]]), ABS)
    sol = solve_flow(p)
    assert sol.cost == pytest.approx(np.sqrt(2))
    assert list(sol.support) == [4]


# -- worked examples ------------------------------------------------------------------------

@pytest.mark.parametrize("crossed", [False, True])
def test_two_sources_cost(crossed):
    ex = two_sources(crossed)
    sol = solve_flow(FlowProblem(ex.graph, ex.boundary, ex.h))
    assert sol.cost == pytest.approx(6.0, abs=1e-6)
    # oracle: the reference optimizer
    assert mass_Mh(ex.h, ex.networks["F"]) == pytest.approx(6.0, abs=1e-12)
    assert mass_Mh(ex.h, flow_to_polychain(sol)) == pytest.approx(sol.cost, abs=1e-9)


def test_cycle_cost_and_support():
    ex = cycle()
    sol = solve_flow(FlowProblem(ex.graph, ex.boundary, ex.h))
    assert sol.cost == pytest.approx(2 + 2 * np.sqrt(3), abs=1e-6)
    assert mass_Mh(ex.h, ex.networks["F"]) == pytest.approx(2 + 2 * np.sqrt(3), abs=1e-12)
    chain = flow_to_polychain(sol)
    assert len(chain) == 6
    assert mass_Mh(ex.h, chain) == pytest.approx(sol.cost, abs=1e-9)


# -- forms and routes agree --------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_forms_and_routes_agree(seed):
    rng = np.random.default_rng(seed)
    p = random_flow_problem(rng, PolyhedralNorm.hexagonal(), 15, 4)
    costs = [solve_flow(p, form=f, method=r).cost
             for f in ("gauge", "epigraph") for r in ("primal", "dual")]
    assert np.ptp(costs) <= 1e-8


@pytest.mark.parametrize("seed", range(6))
def test_potentials_match_explicit_dual(seed):
    rng = np.random.default_rng(50 + seed)
    h = PolyhedralNorm.l1(2) if seed % 2 else PolyhedralNorm.hexagonal()
    p = random_flow_problem(rng, h, 12, 4)
    sol = solve_flow(p)
    oracle = dual_oracle(p)
    assert sol.cost == pytest.approx(oracle, abs=1e-7 * (1 + oracle))
    assert sol.dual_value() == pytest.approx(oracle, abs=1e-7 * (1 + oracle))
    assert np.all(sol.slacks() >= -1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_solution_invariants(seed):
    rng = np.random.default_rng(80 + seed)
    p = random_flow_problem(rng, PolyhedralNorm.hexagonal(), 20, 5)
    sol = solve_flow(p)
    assert divergence(p.graph, sol.theta).allclose(p.boundary, atol=1e-8)
    assert sol.cost == pytest.approx(sol.lp_objective, abs=1e-9 * (1 + sol.cost))
    used = sol.support
    np.testing.assert_allclose(sol.tightness()[used], 0.0, atol=1e-7)
    # anchoring: potential at the first node of the (single) component is zero
    assert np.all(sol.potentials[0] == 0)


def test_weak_duality_for_feasible_potentials():
    rng = np.random.default_rng(3)
    p = random_flow_problem(rng, PolyhedralNorm.hexagonal(), 15, 4)
    sol = solve_flow(p)
    for s in (0.0, 0.3, 0.9, 1.0):
        phi = s * sol.potentials
        assert float(np.sum(phi * p.node_weights)) <= sol.cost + 1e-7


def test_cost_scaling():
    rng = np.random.default_rng(4)
    p = random_flow_problem(rng, PolyhedralNorm.hexagonal(), 15, 4)
    base = solve_flow(p).cost
    for lam in (-2.0, 0.5, 3.0):
        c = solve_flow(p.with_boundary(lam * p.boundary)).cost
        assert c == pytest.approx(abs(lam) * base, rel=1e-9)


def test_refinement_monotone():
    rng = np.random.default_rng(5)
    T = rng.uniform(0, 1, (4, 2))
    W = rng.normal(size=(4, 2))
    W -= W.mean(axis=0)
    h = PolyhedralNorm.hexagonal()
    coarse = solve_flow(FlowProblem(candidate_graph(T, 0), PointChain0(T, W), h)).cost
    fine = solve_flow(FlowProblem(candidate_graph(T, 3, box=((0, 0), (1, 1))), PointChain0(T, W), h)).cost
    assert fine <= coarse + 1e-9


# -- errors ------------------------------------------------------------------------------------

def test_unreachable_atom_is_named():
    g = GeometricGraph([[0, 0], [1, 0], [5, 5], [6, 5]], [[0, 1], [2, 3]])
    p = FlowProblem(g, PointChain0([[0, 0], [6, 5]], [[1.0], [-1.0]]), ABS)
    with pytest.raises(FlowInfeasible) as info:
        solve_flow(p)
    assert "[" in str(info.value)


def test_atom_off_graph_and_unbalanced():
    g = GeometricGraph([[0, 0], [1, 0]], [[0, 1]])
    with pytest.raises(FlowError):
        FlowProblem(g, PointChain0([[0, 0], [0.5, 0]], [[1.0], [-1.0]]), ABS)
    with pytest.raises(FlowError):
        FlowProblem(g, PointChain0([[0, 0], [1, 0]], [[1.0], [-0.5]]), ABS)


# -- conversions ------------------------------------------------------------------------------

def test_zero_flow_and_pruning():
    h = PolyhedralNorm.hexagonal()
    p = line_problem([1.0, 0.0], h)
    zero = FlowSolution(p.with_boundary(PointChain0.empty(2, 2)), np.zeros((1, 2)), 0.0,
                        np.zeros((2, 2)), "optimal")
    assert len(flow_to_polychain(zero)) == 0
    for seed in range(4):
        q = random_flow_problem(np.random.default_rng(seed), h, 20, 4)
        sol = solve_flow(q)
        a = np.abs(sol.theta)
        assert np.all((a == 0) | (a >= PRUNE_TOL))
        assert len(flow_to_polychain(sol)) == len(sol.support)
        assert np.all(np.any(a[sol.support] > 0, axis=1))


def test_polychain_flow_roundtrip():
    ex = two_sources(False)
    theta = polychain_to_flow(ex.graph, ex.networks["F"])
    assert divergence(ex.graph, theta).allclose(ex.boundary, atol=1e-12)
    with pytest.raises(FlowError):
        polychain_to_flow(GeometricGraph([[0, 0], [1, 0]], [[0, 1]]), ex.networks["F"])


def test_problem_and_solution_json():
    ex = two_sources(False)
    p = FlowProblem(ex.graph, ex.boundary, ex.h)
    p2 = FlowProblem.from_dict(json.loads(json.dumps(p.to_dict())))
    np.testing.assert_array_equal(p2.node_weights, p.node_weights)
    sol = solve_flow(p)
    s2 = FlowSolution.from_dict(p2, json.loads(json.dumps(sol.to_dict())))
    np.testing.assert_array_equal(s2.theta, sol.theta)
    assert s2.cost == sol.cost
    header = sol.edges_csv().splitlines()[0].split(",")
    assert header[:3] == ["edge", "tail", "head"] and header[-1] == "tightness"


# -- merging discount -------------------------------------------------------------------------

def test_subadditivity_examples():
    h = PolyhedralNorm.hexagonal()
    g = GeometricGraph([[0, 0], [1, 0]], [[0, 1]])
    p = FlowProblem(g, PointChain0.empty(2, 2), h)
    a = PointChain0([[1, 0], [0, 0]], [[1, 0], [-1, 0]])
    b = PointChain0([[1, 0], [0, 0]], [[0, 1], [0, -1]])
    same = subadditivity_probe(p, a, a)
    assert same.holds and same.discount == pytest.approx(0.0, abs=1e-9)
    merged = subadditivity_probe(p, a, b)
    assert merged.holds
    assert merged.cost_ab == pytest.approx(merged.cost_a) == pytest.approx(merged.cost_b)
    far = GeometricGraph([[0, 0], [1, 0], [100, 0], [101, 0]], [[0, 1], [2, 3]])
    pf = FlowProblem(far, PointChain0.empty(2, 2), h)
    c = PointChain0([[101, 0], [100, 0]], [[0, 1], [0, -1]])
    rep = subadditivity_probe(pf, a, c)
    assert rep.cost_ab == pytest.approx(rep.cost_a + rep.cost_b, abs=1e-9)
