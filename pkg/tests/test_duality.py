import numpy as np
import pytest

from mmt.chains import PolyChain1, PointChain0, mass_Mh
from mmt.duality import (CertificateError, PiecewiseCalibration, Potential, Region,
                         certify_solution, check_potential, find_cycle, generic_junction_degree,
                         landscape, momentum_residual, verify_calibration_field,
                         verify_calibration_graph)
from mmt.flow import FlowProblem, GeometricGraph, random_flow_problem, solve_flow
from mmt.gallery import (E2, PHI_BAR, THETA1, THETA2, cycle, four_region_field, star_junction,
                         two_sources)
from mmt.norms import GeneratedNorm, PolyhedralNorm

from oracles import SQ3

HEX_PRIMAL = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def segs(rows, m):
    """Chain from flat rows ``[ax, ay, bx, by, theta...]``."""
    return PolyChain1.from_segments([(r[:2], r[2:4], r[4:]) for r in rows], n=2, m=m)


def hex_G():
    return GeneratedNorm(PolyhedralNorm.hexagonal(), 2)


def test_phi_bar_on_dual_ball_boundary():
    # H_*(Phi) = max over primal vertices v of |Phi^T v|_2, computed by hand
    vals = [np.linalg.norm(PHI_BAR.T @ v) for v in HEX_PRIMAL]
    np.testing.assert_allclose(vals, 1.0, atol=1e-15)


# -- graph potentials ------------------------------------------------------------------

def test_check_potential_zero_and_scaled():
    ex = two_sources()
    g, h = ex.graph, ex.h
    zero = check_potential(g, np.zeros((g.n_nodes, 2)), h)
    assert zero.feasible
    np.testing.assert_allclose(zero.slacks, g.lengths)
    aff = Potential.affine(g, PHI_BAR)
    assert check_potential(g, aff, h).feasible
    assert not check_potential(g, 2 * aff, h).feasible
    assert check_potential(g, aff, h).min_slack >= -1e-12


def test_check_potential_slack_oracle():
    g = GeometricGraph([[0, 0], [2, 0]], [[0, 1]])
    h = PolyhedralNorm.hexagonal()
    phi = np.array([[0.0, 0.0], [0.5, 0.75]])
    # h_*(0.5, 0.75) = max(0.5, 1.25, 0.75) over primal vertices
    assert check_potential(g, phi, h).slacks[0] == pytest.approx(2 - 1.25)


def test_potential_validation():
    g = GeometricGraph([[0, 0], [1, 0]], [[0, 1]])
    with pytest.raises(CertificateError):
        Potential(g, np.zeros((3, 2)))
    with pytest.raises(CertificateError):
        Potential(g, [[np.inf, 0], [0, 0]])
    with pytest.raises(CertificateError):
        Potential(g, np.zeros((2, 2))).at([0.5, 0.0])


@pytest.mark.parametrize("crossed", [False, True])
def test_two_sources_graph_calibration(crossed):
    ex = two_sources(crossed)
    phi = Potential.from_function(ex.graph, ex.field.potential())
    for name, F in ex.networks.items():
        rep = verify_calibration_graph(ex.graph, F, phi, ex.boundary, ex.h)
        assert rep.verdict == "certified-optimal", (name, rep.reasons)
        assert rep.primal_value == pytest.approx(6.0)
        np.testing.assert_allclose(rep.tightness, 0.0, atol=1e-12)
    if crossed:
        # the single affine field is not enough once the sinks are swapped
        rep = verify_calibration_graph(ex.graph, ex.networks["F"], Potential.affine(ex.graph, PHI_BAR),
                                       ex.boundary, ex.h)
        assert rep.verdict == "gap-positive"


def test_zero_potential_gives_gap():
    ex = two_sources()
    rep = verify_calibration_graph(ex.graph, ex.networks["F"], np.zeros((ex.graph.n_nodes, 2)),
                                   ex.boundary, ex.h)
    assert rep.feasible and rep.verdict == "gap-positive"
    assert rep.gap == pytest.approx(6.0)
    assert rep.residuals_csv().startswith("index,tightness,slack\n")


def test_wrong_boundary_is_infeasible():
    ex = two_sources()
    F = ex.networks["F"]
    rep = verify_calibration_graph(ex.graph, F, Potential.affine(ex.graph, PHI_BAR),
                                   2 * ex.boundary, ex.h)
    assert rep.verdict == "infeasible"
    assert any("boundary" in r for r in rep.reasons)


@pytest.mark.parametrize("seed", range(5))
def test_solver_output_certifies(seed):
    p = random_flow_problem(np.random.default_rng(300 + seed), PolyhedralNorm.hexagonal(), 15, 4)
    rep = certify_solution(solve_flow(p))
    assert rep.certified, rep.reasons


# -- piecewise fields ----------------------------------------------------------------------

def test_constant_field_two_sources():
    ex = two_sources()
    rep = verify_calibration_field(ex.field, ex.networks["F"], ex.boundary, hex_G())
    assert rep.verdict == "certified-optimal", rep.reasons
    assert rep.dual_value == pytest.approx(6.0, abs=1e-12)


def test_four_region_field_crossed():
    ex = two_sources(True)
    for name in ("F", "G"):
        rep = verify_calibration_field(ex.field, ex.networks[name], ex.boundary, hex_G())
        assert rep.verdict == "certified-optimal", (name, rep.reasons)
        assert rep.continuity_residual <= 1e-12


def test_literal_four_region_field_rejected():
    ex = two_sources(True)
    field_ = four_region_field((ex.field.lo, ex.field.hi), literal=True)
    rep = verify_calibration_field(field_, ex.networks["F"], ex.boundary, hex_G())
    assert not rep.certified
    assert any("tangential" in r for r in rep.reasons)
    # jump of Phi across the line x1 = sqrt(3) x2: PHI_BAR minus its row swap, along (sqrt3, 1)/2
    t = np.array([SQ3, 1.0]) / 2
    swapped = PHI_BAR[::-1]
    assert rep.continuity_residual >= np.max(np.abs((PHI_BAR - swapped) @ t)) - 1e-12


def test_perturbed_field_not_certified():
    ex = two_sources()
    bad = PiecewiseCalibration.constant(PHI_BAR + 0.1, (ex.field.lo, ex.field.hi))
    rep = verify_calibration_field(bad, ex.networks["F"], ex.boundary, hex_G())
    assert rep.verdict == "infeasible"
    assert any("H_*" in r for r in rep.reasons)


def test_field_coverage_and_gradient():
    box = ((-1.0, -1.0), (1.0, 1.0))
    half = PiecewiseCalibration([Region([[1.0, 0.0]], [0.0], np.eye(1, 2), "left")], box)
    assert len(half.coverage_gaps()) > 0
    # two halves with a jump along the shared facet x1 = 0 (tangent e2)
    regions = [Region([[1.0, 0.0]], [0.0], [[0.0, 0.0]], "L"),
               Region([[-1.0, 0.0]], [0.0], [[0.0, 0.5]], "R")]
    f = PiecewiseCalibration(regions, box)
    assert len(f.coverage_gaps()) == 0
    flow = segs([[-0.5, 0.0, 0.5, 0.0, 1.0]], 1)
    h = PolyhedralNorm.l1(1)
    rep = verify_calibration_field(f, flow, flow.boundary(), GeneratedNorm(h, 2))
    assert not rep.certified
    assert rep.continuity_residual == pytest.approx(0.5)


def test_cycle_calibration_and_detection():
    ex = cycle()
    F = ex.networks["F"]
    rep = verify_calibration_field(ex.field, F, ex.boundary, hex_G())
    assert rep.certified, rep.reasons
    assert mass_Mh(ex.h, F) == pytest.approx(2 + 2 * SQ3)
    loop = find_cycle(F)
    assert loop is not None and len(loop) == 4
    with pytest.raises(CertificateError, match="cycle"):
        landscape(F, F.a[0], lambda x: PHI_BAR @ x, ex.h)
    assert find_cycle(two_sources().networks["F"]) is None


# -- junctions and landscapes ------------------------------------------------------------

def test_momentum_balance():
    h = PolyhedralNorm.l1(1)
    # three unit segments at 120 degrees meeting at the origin, all leaving it
    dirs = np.array([[1.0, 0.0], [-0.5, SQ3 / 2], [-0.5, -SQ3 / 2]])
    rows = [[0, 0, d[0], d[1], 1.0] for d in dirs]
    Y = segs(rows, 1)
    np.testing.assert_allclose(momentum_residual(Y, [0, 0], h), 0.0, atol=1e-15)
    np.testing.assert_allclose(momentum_residual(Y, dirs[0], h), -dirs[0], atol=1e-15)
    with pytest.raises(CertificateError):
        momentum_residual(Y, [5, 5], h)


@pytest.mark.parametrize("k", [3, 5, 8])
def test_star_junction_balanced_and_calibrated(k):
    ex, info = star_junction(k, seed=k)
    F = ex.networks["F"]
    np.testing.assert_allclose(momentum_residual(F, [0, 0], ex.h), 0.0, atol=1e-12)
    np.testing.assert_allclose(info["a"] @ info["directions"], 0.0, atol=1e-12)
    rep = verify_calibration_field(ex.field, F, ex.boundary, GeneratedNorm(ex.h, 2))
    assert rep.certified, rep.reasons
    assert rep.primal_value == pytest.approx(float(np.abs(info["a"]) @ info["lengths"]))


def test_landscape_single_edge():
    h = PolyhedralNorm.hexagonal()
    # PHI_BAR^T theta2 = E2, so the field is tight along E2
    F = segs([[0, 0, E2[0], E2[1], THETA2[0], THETA2[1]]], 2)
    Z = landscape(F, [0, 0], lambda x: PHI_BAR @ x, h)
    assert Z.at([0, 0]) == 0.0
    assert Z.at(E2) == pytest.approx(1.0)
    assert Z.residual <= 1e-12


def test_landscape_two_sources():
    ex = two_sources()
    F = ex.networks["F"]
    Z = landscape(F, F.a[0], lambda x: PHI_BAR @ x, ex.h)
    # calibrated: every increment is h(theta) L / |theta|_1
    assert Z.residual <= 1e-12
    np.testing.assert_allclose(Z.increments, ex.h.values(F.theta) * F.lengths
                               / np.abs(F.theta).sum(axis=1), atol=1e-12)
    # the shared trunk carries theta1 with |theta1|_1 = 2 and h = 1
    trunk = np.flatnonzero(np.all(F.theta == THETA1, axis=1))[0]
    assert Z.increments[trunk] == pytest.approx(F.lengths[trunk] / 2)


def test_landscape_disconnected():
    F = segs([[0, 0, 1, 0, 1.0], [5, 5, 6, 5, 1.0]], 1)
    with pytest.raises(CertificateError, match="disconnected"):
        landscape(F, [0, 0], lambda x: x[:1], PolyhedralNorm.l1(1))


@pytest.mark.parametrize("m,expected", [(2, 3), (3, 3), (4, 3), (5, 3), (7, 4)])
def test_generic_junction_degree(m, expected):
    assert generic_junction_degree(m) == expected == (m * (m + 1)) // (2 * m - 2)


@pytest.mark.parametrize("m", [1, 0, 2.5])
def test_generic_junction_degree_rejects(m):
    with pytest.raises(CertificateError):
        generic_junction_degree(m)


def test_point_chain_pairing_matches_dual():
    # boundary pairing equals the cost for the affine calibration
    ex = two_sources()
    dual = sum(float(PHI_BAR @ x @ t) for x, t in ex.boundary)
    assert dual == pytest.approx(6.0)
    assert isinstance(ex.boundary, PointChain0)
    p = FlowProblem(ex.graph, ex.boundary, ex.h)
    assert solve_flow(p).dual_value() == pytest.approx(6.0, abs=1e-9)
