import numpy as np
import pytest

from mmt.chains import ChainError, Grid2D, GridChain, TestForm1, mass_Mh, pair
from mmt.flatnorm import (diffuse_pairing, default_forms, flat_distance, grid_flat_norm,
                          microstructure_chain, relaxation_study)
from mmt.gallery import H_OF_IDENTITY, HOMOG_BUNDLES, HOMOG_DIRECTIONS
from mmt.norms import PolyhedralNorm

HEX = PolyhedralNorm.hexagonal()
L1 = PolyhedralNorm.l1(2)


def cell_boundary(grid, cell, theta):
    Q = GridChain.from_faces(grid, 2, len(theta), {cell: theta})
    return Q, Q.boundary()


def random_chain(rng, grid, k=1, fill_cells=3, noise_edges=3, m=2):
    """Boundary of a few random cells plus a few random edges."""
    Q = GridChain.from_faces(grid, k + 1, m, {int(c): rng.integers(-3, 4, m)
                                              for c in rng.choice(grid.n_faces(k + 1), fill_cells, replace=False)})
    N = GridChain.from_faces(grid, k, m, {int(e): rng.integers(-3, 4, m)
                                          for e in rng.choice(grid.n_faces(k), noise_edges, replace=False)})
    return Q.boundary() + N


# -- closed-form cases --------------------------------------------------------------------

@pytest.mark.parametrize("form", ["gauge", "epigraph"])
def test_single_cell_unit_grid(form):
    g = Grid2D(delta=1.0)
    theta = np.array([1.0, -2.0])
    _, P = cell_boundary(g, 0, theta)
    # both candidates cost h(theta) when delta = 1
    assert grid_flat_norm(P, HEX, form).value == pytest.approx(HEX(theta), abs=1e-9)


@pytest.mark.parametrize("delta", [1.0, 0.5, 1 / 8])
@pytest.mark.parametrize("theta", [(1.0, 0.0), (1.0, 1.0), (0.3, -0.7)])
def test_single_cell_two_candidates(delta, theta):
    g = Grid2D(delta=delta)
    theta = np.array(theta)
    _, P = cell_boundary(g, g.cell(0, 0), theta)
    expected = min(4 * delta, delta ** 2) * HEX(theta)
    res = grid_flat_norm(P, HEX)
    assert res.value == pytest.approx(expected, abs=1e-10)


def test_zero_chain():
    g = Grid2D(delta=0.25)
    res = grid_flat_norm(GridChain.zeros(g, 1, 2), HEX)
    assert res.value == 0.0 and res.filling.k == 2


@pytest.mark.parametrize("steps,theta", [((1, 0), (1.0, 0.0)), ((2, 3), (1.0, 1.0)),
                                         ((4, 4), (0.5, -1.0)), ((0, 1), (2.0, 0.0))])
def test_two_point_zero_chain(steps, theta):
    delta = 0.25
    g = Grid2D(delta=delta)
    theta = np.array(theta)
    P = GridChain.from_faces(g, 0, 2, {g.node(0, 0): -theta, g.node(*steps): theta})
    dist = delta * sum(steps)
    assert grid_flat_norm(P, HEX).value == pytest.approx(min(dist, 2.0) * HEX(theta), abs=1e-10)


def test_degree_checks():
    g = Grid2D(delta=0.5)
    with pytest.raises(ChainError):
        grid_flat_norm(GridChain.zeros(g, 2, 2), HEX)
    with pytest.raises(ChainError):
        grid_flat_norm(GridChain.zeros(g, 1, 3), HEX)


# -- structural properties ------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_decomposition_and_bounds(seed):
    rng = np.random.default_rng(400 + seed)
    g = Grid2D(delta=0.25)
    P = random_chain(rng, g)
    res = grid_flat_norm(P, HEX)
    np.testing.assert_allclose((res.remainder + res.filling.boundary()).coefficients,
                               P.coefficients, atol=1e-10)
    assert res.value == pytest.approx(res.mass_remainder + res.mass_filling, abs=1e-12)
    assert res.value == pytest.approx(res.lp_objective, abs=1e-8)
    assert res.value <= mass_Mh(HEX, P) + 1e-10
    assert res.value > 0
    assert grid_flat_norm(P, HEX, "epigraph").value == pytest.approx(res.value, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_filling_bound_and_triangle(seed):
    rng = np.random.default_rng(500 + seed)
    g = Grid2D(delta=0.25)
    Q = GridChain(g, 2, rng.integers(-2, 3, (g.n_cells, 2)).astype(float))
    assert grid_flat_norm(Q.boundary(), HEX).value <= mass_Mh(HEX, Q) + 1e-10
    A, B = random_chain(rng, g), random_chain(rng, g)
    fa, fb = grid_flat_norm(A, HEX).value, grid_flat_norm(B, HEX).value
    assert grid_flat_norm(A + B, HEX).value <= fa + fb + 1e-9
    assert flat_distance(A, B, HEX) == pytest.approx(flat_distance(B, A, HEX), abs=1e-9)
    for lam in (-2.0, 0.5):
        assert grid_flat_norm(lam * A, HEX).value == pytest.approx(abs(lam) * fa, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_boundary_contracts(seed):
    rng = np.random.default_rng(600 + seed)
    g = Grid2D(delta=0.25)
    P = random_chain(rng, g)
    assert grid_flat_norm(P.boundary(), HEX).value <= grid_flat_norm(P, HEX).value + 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_norm_equivalence_corridor(seed):
    # hex(theta) <= |theta|_1 <= 2 hex(theta) carries over to flat norms
    rng = np.random.default_rng(700 + seed)
    g = Grid2D(delta=0.25)
    P = random_chain(rng, g)
    fh, fl = grid_flat_norm(P, HEX).value, grid_flat_norm(P, L1).value
    assert fh <= fl + 1e-9 <= 2 * fh + 2e-9


# -- microstructures ------------------------------------------------------------------------

def test_axis_aligned_microstructure():
    theta = np.array([1.0, 2.0])
    P = microstructure_chain([(theta, (1.0, 0.0))], 4)
    assert len(P) == 4
    np.testing.assert_allclose(P.theta, np.tile(theta / 4, (4, 1)))
    np.testing.assert_allclose(P.lengths, 1.0)
    np.testing.assert_allclose(np.sort(P.a[:, 1]), [0.125, 0.375, 0.625, 0.875])


@pytest.mark.parametrize("k", [1, 3, 7, 16])
@pytest.mark.parametrize("e", [(1.0, 1.0), (2.0, 1.0), (-0.3, 1.0)])
def test_microstructure_mass_exact(k, e):
    theta = np.array([0.4, -1.3])
    box = ((0.0, 0.0), (2.0, 0.5))
    P = microstructure_chain([(theta, e)], k, box)
    assert mass_Mh(HEX, P) == pytest.approx(HEX(theta) * 1.0, abs=1e-12)
    # constant forms see the diffuse flux exactly
    W = np.array([[0.3, -1.1], [2.0, 0.7]])
    e = np.asarray(e) / np.linalg.norm(e)
    assert pair(P, TestForm1.constant(W)) == pytest.approx(theta @ W @ e * 1.0, abs=1e-12)


def test_affine_pairing_converges():
    rng = np.random.default_rng(8)
    form = TestForm1.affine(rng.normal(size=(2, 2)), rng.normal(size=(2, 2, 2)))
    theta, e = np.array([1.0, 0.5]), np.array([0.6, 0.8])
    exact = diffuse_pairing(np.outer(theta, e), form)
    errs = [abs(pair(microstructure_chain([(theta, e)], k), form) - exact) for k in (2, 4, 8, 16)]
    for k, err in zip((2, 4, 8, 16), errs):
        assert err <= 2.0 / k
    assert errs[-1] < errs[0]


def test_diffuse_pairing_closed_form():
    W = np.array([[1.0, 2.0], [3.0, 4.0]])
    S = np.zeros((2, 2, 2))
    S[0] = np.eye(2)
    form = TestForm1.affine(W, S)
    M = np.array([[1.0, 0.0], [0.0, 1.0]])
    # integral over [0,2]x[0,1] of trace(W + x1 I) = 2 * 5 + 2 * (integral of x1 = 2)
    assert diffuse_pairing(M, form, ((0.0, 0.0), (2.0, 1.0))) == pytest.approx(10.0 + 4.0)


def test_homogenization_study():
    dec = list(zip(HOMOG_BUNDLES, HOMOG_DIRECTIONS))
    study = relaxation_study(np.eye(2), dec, [4, 8, 16, 32], default_forms(), HEX)
    assert study.expected_mass == pytest.approx(H_OF_IDENTITY, abs=1e-12)
    assert study.masses_constant
    assert study.errors_decreasing
    assert all(r.mass == pytest.approx(H_OF_IDENTITY, abs=1e-9) for r in study.rows)
    lines = study.to_csv().splitlines()
    assert lines[0] == "k,mass,max_pairing_error,segments,flat_value" and len(lines) == 5
    assert study.to_dict()["rows"][0]["k"] == 4
    # small k can cancel by luck, so only the O(1/k) envelope holds there
    coarse = relaxation_study(np.eye(2), dec, [1, 2, 3], default_forms(), HEX)
    assert all(r.max_pairing_error <= 1.0 / r.k for r in coarse.rows + study.rows)


def test_rank_one_study():
    theta, e = np.array([1.0, -1.0]), np.array([0.0, 1.0])
    study = relaxation_study(np.outer(theta, e), [(theta, e)], [1, 2, 4], default_forms(), HEX)
    assert study.expected_mass == pytest.approx(HEX(theta))
    assert study.masses_constant


def test_empty_and_invalid_decompositions():
    study = relaxation_study(np.zeros((2, 2)), [], [1, 2], default_forms(), HEX)
    assert study.expected_mass == 0.0 and study.masses_constant
    with pytest.raises(ChainError):
        relaxation_study(np.eye(2), [((1.0, 0.0), (1.0, 0.0))], [1], default_forms(), HEX)
    with pytest.raises(ChainError):
        microstructure_chain([((1.0, 0.0), (1.0, 0.0))], 0)
    with pytest.raises(ChainError):
        microstructure_chain([((1.0, 0.0), (0.0, 0.0))], 2)
    assert len(microstructure_chain([], 3)) == 0
