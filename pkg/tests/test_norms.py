import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linprog

from mmt.norms import (GeneratedNorm, NormError, PolyhedralNorm, eval_h, eval_h_dual, eval_H,
                       eval_H_dual, eval_H_lower, eval_H_upper, in_dH0, in_dual_ball)

from oracles import H_I, M_BAR

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vec2 = arrays(np.float64, 2, elements=finite)


def dual_norm_oracle(G, y):
    """max y.theta over {g_k . theta <= 1} by an external LP solver."""
    res = linprog(-np.asarray(y, float), A_ub=G, b_ub=np.ones(len(G)), bounds=[(None, None)] * G.shape[1])
    assert res.status == 0
    return -res.fun


# -- h --------------------------------------------------------------------

def test_hex_values(hexnorm):
    assert eval_h(hexnorm, [1, 1]) == 1.0
    assert eval_h(hexnorm, [-1, 1]) == 2.0
    assert eval_h(hexnorm, [0, 0]) == 0.0


def test_hex_matches_closed_form(hexnorm, rng):
    T = rng.normal(size=(200, 2))
    closed = np.max(np.abs(np.c_[T[:, 0], T[:, 1], T[:, 0] - T[:, 1]]), axis=1)
    np.testing.assert_allclose(hexnorm.values(T), closed, rtol=0, atol=1e-14)


def test_dimension_mismatch(hexnorm):
    with pytest.raises(NormError):
        eval_h(hexnorm, [1, 2, 3])
    with pytest.raises(NormError):
        eval_h_dual(hexnorm, [1])


@pytest.mark.parametrize("G", [
    [[1, 0], [0, 1]],                       # not symmetric
    [[1, 0], [-1, 0]],                      # does not span
    [[1, 0], [-1, 0], [1, 0], [0, 1], [0, -1]],  # duplicate
])
def test_invalid_dual_vertices(G):
    with pytest.raises(NormError):
        PolyhedralNorm(G)


@settings(max_examples=200, deadline=None)
@given(vec2, vec2, st.floats(-20, 20, allow_nan=False))
def test_norm_axioms(a, b, lam):
    h = PolyhedralNorm.hexagonal()
    scale = 1e-12 * (1 + np.abs(a).sum() + np.abs(b).sum())
    assert h(a + b) <= h(a) + h(b) + scale
    assert abs(h(lam * a) - abs(lam) * h(a)) <= 1e-12 * (1 + abs(lam) * h(a))
    if np.any(a != 0):
        assert h(a) > 0


# -- h_* ------------------------------------------------------------------

def test_hex_dual_at_ones(hexnorm):
    # primal hexagon has vertices (1,0),(1,1),(0,1) and negatives; (1,1).(1,1) = 2
    assert eval_h_dual(hexnorm, [1, 1]) == pytest.approx(2.0, abs=1e-14)
    assert dual_norm_oracle(hexnorm.dual_vertices, [1, 1]) == pytest.approx(2.0, abs=1e-9)
    assert eval_h_dual(hexnorm, [0, 0]) == 0.0


def test_hex_primal_vertices(hexnorm):
    got = {tuple(np.round(v, 12)) for v in hexnorm.primal_vertices}
    assert got == {(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)}


@pytest.mark.parametrize("name,m", [("linf-hex", 2), ("l1", 2), ("l1", 3), ("euclidean", 2)])
def test_dual_norm_against_lp_oracle(name, m, rng):
    h = PolyhedralNorm.named(name, m=m)
    for y in rng.normal(size=(30, m)):
        assert eval_h_dual(h, y) == pytest.approx(dual_norm_oracle(h.dual_vertices, y), rel=1e-9, abs=1e-12)


def test_euclidean_self_dual(rng):
    h = PolyhedralNorm.euclidean(2, samples=64)
    err = 1 / np.cos(np.pi / 64) - 1   # polygon circumradius overshoot
    for y in rng.normal(size=(50, 2)):
        r = np.linalg.norm(y)
        assert r * (1 - 1e-12) <= eval_h_dual(h, y) * (1 + 1e-12) <= r * (1 + err) * (1 + 1e-12)


def test_in_dual_ball(hexnorm):
    assert in_dual_ball(hexnorm, [1, 0])
    assert not in_dual_ball(hexnorm, [1.5, 0])
    assert in_dual_ball(hexnorm, [0, 0])


def test_biduality(hexnorm):
    for h in (hexnorm, PolyhedralNorm.l1(3), PolyhedralNorm.euclidean(2, 40)):
        P = h.dual_vertices @ h.primal_vertices.T
        assert np.all(P.max(axis=1) <= 1 + 1e-12)
        assert np.allclose(P.max(axis=1), 1.0, atol=1e-12)


def test_from_primal_vertices_roundtrip(hexnorm):
    h2 = PolyhedralNorm.from_primal_vertices(hexnorm.primal_vertices)
    pts = np.random.default_rng(1).normal(size=(50, 2))
    np.testing.assert_allclose(h2.values(pts), hexnorm.values(pts), atol=1e-12)


def test_json_roundtrip(hexnorm):
    h2 = PolyhedralNorm.from_dict(json.loads(hexnorm.to_json()))
    np.testing.assert_array_equal(h2.dual_vertices, hexnorm.dual_vertices)
    assert PolyhedralNorm.from_dict("linf-hex").m == 2
    with pytest.raises(NormError):
        PolyhedralNorm.named("nope")


# -- H_* and membership -----------------------------------------------------

def test_H_dual_examples(hexG):
    assert eval_H_dual(hexG, M_BAR) == pytest.approx(1.0, abs=1e-14)
    assert eval_H_dual(hexG, np.zeros((2, 2))) == 0.0
    assert in_dH0(hexG, M_BAR)
    assert not in_dH0(hexG, np.eye(2))
    assert in_dH0(hexG, np.zeros((2, 2)))
    with pytest.raises(NormError):
        eval_H_dual(hexG, np.eye(3))


def test_H_dual_matches_sup_over_directions(hexG, rng):
    ang = np.linspace(0, 2 * np.pi, 20001)
    E = np.c_[np.cos(ang), np.sin(ang)]
    for M in rng.normal(size=(10, 2, 2)):
        brute = max(eval_h_dual(hexG.h, M @ e) for e in E[::50])
        fine = np.max(np.abs((hexG.h.primal_vertices @ M) @ E.T))
        assert brute <= eval_H_dual(hexG, M) + 1e-12
        assert fine == pytest.approx(eval_H_dual(hexG, M), rel=1e-6)


@settings(max_examples=150, deadline=None)
@given(vec2, vec2)
def test_rank_one_operator_law(a, b):
    G = GeneratedNorm(PolyhedralNorm.hexagonal(), 2)
    lhs = eval_H_dual(G, np.outer(a, b))
    rhs = eval_h_dual(G.h, a) * np.linalg.norm(b)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@settings(max_examples=150, deadline=None)
@given(vec2, st.floats(0, 2 * np.pi))
def test_membership_consistency(theta, ang):
    G = GeneratedNorm(PolyhedralNorm.hexagonal(), 2)
    e = np.array([np.cos(ang), np.sin(ang)])
    M = np.outer(theta, e)
    assert in_dH0(G, M) == (eval_H_dual(G, M) <= 1 + 1e-9)
    assert in_dH0(G, M) == in_dual_ball(G.h, theta)


# -- H ------------------------------------------------------------------------

def test_H_upper_identity(hexG):
    val, dec, _ = eval_H_upper(hexG, np.eye(2))
    assert val == pytest.approx(H_I, abs=1e-9)
    recon = sum(np.outer(t, e) for t, e in dec)
    np.testing.assert_allclose(recon, np.eye(2), atol=1e-9)


def test_H_upper_rank_one_and_zero(hexG, rng):
    for theta in rng.normal(size=(10, 2)):
        e = hexG.directions[3]
        assert eval_H_upper(hexG, np.outer(theta, e))[0] == pytest.approx(hexG.h(theta), rel=1e-9)
    assert eval_H_upper(hexG, np.zeros((2, 2)))[0] == 0.0


def test_H_upper_needs_spanning_directions(hexnorm):
    G = GeneratedNorm(hexnorm, 2, directions=[[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(NormError):
        eval_H_upper(G, np.eye(2))


def test_H_lower_examples(hexG, rng):
    lb = eval_H_lower(hexG, np.eye(2), warm_start=M_BAR)
    assert lb.value == pytest.approx(H_I, abs=1e-12)
    assert in_dH0(hexG, lb.certificate, tol=1e-12)
    z = eval_H_lower(hexG, np.zeros((2, 2)))
    assert z.value == 0.0 and not np.any(z.certificate)
    for theta in rng.normal(size=(10, 2)):
        e = rng.normal(size=2)
        e /= np.linalg.norm(e)
        lb = eval_H_lower(hexG, np.outer(theta, e), max_iter=50)
        assert lb.value >= hexG.h(theta) - 1e-9
        assert in_dH0(hexG, lb.certificate, tol=1e-12)


def test_M_bar_certifies_identity():
    assert float(np.sum(M_BAR * np.eye(2))) == pytest.approx(H_I, abs=1e-15)


def test_H_bracket_identity(hexG):
    br = eval_H(hexG, np.eye(2), gap_tol=1e-6, warm_start=M_BAR)
    assert br.status == "ok"
    assert br.lower - 1e-12 <= H_I <= br.upper + 1e-12
    assert br.gap <= 1e-6


def test_H_bracket_without_hint_directions(hexnorm):
    br = eval_H(GeneratedNorm(hexnorm, 2), np.eye(2), gap_tol=1e-6)
    assert br.lower - 1e-9 <= H_I <= br.upper + 1e-9
    assert br.gap <= 1e-6


def test_H_sandwich_random(hexG, rng):
    for M in rng.normal(size=(5, 2, 2)):
        br = eval_H(hexG, M, gap_tol=1e-6)
        assert br.lower <= br.upper + 1e-12
        # the certificate is a valid lower bound witness
        assert in_dH0(hexG, br.certificate, tol=1e-9)
        assert np.sum(M * br.certificate) <= br.upper + 1e-9


def test_H_bracket_rejects_bad_tol(hexG):
    with pytest.raises(NormError):
        eval_H(hexG, np.eye(2), gap_tol=0)


def test_H_of_l1_is_entrywise_sum():
    # for h = l1 the generated norm is sum_i |row_i|_2
    G = GeneratedNorm(PolyhedralNorm.l1(2), 2)
    rng = np.random.default_rng(3)
    for M in rng.normal(size=(4, 2, 2)):
        expected = np.linalg.norm(M, axis=1).sum()
        br = eval_H(G, M, gap_tol=1e-6)
        assert br.lower - 1e-8 <= expected <= br.upper + 1e-8


def test_H_three_dimensional():
    G = GeneratedNorm(PolyhedralNorm.hexagonal(), 3)
    theta, e = np.array([0.3, -0.7]), np.array([1.0, 2.0, 2.0]) / 3
    br = eval_H(G, np.outer(theta, e), gap_tol=1e-6)
    assert br.lower - 1e-9 <= G.h(theta) <= br.upper + 1e-9


def test_directions_symmetric(hexG):
    D = hexG.directions
    for d in D:
        assert np.min(np.abs(D + d).max(axis=1)) < 1e-12
    assert np.allclose(np.linalg.norm(D, axis=1), 1.0, atol=1e-12)


def test_bad_directions(hexnorm):
    with pytest.raises(NormError):
        GeneratedNorm(hexnorm, 2, directions=[[2.0, 0.0]])
