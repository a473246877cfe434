import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridmortar.multipatch import _annulus_sector, _bezier_box
from hybridmortar.splines import (DegenerateGeometryError, GeometryMap, KnotVector, SplineError,
                                  TensorSplineSpace, basis_matrix, eval_basis, evaluate,
                                  geometry_eval, greville_points, h_refine, insert_knots,
                                  interpolation_matrix, make_open_knot_vector,
                                  physical_derivatives)


@st.composite
def knot_vectors(draw, max_degree=5):
    p = draw(st.integers(1, max_degree))
    n_int = draw(st.integers(0, 6))
    inner = draw(st.lists(st.floats(0.02, 0.98), min_size=n_int, max_size=n_int))
    knots = []
    for u in sorted(set(np.round(inner, 3))):
        knots += [u] * draw(st.integers(1, p))
    return KnotVector(p, np.r_[np.zeros(p + 1), knots, np.ones(p + 1)])


# ---------------------------------------------------------------- knot vectors

@pytest.mark.parametrize("p, n, knots, dim", [
    (1, 1, [0, 0, 1, 1], 2),
    (2, 2, [0, 0, 0, 0.5, 1, 1, 1], 4),
])
def test_open_knot_vector_examples(p, n, knots, dim):
    kv = make_open_knot_vector(p, n)
    np.testing.assert_array_equal(kv.knots, knots)
    assert kv.dim == dim


def test_cubic_four_elements_dimension():
    # 2(p+1) end knots plus 3 interior ones; dim = #knots - p - 1
    kv = make_open_knot_vector(3, 4)
    assert len(kv.knots) == 11
    assert kv.dim == 7


def test_interior_multiplicity():
    kv = make_open_knot_vector(3, 2, interior_multiplicity=3)
    assert kv.dim == 7 and kv.n_elements == 2
    with pytest.raises(SplineError):
        make_open_knot_vector(2, 2, interior_multiplicity=3)


@pytest.mark.parametrize("knots", [[0, 0, 1], [0, 0.5, 0.2, 1], [0, 0, 0, 1, 1]])
def test_invalid_knot_vectors(knots):
    with pytest.raises(SplineError):
        KnotVector(1, knots)


# ---------------------------------------------------------------- evaluation

def test_bernstein_quadratic_midpoint():
    kv = KnotVector(2, [0, 0, 0, 1, 1, 1])
    first, tab = eval_basis(kv, 0.5, 1)
    assert first == 0
    np.testing.assert_allclose(tab[0], [0.25, 0.5, 0.25], atol=1e-15)
    np.testing.assert_allclose(tab[1], [-1, 0, 1], atol=1e-15)


def test_hat_functions():
    _, tab = eval_basis(KnotVector(1, [0, 0, 1, 1]), 0.25)
    np.testing.assert_allclose(tab[0], [0.75, 0.25])


def test_derivatives_match_finite_differences():
    kv = make_open_knot_vector(3, 5)
    x = np.array([0.13, 0.47, 0.81])
    eps = 1e-6
    d1 = basis_matrix(kv, x, 1)
    fd = (basis_matrix(kv, x + eps) - basis_matrix(kv, x - eps)) / (2 * eps)
    np.testing.assert_allclose(d1, fd, atol=1e-8)
    d2 = basis_matrix(kv, x, 2)
    fd2 = (basis_matrix(kv, x + eps, 1) - basis_matrix(kv, x - eps, 1)) / (2 * eps)
    np.testing.assert_allclose(d2, fd2, atol=1e-6)


def test_out_of_range_point_rejected():
    with pytest.raises(SplineError):
        eval_basis(make_open_knot_vector(2, 2), 1.5)


@given(knot_vectors(), st.integers(0, 10_000))
def test_partition_of_unity(kv, seed):
    x = np.random.default_rng(seed).random(1000)
    x[:2] = 0.0, 1.0
    _, tab = eval_basis(kv, x, kv.degree)
    np.testing.assert_allclose(tab[:, 0].sum(axis=1), 1.0, atol=1e-12)
    scale = np.abs(tab[:, 1:]).max() if kv.degree else 1.0
    assert np.abs(tab[:, 1:].sum(axis=2)).max() <= 1e-11 * max(scale, 1.0)


@given(knot_vectors(), st.integers(0, 10_000))
def test_polynomial_reproduction(kv, seed):
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal(kv.degree + 1)
    g = kv.greville()
    c = np.linalg.solve(basis_matrix(kv, g), np.polyval(coef, g))
    x = rng.random(200)
    assert np.abs(basis_matrix(kv, x) @ c - np.polyval(coef, x)).max() <= 1e-10 * max(1, np.abs(coef).sum())


# ---------------------------------------------------------------- refinement

def test_h_refine_bisects():
    kv = h_refine(KnotVector(2, [0, 0, 0, 1, 1, 1]))
    np.testing.assert_array_equal(kv.knots, [0, 0, 0, 0.5, 1, 1, 1])
    assert h_refine(kv).dim == 6


@given(knot_vectors(max_degree=4), st.lists(st.floats(0.01, 0.99), min_size=1, max_size=5),
       st.integers(0, 10_000))
def test_knot_insertion_preserves_curve(kv, new, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(kv.dim)
    new = [u for u in set(np.round(new, 4)) if u not in kv.knots]   # keep multiplicity <= p
    kv2, c2 = insert_knots(kv, c, new) if new else (kv, c)
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(basis_matrix(kv2, x) @ c2, basis_matrix(kv, x) @ c, atol=1e-12)


@pytest.mark.parametrize("gmap", [_bezier_box(0, 2, 0, 1, 2), _annulus_sector(1, 2, 2),
                                  _annulus_sector(1, 2, 3)], ids=["box", "annulus-p2", "annulus-p3"])
def test_refined_map_unchanged(gmap):
    zeta = np.random.default_rng(1).random((100, 2))
    fine = gmap.refine([[0.3, 0.5], [0.25, 0.7]]).h_refine()
    x0, J0, H0 = geometry_eval(gmap, zeta)
    x1, J1, H1 = geometry_eval(fine, zeta)
    assert np.abs(x1 - x0).max() <= 1e-13
    assert np.abs(J1 - J0).max() <= 1e-12
    assert np.abs(H1 - H0).max() <= 1e-12


# ---------------------------------------------------------------- geometry

def test_identity_square():
    kv = make_open_knot_vector(2, 3)
    space = TensorSplineSpace((kv, kv))
    g = greville_points(space).reshape(kv.dim, kv.dim, 2)
    gmap = GeometryMap(space, g)
    x, J, H = geometry_eval(gmap, [0.3, 0.8])
    np.testing.assert_allclose(x, [0.3, 0.8], atol=1e-15)
    np.testing.assert_allclose(J, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(H, 0, atol=1e-13)


def test_affine_rectangle_jacobian():
    _, J, _ = geometry_eval(_bezier_box(0, 2, 0, 1, 2), [0.4, 0.6])
    np.testing.assert_allclose(J, np.diag([2.0, 1.0]), atol=1e-14)
    assert np.linalg.det(J) == pytest.approx(2.0)


def test_quarter_circle_is_exact():
    gmap = _annulus_sector(1.0, 2.0, 2)
    assert gmap.weights[0, 1] == pytest.approx(np.sqrt(2) / 2)
    t = np.linspace(0, 1, 501)
    for r, z0 in ((1.0, 0.0), (2.0, 1.0)):
        x = gmap(np.stack([np.full_like(t, z0), t], 1))
        assert np.abs(np.linalg.norm(x, axis=1) - r).max() <= 1e-13


def test_degenerate_jacobian_detected():
    kv = make_open_knot_vector(1, 1)
    cp = np.array([[[0, 0], [0, 1]], [[0, 0], [0, 1]]], dtype=float)   # collapsed
    with pytest.raises(DegenerateGeometryError):
        geometry_eval(GeometryMap(TensorSplineSpace((kv, kv)), cp), [0.5, 0.5])


def test_rational_third_derivatives_unsupported():
    with pytest.raises(SplineError):
        _annulus_sector(1, 2, 3).rational_basis(np.array([[0.5, 0.5]]), 3)


# ---------------------------------------------------------------- physical derivatives

def _fit(gmap, fun):
    space = gmap.space
    z = greville_points(space)
    return np.linalg.solve(interpolation_matrix(space, z), fun(gmap(z)))


@pytest.mark.parametrize("p", [2, 3])
def test_affine_linear_and_quadratic_fields(p):
    gmap = _bezier_box(0, 2, 0, 1, p).refine_uniform(3)
    zeta = np.random.default_rng(2).random((50, 2))
    ev = evaluate(gmap, zeta)
    cx = _fit(gmap, lambda x: x[:, 0])
    grad = np.einsum("pla,pl->pa", ev.dN, cx[ev.idx])
    np.testing.assert_allclose(grad, np.tile([1.0, 0.0], (50, 1)), atol=1e-13)
    c2 = _fit(gmap, lambda x: x[:, 0] ** 2)
    hess = np.einsum("plab,pl->pab", ev.d2N, c2[ev.idx])
    np.testing.assert_allclose(hess, np.tile([[2.0, 0.0], [0.0, 0.0]], (50, 1, 1)), atol=1e-12)


def test_identity_map_keeps_parametric_derivatives():
    rng = np.random.default_rng(3)
    gh, hh = rng.standard_normal((4, 6, 2)), rng.standard_normal((4, 6, 2, 2))
    hh = hh + np.swapaxes(hh, 2, 3)
    J = np.broadcast_to(np.eye(2), (4, 2, 2))
    g, h = physical_derivatives(gh, hh, J, np.zeros((4, 2, 2, 2)))
    np.testing.assert_allclose(g, gh)
    np.testing.assert_allclose(h, hh)


@pytest.mark.parametrize("p", [2, 3])
def test_curved_map_coordinate_fields(p):
    # the coordinates are exact NURBS fields with affine physical behaviour,
    # while their parametric Hessians do not vanish
    gmap = _annulus_sector(1, 2, p).refine_uniform(3)
    ev = evaluate(gmap, np.random.default_rng(4).random((40, 2)))
    for i in range(2):
        c = gmap.control_points[..., i].reshape(-1)[ev.idx]
        np.testing.assert_allclose(np.einsum("pla,pl->pa", ev.dN, c), np.eye(2)[np.full(40, i)], atol=1e-12)
        np.testing.assert_allclose(np.einsum("plab,pl->pab", ev.d2N, c), 0.0, atol=1e-11)
