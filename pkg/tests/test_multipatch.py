import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridmortar.assembly import assemble_mortar_B, build_mortar_spaces
from hybridmortar.multipatch import (Patch, TopologyError, _bezier_affine_1d, _bezier_box,
                                     build_mortar_space, build_multipatch, interface_quadrature,
                                     list_presets, make_preset)


def two_boxes(p=2, n0=2, n1=2, gap=0.0, boundary="D"):
    a = Patch(_bezier_box(0, 1, 0, 1, p).refine_uniform(n0))
    b = Patch(_bezier_box(1 + gap, 2 + gap, 0, 1, p).refine_uniform(n1))
    return build_multipatch([a, b], [((0, "right"), (1, "left"))], boundary)


def test_two_squares_topology():
    mp = two_boxes()
    assert len(mp.interfaces) == 1
    assert len(mp.crosspoints) == 2
    assert len(mp.boundary) == 6


def test_split_line_topology():
    mp = make_preset("unit-line-2patch", 2, 8)
    assert len(mp.interfaces) == 1 and mp.crosspoints == ()
    assert [p.space.kvs[0].n_elements for p in mp.patches] == [4, 4]


def test_gap_is_rejected():
    with pytest.raises(TopologyError):
        two_boxes(gap=0.1)


def test_overlap_is_rejected():
    a = Patch(_bezier_box(0, 1, 0, 1, 2))
    b = Patch(_bezier_box(0.5, 1.5, 0, 1, 2))
    with pytest.raises(TopologyError):
        build_multipatch([a, b], [], "D")


def test_side_used_twice_is_rejected():
    a = Patch(_bezier_affine_1d(0, 0.5, 2))
    b = Patch(_bezier_affine_1d(0.5, 1, 2))
    with pytest.raises(TopologyError):
        build_multipatch([a, b], [((0, 1), (1, 0)), ((0, 1), (1, 0))])


def test_boundary_table():
    mp = two_boxes(boundary={(0, "left"): "N", "default": "D"})
    assert mp.sides("N") == [(0, 0)]
    assert len(mp.sides("D")) == 5
    with pytest.raises(TopologyError):
        two_boxes(boundary={(0, "right"): "N"})      # interface side
    with pytest.raises(TopologyError):
        mp.with_penalty_boundary([(0, "right")])


def test_reversed_interface_detected():
    a = Patch(_bezier_box(0, 1, 0, 1, 2).refine_uniform(2))
    b = Patch(_bezier_box(2, 1, 1, 0, 2).refine_uniform(3))     # rotated by pi
    mp = build_multipatch([a, b], [((0, "right"), (1, "right"))])
    it = mp.interfaces[0]
    assert it.reversed
    q = interface_quadrature(mp, 0)
    xs = mp.patches[0].geometry(mp.patches[0].side_points(1, q.t))
    xm = mp.patches[1].geometry(mp.patches[1].side_points(1, q.t_master))
    np.testing.assert_allclose(xs, xm, atol=1e-14)


# ---------------------------------------------------------------- mortar spaces

@pytest.mark.parametrize("n, dim", [(4, 4), (1, 1)])
def test_mortar_dimension_with_reduction(n, dim):
    mp = make_preset("rect-2patch-matching", 2, n)
    assert mp.patches[0].trace_kv(1).dim == n + 2
    for rule in ("modify", "drop"):
        assert build_mortar_space(mp, 0, rule=rule).dim == dim


def test_point_interface_multiplier():
    ms = build_mortar_space(make_preset("unit-line-2patch", 2, 6), 0)
    assert ms.dim == 1
    np.testing.assert_array_equal(ms.eval([0.0]), [[1.0]])


def test_reduction_only_at_true_crosspoints():
    mp = make_preset("rect-2patch-matching", 2, 4)
    ms = build_mortar_space(mp, 0, reduce_at="crosspoints")
    assert ms.dim == 6 and ms.reduced == (False, False)


@pytest.mark.parametrize("p", [2, 3, 4])
def test_modified_space_keeps_degree_p_minus_1(p):
    mp = make_preset("rect-2patch-matching", p, 5)
    ms = build_mortar_space(mp, 0)
    t = np.linspace(0, 1, 60)
    Psi = ms.eval(t)
    for k in range(p):
        coef, *_ = np.linalg.lstsq(Psi, t ** k, rcond=None)
        assert np.abs(Psi @ coef - t ** k).max() < 1e-10


def test_total_multiplier_dimension_is_sum():
    mp = make_preset("quarter-annulus-2patch", 2, 3)
    spaces = build_mortar_spaces(mp)
    B, labels = assemble_mortar_B(mp, spaces)
    assert B.shape[0] == sum(ms.dim for ms in spaces)
    assert set(labels) == {0}


# ---------------------------------------------------------------- interface quadrature

def test_merged_segments():
    mp = make_preset("rect-2patch-nonmatching", 2, 2)       # slave 2, master 3 elements
    q = interface_quadrature(mp, 0)
    np.testing.assert_allclose(q.segments, [0, 1 / 3, 0.5, 2 / 3, 1])
    assert len(q.t) == 4 * 3


def test_matching_segments_and_identity_correspondence():
    mp = make_preset("rect-2patch-matching", 3, 4)
    q = interface_quadrature(mp, 0)
    np.testing.assert_allclose(q.segments, mp.patches[0].trace_kv(1).breaks)
    np.testing.assert_array_equal(q.t_master, q.t)


@given(st.integers(0, 9))
def test_gauss_exactness_on_segments(k):
    p = 3
    mp = make_preset("rect-2patch-nonmatching", p, 4)
    q = interface_quadrature(mp, 0)
    if k <= 2 * p + 1:
        assert np.sum(q.weights * q.t ** k) == pytest.approx(1 / (k + 1), rel=1e-13)


@pytest.mark.parametrize("n, qtol", [(1, 1e-3), (3, 1e-7), (5, 1e-8)])
def test_arclengths_on_curved_interface(n, qtol):
    mp = make_preset("quarter-annulus-2patch", 2, n)
    q = interface_quadrature(mp, 0)
    exact = np.pi / 2 * 1.5
    assert abs(q.h.sum() - exact) <= 1e-10
    # p+1 Gauss points do not integrate the rational speed exactly
    assert abs(q.weights.sum() - exact) <= qtol


def test_presets_listing():
    names = [n for n, _ in list_presets()]
    assert names == sorted(names) and len(names) >= 4
    for required in ("unit-line-2patch", "rect-2patch-nonmatching", "unit-square-1patch",
                     "quarter-annulus-2patch"):
        assert required in names
    with pytest.raises(TopologyError):
        make_preset("no-such-domain", 2, 2)


def test_nonmatching_preset_refinement():
    mp = make_preset("rect-2patch-nonmatching", 3, 8)
    assert [p.space.kvs[0].n_elements for p in mp.patches] == [8, 12]


def test_swap_exchanges_roles():
    mp = make_preset("rect-2patch-nonmatching", 2, 4)
    sw = mp.swapped(0)
    assert sw.interfaces[0].slave == mp.interfaces[0].master
    assert len(sw.interfaces[0].h_s) == 6
