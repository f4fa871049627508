import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mra.errors import ConfigurationError, DomainError
from mra.geometry import (Domain, KnotStrategy, _lattice_shape, assign_locations,
                          build_partition, equidistant_knots, locate_leaves, make_tree,
                          mra_depth, place_knots)


def leaf_boxes(tree):
    return [(tree.regions[p].lower, tree.regions[p].upper) for p in tree.leaves]


def test_two_by_two_leaves():
    tree = build_partition(Domain.unit(1), (2, 2))
    bounds = [(lo[0], hi[0]) for lo, hi in leaf_boxes(tree)]
    assert bounds == [(0, .25), (.25, .5), (.5, .75), (.75, 1)]


def test_toy_partition_widths():
    tree = build_partition(Domain.unit(1), (3, 3, 3))
    assert len(tree.leaves) == 27
    widths = [hi[0] - lo[0] for lo, hi in leaf_boxes(tree)]
    np.testing.assert_allclose(widths, 1 / 27, rtol=1e-12)


def test_mixed_branching_leaf_count():
    tree = build_partition(Domain.unit(2), (2, 2, 4, 8, 8, 16))
    assert len(tree.leaves) == 16384


def test_empty_branching_rejected():
    with pytest.raises(ConfigurationError):
        build_partition(Domain.unit(1), ())


def test_axes_cycle_in_2d():
    tree = build_partition(Domain.unit(2), (2, 2))
    r = tree.regions[(1, 0)]
    np.testing.assert_array_equal(r.lower, [0.5, 0.0])
    np.testing.assert_array_equal(r.upper, [1.0, 0.5])


def test_interior_split_goes_right():
    tree = build_partition(Domain.unit(1), (2,))
    assert locate_leaves(tree, [0.5])[0] == 1


def test_upper_face_is_closed():
    tree = build_partition(Domain.unit(2), (3, 3))
    flat = locate_leaves(tree, np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]))
    assert list(flat) == [8, 6, 2]


def test_outside_location_reports_index():
    tree = build_partition(Domain.unit(1), (2,))
    with pytest.raises(DomainError) as info:
        locate_leaves(tree, [0.2, 0.4, 1.5])
    assert info.value.index == 2


def test_nonfinite_location_rejected():
    tree = build_partition(Domain.unit(1), (2,))
    with pytest.raises(DomainError):
        locate_leaves(tree, [np.nan])


def test_toy_points_per_leaf():
    S = (np.arange(54) + 0.5) / 54
    tree = assign_locations(build_partition(Domain.unit(1), (3, 3, 3)), S)
    assert all(len(tree.leaf_obs[leaf]) == 2 for leaf in tree.leaves)


def test_empty_location_list():
    tree = assign_locations(build_partition(Domain.unit(2), (2, 2)), np.empty((0, 2)))
    assert tree.n == 0
    assert all(len(v) == 0 for v in tree.leaf_obs.values())


@settings(max_examples=60, deadline=None)
@given(dim=st.integers(1, 3),
       branching=st.lists(st.integers(1, 4), min_size=1, max_size=4),
       seed=st.integers(0, 2 ** 32 - 1))
def test_every_point_in_exactly_one_leaf(dim, branching, seed):
    rng = np.random.default_rng(seed)
    dom = Domain(-rng.random(dim), 1 + rng.random(dim))
    tree = build_partition(dom, branching)
    # random interior points plus points snapped to every split edge and face
    pts = dom.lower + (dom.upper - dom.lower) * rng.random((50, dim))
    for lo, hi in leaf_boxes(tree):
        pts = np.vstack([pts, lo, hi])
    flat = locate_leaves(tree, pts)
    for i, p in enumerate(pts):
        hits = [k for k, leaf in enumerate(tree.leaves)
                if tree.regions[leaf].contains(p, tree.upper_closed(tree.regions[leaf]))[0]]
        assert hits == [flat[i]]


@settings(max_examples=40, deadline=None)
@given(branching=st.lists(st.integers(1, 5), min_size=1, max_size=3))
def test_leaves_tile_the_domain(branching):
    tree = build_partition(Domain.unit(2), branching)
    area = sum(np.prod(hi - lo) for lo, hi in leaf_boxes(tree))
    assert area == pytest.approx(1.0, rel=1e-12)


def test_equidistant_interior_knots():
    q = equidistant_knots(np.array([0.0]), np.array([1.0]), 3)
    np.testing.assert_allclose(q[:, 0], [1 / 6, 1 / 2, 5 / 6])


def test_child_boundary_knots():
    tree = make_tree(Domain.unit(1), (3,), KnotStrategy("child-boundaries", 2))
    np.testing.assert_allclose(tree.knots_of(())[:, 0], [1 / 3, 2 / 3])


def test_child_boundaries_need_matching_count():
    with pytest.raises(ConfigurationError):
        make_tree(Domain.unit(1), (3,), KnotStrategy("child-boundaries", 3))


def test_child_boundaries_only_in_1d():
    with pytest.raises(ConfigurationError):
        make_tree(Domain.unit(2), (2,), KnotStrategy("child-boundaries", 1))


def test_zero_knots_at_root():
    tree = make_tree(Domain.unit(1), (4,), KnotStrategy("equidistant-interior", [0]))
    assert tree.knots_of(()).shape == (0, 1)


def test_zero_knots_below_root_rejected():
    with pytest.raises(ConfigurationError):
        make_tree(Domain.unit(1), (2, 2), KnotStrategy("equidistant-interior", [3, 0]))


def test_user_knots_must_lie_in_region():
    tree = build_partition(Domain.unit(1), (2,))
    ok = KnotStrategy("user-supplied", 1, {(): np.array([[0.3]])})
    assert place_knots(tree, ok).knots_of(())[0, 0] == 0.3
    bad = KnotStrategy("user-supplied", 1, {(): np.array([[1.3]])})
    with pytest.raises(DomainError):
        place_knots(tree, bad)


def test_unknown_strategy():
    with pytest.raises(ConfigurationError):
        KnotStrategy("random")


@pytest.mark.parametrize("r,dim,shape", [(9, 2, [3, 3]), (6, 2, [2, 3]), (7, 2, [1, 7]),
                                         (8, 3, [2, 2, 2]), (5, 1, [5])])
def test_lattice_shape(r, dim, shape):
    assert sorted(_lattice_shape(r, dim)) == sorted(shape)


def test_knots_inside_region_2d():
    tree = make_tree(Domain.unit(2), (2, 2), KnotStrategy("equidistant-interior", 6))
    for path, q in tree.knots.items():
        reg = tree.regions[path]
        assert np.all(reg.contains(q, tree.upper_closed(reg)))
        assert len(q) == 6


@pytest.mark.parametrize("n,M", [(1920, 3), (7680, 4), (30720, 5), (122880, 6)])
def test_depth_rule(n, M):
    assert mra_depth(n, 30, 4) == M
