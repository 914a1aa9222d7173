import math

import numpy as np
import pytest

from delaunay import flip_packing, is_local_delaunay, ptolemy_f
from errors import DomainError, NotDelaunay, SurfaceMismatch
from hyperbolic import (
    CanonicalForm,
    HyperbolicCoords,
    boundary_arc,
    canonical_form,
    equivalent,
    flip_hyperbolic,
    from_hyperbolic,
    hexagon_side,
    hyperbolic_is_local_delaunay,
    to_hyperbolic,
)
from packing_geometry import HingeData, Packing, packings_match


def with_edge(pk, edge, value):
    inv = np.array(pk.inv_dist)
    inv[edge] = value
    return Packing(pk.tri, inv, pk.radii)


def test_lengths_are_arccosh(torus2):
    hc = to_hyperbolic(torus2)
    assert hc.lengths == pytest.approx([math.acosh(2.0)] * 6)
    np.testing.assert_array_equal(hc.radii, torus2.radii)


def test_round_trip(torus2):
    pk = torus2.with_radii([0.9, 1.2])
    back = from_hyperbolic(to_hyperbolic(pk))
    np.testing.assert_allclose(back.inv_dist, pk.inv_dist, rtol=1e-12)
    assert back.tri is pk.tri


def test_non_delaunay_is_rejected(torus2):
    pk = with_edge(torus2, 0, 7.0)
    with pytest.raises(NotDelaunay):
        to_hyperbolic(pk)
    with pytest.raises(NotDelaunay):
        from_hyperbolic(HyperbolicCoords(pk.tri, np.arccosh(pk.inv_dist), pk.radii))


def test_coords_validation(torus2):
    with pytest.raises(DomainError):
        HyperbolicCoords(torus2.tri, [1.0] * 5 + [0.0], torus2.radii)
    with pytest.raises(DomainError):
        HyperbolicCoords(torus2.tri, [1.0] * 6, [1.0])


def test_hyperbolic_predicate_matches_euclidean():
    x = (1.2, 0.9, 1.7, 1.1, 2.3)
    radii = (0.8, 1.0, 1.3, 0.7)
    h = HingeData(*(math.cosh(v) for v in x), *radii)
    assert hyperbolic_is_local_delaunay(*x, *radii) == pytest.approx(is_local_delaunay(h))


def test_hexagon_is_self_dual():
    x, y, z = 0.8, 1.3, 2.1
    X, Y, Z = hexagon_side(x, y, z), hexagon_side(y, z, x), hexagon_side(z, x, y)
    assert hexagon_side(X, Y, Z) == pytest.approx(x)
    assert hexagon_side(Y, Z, X) == pytest.approx(y)


def test_boundary_arc_is_a_hexagon_side():
    a, d, e = 2.0, 3.5, 1.7
    assert boundary_arc(a, d, e) == pytest.approx(hexagon_side(math.acosh(d), math.acosh(a), math.acosh(e)))
    assert boundary_arc(2, 2, 2) == pytest.approx(math.acosh(2))


def test_boundary_arcs_merge_under_flip(rng):
    for a, b, c, d, e in 1.1 + 3.0 * rng.random((20, 5)):
        f = ptolemy_f(a, b, c, d, e)
        # at v_i the arcs of the two old faces join into the arc of face (k, i, l)
        assert boundary_arc(a, d, e) + boundary_arc(b, c, e) == pytest.approx(boundary_arc(a, f, b), rel=1e-10)
        # likewise at v_j for face (l, j, k)
        assert boundary_arc(d, a, e) + boundary_arc(c, b, e) == pytest.approx(boundary_arc(c, f, d), rel=1e-10)


def test_flip_commutes_with_transform(torus2):
    pk = with_edge(torus2, 0, 7.0)
    hc = HyperbolicCoords(pk.tri, np.arccosh(pk.inv_dist), pk.radii)
    flipped_pk, _ = flip_packing(pk, 0)
    flipped_hc = flip_hyperbolic(hc, 0)
    np.testing.assert_allclose(np.cosh(flipped_hc.lengths), flipped_pk.inv_dist, rtol=1e-12)
    assert flipped_hc.tri.signature() == flipped_pk.tri.signature()


def test_canonical_form_of_symmetric_torus(torus2):
    canon = canonical_form(torus2)
    assert isinstance(canon, CanonicalForm)
    np.testing.assert_allclose(canon.radii, [1.0, 1.0], rtol=1e-8)
    assert canon.to_packing().u.sum() == pytest.approx(0.0, abs=1e-12)


def test_canonical_form_is_idempotent(torus2):
    pk = with_edge(torus2, 3, 2.6).with_radii([0.7, 1.9])
    once = canonical_form(pk).to_packing()
    twice = canonical_form(once).to_packing()
    assert packings_match(once, twice, 1e-8)


def test_equivalent_under_radius_change(torus2):
    assert equivalent(torus2, torus2.with_radii([2.0, 0.7]))
    assert equivalent(torus2, torus2.with_radii(torus2.radii * 3.0))


def test_inequivalent_inversive_distances(torus2):
    assert not equivalent(torus2, with_edge(torus2, 2, 2.8))


def test_equivalent_requires_same_surface(torus2, sphere3, torus1):
    with pytest.raises(SurfaceMismatch):
        equivalent(torus2, sphere3)
    with pytest.raises(SurfaceMismatch):
        equivalent(torus2, torus1)


def test_mirror_image_packings_are_not_equivalent(torus1):
    first = Packing(torus1.tri, [2.0, 3.0, 4.0], [1.0])
    mirror = Packing(torus1.tri, [3.0, 2.0, 4.0], [1.0])
    assert sorted(first.inv_dist) == sorted(mirror.inv_dist)
    assert not packings_match(first, mirror, 1e-8)
    assert not equivalent(first, mirror)
    assert equivalent(first, first.with_radii([2.5]))


def test_match_after_flip_and_back(torus2):
    pk = with_edge(torus2, 3, 2.6).with_radii([0.7, 1.9])
    there, _ = flip_packing(pk, 0)
    back, _ = flip_packing(there, 0)
    assert packings_match(pk, back, 1e-8)
    assert not packings_match(pk, there, 1e-8)
