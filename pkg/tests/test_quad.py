"""Point-quadrilateral predicates against dense-sampling oracles."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoscan.geo import GeoPoint, WGS84, antipode, great_circle_distance, great_circle_distance_many
from isoscan.quad import Quadrilateral, contains, max_distance, min_distance

R = WGS84.radius_m


def boundary_samples(q: Quadrilateral, per_edge: int) -> tuple[np.ndarray, np.ndarray]:
    """Points along all four edges, corners included."""
    lats = np.linspace(q.lat_min, q.lat_max, per_edge)
    lngs = np.linspace(q.lng_min, q.lng_max, per_edge)
    all_lats = np.concatenate(
        [
            np.full(per_edge, q.lat_min),
            np.full(per_edge, q.lat_max),
            lats,
            lats,
        ]
    )
    all_lngs = np.concatenate(
        [
            lngs,
            lngs,
            np.full(per_edge, q.lng_min),
            np.full(per_edge, q.lng_max),
        ]
    )
    return all_lats, all_lngs


def interior_grid(q: Quadrilateral, per_side: int) -> tuple[np.ndarray, np.ndarray]:
    lats = np.linspace(q.lat_min, q.lat_max, per_side)
    lngs = np.linspace(q.lng_min, q.lng_max, per_side)
    gl, gn = np.meshgrid(lats, lngs, indexing="ij")
    return gl.ravel(), gn.ravel()


class TestContains:
    def test_interior(self):
        q = Quadrilateral(10, 20, 30, 40)
        assert contains(q, GeoPoint(15, 35))

    def test_corner_is_closed(self):
        q = Quadrilateral(10, 20, 30, 40)
        assert contains(q, GeoPoint(20, 40))
        assert contains(q, GeoPoint(10, 30))

    def test_outside(self):
        q = Quadrilateral(10, 20, 30, 40)
        assert not contains(q, GeoPoint(21, 35))
        assert not contains(q, GeoPoint(15, 29.999))

    def test_validation(self):
        with pytest.raises(ValueError):
            Quadrilateral(20, 10, 0, 1)
        with pytest.raises(ValueError):
            Quadrilateral(0, 1, 5, 4)


class TestMinDistance:
    def test_inside_is_zero(self):
        q = Quadrilateral(10, 20, 30, 40)
        assert min_distance(q, GeoPoint(15, 35)) == 0.0
        assert min_distance(q, GeoPoint(10, 30)) == 0.0  # boundary counts

    def test_between_longitudes_hits_latitude_edge(self):
        q = Quadrilateral(10, 20, 30, 40)
        p = GeoPoint(25, 35)
        expected = great_circle_distance(p, GeoPoint(20, 35))
        assert min_distance(q, p) == expected
        lats, lngs = boundary_samples(q, 25_000)
        assert min_distance(q, p) <= great_circle_distance_many(lats, lngs, p).min() + 1e-3

    def test_below_southern_edge(self):
        q = Quadrilateral(10, 20, 30, 40)
        p = GeoPoint(-5, 31)
        assert min_distance(q, p) == great_circle_distance(p, GeoPoint(10, 31))

    def test_corner_case_clamps(self):
        q = Quadrilateral(0, 40, 0, 10)
        p = GeoPoint(50, 20)
        expected = great_circle_distance(p, GeoPoint(40, 10))
        assert min_distance(q, p) == pytest.approx(expected, rel=1e-12)
        lats, lngs = boundary_samples(q, 25_000)
        assert min_distance(q, p) <= great_circle_distance_many(lats, lngs, p).min() + 1e-3

    def test_longitude_edge_interior_foot(self):
        q = Quadrilateral(-40, 40, -10, 10)
        p = GeoPoint(0, 50)  # due east, foot on the east edge at the equator
        assert min_distance(q, p) == pytest.approx(
            great_circle_distance(p, GeoPoint(0, 10)), rel=1e-12
        )

    def test_antimeridian_side_selection(self):
        q = Quadrilateral(10, 20, -180, -179)
        p = GeoPoint(15, 179.5)  # just west across the antimeridian
        d = min_distance(q, p)
        # the nearby west edge (lng -180) must win over the east edge
        assert d < great_circle_distance(p, GeoPoint(15, -179))
        lats, lngs = boundary_samples(q, 25_000)
        sampled = great_circle_distance_many(lats, lngs, p).min()
        assert d <= sampled + 1e-3
        assert d >= sampled - 1e-3

    def test_positive_outside(self):
        q = Quadrilateral(10, 20, 30, 40)
        for p in (GeoPoint(20.001, 35), GeoPoint(9.2, 29.0), GeoPoint(45, 41)):
            assert min_distance(q, p) > 0.0


class TestMaxDistance:
    def test_center_dominated_by_corner(self):
        q = Quadrilateral(-1, 1, -1, 1)
        p = GeoPoint(0, 0)
        assert max_distance(q, p) >= great_circle_distance(p, GeoPoint(1, 1)) - 1e-3

    def test_antipode_inside_gives_global_maximum(self):
        q = Quadrilateral(10, 20, 30, 40)
        p = antipode(GeoPoint(15, 35))
        assert max_distance(q, p) == pytest.approx(math.pi * R, rel=1e-12)

    def test_example_against_dense_boundary(self):
        q = Quadrilateral(10, 20, 30, 40)
        p = GeoPoint(25, 35)
        lats, lngs = boundary_samples(q, 25_000)
        sampled = great_circle_distance_many(lats, lngs, p).max()
        d = max_distance(q, p)
        assert d >= sampled - 1e-3
        assert d <= sampled + 1e-3  # duality makes the bound tight

    def test_interior_never_exceeds_bound(self):
        q = Quadrilateral(44, 47, 6, 10)
        p = GeoPoint(-20, -100)
        lats, lngs = interior_grid(q, 150)
        assert max_distance(q, p) >= great_circle_distance_many(lats, lngs, p).max() - 1e-3


class TestDenseSamplingProperties:
    def test_random_configurations(self):
        rng = random.Random(17)
        for _ in range(12):
            lat_min = rng.uniform(-60, 50)
            lng_min = rng.uniform(-170, 160)
            q = Quadrilateral(
                lat_min, lat_min + rng.uniform(0.5, 25), lng_min, lng_min + rng.uniform(0.5, 25)
            )
            p = GeoPoint(rng.uniform(-80, 80), rng.uniform(-180, 180))
            lats, lngs = boundary_samples(q, 2_500)
            dists = great_circle_distance_many(lats, lngs, p)
            lo, hi = min_distance(q, p), max_distance(q, p)
            assert lo <= dists.min() + 1e-3
            assert hi >= dists.max() - 1e-3
            ilats, ilngs = interior_grid(q, 60)
            idists = great_circle_distance_many(ilats, ilngs, p)
            assert lo <= idists.min() + 1e-3
            assert hi >= idists.max() - 1e-3
            if contains(q, p):
                assert lo == 0.0
            else:
                assert lo > 0.0

    @given(
        st.floats(-55, 45),
        st.floats(-160, 140),
        st.floats(0.1, 12),
        st.floats(0.1, 12),
        st.floats(-80, 80),
        st.floats(-180, 180),
    )
    @settings(max_examples=60, deadline=None)
    def test_min_below_max(self, lat0, lng0, dlat, dlng, plat, plng):
        q = Quadrilateral(lat0, lat0 + dlat, lng0, lng0 + dlng)
        p = GeoPoint(plat, plng)
        assert min_distance(q, p) <= max_distance(q, p) + 1e-9

    def test_continuity_under_perturbation(self):
        rng = random.Random(23)
        q = Quadrilateral(10, 20, 30, 40)
        for _ in range(400):
            p = GeoPoint(rng.uniform(-30, 60), rng.uniform(-10, 80))
            step = rng.uniform(1e-6, 1e-3)
            p2 = GeoPoint(p.lat_deg + rng.choice([-step, step]), p.lng_deg + rng.choice([-step, step]))
            moved = great_circle_distance(p, p2)
            jump = abs(min_distance(q, p) - min_distance(q, p2))
            assert jump <= moved + 1e-3
