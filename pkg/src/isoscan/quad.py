"""Latitude/longitude-aligned quadrilaterals and point predicates.

Quadrilaterals never span the antimeridian (the coordinate domain is split
there), so the west edge longitude is always <= the east edge longitude.
Containment is closed: boundary points count as inside, which keeps
``min_distance(q, p) == 0`` equivalent to ``contains(q, p)``.
"""

from __future__ import annotations

import math
from collections import namedtuple

from .geo import (
    EarthModel,
    GeoPoint,
    WGS84,
    antipode,
    great_circle_distance,
    nearest_point_on_meridian_arc,
    wrap_longitude,
)

__all__ = ["Quadrilateral", "contains", "min_distance", "max_distance"]


class Quadrilateral(namedtuple("Quadrilateral", ["lat_min", "lat_max", "lng_min", "lng_max"])):
    """Closed lat/lng box in degrees, west edge <= east edge."""

    __slots__ = ()

    def __new__(cls, lat_min: float, lat_max: float, lng_min: float, lng_max: float):
        if lat_min > lat_max:
            raise ValueError(f"lat_min {lat_min} > lat_max {lat_max}")
        if lng_min > lng_max:
            raise ValueError(f"lng_min {lng_min} > lng_max {lng_max} (no antimeridian spans)")
        return super().__new__(cls, lat_min, lat_max, lng_min, lng_max)

    @property
    def center_lng(self) -> float:
        return (self.lng_min + self.lng_max) * 0.5

    @property
    def center_lat(self) -> float:
        return (self.lat_min + self.lat_max) * 0.5


def contains(q: Quadrilateral, p: GeoPoint) -> bool:
    """Closed containment test by coordinate comparison."""
    return (
        q.lat_min <= p.lat_deg <= q.lat_max
        and q.lng_min <= p.lng_deg <= q.lng_max
    )


def min_distance(q: Quadrilateral, p: GeoPoint, model: EarthModel = WGS84) -> float:
    """Great-circle distance from ``p`` to the closest point of ``q``, in meters.

    Four configurations: inside (zero); between the longitude edges (shorter
    meridian arc to the north or south latitude edge); otherwise the foot of
    the perpendicular onto the nearer longitude edge, clamping to a corner
    when the foot falls outside the edge's latitude span.
    """
    if q.lng_min <= p.lng_deg <= q.lng_max:
        if p.lat_deg > q.lat_max:
            return great_circle_distance(p, GeoPoint(q.lat_max, p.lng_deg), model)
        if p.lat_deg < q.lat_min:
            return great_circle_distance(p, GeoPoint(q.lat_min, p.lng_deg), model)
        return 0.0

    # Rotate so the center longitude of q maps to the prime meridian; the
    # sign of p's rotated longitude picks the nearer longitude edge.  Valid
    # because q never spans the antimeridian.
    rotated = wrap_longitude(p.lng_deg - q.center_lng)
    edge_lng = q.lng_max if rotated > 0.0 else q.lng_min
    south = GeoPoint(q.lat_min, edge_lng)
    north = GeoPoint(q.lat_max, edge_lng)
    if q.lat_min == q.lat_max:
        # Degenerate latitude band: the edge is a single point.
        return great_circle_distance(p, south, model)
    foot = nearest_point_on_meridian_arc(p, south, north)
    return great_circle_distance(p, foot, model)


def max_distance(q: Quadrilateral, p: GeoPoint, model: EarthModel = WGS84) -> float:
    """Upper bound on the great-circle distance from ``p`` to every point of ``q``.

    Exact on the sphere: the farthest point of ``q`` from ``p`` is the
    nearest point of ``q`` to ``p``'s antipode, so the bound is
    ``pi * R - min_distance(q, antipode(p))``.  If the antipode lies inside
    ``q`` this returns the global maximum ``pi * R``.
    """
    return math.pi * model.radius_m - min_distance(q, antipode(p), model)
