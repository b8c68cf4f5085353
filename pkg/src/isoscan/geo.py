"""Point-level geometry on the sphere and ellipsoid.

Coordinates are geographic degrees at the API boundary (latitude in
[-90, 90], longitude wrapped into (-180, 180]); all trigonometry is done
in radians internally.  Distances are returned in meters.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "GeoPoint",
    "Vec3",
    "EarthModel",
    "WGS84",
    "wrap_longitude",
    "antipode",
    "great_circle_distance",
    "great_circle_distance_many",
    "ellipsoid_distance",
    "ellipsoid_distance_many",
    "planar_distance",
    "planar_distance_many",
    "to_cartesian",
    "from_cartesian",
    "nearest_point_on_meridian_arc",
]


def wrap_longitude(lng_deg: float) -> float:
    """Wrap a longitude into (-180, 180]. The world is split at the antimeridian."""
    if -180.0 < lng_deg <= 180.0:
        return lng_deg
    lng = math.fmod(lng_deg, 360.0)
    if lng <= -180.0:
        lng += 360.0
    elif lng > 180.0:
        lng -= 360.0
    return lng


class GeoPoint(namedtuple("GeoPoint", ["lat_deg", "lng_deg"])):
    """A position on the reference surface, in degrees.

    Longitude is wrapped into (-180, 180] on construction; latitude must
    already be in [-90, 90].  Tuple ordering gives the (lat, lng) ascending
    order used for tie-breaking throughout the package.
    """

    __slots__ = ()

    def __new__(cls, lat_deg: float, lng_deg: float):
        if not -90.0 <= lat_deg <= 90.0:
            raise ValueError(f"latitude {lat_deg!r} outside [-90, 90]")
        if not -180.0 < lng_deg <= 180.0:
            lng_deg = wrap_longitude(lng_deg)
        return super().__new__(cls, lat_deg, lng_deg)


class Vec3(NamedTuple):
    """Unit-sphere Cartesian coordinates."""

    x: float
    y: float
    z: float


@dataclass(frozen=True)
class EarthModel:
    """Reference sphere radius plus ellipsoid shape parameters.

    Defaults are the mean Earth radius and the WGS84 semi-major axis and
    flattening.
    """

    radius_m: float = 6_371_000.0
    equatorial_radius_m: float = 6_378_137.0
    flattening: float = 1.0 / 298.257223563

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError("radius_m must be positive")
        if not 0 <= self.flattening < 1:
            raise ValueError("flattening must be in [0, 1)")


WGS84 = EarthModel()


def antipode(p: GeoPoint) -> GeoPoint:
    """Point diametrically opposite ``p``."""
    return GeoPoint(-p.lat_deg, wrap_longitude(p.lng_deg + 180.0))


def great_circle_distance(a: GeoPoint, b: GeoPoint, model: EarthModel = WGS84) -> float:
    """Haversine great-circle distance between two points, in meters.

    Args:
        a, b: end points.
        model: supplies the sphere radius.

    Returns:
        Arc length in [0, pi * R].  Symmetric and zero for coincident points.
    """
    phi1 = math.radians(a.lat_deg)
    phi2 = math.radians(b.lat_deg)
    sin_dphi = math.sin(math.radians(b.lat_deg - a.lat_deg) * 0.5)
    sin_dlng = math.sin(math.radians(b.lng_deg - a.lng_deg) * 0.5)
    h = sin_dphi * sin_dphi + math.cos(phi1) * math.cos(phi2) * sin_dlng * sin_dlng
    if h >= 1.0:
        return math.pi * model.radius_m
    return 2.0 * model.radius_m * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def great_circle_distance_many(
    lats_deg: np.ndarray, lngs_deg: np.ndarray, p: GeoPoint, model: EarthModel = WGS84
) -> np.ndarray:
    """Vectorized haversine from arrays of points to a single point.

    Bulk twin of :func:`great_circle_distance` for oracle-style scans; exact
    comparisons must re-check candidates with the scalar function.
    """
    phi = np.radians(lats_deg)
    phi_p = math.radians(p.lat_deg)
    sin_dphi = np.sin((phi_p - phi) * 0.5)
    sin_dlng = np.sin(np.radians(p.lng_deg - lngs_deg) * 0.5)
    h = sin_dphi * sin_dphi + np.cos(phi) * math.cos(phi_p) * sin_dlng * sin_dlng
    np.clip(h, 0.0, 1.0, out=h)
    return 2.0 * model.radius_m * np.arctan2(np.sqrt(h), np.sqrt(1.0 - h))


def ellipsoid_distance(a: GeoPoint, b: GeoPoint, model: EarthModel = WGS84) -> float:
    """Flattening-corrected (Andoyer-Lambert style) distance in meters.

    Agrees with iterative geodesics to a few hundredths of a percent for
    non-antipodal pairs; degrades near antipodes.  With ``flattening == 0``
    this reduces exactly to the great-circle distance on a sphere of the
    equatorial radius.

    Args:
        a, b: end points; should not be antipodal.
        model: supplies equatorial radius and flattening.
    """
    phi1 = math.radians(a.lat_deg)
    phi2 = math.radians(b.lat_deg)
    dphi = (phi2 - phi1) * 0.5
    dlng = math.radians(b.lng_deg - a.lng_deg) * 0.5
    mean_phi = (phi1 + phi2) * 0.5

    sin_dphi2 = math.sin(dphi) ** 2
    cos_dphi2 = math.cos(dphi) ** 2
    sin_dlng2 = math.sin(dlng) ** 2
    cos_dlng2 = math.cos(dlng) ** 2
    sin_mean2 = math.sin(mean_phi) ** 2
    cos_mean2 = math.cos(mean_phi) ** 2

    s = sin_dphi2 * cos_dlng2 + cos_mean2 * sin_dlng2
    c = cos_dphi2 * cos_dlng2 + sin_mean2 * sin_dlng2
    w = math.atan2(math.sqrt(s), math.sqrt(c))
    if w == 0.0:
        return 0.0
    r = math.sqrt(s * c) / w

    f = model.flattening
    h1 = (3.0 * r - 1.0) / (2.0 * c)
    correction = f * h1 * sin_mean2 * cos_dphi2
    if s > 0.0:
        h2 = (3.0 * r + 1.0) / (2.0 * s)
        correction -= f * h2 * cos_mean2 * sin_dphi2
    return 2.0 * model.equatorial_radius_m * w * (1.0 + correction)


def ellipsoid_distance_many(
    lats_deg: np.ndarray, lngs_deg: np.ndarray, p: GeoPoint, model: EarthModel = WGS84
) -> np.ndarray:
    """Vectorized twin of :func:`ellipsoid_distance`."""
    phi1 = np.radians(lats_deg)
    phi2 = math.radians(p.lat_deg)
    dphi = (phi2 - phi1) * 0.5
    dlng = np.radians(p.lng_deg - lngs_deg) * 0.5
    mean_phi = (phi1 + phi2) * 0.5

    sin_dphi2 = np.sin(dphi) ** 2
    cos_dphi2 = np.cos(dphi) ** 2
    sin_dlng2 = np.sin(dlng) ** 2
    cos_dlng2 = np.cos(dlng) ** 2
    sin_mean2 = np.sin(mean_phi) ** 2
    cos_mean2 = np.cos(mean_phi) ** 2

    s = sin_dphi2 * cos_dlng2 + cos_mean2 * sin_dlng2
    c = cos_dphi2 * cos_dlng2 + sin_mean2 * sin_dlng2
    w = np.arctan2(np.sqrt(s), np.sqrt(c))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(s * c) / w
        f = model.flattening
        h1 = (3.0 * r - 1.0) / (2.0 * c)
        h2 = (3.0 * r + 1.0) / (2.0 * s)
        correction = f * h1 * sin_mean2 * cos_dphi2 - f * h2 * cos_mean2 * sin_dphi2
    correction = np.where(s > 0.0, correction, 0.0)
    out = 2.0 * model.equatorial_radius_m * w * (1.0 + correction)
    return np.where(w == 0.0, 0.0, out)


def planar_distance(a: GeoPoint, b: GeoPoint, model: EarthModel = WGS84) -> float:
    """Equirectangular approximation: meant for points within a tile or so.

    Latitude difference and longitude difference scaled by the cosine of the
    mean latitude, treated as planar Euclidean coordinates in meters.
    """
    dlat = math.radians(b.lat_deg - a.lat_deg)
    dlng = math.radians(wrap_longitude(b.lng_deg - a.lng_deg))
    mean_phi = math.radians(a.lat_deg + b.lat_deg) * 0.5
    x = dlng * math.cos(mean_phi)
    return model.radius_m * math.hypot(dlat, x)


def planar_distance_many(
    lats_deg: np.ndarray, lngs_deg: np.ndarray, p: GeoPoint, model: EarthModel = WGS84
) -> np.ndarray:
    """Vectorized twin of :func:`planar_distance`."""
    dlat = np.radians(p.lat_deg - lats_deg)
    dlng_deg = p.lng_deg - lngs_deg
    dlng_deg = np.where(dlng_deg <= -180.0, dlng_deg + 360.0, dlng_deg)
    dlng_deg = np.where(dlng_deg > 180.0, dlng_deg - 360.0, dlng_deg)
    dlng = np.radians(dlng_deg)
    mean_phi = np.radians(lats_deg + p.lat_deg) * 0.5
    return model.radius_m * np.hypot(dlat, dlng * np.cos(mean_phi))


def to_cartesian(p: GeoPoint) -> Vec3:
    """Unit vector for a surface point: x east at Greenwich, z toward the north pole."""
    lat = math.radians(p.lat_deg)
    lng = math.radians(p.lng_deg)
    cos_lat = math.cos(lat)
    return Vec3(cos_lat * math.cos(lng), cos_lat * math.sin(lng), math.sin(lat))


def from_cartesian(v: Vec3) -> GeoPoint:
    """Back-transform of a (near) unit vector to degrees.

    The input is normalized defensively.  Longitude at the poles is
    canonicalized to 0 since it is undefined there.
    """
    norm = math.sqrt(v.x * v.x + v.y * v.y + v.z * v.z)
    if norm == 0.0:
        raise ValueError("cannot convert the zero vector to a surface point")
    z = v.z / norm
    z = max(-1.0, min(1.0, z))
    lat = math.degrees(math.asin(z))
    if abs(lat) >= 90.0:
        return GeoPoint(math.copysign(90.0, lat), 0.0)
    return GeoPoint(lat, math.degrees(math.atan2(v.y, v.x)))


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return Vec3(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )


_DEGENERATE_NORM2 = 1e-24


def nearest_point_on_meridian_arc(
    p: GeoPoint, south_end: GeoPoint, north_end: GeoPoint
) -> GeoPoint:
    """Closest point of a meridian arc to ``p``, on the unit sphere.

    The foot of the perpendicular great circle through ``p`` onto the great
    circle through the arc is found with cross products; if it falls outside
    the arc's latitude span, the result clamps to the nearer endpoint.

    Args:
        p: query point.
        south_end, north_end: arc endpoints sharing a longitude, with
            ``south_end.lat_deg < north_end.lat_deg``.
    """
    lng = south_end.lng_deg
    lat_lo = south_end.lat_deg
    lat_hi = north_end.lat_deg

    axis = _cross(to_cartesian(south_end), to_cartesian(north_end))
    pv = to_cartesian(p)
    # foot = component of p within the great-circle plane (axis x (p x axis))
    perp = _cross(pv, axis)
    foot = _cross(axis, perp)
    norm2 = foot.x * foot.x + foot.y * foot.y + foot.z * foot.z
    if norm2 < _DEGENERATE_NORM2:
        # p is (anti)parallel to the circle's axis: every arc point is
        # equidistant, return the latitude-clamped projection of p.
        return GeoPoint(min(max(p.lat_deg, lat_lo), lat_hi), lng)

    s = from_cartesian(foot)
    # The foot can land on the far half of the great circle (the opposite
    # meridian); there the nearest arc point is whichever endpoint is closer.
    if abs(wrap_longitude(s.lng_deg - lng)) > 90.0 and abs(s.lat_deg) < 90.0:
        d_south = great_circle_distance(p, south_end)
        d_north = great_circle_distance(p, north_end)
        if d_north < d_south or (d_north == d_south and north_end < south_end):
            return GeoPoint(lat_hi, lng)
        return GeoPoint(lat_lo, lng)

    if s.lat_deg > lat_hi:
        return GeoPoint(lat_hi, lng)
    if s.lat_deg < lat_lo:
        return GeoPoint(lat_lo, lng)
    return GeoPoint(s.lat_deg, lng)
