"""Spatial search structures for the sweep passes.

``SphereKdTree`` is the dynamic point index maintained by the sweep: points
live in fixed-capacity leaves, overflowing leaves center-split along their
longer side, and the first levels are pre-built quadtree-style so the early
(clustered) insertions cannot degenerate the tree.

``TileIndex`` is the static tile-level tree used by the high-point pass:
every node carries its quadrilateral and the maximum elevation of its
subtree, enabling branch-and-bound searches for the nearest tile containing
higher ground.

Nearest-neighbor queries take a distance metric object.  Every metric pairs
its point-to-point distance with a quadrilateral lower bound that never
exceeds the metric's distance to any point inside the quadrilateral; that
soundness is what makes pruned searches exactly equivalent to linear scans.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Optional

import numpy as np

from .geo import (
    EarthModel,
    GeoPoint,
    WGS84,
    ellipsoid_distance,
    ellipsoid_distance_many,
    great_circle_distance,
    great_circle_distance_many,
    planar_distance,
    planar_distance_many,
    wrap_longitude,
)
from .quad import Quadrilateral, contains, min_distance

__all__ = [
    "OutOfBoundsError",
    "PointNotFoundError",
    "EmptyTreeError",
    "GreatCircleMetric",
    "PlanarMetric",
    "EllipsoidMetric",
    "SphereKdTree",
    "prebuild",
    "TileIndex",
]

TileKey = tuple[int, int]

# Absolute slack (meters) on pruning comparisons: absorbs last-ulp noise in
# bound computations so equal-distance tie candidates are never pruned away.
_PRUNE_SLACK_M = 1e-6

# Flattening-corrected distances divided by great-circle distances (mean
# radius) range over roughly [0.9944, 1.0045] globally; the lower end is the
# meridian radius of curvature at the equator vs the mean radius.  Scaling
# the great-circle quad bound by a factor below that range keeps pruning
# sound under the ellipsoid metric.
_ELLIPSOID_PRUNE_FACTOR = 0.9935


class OutOfBoundsError(ValueError):
    """Point lies outside the tree's covered quadrilateral."""


class PointNotFoundError(KeyError):
    """Removal of a point that is not in the tree (a sweep-logic bug)."""


class EmptyTreeError(LookupError):
    """Nearest-neighbor query against an empty tree."""


class GreatCircleMetric:
    """Haversine distance with the exact quadrilateral minimum as bound."""

    def __init__(self, model: EarthModel = WGS84):
        self.model = model

    def distance(self, a: GeoPoint, b: GeoPoint) -> float:
        return great_circle_distance(a, b, self.model)

    def distance_many(self, lats: np.ndarray, lngs: np.ndarray, p: GeoPoint) -> np.ndarray:
        return great_circle_distance_many(lats, lngs, p, self.model)

    def lower_bound(self, q: Quadrilateral, p: GeoPoint) -> float:
        return min_distance(q, p, self.model)


class PlanarMetric:
    """Equirectangular distance with a component-wise gap lower bound."""

    def __init__(self, model: EarthModel = WGS84):
        self.model = model

    def distance(self, a: GeoPoint, b: GeoPoint) -> float:
        return planar_distance(a, b, self.model)

    def distance_many(self, lats: np.ndarray, lngs: np.ndarray, p: GeoPoint) -> np.ndarray:
        return planar_distance_many(lats, lngs, p, self.model)

    def lower_bound(self, q: Quadrilateral, p: GeoPoint) -> float:
        lat = p.lat_deg
        if lat > q.lat_max:
            gap_lat = lat - q.lat_max
        elif lat < q.lat_min:
            gap_lat = q.lat_min - lat
        else:
            gap_lat = 0.0

        lng = p.lng_deg
        if q.lng_min <= lng <= q.lng_max:
            gap_lng = 0.0
        else:
            gap_lng = min(
                abs(wrap_longitude(lng - q.lng_min)),
                abs(wrap_longitude(lng - q.lng_max)),
            )

        # The mean latitude of (p, s) for s in q ranges over an interval;
        # take the smallest cosine over it so the bound stays below the
        # metric for every s.
        m_lo = (lat + q.lat_min) * 0.5
        m_hi = (lat + q.lat_max) * 0.5
        c = min(math.cos(math.radians(m_lo)), math.cos(math.radians(m_hi)))
        c = max(c, 0.0)
        return self.model.radius_m * math.hypot(
            math.radians(gap_lat), math.radians(gap_lng) * c
        )


class EllipsoidMetric:
    """Flattening-corrected distance; bound is a safely scaled sphere bound."""

    def __init__(self, model: EarthModel = WGS84):
        self.model = model

    def distance(self, a: GeoPoint, b: GeoPoint) -> float:
        return ellipsoid_distance(a, b, self.model)

    def distance_many(self, lats: np.ndarray, lngs: np.ndarray, p: GeoPoint) -> np.ndarray:
        return ellipsoid_distance_many(lats, lngs, p, self.model)

    def lower_bound(self, q: Quadrilateral, p: GeoPoint) -> float:
        return _ELLIPSOID_PRUNE_FACTOR * min_distance(q, p, self.model)


class _Node:
    __slots__ = ("quad", "axis", "split", "low", "high", "points", "size", "permanent")

    def __init__(self, quad: Quadrilateral, permanent: bool = False):
        self.quad = quad
        self.axis: Optional[int] = None  # None = leaf; 0 = latitude, 1 = longitude
        self.split = 0.0
        self.low: Optional[_Node] = None
        self.high: Optional[_Node] = None
        self.points: Optional[list[GeoPoint]] = []
        self.size = 0
        self.permanent = permanent


class SphereKdTree:
    """Dynamic k-d tree over points on the sphere.

    Points are stored in leaves only; inner nodes carry the quadrilateral
    they cover.  Leaves hold at most ``leaf_capacity`` points, except leaves
    whose quadrilateral has collapsed below ``min_split_span_deg`` or that
    hold only duplicates of one coordinate (tile-seam points), which may
    overflow rather than split forever.

    Single-writer: no concurrent mutation; each sweep owns its instance.
    """

    def __init__(
        self,
        bounds: Quadrilateral,
        leaf_capacity: int = 32,
        prebuilt_levels: int = 4,
        min_split_span_deg: float = 1.0 / 3600.0,
    ):
        if leaf_capacity < 1:
            raise ValueError("leaf_capacity must be >= 1")
        if prebuilt_levels < 0:
            raise ValueError("prebuilt_levels must be >= 0")
        self.bounds = bounds
        self.leaf_capacity = leaf_capacity
        self.prebuilt_levels = prebuilt_levels
        self.min_split_span_deg = min_split_span_deg
        self._root = _Node(bounds, permanent=False)
        self._prebuild(self._root, 2 * prebuilt_levels)

    def _prebuild(self, node: _Node, half_levels: int) -> None:
        # Two alternating center splits (latitude then longitude) per level
        # give the quadtree-like 4^k partition of the bounds.
        if half_levels == 0:
            return
        q = node.quad
        axis = (2 * self.prebuilt_levels - half_levels) % 2
        if axis == 0:
            split = (q.lat_min + q.lat_max) * 0.5
            low_q = Quadrilateral(q.lat_min, split, q.lng_min, q.lng_max)
            high_q = Quadrilateral(split, q.lat_max, q.lng_min, q.lng_max)
        else:
            split = (q.lng_min + q.lng_max) * 0.5
            low_q = Quadrilateral(q.lat_min, q.lat_max, q.lng_min, split)
            high_q = Quadrilateral(q.lat_min, q.lat_max, split, q.lng_max)
        node.axis = axis
        node.split = split
        node.points = None
        node.permanent = True
        node.low = _Node(low_q)
        node.high = _Node(high_q)
        self._prebuild(node.low, half_levels - 1)
        self._prebuild(node.high, half_levels - 1)

    def __len__(self) -> int:
        return self._root.size

    def insert(self, p: GeoPoint) -> None:
        """Add ``p``; splits the target leaf if it exceeds capacity."""
        if not contains(self.bounds, p):
            raise OutOfBoundsError(f"{p} outside index bounds {self.bounds}")
        node = self._root
        node.size += 1
        while node.axis is not None:
            node = node.low if p[node.axis] < node.split else node.high
            node.size += 1
        node.points.append(p)
        if len(node.points) > self.leaf_capacity:
            self._split(node)

    def remove(self, p: GeoPoint) -> None:
        """Remove one instance of ``p``; emptied subtrees revert to leaves."""
        node = self._root
        path = [node]
        while node.axis is not None:
            node = node.low if p[node.axis] < node.split else node.high
            path.append(node)
        try:
            node.points.remove(p)
        except ValueError:
            raise PointNotFoundError(f"{p} not in index") from None
        for nd in path:
            nd.size -= 1
        for nd in path:
            if nd.size == 0 and not nd.permanent and nd.axis is not None:
                nd.axis = None
                nd.low = nd.high = None
                nd.points = []
                break

    def _split(self, node: _Node) -> None:
        capacity = self.leaf_capacity
        pending = [node]
        while pending:
            nd = pending.pop()
            pts = nd.points
            if len(pts) <= capacity:
                continue
            first = pts[0]
            if all(pt == first for pt in pts):
                continue  # duplicate-coordinate overflow
            q = nd.quad
            extent_lat = q.lat_max - q.lat_min
            mid_cos = math.cos(math.radians((q.lat_min + q.lat_max) * 0.5))
            extent_lng = (q.lng_max - q.lng_min) * mid_cos
            if max(extent_lat, extent_lng) <= self.min_split_span_deg:
                continue  # collapsed quadrilateral, allow overflow
            if extent_lat >= extent_lng:
                axis = 0
                split = (q.lat_min + q.lat_max) * 0.5
                low_q = Quadrilateral(q.lat_min, split, q.lng_min, q.lng_max)
                high_q = Quadrilateral(split, q.lat_max, q.lng_min, q.lng_max)
            else:
                axis = 1
                split = (q.lng_min + q.lng_max) * 0.5
                low_q = Quadrilateral(q.lat_min, q.lat_max, q.lng_min, split)
                high_q = Quadrilateral(q.lat_min, q.lat_max, split, q.lng_max)
            low = _Node(low_q)
            high = _Node(high_q)
            for pt in pts:
                (low if pt[axis] < split else high).points.append(pt)
            low.size = len(low.points)
            high.size = len(high.points)
            nd.axis = axis
            nd.split = split
            nd.points = None
            nd.low = low
            nd.high = high
            pending.append(low)
            pending.append(high)

    def nearest_neighbor(self, p: GeoPoint, metric) -> tuple[GeoPoint, float]:
        """Exact nearest active point to ``p`` under ``metric``.

        Ties on distance are broken by ascending (lat, lng) of the stored
        point.  Raises :class:`EmptyTreeError` when no point is active.
        """
        if self._root.size == 0:
            raise EmptyTreeError("nearest_neighbor on empty index")
        dist = metric.distance
        bound = metric.lower_bound
        best_d = math.inf
        best_pt: Optional[GeoPoint] = None

        def visit(node: _Node) -> None:
            nonlocal best_d, best_pt
            if node.axis is None:
                for q in node.points:
                    d = dist(p, q)
                    if d < best_d or (d == best_d and (best_pt is None or q < best_pt)):
                        best_d = d
                        best_pt = q
                return
            low, high = node.low, node.high
            b_low = bound(low.quad, p) if low.size else math.inf
            b_high = bound(high.quad, p) if high.size else math.inf
            if b_low <= b_high:
                first, b_first, second, b_second = low, b_low, high, b_high
            else:
                first, b_first, second, b_second = high, b_high, low, b_low
            if b_first <= best_d + _PRUNE_SLACK_M:
                visit(first)
            if b_second <= best_d + _PRUNE_SLACK_M:
                visit(second)

        visit(self._root)
        return best_pt, best_d

    def points(self) -> Iterator[GeoPoint]:
        """Iterate over all active points (arbitrary order)."""
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.axis is None:
                yield from node.points
            else:
                stack.append(node.low)
                stack.append(node.high)

    def node_count(self) -> int:
        count = 0
        stack = [self._root]
        while stack:
            node = stack.pop()
            count += 1
            if node.axis is not None:
                stack.append(node.low)
                stack.append(node.high)
        return count

    def check_invariants(self) -> None:
        """Verify structural invariants; raises AssertionError on violation."""

        def walk(node: _Node, quad: Quadrilateral) -> int:
            assert node.quad == quad
            if node.axis is None:
                for pt in node.points:
                    assert contains(quad, pt), f"{pt} escapes leaf {quad}"
                if len(node.points) > self.leaf_capacity:
                    first = node.points[0]
                    extent_lat = quad.lat_max - quad.lat_min
                    mid_cos = math.cos(math.radians((quad.lat_min + quad.lat_max) * 0.5))
                    extent_lng = (quad.lng_max - quad.lng_min) * mid_cos
                    assert (
                        all(pt == first for pt in node.points)
                        or max(extent_lat, extent_lng) <= self.min_split_span_deg
                    ), "overfull leaf without collapsed quadrilateral"
                assert node.size == len(node.points)
                return node.size
            if node.axis == 0:
                low_q = Quadrilateral(quad.lat_min, node.split, quad.lng_min, quad.lng_max)
                high_q = Quadrilateral(node.split, quad.lat_max, quad.lng_min, quad.lng_max)
            else:
                low_q = Quadrilateral(quad.lat_min, quad.lat_max, quad.lng_min, node.split)
                high_q = Quadrilateral(quad.lat_min, quad.lat_max, node.split, quad.lng_max)
            n = walk(node.low, low_q) + walk(node.high, high_q)
            assert node.size == n
            return n

        walk(self._root, self.bounds)


def prebuild(bounds: Quadrilateral, levels: int, **kwargs) -> SphereKdTree:
    """Empty tree whose first ``levels`` quadtree levels are pre-split."""
    return SphereKdTree(bounds, prebuilt_levels=levels, **kwargs)


class _TileNode:
    __slots__ = ("quad", "max_elevation", "key", "left", "right")

    def __init__(self, quad, max_elevation, key=None, left=None, right=None):
        self.quad = quad
        self.max_elevation = max_elevation
        self.key = key
        self.left = left
        self.right = right


class TileIndex:
    """Static tree over tiles, augmented with subtree maximum elevation.

    Immutable after construction; safe for concurrent readers.
    """

    def __init__(
        self,
        entries: Iterable[tuple[TileKey, Quadrilateral, float]],
        model: EarthModel = WGS84,
    ):
        items = sorted(entries, key=lambda e: e[0])
        if not items:
            raise ValueError("TileIndex needs at least one tile")
        keys = {k for k, _, _ in items}
        if len(keys) != len(items):
            raise ValueError("duplicate tile keys")
        self.model = model
        self._root = self._build(items)

    def _build(self, items) -> _TileNode:
        if len(items) == 1:
            key, quad, max_elev = items[0]
            return _TileNode(quad, max_elev, key=key)
        lats = [k[0] for k, _, _ in items]
        lngs = [k[1] for k, _, _ in items]
        axis = 0 if (max(lats) - min(lats)) >= (max(lngs) - min(lngs)) else 1
        items = sorted(items, key=lambda e: (e[0][axis], e[0]))
        mid = len(items) // 2
        left = self._build(items[:mid])
        right = self._build(items[mid:])
        quad = Quadrilateral(
            min(left.quad.lat_min, right.quad.lat_min),
            max(left.quad.lat_max, right.quad.lat_max),
            min(left.quad.lng_min, right.quad.lng_min),
            max(left.quad.lng_max, right.quad.lng_max),
        )
        return _TileNode(quad, max(left.max_elevation, right.max_elevation), left=left, right=right)

    def nearest_higher_tile(
        self, p: GeoPoint, elevation_m: float
    ) -> Optional[tuple[TileKey, float]]:
        """Closest tile whose maximum elevation strictly exceeds ``elevation_m``.

        Distance is the great-circle minimum to the tile's quadrilateral;
        ties are broken by ascending tile key.  Returns None when no tile is
        higher (the search-area high point).
        """
        model = self.model
        best: Optional[tuple[float, TileKey]] = None

        def visit(node: _TileNode) -> None:
            nonlocal best
            if node.max_elevation <= elevation_m:
                return
            b = min_distance(node.quad, p, model)
            if best is not None and b > best[0]:
                return
            if node.key is not None:
                cand = (b, node.key)
                if best is None or cand < best:
                    best = cand
                return
            bl = min_distance(node.left.quad, p, model)
            br = min_distance(node.right.quad, p, model)
            if bl <= br:
                visit(node.left)
                visit(node.right)
            else:
                visit(node.right)
                visit(node.left)

        visit(self._root)
        if best is None:
            return None
        return best[1], best[0]

    def tiles_within(self, center: GeoPoint, radius_m: float) -> list[TileKey]:
        """Keys of exactly the tiles within ``radius_m`` of ``center``."""
        model = self.model
        found: list[TileKey] = []

        def visit(node: _TileNode) -> None:
            if min_distance(node.quad, center, model) > radius_m:
                return
            if node.key is not None:
                found.append(node.key)
                return
            visit(node.left)
            visit(node.right)

        visit(self._root)
        found.sort()
        return found
