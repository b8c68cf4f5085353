"""Scalable three-pass isolation pipeline over tiles.

Pass 1 (bounding) sweeps each tile's down-sampled grid with the
full-resolution peaks, turning every tile-local nearest higher sample into
an upper bound on that peak's isolation.  Peaks bounded below the
minimum-isolation threshold are discarded; the rest are assigned to every
tile within their bound.  Peaks with no tile-local higher sample (always
including the tile high point) are deferred.

Pass 2 (high-point) resolves the deferred peaks against a static tile-level
index augmented with per-tile maximum elevation: the nearest higher tile's
maximum distance bounds the peak's isolation, and the peak is assigned to
all tiles within that bound.  The peak with no higher tile anywhere is the
search-area high point and gets undefined isolation.

Pass 3 (finalization) sweeps each tile at full resolution with the peaks
assigned to it and emits per-tile candidates; the final answer per peak is
the closest candidate.

Bounding and finalization run tile-parallel in worker processes; results
are merged in deterministic key order, so output is identical for any
worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dem import Peak, Tile, build_events, detect_peaks, detect_peaks_deduped, downsample, merge_tiles
from .geo import EarthModel, GeoPoint, WGS84, great_circle_distance
from .quad import Quadrilateral, min_distance, max_distance
from .spatial_index import (
    EllipsoidMetric,
    GreatCircleMetric,
    PlanarMetric,
    TileIndex,
    TileKey,
)
from .sweep import IlpResult, run_sweep

__all__ = [
    "BOUND_INFLATION",
    "MissingTilesError",
    "TileSummary",
    "TilePeaksMap",
    "area_tile_keys",
    "tile_keys_within",
    "bounding_pass",
    "highpoint_pass",
    "finalization_pass",
    "finalize",
    "final_metric",
    "run_pipeline",
    "run_merged_sweep",
    "PipelineResult",
    "PipelineStats",
    "audit_pipeline",
]

# Upper bounds are found as great-circle distances but the final isolation
# is an ellipsoid distance.  Their ratio stays within the spread of the
# ellipsoid's radii of curvature around the mean radius, at most ~1.0102
# between directions; inflating bounds by 1.1% keeps every bound above the
# final isolation and every tile closer than the final isolation assigned.
BOUND_INFLATION = 1.011


class MissingTilesError(RuntimeError):
    """Tiles inside the search area are unavailable."""

    def __init__(self, missing: Sequence[TileKey]):
        self.missing = sorted(missing)
        super().__init__(f"missing tiles: {self.missing}")


@dataclass(frozen=True)
class TileSummary:
    """Per-tile digest feeding the high-point pass."""

    key: TileKey
    high_point: Peak
    max_elevation_m: int


class TilePeaksMap:
    """Tile key -> peaks that may have their isolation limit point there.

    Append-only while the first two passes run, frozen before finalization
    reads it.  A peak appears at most once per tile (smallest bound kept).
    """

    def __init__(self) -> None:
        self._entries: dict[TileKey, dict[GeoPoint, tuple[Peak, float]]] = {}
        self._frozen = False

    def add(self, key: TileKey, peak: Peak, bound_m: float) -> None:
        if self._frozen:
            raise RuntimeError("map is frozen")
        slot = self._entries.setdefault(key, {})
        cur = slot.get(peak.location)
        if cur is None or bound_m < cur[1]:
            slot[peak.location] = (peak, bound_m)

    def freeze(self) -> None:
        self._frozen = True

    def assigned(self, key: TileKey) -> list[tuple[Peak, float]]:
        slot = self._entries.get(key, {})
        return [slot[loc] for loc in sorted(slot)]

    def keys(self) -> list[TileKey]:
        return sorted(self._entries)

    def snapshot(self) -> dict[TileKey, list[tuple[GeoPoint, float]]]:
        return {
            key: [(loc, slot[loc][1]) for loc in sorted(slot)]
            for key, slot in self._entries.items()
        }


def tile_quad(key: TileKey) -> Quadrilateral:
    return Quadrilateral(key[0], key[0] + 1, key[1], key[1] + 1)


def area_tile_keys(area: Quadrilateral) -> list[TileKey]:
    """Integer SW corners of the 1-degree tiles covering ``area``."""
    for v in area:
        if v != int(v):
            raise ValueError(f"area must be integer-degree aligned, got {area}")
    return [
        (lat, lng)
        for lat in range(int(area.lat_min), int(area.lat_max))
        for lng in range(int(area.lng_min), int(area.lng_max))
    ]


def tile_keys_within(
    area: Quadrilateral, center: GeoPoint, radius_m: float, model: EarthModel = WGS84
) -> list[TileKey]:
    """Keys of area tiles whose quadrilateral is within ``radius_m`` of ``center``."""
    pad_deg = math.degrees(radius_m / model.radius_m) + 1e-9
    keys = []
    lat_lo = max(int(area.lat_min), int(math.floor(center.lat_deg - pad_deg)))
    lat_hi = min(int(area.lat_max), int(math.ceil(center.lat_deg + pad_deg)))
    for lat in range(lat_lo, lat_hi):
        for lng in range(int(area.lng_min), int(area.lng_max)):
            key = (lat, lng)
            if min_distance(tile_quad(key), center, model) <= radius_m:
                keys.append(key)
    return keys


@dataclass
class BoundingOutcome:
    summary: TileSummary
    peaks_found: int
    bounded: list[tuple[Peak, float]]
    deferred: list[Peak]
    discarded: int
    discarded_locations: list[GeoPoint]
    samples: int
    seconds: float


def bounding_pass(
    tile: Tile,
    stride: int,
    i_min: float,
    model: EarthModel = WGS84,
    distance_mode: str = "staged",
    leaf_capacity: int = 32,
    prebuilt_levels: int = 4,
) -> BoundingOutcome:
    """Detect peaks at full resolution and bound their isolation locally.

    The sweep runs on the strided grid; found bounds are recomputed with the
    great-circle distance and inflated by :data:`BOUND_INFLATION` before the
    threshold test and tile assignment.
    """
    start = time.perf_counter()
    peaks = detect_peaks(tile)
    high = min(peaks, key=lambda p: (-p.elevation_m, p.location))
    summary = TileSummary(tile.key, high, tile.max_elevation_m)

    strided = downsample(tile, stride)
    events = build_events(strided, peaks)
    nn_metric = PlanarMetric(model) if distance_mode == "staged" else GreatCircleMetric(model)
    results = run_sweep(
        events, tile.quad, nn_metric, leaf_capacity=leaf_capacity, prebuilt_levels=prebuilt_levels
    )

    bounded: list[tuple[Peak, float]] = []
    deferred: list[Peak] = []
    discarded_locations: list[GeoPoint] = []
    for res in results:
        if res.ilp is None:
            deferred.append(res.peak)
            continue
        raw = great_circle_distance(res.peak.location, res.ilp, model)
        bound = raw * BOUND_INFLATION
        if bound < i_min:
            discarded_locations.append(res.peak.location)
        else:
            bounded.append((res.peak, bound))
    rows, cols = tile.shape
    return BoundingOutcome(
        summary=summary,
        peaks_found=len(peaks),
        bounded=bounded,
        deferred=deferred,
        discarded=len(discarded_locations),
        discarded_locations=discarded_locations,
        samples=rows * cols,
        seconds=time.perf_counter() - start,
    )


@dataclass
class HighpointOutcome:
    assigned: list[tuple[Peak, float]]
    no_higher: list[Peak]
    discarded: int


def highpoint_pass(
    index: TileIndex,
    deferred: Sequence[Peak],
    i_min: float,
    model: EarthModel = WGS84,
) -> HighpointOutcome:
    """Bound deferred peaks via the nearest tile holding higher ground.

    Each peak is processed independently: the maximum distance to the
    closest higher tile is an upper bound on its isolation.  Peaks with no
    higher tile anywhere are the search-area high points.
    """
    assigned: list[tuple[Peak, float]] = []
    no_higher: list[Peak] = []
    discarded = 0
    for peak in sorted(deferred, key=lambda p: p.location):
        found = index.nearest_higher_tile(peak.location, peak.elevation_m)
        if found is None:
            no_higher.append(peak)
            continue
        key, _dist = found
        bound = max_distance(tile_quad(key), peak.location, model) * BOUND_INFLATION
        if bound < i_min:
            discarded += 1
            continue
        assigned.append((peak, bound))
    return HighpointOutcome(assigned=assigned, no_higher=no_higher, discarded=discarded)


def finalization_pass(
    tile: Tile,
    assigned: Sequence[tuple[Peak, float]],
    metric,
    leaf_capacity: int = 32,
    prebuilt_levels: int = 4,
) -> list[tuple[GeoPoint, float, GeoPoint]]:
    """Full-resolution candidates for the peaks assigned to this tile.

    Assigned peaks may lie outside the tile.  Peaks at or above the tile's
    maximum elevation cannot have a candidate here and are skipped up front.

    Returns:
        (peak location, distance, candidate point) triples.
    """
    ceiling = tile.max_elevation_m
    peaks = [pk for pk, _bound in assigned if pk.elevation_m < ceiling]
    if not peaks:
        return []
    events = build_events(tile, peaks)
    results = run_sweep(
        events, tile.quad, metric, leaf_capacity=leaf_capacity, prebuilt_levels=prebuilt_levels
    )
    return [
        (res.peak.location, res.isolation_m, res.ilp)
        for res in results
        if res.ilp is not None
    ]


def finalize(
    peaks_by_location: Mapping[GeoPoint, Peak],
    candidates: Iterable[tuple[GeoPoint, float, GeoPoint]],
) -> list[IlpResult]:
    """Pick the closest candidate per peak; no candidate means undefined."""
    best: dict[GeoPoint, tuple[float, GeoPoint]] = {}
    for location, dist, point in candidates:
        cand = (dist, point)
        cur = best.get(location)
        if cur is None or cand < cur:
            best[location] = cand
    results = []
    for location in sorted(peaks_by_location):
        peak = peaks_by_location[location]
        found = best.get(location)
        if found is None:
            results.append(IlpResult(peak, None, None))
        else:
            results.append(IlpResult(peak, found[1], found[0]))
    return results


@dataclass
class PipelineStats:
    tiles: int = 0
    samples: int = 0
    peaks_found: int = 0
    peaks_kept: int = 0
    deferred: int = 0
    discarded: int = 0
    bounding_s: float = 0.0
    highpoint_s: float = 0.0
    finalization_s: float = 0.0
    total_s: float = 0.0


@dataclass
class PipelineResult:
    results: list[IlpResult]
    stats: PipelineStats
    area: Quadrilateral
    bounds_by_peak: dict[GeoPoint, list[float]] = field(default_factory=dict)
    map_snapshot: dict[TileKey, list[tuple[GeoPoint, float]]] = field(default_factory=dict)


def final_metric(distance_mode: str, model: EarthModel = WGS84):
    """Metric used for final isolation under the given distance mode."""
    if distance_mode == "staged":
        return EllipsoidMetric(model)
    if distance_mode == "great-circle-only":
        return GreatCircleMetric(model)
    raise ValueError(f"unknown distance_mode {distance_mode!r}")


def _bounding_task(args) -> BoundingOutcome:
    tile, stride, i_min, model, distance_mode, leaf_capacity, prebuilt_levels = args
    return bounding_pass(
        tile, stride, i_min, model, distance_mode, leaf_capacity, prebuilt_levels
    )


def _finalization_task(args):
    key, tile, assigned, distance_mode, model, leaf_capacity, prebuilt_levels = args
    metric = final_metric(distance_mode, model)
    start = time.perf_counter()
    cands = finalization_pass(tile, assigned, metric, leaf_capacity, prebuilt_levels)
    return key, cands, time.perf_counter() - start


def _highpoint_task(args) -> HighpointOutcome:
    index, chunk, i_min, model = args
    return highpoint_pass(index, chunk, i_min, model)


def _run_highpoint(pool, workers, index, deferred, i_min, model) -> HighpointOutcome:
    """Dispatch deferred peaks over the pool; they are mutually independent."""
    ordered = sorted(deferred, key=lambda p: p.location)
    if pool is None or len(ordered) < 32:
        return highpoint_pass(index, ordered, i_min, model)
    chunks = [ordered[i::workers] for i in range(workers)]
    merged = HighpointOutcome(assigned=[], no_higher=[], discarded=0)
    for part in pool.map(_highpoint_task, [(index, c, i_min, model) for c in chunks if c]):
        merged.assigned.extend(part.assigned)
        merged.no_higher.extend(part.no_higher)
        merged.discarded += part.discarded
    merged.assigned.sort(key=lambda pb: pb[0].location)
    merged.no_higher.sort(key=lambda p: p.location)
    return merged


def run_pipeline(
    area: Quadrilateral,
    tiles: Mapping[TileKey, Tile] | Sequence[Tile],
    stride: int = 2,
    i_min: float = 1000.0,
    threads: int = 1,
    distance_mode: str = "staged",
    model: EarthModel = WGS84,
    leaf_capacity: int = 32,
    prebuilt_levels: int = 4,
) -> PipelineResult:
    """Run bounding, high-point, and finalization passes over an area.

    Args:
        area: integer-degree aligned search area.
        tiles: the 1-degree tiles covering it, keyed by SW corner.
        threads: worker processes for the tile passes; output is identical
            for any value.

    Raises:
        MissingTilesError: a tile inside the area is unavailable.
    """
    started = time.perf_counter()
    final_metric(distance_mode, model)  # validate early
    if not isinstance(tiles, Mapping):
        tiles = {t.key: t for t in tiles}
    keys = area_tile_keys(area)
    missing = [k for k in keys if k not in tiles]
    if missing:
        raise MissingTilesError(missing)

    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        # Bounding pass: tile-parallel, merged in key order.
        t0 = time.perf_counter()
        bound_args = [
            (tiles[k], stride, i_min, model, distance_mode, leaf_capacity, prebuilt_levels)
            for k in keys
        ]
        if pool is None:
            outcomes = [_bounding_task(a) for a in bound_args]
        else:
            outcomes = list(pool.map(_bounding_task, bound_args))
        bounding_s = time.perf_counter() - t0

        stats = PipelineStats(tiles=len(keys))
        peaks_map = TilePeaksMap()
        bounds_by_peak: dict[GeoPoint, list[float]] = {}
        registry: dict[GeoPoint, Peak] = {}
        deferred: list[Peak] = []
        summaries: list[TileSummary] = []

        def register(peak: Peak) -> None:
            cur = registry.get(peak.location)
            if cur is None or peak.home_tile < cur.home_tile:
                registry[peak.location] = peak

        seen_locations: set[GeoPoint] = set()
        for outcome in outcomes:
            summaries.append(outcome.summary)
            stats.samples += outcome.samples
            stats.discarded += outcome.discarded
            for pk in outcome.deferred:
                deferred.append(pk)
            for pk, bound in outcome.bounded:
                register(pk)
                bounds_by_peak.setdefault(pk.location, []).append(bound)
                for key in tile_keys_within(area, pk.location, bound, model):
                    peaks_map.add(key, pk, bound)
            seen_locations.update(pk.location for pk, _ in outcome.bounded)
            seen_locations.update(pk.location for pk in outcome.deferred)
            seen_locations.update(outcome.discarded_locations)
        stats.peaks_found = len(seen_locations)

        # High-point pass over deferred peaks against the immutable index.
        t0 = time.perf_counter()
        index = TileIndex(
            [(s.key, tile_quad(s.key), s.max_elevation_m) for s in summaries], model
        )
        hp = _run_highpoint(pool, threads, index, deferred, i_min, model)
        stats.discarded += hp.discarded
        stats.deferred = len(deferred)
        for peak in hp.no_higher:
            register(peak)
        for peak, bound in hp.assigned:
            register(peak)
            bounds_by_peak.setdefault(peak.location, []).append(bound)
            for key in index.tiles_within(peak.location, bound):
                peaks_map.add(key, peak, bound)
        peaks_map.freeze()
        highpoint_s = time.perf_counter() - t0

        # Finalization pass: full resolution, tile-parallel.
        t0 = time.perf_counter()
        final_args = [
            (k, tiles[k], peaks_map.assigned(k), distance_mode, model, leaf_capacity, prebuilt_levels)
            for k in peaks_map.keys()
        ]
        if pool is None:
            final_out = [_finalization_task(a) for a in final_args]
        else:
            final_out = list(pool.map(_finalization_task, final_args))
        candidates: list[tuple[GeoPoint, float, GeoPoint]] = []
        for _key, cands, _secs in sorted(final_out, key=lambda item: item[0]):
            candidates.extend(cands)
        results = finalize(registry, candidates)
        finalization_s = time.perf_counter() - t0
    finally:
        if pool is not None:
            pool.shutdown()

    stats.peaks_kept = len(registry)
    stats.bounding_s = bounding_s
    stats.highpoint_s = highpoint_s
    stats.finalization_s = finalization_s
    stats.total_s = time.perf_counter() - started
    return PipelineResult(
        results=results,
        stats=stats,
        area=area,
        bounds_by_peak=bounds_by_peak,
        map_snapshot=peaks_map.snapshot(),
    )


def run_merged_sweep(
    area: Quadrilateral,
    tiles: Mapping[TileKey, Tile] | Sequence[Tile],
    metric,
    leaf_capacity: int = 32,
    prebuilt_levels: int = 4,
) -> list[IlpResult]:
    """Single sweep over the merged area with the pipeline's peak set.

    Peaks are detected per tile and deduplicated at seams, the same set the
    multi-pass pipeline resolves, so both paths are directly comparable.
    """
    if isinstance(tiles, Mapping):
        tile_list = [tiles[k] for k in sorted(tiles)]
    else:
        tile_list = sorted(tiles, key=lambda t: t.key)
    keys = area_tile_keys(area)
    missing = [k for k in keys if k not in {t.key for t in tile_list}]
    if missing:
        raise MissingTilesError(missing)
    tile_list = [t for t in tile_list if t.key in set(keys)]
    merged = merge_tiles(tile_list)
    peaks = detect_peaks_deduped(tile_list)
    events = build_events(merged, peaks)
    return run_sweep(
        events, merged.quad, metric, leaf_capacity=leaf_capacity, prebuilt_levels=prebuilt_levels
    )


def audit_pipeline(outcome: PipelineResult, model: EarthModel = WGS84) -> list[str]:
    """Post-hoc validity audit of bounds and tile assignments.

    Checks that every recorded upper bound is at least the final isolation
    and that every tile closer to a peak than its final isolation received
    the peak in the map.  Returns human-readable violation descriptions.
    """
    problems: list[str] = []
    assigned_locations: dict[TileKey, set[GeoPoint]] = {
        key: {loc for loc, _ in entries} for key, entries in outcome.map_snapshot.items()
    }
    keys = area_tile_keys(outcome.area)
    for res in outcome.results:
        if res.isolation_m is None:
            continue
        loc = res.peak.location
        for bound in outcome.bounds_by_peak.get(loc, []):
            if bound < res.isolation_m:
                problems.append(
                    f"bound {bound:.3f} m below final isolation "
                    f"{res.isolation_m:.3f} m for peak {loc}"
                )
        for key in keys:
            if min_distance(tile_quad(key), loc, model) < res.isolation_m:
                if loc not in assigned_locations.get(key, set()):
                    problems.append(f"peak {loc} missing from tile {key} within its isolation")
    return problems
