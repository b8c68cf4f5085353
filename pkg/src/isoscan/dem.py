"""Tile data model, HGT ingestion, synthetic terrain, peaks, and events.

Grids are row-major with row 0 the northernmost line, matching the HGT file
layout.  A 1-degree tile of N samples per side shares its edge row/column
with each neighbor, so adjacent tiles hold bit-identical seam samples.

Sample coordinates are computed canonically from the integer-degree lattice
(integer degrees plus step-fraction), so the same physical sample yields the
same float coordinates no matter which tile or merged grid it is read from.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .geo import GeoPoint
from .quad import Quadrilateral

__all__ = [
    "VOID_VALUE",
    "HgtFormatError",
    "Tile",
    "Peak",
    "Event",
    "EVENT_PEAK",
    "EVENT_INSERT",
    "EVENT_REMOVE",
    "hgt_filename",
    "parse_hgt_filename",
    "load_hgt",
    "save_hgt",
    "detect_peaks",
    "detect_peaks_deduped",
    "lowest_nesw_neighbor",
    "build_events",
    "downsample",
    "generate_synthetic",
    "merge_tiles",
]

VOID_VALUE = -32768

# Sort rank of event kinds at equal elevation: peaks must be handled before
# any same-elevation point becomes active, and inserts before removes.
EVENT_PEAK = 0
EVENT_INSERT = 1
EVENT_REMOVE = 2

_INT32_BIG = np.int32(2**30)


class HgtFormatError(ValueError):
    """Malformed HGT file (size, naming, or all-void content)."""


class Tile:
    """Elevation grid addressed by the integer degrees of its SW corner.

    ``steps_per_degree`` is the number of sample intervals per degree
    (``samples_per_side - 1`` for a single 1-degree tile).  Merged grids
    spanning several degrees use the same representation.
    """

    __slots__ = ("origin_lat", "origin_lng", "elevations", "steps_per_degree", "voids_filled")

    def __init__(
        self,
        origin_lat: int,
        origin_lng: int,
        elevations: np.ndarray,
        steps_per_degree: int,
        voids_filled: int = 0,
    ):
        elevations = np.asarray(elevations)
        if elevations.dtype != np.int16:
            raise ValueError("elevations must be int16 meters")
        rows, cols = elevations.shape
        if rows < 2 or cols < 2:
            raise ValueError("grid needs at least 2 samples per side")
        if steps_per_degree < 1:
            raise ValueError("steps_per_degree must be >= 1")
        if (rows - 1) % steps_per_degree or (cols - 1) % steps_per_degree:
            raise ValueError("grid must span whole degrees")
        extent_lat = (rows - 1) // steps_per_degree
        extent_lng = (cols - 1) // steps_per_degree
        if not (-90 <= origin_lat and origin_lat + extent_lat <= 90):
            raise ValueError(f"latitude span [{origin_lat}, {origin_lat + extent_lat}] off the globe")
        if not (-180 <= origin_lng and origin_lng + extent_lng <= 180):
            raise ValueError(
                f"longitude span [{origin_lng}, {origin_lng + extent_lng}] crosses the antimeridian"
            )
        self.origin_lat = int(origin_lat)
        self.origin_lng = int(origin_lng)
        self.elevations = elevations
        self.steps_per_degree = int(steps_per_degree)
        self.voids_filled = int(voids_filled)

    @property
    def key(self) -> tuple[int, int]:
        return (self.origin_lat, self.origin_lng)

    @property
    def shape(self) -> tuple[int, int]:
        return self.elevations.shape

    @property
    def samples_per_side(self) -> int:
        rows, cols = self.elevations.shape
        if rows != cols:
            raise ValueError("samples_per_side is defined for square grids only")
        return rows

    @property
    def resolution_arcsec(self) -> float:
        return 3600.0 / self.steps_per_degree

    @property
    def extent_deg(self) -> tuple[int, int]:
        rows, cols = self.elevations.shape
        return (rows - 1) // self.steps_per_degree, (cols - 1) // self.steps_per_degree

    @property
    def quad(self) -> Quadrilateral:
        dlat, dlng = self.extent_deg
        return Quadrilateral(
            self.origin_lat, self.origin_lat + dlat, self.origin_lng, self.origin_lng + dlng
        )

    @property
    def max_elevation_m(self) -> int:
        return int(self.elevations.max())

    def sample_point(self, i: int, j: int) -> GeoPoint:
        """Geographic position of grid sample (row ``i``, col ``j``).

        Computed as integer degrees plus an in-degree fraction so the same
        physical sample gets bit-identical coordinates in every grid that
        contains it (tile, neighbor tile, merged grid).
        """
        rows, _ = self.elevations.shape
        spd = self.steps_per_degree
        steps_north = (rows - 1) - i
        deg, rem = divmod(steps_north, spd)
        lat = (self.origin_lat + deg) + rem / spd
        deg, rem = divmod(j, spd)
        lng = (self.origin_lng + deg) + rem / spd
        return GeoPoint(lat, lng)

    def sample_lats(self) -> np.ndarray:
        rows, _ = self.elevations.shape
        spd = self.steps_per_degree
        steps_north = (rows - 1) - np.arange(rows, dtype=np.int64)
        deg, rem = np.divmod(steps_north, spd)
        return (self.origin_lat + deg).astype(np.float64) + rem.astype(np.float64) / spd

    def sample_lngs(self) -> np.ndarray:
        _, cols = self.elevations.shape
        spd = self.steps_per_degree
        deg, rem = np.divmod(np.arange(cols, dtype=np.int64), spd)
        return (self.origin_lng + deg).astype(np.float64) + rem.astype(np.float64) / spd


@dataclass(frozen=True)
class Peak:
    """A grid sample that is at least as high as its eight neighbors."""

    location: GeoPoint
    elevation_m: int
    home_tile: tuple[int, int]


class Event(NamedTuple):
    """Sweep event; the sequence is ordered by descending elevation."""

    elevation_m: int
    kind: int
    point: GeoPoint
    peak: Optional[Peak]


_HGT_NAME = re.compile(r"^([NS])(\d{2})([EW])(\d{3})$")


def hgt_filename(lat: int, lng: int) -> str:
    """SW-corner naming, e.g. (46, 10) -> ``N46E010.hgt``."""
    ns = "N" if lat >= 0 else "S"
    ew = "E" if lng >= 0 else "W"
    return f"{ns}{abs(lat):02d}{ew}{abs(lng):03d}.hgt"


def parse_hgt_filename(name: str) -> tuple[int, int]:
    stem = Path(name).name
    if stem.lower().endswith(".hgt"):
        stem = stem[:-4]
    m = _HGT_NAME.match(stem)
    if not m:
        raise HgtFormatError(f"not an HGT filename: {name!r}")
    lat = int(m.group(2)) * (1 if m.group(1) == "N" else -1)
    lng = int(m.group(4)) * (1 if m.group(3) == "E" else -1)
    return lat, lng


def load_hgt(path: str | Path, origin: Optional[tuple[int, int]] = None) -> Tile:
    """Read a big-endian signed 16-bit HGT grid.

    The file must hold N x N samples with (N - 1) dividing 3600 (1201 and
    3601 for the common 3 and 1 arc-second products).  Void samples are
    replaced by the minimum valid neighbor value, iterating until no void
    remains; the fill count is recorded on the tile, never silent.

    Args:
        path: file to read.
        origin: SW corner degrees; parsed from the filename when omitted.
    """
    path = Path(path)
    if origin is None:
        origin = parse_hgt_filename(path.name)
    data = path.read_bytes()
    n_samples, rem = divmod(len(data), 2)
    side = math.isqrt(n_samples)
    if rem or side * side != n_samples or side < 2 or 3600 % (side - 1):
        raise HgtFormatError(
            f"{path.name}: {len(data)} bytes is not a square HGT grid "
            "with a whole-arcsecond resolution"
        )
    grid = np.frombuffer(data, dtype=">i2").reshape(side, side).astype(np.int16)
    grid, filled = _fill_voids(grid)
    return Tile(origin[0], origin[1], grid, side - 1, voids_filled=filled)


def save_hgt(tile: Tile, path: str | Path) -> None:
    """Write the grid as big-endian signed 16-bit, row-major from the NW corner."""
    rows, cols = tile.shape
    if rows != cols:
        raise ValueError("only square grids can be written as HGT")
    Path(path).write_bytes(tile.elevations.astype(">i2").tobytes())


def _fill_voids(grid: np.ndarray) -> tuple[np.ndarray, int]:
    void = grid == VOID_VALUE
    total = int(void.sum())
    if total == 0:
        return grid, 0
    if void.all():
        raise HgtFormatError("tile contains only void samples")
    work = grid.astype(np.int32)
    work[void] = _INT32_BIG
    while void.any():
        neigh = _lowest_nesw_grid(work)
        ring = void & (neigh < _INT32_BIG)
        work[ring] = neigh[ring]
        void &= ~ring
    return work.astype(np.int16), total


def _lowest_nesw_grid(elev: np.ndarray) -> np.ndarray:
    """Per-sample minimum over the existing N/E/S/W neighbors."""
    out = np.full(elev.shape, _INT32_BIG, dtype=np.int32)
    np.minimum(out[1:, :], elev[:-1, :], out=out[1:, :])
    np.minimum(out[:-1, :], elev[1:, :], out=out[:-1, :])
    np.minimum(out[:, 1:], elev[:, :-1], out=out[:, 1:])
    np.minimum(out[:, :-1], elev[:, 1:], out=out[:, :-1])
    return out


def lowest_nesw_neighbor(tile: Tile, i: int, j: int) -> int:
    """Minimum elevation among the up-to-4 existing N/E/S/W neighbors."""
    rows, cols = tile.shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"sample ({i}, {j}) outside {rows}x{cols} grid")
    elev = tile.elevations
    values = []
    if i > 0:
        values.append(int(elev[i - 1, j]))
    if i < rows - 1:
        values.append(int(elev[i + 1, j]))
    if j > 0:
        values.append(int(elev[i, j - 1]))
    if j < cols - 1:
        values.append(int(elev[i, j + 1]))
    return min(values)


def detect_peaks(tile: Tile) -> list[Peak]:
    """Samples with all eight neighbors of lower or equal elevation.

    Neighbors outside the grid are treated as absent, so boundary samples
    qualify on their existing neighbors alone.  A connected flat region of
    equal elevation yields exactly one representative: the first qualifying
    sample in (row, col) scan order, i.e. the NW-most, then W-most one.
    Results are ordered by (row, col).
    """
    elev = tile.elevations.astype(np.int32)
    rows, cols = elev.shape
    padded = np.full((rows + 2, cols + 2), np.int32(-(2**30)), dtype=np.int32)
    padded[1:-1, 1:-1] = elev
    qualifies = np.ones((rows, cols), dtype=bool)
    has_equal = np.zeros((rows, cols), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = padded[1 + di : 1 + di + rows, 1 + dj : 1 + dj + cols]
            qualifies &= nb <= elev
            has_equal |= nb == elev

    cells: list[tuple[int, int]] = [
        (int(i), int(j)) for i, j in zip(*np.nonzero(qualifies & ~has_equal))
    ]

    # Flat summits: walk the whole equal-elevation component (through
    # members that abut higher ground) and keep one qualifying representative.
    visited = np.zeros((rows, cols), dtype=bool)
    flat = qualifies & has_equal
    for i, j in zip(*np.nonzero(flat)):
        if visited[i, j]:
            continue
        level = elev[i, j]
        rep = (int(i), int(j))
        stack = [(int(i), int(j))]
        visited[i, j] = True
        while stack:
            ci, cj = stack.pop()
            if flat[ci, cj] and (ci, cj) < rep:
                rep = (ci, cj)
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ni, nj = ci + di, cj + dj
                    if 0 <= ni < rows and 0 <= nj < cols and not visited[ni, nj]:
                        if elev[ni, nj] == level:
                            visited[ni, nj] = True
                            stack.append((ni, nj))
        cells.append(rep)

    cells.sort()
    home = tile.key
    grid = tile.elevations
    return [
        Peak(tile.sample_point(i, j), int(grid[i, j]), home) for (i, j) in cells
    ]


def detect_peaks_deduped(tiles: Iterable[Tile]) -> list[Peak]:
    """Per-tile peak detection with seam duplicates merged by coordinate.

    The same summit detected from several tiles (shared edge rows) keeps the
    copy with the smallest home-tile key.  Results sorted by location.
    """
    by_location: dict[GeoPoint, Peak] = {}
    for tile in sorted(tiles, key=lambda t: t.key):
        for pk in detect_peaks(tile):
            cur = by_location.get(pk.location)
            if cur is None:
                by_location[pk.location] = pk
            elif cur.elevation_m != pk.elevation_m:
                raise ValueError(f"seam elevation mismatch at {pk.location}")
        # ties on location keep the first (smallest) home tile
    return [by_location[loc] for loc in sorted(by_location)]


def build_events(tile: Tile, peaks: Sequence[Peak]) -> list[Event]:
    """Sorted sweep events: one insert and remove per sample plus peak events.

    Removal fires at the elevation of the sample's lowest NESW neighbor,
    clamped to the sample's own elevation (a sample whose neighbors are all
    higher would otherwise be removed before it was inserted).  Order is by
    descending elevation, then peak < insert < remove, then (lat, lng).
    """
    elev32 = tile.elevations.astype(np.int32)
    remove_elev = np.minimum(_lowest_nesw_grid(elev32), elev32)
    lats = tile.sample_lats().tolist()
    lngs = tile.sample_lngs().tolist()
    elev_rows = tile.elevations.tolist()
    remove_rows = remove_elev.tolist()

    events: list[Event] = []
    append = events.append
    for i, lat in enumerate(lats):
        erow = elev_rows[i]
        rrow = remove_rows[i]
        for j, lng in enumerate(lngs):
            pt = GeoPoint(lat, lng)
            append(Event(erow[j], EVENT_INSERT, pt, None))
            append(Event(rrow[j], EVENT_REMOVE, pt, None))
    for pk in peaks:
        append(Event(pk.elevation_m, EVENT_PEAK, pk.location, pk))
    events.sort(key=lambda ev: (-ev.elevation_m, ev.kind, ev.point))
    return events


def downsample(tile: Tile, stride: int) -> Tile:
    """Keep every ``stride``-th sample along both axes.

    Retained samples are bit-identical to the originals and both grid edges
    survive, so seam overlap between strided tiles is preserved.  The stride
    must divide the steps per degree.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if stride == 1:
        return tile
    if tile.steps_per_degree % stride:
        raise ValueError(
            f"stride {stride} does not divide {tile.steps_per_degree} steps per degree"
        )
    grid = np.ascontiguousarray(tile.elevations[::stride, ::stride])
    return Tile(
        tile.origin_lat,
        tile.origin_lng,
        grid,
        tile.steps_per_degree // stride,
        voids_filled=tile.voids_filled,
    )


def generate_synthetic(
    rows: int,
    cols: int,
    seed: int,
    profile: str = "cones",
    samples_per_side: int = 121,
    origin: tuple[int, int] = (45, 7),
    n_cones: Optional[int] = None,
) -> list[Tile]:
    """Deterministic synthetic world of ``rows x cols`` adjacent tiles.

    One world grid is generated and sliced into tiles, so the one-sample
    overlap rows/columns of neighboring tiles are bit-identical.

    Profiles:
        cones: distinct linear cones (steep flanks, unique strict apices).
        fractal: power-law filtered noise, unique global maximum enforced.
        plateau: constant grid, exercising flat-region tie-breaking.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if samples_per_side < 2:
        raise ValueError("samples_per_side must be >= 2")
    spd = samples_per_side - 1
    height = rows * spd + 1
    width = cols * spd + 1

    if profile == "cones":
        world = _cones_world(height, width, seed, n_cones)
    elif profile == "fractal":
        world = _fractal_world(height, width, seed)
    elif profile == "plateau":
        world = np.full((height, width), 500, dtype=np.int16)
    else:
        raise ValueError(f"unknown profile {profile!r}")

    tiles = []
    lat0, lng0 = origin
    for r in range(rows):
        for c in range(cols):
            top = (rows - r - 1) * spd
            sub = np.ascontiguousarray(world[top : top + spd + 1, c * spd : (c + 1) * spd + 1])
            tiles.append(Tile(lat0 + r, lng0 + c, sub, spd))
    return tiles


def _cones_world(height: int, width: int, seed: int, n_cones: Optional[int]) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if n_cones is None:
        n_cones = int(rng.integers(4, 9))
    margin = 6
    min_sep = max(12, min(height, width) // (n_cones + 1))
    apices: list[tuple[int, int]] = []
    attempts = 0
    while len(apices) < n_cones:
        attempts += 1
        if attempts > 10_000:
            min_sep = max(4, min_sep // 2)
            attempts = 0
        r = int(rng.integers(margin, height - margin))
        c = int(rng.integers(margin, width - margin))
        if all(max(abs(r - ar), abs(c - ac)) >= min_sep for ar, ac in apices):
            apices.append((r, c))

    # Heights descend in fixed steps while flank slopes stay steep enough
    # that every apex strictly dominates the field of all other cones.
    base = 3000
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    field = np.full((height, width), -np.inf)
    for idx, (ar, ac) in enumerate(apices):
        h = base - idx * 11
        slope = 4.0 + float(rng.integers(0, 5))
        d = np.hypot(rr - ar, cc - ac)
        np.maximum(field, h - slope * d, out=field)
    world = np.rint(field).astype(np.int32)
    if world.min() <= VOID_VALUE or world.max() >= 2**15 - 1:
        raise ValueError("cone field escapes int16 range")
    return world.astype(np.int16)


def _fractal_world(height: int, width: int, seed: int, beta: float = 1.8) -> np.ndarray:
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width))
    spectrum = np.fft.rfft2(noise)
    ky = np.fft.fftfreq(height)[:, None]
    kx = np.fft.rfftfreq(width)[None, :]
    k2 = kx * kx + ky * ky
    k2[0, 0] = 1.0
    spectrum *= k2 ** (-beta / 2.0)
    spectrum[0, 0] = 0.0
    field = np.fft.irfft2(spectrum, s=(height, width))
    field = (field - field.mean()) / field.std()
    world = np.rint(field * 450.0 + 1400.0).astype(np.int32)

    # A unique global maximum keeps "exactly one undefined isolation" true.
    flat = world.ravel()
    top = flat.max()
    holders = np.nonzero(flat == top)[0]
    if len(holders) > 1:
        flat[holders[0]] = top + 1
    return world.reshape(height, width).astype(np.int16)


def merge_tiles(tiles: Sequence[Tile]) -> Tile:
    """Stitch a contiguous rectangular set of 1-degree tiles into one grid.

    Seam rows/columns must agree bit-exactly between neighbors; the merged
    grid holds each physical sample once.
    """
    if not tiles:
        raise ValueError("no tiles to merge")
    spd = tiles[0].steps_per_degree
    by_key: dict[tuple[int, int], Tile] = {}
    for t in tiles:
        if t.steps_per_degree != spd:
            raise ValueError("mixed resolutions cannot be merged")
        if t.extent_deg != (1, 1):
            raise ValueError("merge expects 1-degree tiles")
        if t.key in by_key:
            raise ValueError(f"duplicate tile {t.key}")
        by_key[t.key] = t
    lats = sorted({k[0] for k in by_key})
    lngs = sorted({k[1] for k in by_key})
    rows, cols = len(lats), len(lngs)
    if lats != list(range(lats[0], lats[0] + rows)) or lngs != list(
        range(lngs[0], lngs[0] + cols)
    ):
        raise ValueError("tiles do not form a filled rectangle")
    expected = {(la, ln) for la in lats for ln in lngs}
    missing = expected - set(by_key)
    if missing:
        raise ValueError(f"missing tiles: {sorted(missing)}")

    height = rows * spd + 1
    width = cols * spd + 1
    world = np.zeros((height, width), dtype=np.int16)
    filled = np.zeros((height, width), dtype=bool)
    for (la, ln), t in sorted(by_key.items()):
        top = (lats[0] + rows - 1 - la) * spd
        left = (ln - lngs[0]) * spd
        region = (slice(top, top + spd + 1), slice(left, left + spd + 1))
        overlap = filled[region]
        if overlap.any() and not np.array_equal(
            world[region][overlap], t.elevations[overlap]
        ):
            raise ValueError(f"seam mismatch at tile {(la, ln)}")
        world[region] = t.elevations
        filled[region] = True
    return Tile(lats[0], lngs[0], world, spd)
