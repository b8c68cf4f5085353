"""Command-line front end: compute, synth, and bench subcommands.

Exit codes: 0 success, 1 configuration error, 2 missing or malformed data,
3 internal invariant violation (including oracle-check mismatches).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .dem import (
    HgtFormatError,
    Tile,
    generate_synthetic,
    hgt_filename,
    load_hgt,
    save_hgt,
)
from .geo import WGS84
from .multipass import (
    MissingTilesError,
    PipelineStats,
    area_tile_keys,
    audit_pipeline,
    run_merged_sweep,
    run_pipeline,
    final_metric,
)
from .oracle import SampleUniverse, brute_force_all
from .quad import Quadrilateral
from .sweep import IlpResult, SweepConsistencyError, SweepInvariantError

CSV_HEADER = "latitude,longitude,elevation_m,isolation_km,ilp_latitude,ilp_longitude"


@dataclass
class RunConfig:
    """Resolved configuration of a compute/bench invocation."""

    data_dir: Path
    bounds: Quadrilateral
    min_isolation_m: float = 1000.0
    threads: int = 1
    stride: int = 2
    distance_mode: str = "staged"
    mode: str = "multipass"
    output: Optional[Path] = None


class _Parser(argparse.ArgumentParser):
    # Usage errors are configuration errors: exit 1, not argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isoscan", description="Peak isolation from tiled elevation models")
    sub = parser.add_subparsers(dest="command", required=True)

    compute = sub.add_parser("compute", help="compute isolation over an area")
    _add_compute_args(compute)
    compute.set_defaults(func=cmd_compute)

    synth = sub.add_parser("synth", help="write synthetic HGT tiles")
    synth.add_argument("--tiles", required=True, metavar="RxC", help="tile grid, e.g. 2x2")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--profile", choices=["cones", "fractal", "plateau"], default="cones")
    synth.add_argument("--out", required=True, type=Path, metavar="DIR")
    synth.add_argument("--samples-per-side", type=int, default=1201)
    synth.add_argument("--origin", type=int, nargs=2, default=(45, 7), metavar=("LAT", "LNG"))
    synth.add_argument("--cones", type=int, default=None, help="number of cones (cones profile)")
    synth.add_argument("--overwrite", action="store_true", help="replace existing files")
    synth.set_defaults(func=cmd_synth)

    bench = sub.add_parser("bench", help="timed repetitions with throughput report")
    _add_compute_args(bench)
    bench.add_argument("--reps", type=int, default=5)
    bench.set_defaults(func=cmd_bench)
    return parser


def _add_compute_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data-dir", required=True, type=Path)
    p.add_argument(
        "--bounds",
        required=True,
        type=int,
        nargs=4,
        metavar=("LATMIN", "LATMAX", "LNGMIN", "LNGMAX"),
    )
    p.add_argument("--min-isolation-km", type=float, default=1.0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--stride", type=int, default=2)
    p.add_argument(
        "--distance-mode", choices=["staged", "great-circle-only"], default="staged"
    )
    p.add_argument(
        "--mode", choices=["multipass", "single-sweep", "oracle-check"], default="multipass"
    )
    p.add_argument("--output", type=Path, default=None, help="CSV path (default: stdout)")


def _config_from_args(args) -> RunConfig:
    lat_min, lat_max, lng_min, lng_max = args.bounds
    if lat_min >= lat_max or lng_min >= lng_max:
        raise ValueError("bounds must satisfy LATMIN < LATMAX and LNGMIN < LNGMAX")
    return RunConfig(
        data_dir=args.data_dir,
        bounds=Quadrilateral(lat_min, lat_max, lng_min, lng_max),
        min_isolation_m=args.min_isolation_km * 1000.0,
        threads=max(1, args.threads),
        stride=args.stride,
        distance_mode=args.distance_mode,
        mode=args.mode,
        output=args.output,
    )


def load_area_tiles(data_dir: Path, area: Quadrilateral) -> dict[tuple[int, int], Tile]:
    keys = area_tile_keys(area)
    tiles = {}
    missing = []
    for key in keys:
        path = Path(data_dir) / hgt_filename(*key)
        if not path.exists():
            missing.append(key)
            continue
        tiles[key] = load_hgt(path, origin=key)
    if missing:
        raise MissingTilesError(missing)
    return tiles


def write_csv(results: Sequence[IlpResult], stream: TextIO, min_isolation_m: float) -> int:
    """Emit result rows sorted by descending isolation; returns the row count.

    Peaks below the threshold are dropped; undefined isolation (the area's
    high point) is emitted as ``-1`` with empty limit-point fields.
    """
    rows = []
    for res in results:
        if res.isolation_m is None:
            key = (1.0, res.peak.location)
            line = (
                f"{res.peak.location.lat_deg:.6f},{res.peak.location.lng_deg:.6f},"
                f"{res.peak.elevation_m},-1,,"
            )
        else:
            if res.isolation_m < min_isolation_m:
                continue
            iso_km = res.isolation_m / 1000.0
            key = (-iso_km, res.peak.location)
            line = (
                f"{res.peak.location.lat_deg:.6f},{res.peak.location.lng_deg:.6f},"
                f"{res.peak.elevation_m},{iso_km:.4f},"
                f"{res.ilp.lat_deg:.6f},{res.ilp.lng_deg:.6f}"
            )
        rows.append((key, line))
    rows.sort(key=lambda r: r[0])
    stream.write(CSV_HEADER + "\n")
    for _key, line in rows:
        stream.write(line + "\n")
    return len(rows)


def _emit(results, config: RunConfig) -> int:
    if config.output is None:
        return write_csv(results, sys.stdout, config.min_isolation_m)
    with open(config.output, "w", encoding="ascii", newline="\n") as fh:
        return write_csv(results, fh, config.min_isolation_m)


def _summary(stats: PipelineStats, io_s: float, emitted: int) -> str:
    return (
        f"tiles={stats.tiles} samples={stats.samples} peaks={stats.peaks_found} "
        f"peaks_kept={stats.peaks_kept} emitted={emitted} io_s={io_s:.3f} "
        f"bounding_s={stats.bounding_s:.3f} highpoint_s={stats.highpoint_s:.3f} "
        f"finalization_s={stats.finalization_s:.3f} compute_s={stats.total_s:.3f}"
    )


def _run_mode(config: RunConfig, tiles) -> tuple[list[IlpResult], PipelineStats]:
    if config.mode == "multipass":
        outcome = run_pipeline(
            config.bounds,
            tiles,
            stride=config.stride,
            i_min=config.min_isolation_m,
            threads=config.threads,
            distance_mode=config.distance_mode,
        )
        return outcome.results, outcome.stats
    if config.mode == "single-sweep":
        metric = final_metric(config.distance_mode, WGS84)
        t0 = time.perf_counter()
        results = run_merged_sweep(config.bounds, tiles, metric)
        stats = PipelineStats(
            tiles=len(tiles),
            samples=sum(t.shape[0] * t.shape[1] for t in tiles.values()),
            peaks_found=len(results),
            peaks_kept=len(results),
            total_s=time.perf_counter() - t0,
        )
        return results, stats
    raise ValueError(f"unknown mode {config.mode!r}")


def _results_differ(label_a, a: Sequence[IlpResult], label_b, b: Sequence[IlpResult]) -> list[str]:
    problems = []
    map_a = {r.peak.location: r for r in a}
    map_b = {r.peak.location: r for r in b}
    for loc in sorted(set(map_a) | set(map_b)):
        ra, rb = map_a.get(loc), map_b.get(loc)
        if ra is None or rb is None:
            problems.append(f"peak {loc}: only in {label_a if rb is None else label_b}")
        elif (ra.isolation_m, ra.ilp) != (rb.isolation_m, rb.ilp):
            problems.append(
                f"peak {loc}: {label_a} {ra.isolation_m} @ {ra.ilp} vs "
                f"{label_b} {rb.isolation_m} @ {rb.ilp}"
            )
    return problems


def cmd_compute(args) -> int:
    config = _config_from_args(args)
    t0 = time.perf_counter()
    tiles = load_area_tiles(config.data_dir, config.bounds)
    io_s = time.perf_counter() - t0

    if config.mode == "oracle-check":
        return _oracle_check(config, tiles, io_s)

    results, stats = _run_mode(config, tiles)
    emitted = _emit(results, config)
    print(_summary(stats, io_s, emitted), file=sys.stderr)
    return 0


def _oracle_check(config: RunConfig, tiles, io_s: float) -> int:
    """Pipeline vs single sweep vs brute force; exit 0 only on exact agreement."""
    metric = final_metric(config.distance_mode, WGS84)
    outcome = run_pipeline(
        config.bounds,
        tiles,
        stride=config.stride,
        i_min=0.0,
        threads=config.threads,
        distance_mode=config.distance_mode,
    )
    swept = run_merged_sweep(config.bounds, tiles, metric)
    universe = SampleUniverse.from_tiles(tiles.values())
    reference = brute_force_all([r.peak for r in swept], universe, metric)

    problems = _results_differ("pipeline", outcome.results, "sweep", swept)
    problems += _results_differ("sweep", swept, "oracle", reference)
    problems += audit_pipeline(outcome)
    if problems:
        for p in problems:
            print(f"oracle-check: {p}", file=sys.stderr)
        print(f"oracle-check: {len(problems)} discrepancies", file=sys.stderr)
        return 3
    print(
        f"oracle-check: {len(outcome.results)} peaks agree across pipeline, "
        f"single sweep, and brute force (io_s={io_s:.3f})",
        file=sys.stderr,
    )
    return 0


def cmd_synth(args) -> int:
    try:
        rows_s, _, cols_s = args.tiles.lower().partition("x")
        rows, cols = int(rows_s), int(cols_s)
    except ValueError:
        raise ValueError(f"--tiles expects RxC, got {args.tiles!r}") from None
    tiles = generate_synthetic(
        rows,
        cols,
        seed=args.seed,
        profile=args.profile,
        samples_per_side=args.samples_per_side,
        origin=tuple(args.origin),
        n_cones=args.cones,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / hgt_filename(*t.key) for t in tiles]
    if not args.overwrite:
        existing = [p.name for p in paths if p.exists()]
        if existing:
            raise ValueError(f"refusing to overwrite {existing}; pass --overwrite")
    for tile, path in zip(tiles, paths):
        save_hgt(tile, path)
    print(f"wrote {len(tiles)} tiles to {out}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    config = _config_from_args(args)
    if config.mode == "oracle-check":
        raise ValueError("bench supports multipass and single-sweep modes")
    t0 = time.perf_counter()
    tiles = load_area_tiles(config.data_dir, config.bounds)
    io_s = time.perf_counter() - t0

    print(
        "rep,mode,tiles,samples,peaks,bounding_s,highpoint_s,finalization_s,"
        "compute_s,samples_per_s,peaks_per_s"
    )
    sums = PipelineStats()
    reps = max(1, args.reps)
    for rep in range(reps):
        results, stats = _run_mode(config, tiles)
        print(
            f"{rep},{config.mode},{stats.tiles},{stats.samples},{stats.peaks_found},"
            f"{stats.bounding_s:.4f},{stats.highpoint_s:.4f},{stats.finalization_s:.4f},"
            f"{stats.total_s:.4f},{stats.samples / stats.total_s:.1f},"
            f"{stats.peaks_found / stats.total_s:.1f}"
        )
        sums.samples = stats.samples
        sums.tiles = stats.tiles
        sums.peaks_found = stats.peaks_found
        sums.bounding_s += stats.bounding_s
        sums.highpoint_s += stats.highpoint_s
        sums.finalization_s += stats.finalization_s
        sums.total_s += stats.total_s
    mean_total = sums.total_s / reps
    print(
        f"mean,{config.mode},{sums.tiles},{sums.samples},{sums.peaks_found},"
        f"{sums.bounding_s / reps:.4f},{sums.highpoint_s / reps:.4f},"
        f"{sums.finalization_s / reps:.4f},{mean_total:.4f},"
        f"{sums.samples / mean_total:.1f},{sums.peaks_found / mean_total:.1f}"
    )
    print(f"io_s={io_s:.3f} (loaded once, not in compute figures)", file=sys.stderr)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingTilesError as exc:
        print(f"isoscan: {exc}", file=sys.stderr)
        return 2
    except HgtFormatError as exc:
        print(f"isoscan: bad data: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"isoscan: i/o error: {exc}", file=sys.stderr)
        return 2
    except (SweepConsistencyError, SweepInvariantError) as exc:
        print(f"isoscan: internal invariant violated: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"isoscan: bad configuration: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
