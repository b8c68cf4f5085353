"""Peak isolation from tiled digital elevation models.

Computes, for every mountain peak in a search area, the distance to the
nearest strictly higher ground, using a top-down sweep over a dynamic
spherical k-d tree, with a tile-parallel three-pass variant and a
brute-force oracle for verification.
"""

from .geo import EarthModel, GeoPoint, WGS84
from .quad import Quadrilateral
from .dem import Peak, Tile, generate_synthetic, load_hgt, save_hgt
from .spatial_index import EllipsoidMetric, GreatCircleMetric, PlanarMetric, SphereKdTree
from .sweep import IlpResult, run_sweep
from .oracle import SampleUniverse, brute_force_ilp
from .multipass import run_merged_sweep, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "EarthModel",
    "GeoPoint",
    "WGS84",
    "Quadrilateral",
    "Peak",
    "Tile",
    "generate_synthetic",
    "load_hgt",
    "save_hgt",
    "EllipsoidMetric",
    "GreatCircleMetric",
    "PlanarMetric",
    "SphereKdTree",
    "IlpResult",
    "run_sweep",
    "SampleUniverse",
    "brute_force_ilp",
    "run_merged_sweep",
    "run_pipeline",
    "__version__",
]
