"""Convex geometry kernel: cones, hulls, rasters and convexity certification."""
from .cone import ConvexCone, cone_contains, cone_contains_many, DEFAULT_TOL
from .hull import (convex_hull, distance_to_hull, hausdorff_between_hulls, hull_membership_residual,
                   points_in_hull)
from .grid import (ConvexityCertificate, GridRegion, KleeHypothesisError, Verdict, discrete_convexity_oracle,
                   is_locally_convex, klee_certify, label_components, polygonal_connect, rasterize_hull,
                   rasterize_points, region_components, segment_cells, segment_in_region)

__all__ = [
    "ConvexCone", "cone_contains", "cone_contains_many", "DEFAULT_TOL",
    "convex_hull", "distance_to_hull", "hausdorff_between_hulls", "hull_membership_residual", "points_in_hull",
    "ConvexityCertificate", "GridRegion", "KleeHypothesisError", "Verdict", "discrete_convexity_oracle",
    "is_locally_convex", "klee_certify", "label_components", "polygonal_connect", "rasterize_hull",
    "rasterize_points", "region_components", "segment_cells", "segment_in_region",
]
