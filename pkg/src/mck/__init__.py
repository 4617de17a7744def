"""Mechanical checks for momentum-map convexity: cones, local models, local-to-global certification."""
__version__ = "0.1.0"
