"""Polyhedral convex cones with a vertex: ``vertex + span(subspace) + cone(generators)``."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import exact
from ._lsq import nnls_checked as nnls

DEFAULT_TOL = 1e-9


def _tuple(v):
    return tuple(v.tolist()) if isinstance(v, np.ndarray) else tuple(v)


@dataclass(frozen=True)
class ConvexCone:
    """Cone with vertex ``vertex`` made of a linear part and a pointed part.

    Entries may be ints/Fractions (exact mode) or floats; the two are not
    mixed inside one computation.
    """

    vertex: tuple
    subspace_basis: tuple = field(default_factory=tuple)
    generators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "vertex", _tuple(self.vertex))
        object.__setattr__(self, "subspace_basis", tuple(_tuple(s) for s in self.subspace_basis))
        object.__setattr__(self, "generators", tuple(_tuple(g) for g in self.generators))
        n = len(self.vertex)
        for v in self.subspace_basis + self.generators:
            if len(v) != n:
                raise ValueError(f"direction {v} does not match cone dimension {n}")

    @property
    def dim(self) -> int:
        return len(self.vertex)

    @property
    def is_exact(self) -> bool:
        return exact.is_exact(self.vertex, self.subspace_basis, self.generators)

    def span_basis(self) -> np.ndarray:
        """Orthonormal basis (rows) of the linear span of the cone's directions."""
        dirs = [np.asarray(v, dtype=float) for v in self.subspace_basis + self.generators]
        if not dirs:
            return np.zeros((0, self.dim))
        m = np.array(dirs)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        r = int(np.sum(s > 1e-12 * max(1.0, s[0])))
        return vt[:r]

    def to_json(self) -> dict:
        return {
            "vertex": [_num_json(x) for x in self.vertex],
            "subspace": [[_num_json(x) for x in v] for v in self.subspace_basis],
            "generators": [[_num_json(x) for x in v] for v in self.generators],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ConvexCone":
        conv = _num_parse
        return cls(
            vertex=[conv(x) for x in d["vertex"]],
            subspace_basis=[[conv(x) for x in v] for v in d.get("subspace", [])],
            generators=[[conv(x) for x in v] for v in d.get("generators", [])],
        )


def _num_json(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def _num_parse(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


def cone_contains(cone: ConvexCone, p, tol: float = DEFAULT_TOL) -> bool:
    """Membership of ``p`` in ``cone`` decided by linear feasibility.

    Exact mode (all inputs int/Fraction) is decided by exact elimination and
    an exact simplex; float mode uses non-negative least squares on the
    component orthogonal to the subspace part and accepts a residual up to
    ``tol`` (relative to ``max(1, |p - vertex|)``).
    """
    p = _tuple(p)
    if len(p) != cone.dim:
        raise ValueError(f"point dimension {len(p)} != cone dimension {cone.dim}")
    for g in cone.generators:
        if all(x == 0 for x in g):
            raise ValueError("cone has a zero generator")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if cone.is_exact and exact.is_exact(p):
        return _contains_exact(cone, p)
    if tol == 0:
        raise ValueError("tol = 0 is only allowed in exact mode")
    return _contains_float(cone, p, tol)


def _contains_exact(cone: ConvexCone, p) -> bool:
    d = [Fraction(a) - Fraction(b) for a, b in zip(p, cone.vertex)]
    if all(x == 0 for x in d):
        return True
    sub = [exact.to_fraction_vector(s) for s in cone.subspace_basis]
    gen = [exact.to_fraction_vector(g) for g in cone.generators]
    cols = sub + gen
    if not cols:
        return False
    status, x = exact.solve_unique(cols, d)
    if status == "none":
        return False
    if status == "unique":
        return all(v >= 0 for v in x[len(sub):])
    # free subspace coordinates are split into positive and negative parts
    n = len(d)
    a = [[c[i] for c in sub] + [-c[i] for c in sub] + [c[i] for c in gen] for i in range(n)]
    return exact.feasible_nonneg(a, d)


def _contains_float(cone: ConvexCone, p, tol: float) -> bool:
    d = np.asarray(p, dtype=float) - np.asarray(cone.vertex, dtype=float)
    scale = max(1.0, float(np.linalg.norm(d)))
    proj = _orth_complement_projector(cone)
    rd = proj @ d
    if not cone.generators:
        return float(np.linalg.norm(rd)) <= tol * scale
    g = proj @ np.asarray(cone.generators, dtype=float).T
    _, res = nnls(g, rd)
    return res <= tol * scale


def _orth_complement_projector(cone: ConvexCone) -> np.ndarray:
    n = cone.dim
    if not cone.subspace_basis:
        return np.eye(n)
    s = np.asarray(cone.subspace_basis, dtype=float).T
    q, _ = np.linalg.qr(s)
    return np.eye(n) - q @ q.T


def cone_contains_many(cone: ConvexCone, points: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised float-mode membership for an array of points (rows)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != cone.dim:
        raise ValueError("dimension mismatch")
    return np.array([_contains_float(cone, q, tol) for q in pts], dtype=bool)


def in_cone_directions(directions: np.ndarray, targets: np.ndarray, tol: float) -> np.ndarray:
    """For each target vector, is it (approximately) a non-negative combination of ``directions``?

    Both are row arrays. The residual is measured relative to the target norm.
    """
    targets = np.atleast_2d(targets)
    if len(directions) == 0:
        return np.array([np.linalg.norm(t) == 0 for t in targets])
    a = np.asarray(directions, dtype=float).T
    out = []
    for t in targets:
        nt = float(np.linalg.norm(t))
        if nt == 0:
            out.append(True)
            continue
        _, res = nnls(a, t / nt)
        out.append(res <= tol)
    return np.array(out, dtype=bool)
