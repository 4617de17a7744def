"""Convex hulls in low dimension and point-versus-hull queries."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull

from .. import exact
from ._lsq import nnls_checked as nnls

MAX_HULL_DIM = 4


def convex_hull(points) -> list[tuple]:
    """Minimal vertex set of the convex hull, sorted lexicographically.

    Works in exact mode (int/Fraction coordinates) for affine dimension <= 2
    and in float mode up to ambient dimension 4. Planar hulls are computed by
    gift wrapping inside the affine hull; 3- and 4-dimensional hulls go
    through Qhull.
    """
    pts = [tuple(p) for p in points]
    if not pts:
        raise ValueError("convex_hull of an empty point set")
    n = len(pts[0])
    if any(len(p) != n for p in pts):
        raise ValueError("points have mixed dimensions")
    if n > MAX_HULL_DIM:
        raise ValueError(f"hull dimension {n} > {MAX_HULL_DIM} is unsupported")
    pts = sorted(set(pts))
    if len(pts) == 1:
        return pts
    is_ex = exact.is_exact(pts)
    if is_ex:
        pts = [tuple(Fraction(x) for x in p) for p in pts]
    coords, dim = _affine_coords(pts, is_ex)
    if dim == 1:
        t = [c[0] for c in coords]
        lo = min(range(len(pts)), key=lambda i: (t[i], pts[i]))
        hi = max(range(len(pts)), key=lambda i: (t[i], pts[i]))
        idx = [lo, hi]
    elif dim == 2:
        idx = _gift_wrap([c[:2] for c in coords], is_ex)
    else:
        if is_ex:
            raise ValueError("exact hulls of affine dimension > 2 are unsupported")
        arr = np.asarray(coords, dtype=float)[:, :dim]
        idx = list(ConvexHull(arr).vertices)
    return sorted({pts[i] for i in idx})


def _affine_coords(pts, is_ex):
    """Coordinates of the points in a basis of their affine hull, plus its dimension."""
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts]
    if is_ex:
        m, pivots = exact.rref([list(d) for d in diffs])
        dim = len(pivots)
        # projecting onto the pivot coordinates is injective on the affine hull
        coords = [[d[c] for c in pivots] for d in diffs]
        return coords, dim
    arr = np.asarray(diffs, dtype=float)
    scale = max(1.0, float(np.abs(arr).max()))
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    dim = int(np.sum(s > 1e-10 * scale * max(1, len(pts)) ** 0.5))
    coords = (arr @ vt[:dim].T).tolist()
    return coords, dim


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _gift_wrap(pts2, is_ex) -> list[int]:
    """Jarvis march returning indices of strict hull vertices (collinear points dropped)."""
    eps = 0 if is_ex else 1e-12 * max(1.0, max(abs(x) for p in pts2 for x in p)) ** 2
    start = min(range(len(pts2)), key=lambda i: (pts2[i][0], pts2[i][1]))
    hull = []
    cur = start
    while True:
        hull.append(cur)
        cand = (cur + 1) % len(pts2)
        for j in range(len(pts2)):
            if j == cur:
                continue
            c = _cross(pts2[cur], pts2[cand], pts2[j])
            if c < -eps:
                cand = j
            elif abs(c) <= eps and _d2(pts2[cur], pts2[j]) > _d2(pts2[cur], pts2[cand]):
                cand = j
        cur = cand
        if cur == start or len(hull) > len(pts2):
            break
    return hull


def _d2(a, b):
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def points_in_hull(hull_points: np.ndarray, queries: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Which query points lie inside ``conv(hull_points)`` by more than ``margin``.

    Degenerate point sets are handled in their affine hull; a query must then
    lie in that affine hull (within ``1e-9``) to count.
    """
    s = np.asarray(hull_points, dtype=float)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if len(q) == 0 or len(s) == 0:
        return np.zeros(len(q), dtype=bool)
    base = s[0]
    d = s - base
    u, sv, vt = np.linalg.svd(d, full_matrices=False)
    scale = max(1.0, float(np.abs(d).max()))
    dim = int(np.sum(sv > 1e-10 * scale))
    qd = q - base
    if dim == 0:
        return (np.linalg.norm(qd, axis=1) <= 1e-9 * scale) & (margin <= 0)
    basis = vt[:dim]
    qc = qd @ basis.T
    off_plane = np.linalg.norm(qd - qc @ basis, axis=1) > 1e-9 * scale
    sc = d @ basis.T
    if dim == 1:
        lo, hi = sc[:, 0].min(), sc[:, 0].max()
        inside = (qc[:, 0] > lo + margin - 1e-12) & (qc[:, 0] < hi - margin + 1e-12)
        if margin <= 0:
            inside = (qc[:, 0] >= lo - 1e-9 * scale) & (qc[:, 0] <= hi + 1e-9 * scale)
        return inside & ~off_plane
    h = ConvexHull(sc)
    eq = h.equations  # normal . x + offset <= 0 inside, normals are unit
    val = qc @ eq[:, :-1].T + eq[:, -1]
    if margin > 0:
        inside = np.all(val < -margin, axis=1)
    else:
        inside = np.all(val <= 1e-9 * scale, axis=1)
    return inside & ~off_plane


def distance_to_hull(vertices, p) -> float:
    """Euclidean distance from ``p`` to ``conv(vertices)``."""
    v = np.asarray(vertices, dtype=float)
    p = np.asarray(p, dtype=float)
    if len(v) == 1:
        return float(np.linalg.norm(p - v[0]))
    if v.shape[1] == 2:
        hull = [np.asarray(x, dtype=float) for x in convex_hull([tuple(r) for r in v.tolist()])]
        if len(hull) >= 3:
            ordered = _ccw(hull)
            inside = all(_cross(ordered[i], ordered[(i + 1) % len(ordered)], p) >= -1e-15
                         for i in range(len(ordered)))
            if inside:
                return 0.0
            return min(_seg_dist(p, ordered[i], ordered[(i + 1) % len(ordered)]) for i in range(len(ordered)))
        if len(hull) == 2:
            return _seg_dist(p, hull[0], hull[1])
        return float(np.linalg.norm(p - hull[0]))
    # general dimension: min |V lam - p| over the simplex via a heavily weighted nnls
    w = 1e4
    a = np.vstack([v.T, w * np.ones(len(v))])
    b = np.concatenate([p, [w]])
    lam, _ = nnls(a, b)
    lam = lam / lam.sum()
    return float(np.linalg.norm(v.T @ lam - p))


def _ccw(hull):
    c = np.mean(hull, axis=0)
    return sorted(hull, key=lambda x: np.arctan2(x[1] - c[1], x[0] - c[0]))


def _seg_dist(p, a, b) -> float:
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def hausdorff_between_hulls(a_vertices, b_vertices) -> float:
    """Two-sided Hausdorff distance between two convex hulls (attained at vertices)."""
    d1 = max(distance_to_hull(b_vertices, p) for p in a_vertices)
    d2 = max(distance_to_hull(a_vertices, p) for p in b_vertices)
    return max(d1, d2)


def hull_membership_residual(vertices, p) -> float:
    """Linear-feasibility residual for ``p in conv(vertices)``.

    Solves ``min |[V; 1] lam - [p; 1]|`` with ``lam >= 0``; zero residual
    means a feasible convex combination exists.
    """
    v = np.asarray(vertices, dtype=float)
    a = np.vstack([v.T, np.ones(len(v))])
    b = np.concatenate([np.asarray(p, dtype=float), [1.0]])
    _, res = nnls(a, b)
    return float(res)
