"""Local-to-global convexity checks on finite graphs with a vector-valued map.

A :class:`DiscreteSpace` is a graph whose vertices carry values in R^n and,
optionally, a declared cone per vertex. The engine checks the three local
hypotheses (fiber-connectedness near each vertex, local convexity data,
closedness metadata) and, separately, the three global conclusions
(connected fibers, openness onto the image, convex image).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree
from scipy import ndimage

from . import rng as _rng
from .geometry import ConvexCone, GridRegion, Verdict, convex_hull, cone_contains, klee_certify
from .geometry.cone import in_cone_directions

INF = float("inf")
DIR_TOL = 1e-6
SLO_RADII = (1, 2, 3)
OPEN_RADII = (1, 2, 3)


@dataclass
class DiscreteSpace:
    """Finite graph with values ``f[v]`` in R^n.

    ``h`` is the lattice spacing of the values when they lie on a grid (used
    to rasterise the image exactly). ``window`` is the box ``(lo, hi)`` the
    space is a piece of; cone directions leaving it are not required to be
    realised. It defaults to the bounding box of the values.
    """

    n: int
    edges: list
    f: np.ndarray
    cones: list | None = None
    closed: bool = True
    eps: float = 1e-9
    h: float | None = None
    window: tuple | None = None

    def __post_init__(self):
        self.f = np.atleast_2d(np.asarray(self.f, dtype=float))
        if self.n != len(self.f):
            raise ValueError("need one value per vertex")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        self.edges = sorted({(min(int(a), int(b)), max(int(a), int(b))) for a, b in self.edges if a != b})
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) references a missing vertex")
        if self.cones is not None:
            if len(self.cones) != self.n:
                raise ValueError("need one declared cone per vertex")
            for v, c in enumerate(self.cones):
                if np.linalg.norm(np.asarray(c.vertex, dtype=float) - self.f[v]) > 1e-9 * max(1.0, np.abs(self.f[v]).max()):
                    raise ValueError(f"declared cone at vertex {v} is not based at its value")
        if self.window is None and self.n:
            self.window = (tuple(self.f.min(axis=0).tolist()), tuple(self.f.max(axis=0).tolist()))
        self._adj = [[] for _ in range(self.n)]
        for a, b in self.edges:
            self._adj[a].append(b)
            self._adj[b].append(a)

    @property
    def dim(self) -> int:
        return self.f.shape[1]

    def neighbors(self, v: int) -> list[int]:
        return self._adj[v]

    def hop_ball(self, v: int, radius: int) -> dict[int, int]:
        """Vertices within ``radius`` hops of ``v``, mapped to their hop distance."""
        seen = {v: 0}
        dq = deque([v])
        while dq:
            u = dq.popleft()
            if seen[u] == radius:
                continue
            for w in self._adj[u]:
                if w not in seen:
                    seen[w] = seen[u] + 1
                    dq.append(w)
        return seen

    def value_spacing(self) -> float:
        if self.h is not None:
            return self.h
        if not self.edges:
            return 1.0
        e = np.asarray(self.edges)
        return float(np.median(np.linalg.norm(self.f[e[:, 0]] - self.f[e[:, 1]], axis=1)))

    def to_json(self) -> dict:
        d = {
            "vertices": self.n,
            "edges": [list(e) for e in self.edges],
            "f": self.f.tolist(),
            "closed": bool(self.closed),
            "eps": float(self.eps),
        }
        if self.cones is not None:
            d["cones"] = [c.to_json() for c in self.cones]
        if self.h is not None:
            d["h"] = float(self.h)
        if self.window is not None:
            d["window"] = [list(self.window[0]), list(self.window[1])]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DiscreteSpace":
        try:
            cones = d.get("cones")
            window = d.get("window")
            return cls(
                n=int(d["vertices"]),
                edges=[tuple(e) for e in d.get("edges", [])],
                f=np.asarray(d["f"], dtype=float).reshape(int(d["vertices"]), -1),
                cones=None if cones is None else [ConvexCone.from_json(c) for c in cones],
                closed=bool(d.get("closed", True)),
                eps=float(d.get("eps", 1e-9)),
                h=d.get("h"),
                window=None if window is None else (tuple(window[0]), tuple(window[1])),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed DiscreteSpace: {exc}") from exc


@dataclass
class FiberQuotient:
    space: DiscreteSpace
    class_of: np.ndarray
    class_values: np.ndarray
    quotient_edges: list

    @property
    def n_classes(self) -> int:
        return len(self.class_values)

    def members(self, c: int) -> list[int]:
        return [int(v) for v in np.nonzero(self.class_of == c)[0]]


def _union_find(n: int, pairs) -> np.ndarray:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(x) for x in range(n)], dtype=np.int64)


def build_quotient(s: DiscreteSpace) -> FiberQuotient:
    """Merge vertices joined by an edge whose endpoint values agree within ``eps``.

    Class ids are assigned in order of each class's smallest vertex, whose
    value becomes the class value.
    """
    same = [(a, b) for a, b in s.edges if np.linalg.norm(s.f[a] - s.f[b]) <= s.eps]
    root = _union_find(s.n, same)
    reps = sorted(set(root.tolist()))
    ids = {r: i for i, r in enumerate(reps)}
    class_of = np.array([ids[r] for r in root.tolist()], dtype=np.int64)
    values = s.f[reps] if reps else np.zeros((0, s.dim))
    qe = sorted({(min(class_of[a], class_of[b]), max(class_of[a], class_of[b]))
                 for a, b in s.edges if class_of[a] != class_of[b]})
    return FiberQuotient(s, class_of, values, [(int(a), int(b)) for a, b in qe])


def _same_value_groups(values: np.ndarray, eps: float) -> np.ndarray:
    """Group labels of values under the closure of ``|u - v| <= eps``."""
    if len(values) == 0:
        return np.zeros(0, dtype=np.int64)
    pairs = cKDTree(values).query_pairs(eps, output_type="ndarray")
    return _union_find(len(values), pairs.tolist())


def check_lfc(s: DiscreteSpace, hop_radius: int = 1, q: FiberQuotient | None = None) -> list[int]:
    """Vertices whose hop ball meets two different classes of the same fiber."""
    if hop_radius < 1:
        raise ValueError("hop_radius must be >= 1")
    q = q or build_quotient(s)
    bad = []
    for v in range(s.n):
        classes = sorted({int(q.class_of[u]) for u in s.hop_ball(v, hop_radius)})
        if len(classes) < 2:
            continue
        vals = q.class_values[classes]
        if len(set(_same_value_groups(vals, s.eps).tolist())) < len(classes):
            bad.append(v)
    return bad


@dataclass
class LocalConvexityReport:
    containment: list = field(default_factory=list)
    vn: list = field(default_factory=list)
    slo: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.containment or self.vn or self.slo)

    def to_json(self) -> dict:
        return {"containment": self.containment, "vn": self.vn, "slo": self.slo, "ok": self.ok}


def _required_directions(cone: ConvexCone, x: np.ndarray, window, n_random: int, g) -> np.ndarray:
    """Unit directions that a neighbourhood of ``x`` in the cone must realise.

    Generators, both signs of the linear part and random cone directions,
    keeping only those that point into the window box.
    """
    n = cone.dim
    gens = np.asarray(cone.generators, dtype=float).reshape(-1, n)
    sub = np.asarray(cone.subspace_basis, dtype=float).reshape(-1, n)
    dirs = [gens, sub, -sub]
    if len(gens) or len(sub):
        a = g.random((n_random, len(gens))) @ gens if len(gens) else np.zeros((n_random, n))
        b = g.normal(size=(n_random, len(sub))) @ sub if len(sub) else np.zeros((n_random, n))
        dirs.append(a + b)
    d = np.concatenate(dirs, axis=0)
    norms = np.linalg.norm(d, axis=1)
    d = d[norms > 1e-12] / norms[norms > 1e-12, None]
    if window is not None and len(d):
        lo, hi = np.asarray(window[0], dtype=float), np.asarray(window[1], dtype=float)
        tol = 1e-9 * max(1.0, float(np.abs(x).max()))
        at_lo, at_hi = x <= lo + tol, x >= hi - tol
        ok = ~np.any((d < -1e-12) & at_lo, axis=1) & ~np.any((d > 1e-12) & at_hi, axis=1)
        d = d[ok]
    return d


def check_local_convexity_data(s: DiscreteSpace, hop_radius: int = 1, rel_radius: float | None = None,
                               n_random: int = 16, seed: int = 0) -> LocalConvexityReport:
    """Containment, (VN) and (SLO) at every vertex against its declared cone.

    Containment: every value in the hop ball lies in the cone. (VN): every
    required cone direction at the vertex value is a non-negative
    combination of displacements to ball values within ``rel_radius``
    (all of them when ``None``). (SLO): the same coverage for the nested
    balls of hop radius 1, 2, 3.
    """
    if s.cones is None:
        raise ValueError("declared cones are missing")
    if hop_radius < 1:
        raise ValueError("hop_radius must be >= 1")
    rep = LocalConvexityReport()
    for v in range(s.n):
        cone = s.cones[v]
        x = s.f[v]
        ball = s.hop_ball(v, max(hop_radius, max(SLO_RADII)))
        near = [u for u, d in ball.items() if d <= hop_radius]
        if not all(cone_contains(cone, tuple(s.f[u].tolist()), 1e-9) for u in near):
            rep.containment.append(v)
        need = _required_directions(cone, x, s.window, n_random, _rng.stream(seed, "lcd", v))
        if not _covers(s, x, need, near, rel_radius):
            rep.vn.append(v)
        for r in SLO_RADII:
            sub = [u for u, d in ball.items() if d <= r]
            if not _covers(s, x, need, sub, None):
                rep.slo.append(v)
                break
    return rep


def _covers(s: DiscreteSpace, x: np.ndarray, need: np.ndarray, verts, rel_radius) -> bool:
    if len(need) == 0:
        return True
    disp = s.f[verts] - x
    ln = np.linalg.norm(disp, axis=1)
    keep = ln > s.eps
    if rel_radius is not None:
        keep &= ln <= rel_radius
    return bool(np.all(in_cone_directions(disp[keep], need, DIR_TOL)))


def quotient_metric(q: FiberQuotient, source: int | None = None) -> np.ndarray:
    """Path-length metric on classes; ``inf`` between disconnected classes.

    Returns the full matrix, or one row when ``source`` is given. The full
    matrix is made exactly symmetric: the two directions of one path can
    round differently.
    """
    mat = _quotient_graph(q)
    d = dijkstra(mat, directed=False, indices=source)
    return d if source is not None else np.minimum(d, d.T)


def _quotient_graph(q: FiberQuotient) -> csr_matrix:
    k = q.n_classes
    if not q.quotient_edges:
        return csr_matrix((k, k))
    e = np.asarray(q.quotient_edges)
    w = np.linalg.norm(q.class_values[e[:, 0]] - q.class_values[e[:, 1]], axis=1)
    # csgraph reads stored zeros as missing edges
    w = np.maximum(w, 1e-300)
    return csr_matrix((w, (e[:, 0], e[:, 1])), shape=(k, k))


def geodesic_straightness(q: FiberQuotient, a: int, b: int, tol: float | None = None) -> tuple[bool, float]:
    """Is a shortest class path from ``a`` to ``b`` a straight segment in value space?

    Returns ``(straight, max_deviation)``; ``tol`` defaults to twice the
    value spacing.
    """
    if tol is None:
        tol = 2 * q.space.value_spacing()
    if a == b:
        return True, 0.0
    dist, pred = dijkstra(_quotient_graph(q), directed=False, indices=a, return_predecessors=True)
    if not np.isfinite(dist[b]):
        raise ValueError("classes are in different components: infinite distance")
    path = [b]
    while path[-1] != a:
        path.append(int(pred[path[-1]]))
    va, vb = q.class_values[a], q.class_values[b]
    dev = max(_seg_dist(q.class_values[c], va, vb) for c in path)
    straight = dev <= tol and abs(dist[b] - np.linalg.norm(va - vb)) <= tol
    return bool(straight), float(dev)


def _seg_dist(p, a, b) -> float:
    ab = b - a
    den = float(ab @ ab)
    t = 0.0 if den == 0 else float(np.clip((p - a) @ ab / den, 0.0, 1.0))
    return float(np.linalg.norm(p - a - t * ab))


def image_raster(s: DiscreteSpace) -> GridRegion:
    """Raster of the image values.

    On a value lattice (``h`` set) each value gets its own cell. Otherwise
    values are rasterised at the largest edge length and dilated by one cell
    so that edges stay face-connected.
    """
    if s.h is not None:
        origin = s.f.min(axis=0) - s.h / 2
        return GridRegion.from_cells(tuple(origin.tolist()), s.h,
                                     np.unique(np.rint((s.f - origin) / s.h - 0.5).astype(np.int64), axis=0),
                                     s.closed)
    if s.edges:
        e = np.asarray(s.edges)
        h = float(np.linalg.norm(s.f[e[:, 0]] - s.f[e[:, 1]], axis=1).max())
    else:
        h = 1.0
    h = h if h > 0 else 1.0
    origin = s.f.min(axis=0) - h / 2
    cells = np.unique(np.floor((s.f - origin) / h).astype(np.int64), axis=0)
    r = GridRegion.from_cells(tuple(origin.tolist()), h, cells, s.closed)
    mask = ndimage.binary_dilation(np.pad(r.mask, 1), structure=np.ones((3,) * s.dim, dtype=bool))
    return r.with_mask(mask, tuple(o - 1 for o in r.offset))


@dataclass
class LgpVerdict:
    hypotheses: dict
    conclusions: dict
    consistent: bool
    resolution_suspect: list = field(default_factory=list)

    @property
    def hypotheses_ok(self) -> bool:
        return bool(self.hypotheses["lfc_ok"] and self.hypotheses["lcd_ok"] and self.hypotheses["closed_ok"])

    @property
    def conclusions_ok(self) -> bool:
        c = self.conclusions
        return bool(c["fibers_connected"] and c["open_onto_image"] and c["image_convex"])

    def to_json(self) -> dict:
        return {
            "hypotheses": self.hypotheses,
            "conclusions": self.conclusions,
            "consistent": self.consistent,
            "resolution_suspect": self.resolution_suspect,
        }


def fibers_connected(s: DiscreteSpace, q: FiberQuotient | None = None) -> tuple[bool, list]:
    """False with witness class groups when some fiber level holds several classes."""
    q = q or build_quotient(s)
    grp = _same_value_groups(q.class_values, s.eps)
    by: dict[int, list] = {}
    for c, g in enumerate(grp.tolist()):
        by.setdefault(g, []).append(c)
    split = [v for v in by.values() if len(v) > 1]
    return not split, split


def open_onto_image(s: DiscreteSpace) -> tuple[bool, list, list]:
    """Sampled openness: each hop ball's values cover nearby image values.

    For hop radius ``r`` the ball reaches at least ``rho_r``, the smallest
    value distance to a vertex exactly ``r`` hops away; every image value
    closer than ``rho_r`` must then match a ball value within ``eps``.
    Returns ``(ok, failures, resolution_suspect)``; vertices failing only at
    the smallest radius are suspect and do not count as failures.
    """
    tree = cKDTree(s.f)
    fails, suspect = [], []
    for v in range(s.n):
        ball = s.hop_ball(v, max(OPEN_RADII))
        bad_r = []
        for r in OPEN_RADII:
            inner = [u for u, d in ball.items() if d <= r]
            shell = [u for u, d in ball.items() if d == r]
            if not shell:
                rho = INF
            else:
                rho = float(np.linalg.norm(s.f[shell] - s.f[v], axis=1).min())
            cand = tree.query_ball_point(s.f[v], rho * (1 - 1e-9)) if np.isfinite(rho) else range(s.n)
            inner_vals = cKDTree(s.f[inner])
            d, _ = inner_vals.query(s.f[list(cand)]) if len(cand) else (np.zeros(0), None)
            if np.any(d > s.eps):
                bad_r.append(r)
        if bad_r == [OPEN_RADII[0]]:
            suspect.append(v)
        elif bad_r:
            fails.append(v)
    return not fails, fails, suspect


def image_convex(s: DiscreteSpace) -> tuple[bool, dict]:
    if s.n == 0:
        return True, {}
    r = image_raster(s)
    if not r.closed:
        r = GridRegion(r.origin, r.h, r.mask, r.offset, True)
    cert = klee_certify(r)
    return cert.verdict == Verdict.CONVEX, cert.to_json()


def lgp_verdict(s: DiscreteSpace, hop_radius: int = 1, seed: int = 0) -> LgpVerdict:
    q = build_quotient(s)
    lfc_bad = check_lfc(s, hop_radius, q)
    if s.cones is None:
        lcd_ok, lcd_w = False, {"error": "declared cones are missing"}
    else:
        rep = check_local_convexity_data(s, hop_radius, seed=seed)
        lcd_ok, lcd_w = rep.ok, rep.to_json()
    hyp = {
        "lfc_ok": not lfc_bad,
        "lcd_ok": lcd_ok,
        "closed_ok": bool(s.closed),
        "witnesses": {"lfc": lfc_bad, "lcd": lcd_w},
    }
    fc, split = fibers_connected(s, q)
    oo, open_fail, suspect = open_onto_image(s)
    ic, cert = image_convex(s)
    con = {
        "fibers_connected": fc,
        "open_onto_image": oo,
        "image_convex": ic,
        "witnesses": {"split_fibers": split[:20], "open": open_fail, "convexity": cert},
    }
    hyp_ok = hyp["lfc_ok"] and hyp["lcd_ok"] and hyp["closed_ok"]
    consistent = (not hyp_ok) or (fc and oo and ic)
    return LgpVerdict(hyp, con, bool(consistent), suspect)


# --- generated spaces ---------------------------------------------------------------

def path_space(values, cones: str | None = "line", window=None, eps: float = 1e-9) -> DiscreteSpace:
    """Path graph on 1-D values; ``cones='line'`` declares the full line everywhere."""
    vals = np.asarray(values, dtype=float).reshape(-1, 1)
    n = len(vals)
    cc = None
    if cones == "line":
        cc = [ConvexCone((float(x),), [(1.0,)]) for x in vals[:, 0]]
    return DiscreteSpace(n, [(i, i + 1) for i in range(n - 1)], vals, cc, True, eps, window=window)


def circle_height_space(n: int = 64, eps: float = 1e-4) -> DiscreteSpace:
    """Cycle of ``n`` vertices on the unit circle with the height ``cos`` as the map.

    Generic levels have two fiber classes; the extremal vertices carry
    half-line cones and every other vertex the full line.
    """
    if n % 2 or n < 4:
        raise ValueError("n must be even and >= 4")
    t = 2 * np.pi * np.arange(n) / n
    vals = np.cos(t)
    vals[0], vals[n // 2] = 1.0, -1.0
    # exact symmetry so paired levels share one value
    for k in range(1, n // 2):
        vals[n - k] = vals[k]
    cones = []
    for k in range(n):
        if k == 0:
            cones.append(ConvexCone((1.0,), [], [(-1.0,)]))
        elif k == n // 2:
            cones.append(ConvexCone((-1.0,), [], [(1.0,)]))
        else:
            cones.append(ConvexCone((float(vals[k]),), [(1.0,)]))
    edges = [(k, (k + 1) % n) for k in range(n)]
    return DiscreteSpace(n, edges, vals.reshape(-1, 1), cones, True, eps)


def _tangent_cone(vertex, hull_ccw: list, p) -> ConvexCone:
    """Tangent cone at lattice point ``p`` of the convex polygon ``hull_ccw``."""
    m = len(hull_ccw)
    active = []
    for i in range(m):
        a, b = np.asarray(hull_ccw[i], dtype=float), np.asarray(hull_ccw[(i + 1) % m], dtype=float)
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cross) < 1e-9:
            active.append((a, b))
    if not active:
        return ConvexCone(vertex, [(1.0, 0.0), (0.0, 1.0)])
    if len(active) == 1:
        a, b = active[0]
        d = (b - a) / np.linalg.norm(b - a)
        inward = np.array([-d[1], d[0]])
        return ConvexCone(vertex, [tuple(d.tolist())], [tuple(inward.tolist())])
    gens = []
    for a, b in active:
        pa = np.asarray(p, dtype=float)
        other = b if np.linalg.norm(b - pa) > 1e-9 else a
        d = other - pa
        gens.append(tuple((d / np.linalg.norm(d)).tolist()))
    return ConvexCone(vertex, [], gens)


def _ccw_order(pts: list) -> list:
    c = np.mean(np.asarray(pts, dtype=float), axis=0)
    return sorted(pts, key=lambda x: np.arctan2(x[1] - c[1], x[0] - c[0]))


def lattice_space(points, spacing: float = 1.0, eps: float | None = None, closed: bool = True) -> DiscreteSpace:
    """8-neighbour graph on integer points of a lattice-convex set, ``f`` = scaled identity.

    Declared cones are the tangent cones of the lattice hull, i.e. the cones
    of the glued toric local models.
    """
    pts = sorted({tuple(int(x) for x in p) for p in points})
    index = {p: i for i, p in enumerate(pts)}
    edges = []
    for p, i in index.items():
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                j = index.get((p[0] + dx, p[1] + dy))
                if j is not None and j > i:
                    edges.append((i, j))
    hull = convex_hull(pts)
    f = np.asarray(pts, dtype=float) * spacing
    if len(hull) >= 3:
        ring = _ccw_order(hull)
        cones = [_tangent_cone(tuple(f[i].tolist()), ring, p) for p, i in index.items()]
    else:
        raise ValueError("lattice_space needs a two-dimensional point set")
    return DiscreteSpace(len(pts), edges, f, cones, closed, eps or spacing / 2, h=spacing)


def random_octagon_space(seed: int, size: int = 12, spacing: float = 1.0) -> DiscreteSpace:
    """Lattice points of a random octagon ``{a <= x <= b, c <= y <= d, |x + y|, |x - y| bounded}``."""
    g = _rng.stream(seed, "octagon")
    x0, x1 = 0, int(g.integers(size // 2, size + 1))
    y0, y1 = 0, int(g.integers(size // 2, size + 1))
    s_lo = int(g.integers(0, min(x1, y1) // 2 + 1))
    s_hi = x1 + y1 - int(g.integers(0, min(x1, y1) // 2 + 1))
    d_lo = -y1 + int(g.integers(0, min(x1, y1) // 2 + 1))
    d_hi = x1 - int(g.integers(0, min(x1, y1) // 2 + 1))
    pts = [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)
           if s_lo <= x + y <= s_hi and d_lo <= x - y <= d_hi]
    return lattice_space(pts, spacing)
