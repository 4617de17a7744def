"""Normal-form local models of Hamiltonian torus actions.

Near an orbit, a torus momentum map looks like

    (t1, beta, v) -> J(m) + (beta, 1/2 * sum_alpha |v_alpha|^2 alpha)

so it only depends on ``beta`` and the squared norms of the weight
components of ``v``. A :class:`ModelSample` carries exactly those
coordinates. Weights are stored already embedded in the full dual space.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.linalg import null_space
from scipy.optimize import linprog, lsq_linear
from scipy.spatial import cKDTree

from . import exact, rng as _rng
from .geometry import ConvexCone, cone_contains
from .geometry.cone import _num_json, _num_parse, _tuple

DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True)
class LocalModel:
    base: tuple
    dim_t1: int = 0
    t0_perp_basis: tuple = field(default_factory=tuple)
    weights: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "base", _tuple(self.base))
        object.__setattr__(self, "t0_perp_basis", tuple(_tuple(v) for v in self.t0_perp_basis))
        object.__setattr__(self, "weights", tuple(_tuple(v) for v in self.weights))
        n = len(self.base)
        if len(self.t0_perp_basis) != self.dim_t1:
            raise ValueError("t0_perp_basis must have dim_t1 vectors")
        for v in self.t0_perp_basis + self.weights:
            if len(v) != n:
                raise ValueError("direction dimension does not match base value")
        for w in self.weights:
            if all(x == 0 for x in w):
                raise ValueError("weights must be nonzero")
        if self.t0_perp_basis and exact.rank(
                [[Fraction(x) for x in v] for v in self.t0_perp_basis]) < self.dim_t1:
            raise ValueError("t0_perp_basis is not linearly independent")

    @property
    def n(self) -> int:
        return len(self.base)

    @property
    def n_weights(self) -> int:
        return len(self.weights)

    def matrix(self) -> np.ndarray:
        """Linear part ``[T | W/2]`` acting on stacked coordinates ``(beta, norms_sq)``."""
        cols = [np.asarray(v, dtype=float) for v in self.t0_perp_basis]
        cols += [0.5 * np.asarray(w, dtype=float) for w in self.weights]
        if not cols:
            return np.zeros((self.n, 0))
        return np.stack(cols, axis=1)

    def to_json(self) -> dict:
        return {
            "base": [_num_json(x) for x in self.base],
            "dim_t1": self.dim_t1,
            "t0_perp": [[_num_json(x) for x in v] for v in self.t0_perp_basis],
            "weights": [[_num_json(x) for x in v] for v in self.weights],
        }

    @classmethod
    def from_json(cls, d: dict) -> "LocalModel":
        return cls(
            base=[_num_parse(x) for x in d["base"]],
            dim_t1=int(d.get("dim_t1", 0)),
            t0_perp_basis=[[_num_parse(x) for x in v] for v in d.get("t0_perp", [])],
            weights=[[_num_parse(x) for x in v] for v in d.get("weights", [])],
        )


@dataclass(frozen=True)
class ModelSample:
    beta: tuple = field(default_factory=tuple)
    norms_sq: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "beta", _as_tuple(self.beta))
        object.__setattr__(self, "norms_sq", _as_tuple(self.norms_sq))
        if any(x < 0 for x in self.norms_sq):
            raise ValueError("norms_sq must be non-negative")


def _as_tuple(v) -> tuple:
    if isinstance(v, (int, float, Fraction, np.number)):
        return (v,)
    return _tuple(v)


def normal_form_momentum(m: LocalModel, s: ModelSample):
    """``J(m) + sum_i beta_i t_i + 1/2 sum_alpha norms_sq[alpha] alpha``.

    Exact inputs give a tuple of Fractions; otherwise a float array.
    """
    if len(s.beta) != m.dim_t1 or len(s.norms_sq) != m.n_weights:
        raise ValueError("sample does not match the model's block sizes")
    if exact.is_exact(m.base, m.t0_perp_basis, m.weights, s.beta, s.norms_sq):
        out = [Fraction(x) for x in m.base]
        for b, t in zip(s.beta, m.t0_perp_basis):
            out = [o + Fraction(b) * Fraction(x) for o, x in zip(out, t)]
        for a, w in zip(s.norms_sq, m.weights):
            out = [o + Fraction(a) * Fraction(x) / 2 for o, x in zip(out, w)]
        return tuple(out)
    x = np.concatenate([np.asarray(s.beta, dtype=float), np.asarray(s.norms_sq, dtype=float)])
    return np.asarray(m.base, dtype=float) + m.matrix() @ x


def momentum_array(m: LocalModel, beta: np.ndarray, norms_sq: np.ndarray) -> np.ndarray:
    """Vectorised :func:`normal_form_momentum` over rows of ``beta`` and ``norms_sq``."""
    n = len(beta) if m.dim_t1 else len(norms_sq)
    x = np.concatenate([np.reshape(beta, (n, m.dim_t1)), np.reshape(norms_sq, (n, m.n_weights))], axis=1)
    return np.asarray(m.base, dtype=float) + x @ m.matrix().T


def local_cone(m: LocalModel) -> ConvexCone:
    return ConvexCone(m.base, m.t0_perp_basis, m.weights)


def cone_at_sample(m: LocalModel, s: ModelSample) -> ConvexCone:
    """Local cone of the model at a nearby point.

    Weights whose component is nonzero at the point act freely there and
    join the linear part; the remaining weights stay as generators.
    """
    vertex = normal_form_momentum(m, s)
    lin = list(m.t0_perp_basis) + [w for w, a in zip(m.weights, s.norms_sq) if a > 0]
    basis = []
    for v in lin:
        if exact.rank([[Fraction(x) for x in u] for u in basis + [v]]) > len(basis):
            basis.append(v)
    gens = [w for w, a in zip(m.weights, s.norms_sq) if a == 0]
    return ConvexCone(vertex, basis, gens)


def default_sampler(m: LocalModel, box: float = 1.0, lower: float = 0.0, p_face: float = 0.25):
    """Uniform box sampler that also lands on the faces ``norms_sq[j] = lower``.

    Each weight coordinate is pinned to its lower end with probability
    ``p_face``; without this the image density vanishes along the cone's
    faces and boundary cells are starved of samples.
    """
    def draw(g: np.random.Generator, n: int):
        beta = g.uniform(-box, box, size=(n, m.dim_t1))
        norms = g.uniform(lower, box, size=(n, m.n_weights))
        norms[g.random((n, m.n_weights)) < p_face] = lower
        return beta, norms
    return draw


def _sample(m: LocalModel, n: int, seed: int, sampler, name: str):
    def draw(g, k):
        b, a = sampler(g, k)
        return np.concatenate([np.reshape(b, (k, m.dim_t1)), np.reshape(a, (k, m.n_weights))], axis=1)
    x = _rng.chunked(seed, name, n, draw)
    return x[:, :m.dim_t1], x[:, m.dim_t1:]


def _intrinsic(cone: ConvexCone):
    q = cone.span_basis()
    s = [tuple((q @ np.asarray(v, dtype=float)).tolist()) for v in cone.subspace_basis]
    g = [tuple((q @ np.asarray(v, dtype=float)).tolist()) for v in cone.generators]
    return q, ConvexCone((0.0,) * len(q), s, g)


def _cone_ball_cells(cone_intr: ConvexCone, radius: float, h: float) -> np.ndarray:
    d = cone_intr.dim
    k = int(np.ceil(radius / h))
    axes = [np.arange(-k, k) for _ in range(d)]
    cells = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    centers = (cells + 0.5) * h
    keep = np.linalg.norm(centers, axis=1) <= radius
    cells, centers = cells[keep], centers[keep]
    inside = np.array([cone_contains(cone_intr, c, 1e-9) for c in centers], dtype=bool)
    return cells[inside]


def _covering_box(m: LocalModel, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parameter box whose image reaches every target displacement.

    The box spans one preimage of each target per coordinate, widened by a
    quarter of its extent. It only concentrates samples near the vertex;
    coverage itself is still decided by the samples.
    """
    a = m.matrix()
    k = m.dim_t1
    lo = np.concatenate([-np.inf * np.ones(k), np.zeros(m.n_weights)])
    hi = np.inf * np.ones(a.shape[1])
    xs = np.array([lsq_linear(a, t, bounds=(lo, hi), method="bvls").x for t in targets])
    blo, bhi = xs.min(axis=0), xs.max(axis=0)
    pad = 0.25 * (bhi - blo) + 1e-3
    blo, bhi = blo - pad, bhi + pad
    blo[k:] = 0.0
    return blo, bhi


def _box_sampler(m: LocalModel, lo: np.ndarray, hi: np.ndarray, p_face: float = 0.25):
    k = m.dim_t1

    def draw(g: np.random.Generator, n: int):
        x = g.uniform(lo, hi, size=(n, len(lo)))
        norms = x[:, k:]
        norms[g.random(norms.shape) < p_face] = 0.0
        return x[:, :k], norms
    return draw


def check_vertex_neighborhood(m: LocalModel, radius: float = 0.1, n_samples: int = DEFAULT_SAMPLES,
                              seed: int = 0, h: float | None = None, sampler=None,
                              max_rounds: int = 50, refine: bool | None = None):
    """Does the sampled image cover the cone near its vertex?

    Works in orthonormal coordinates of the cone's linear span, rasterised
    at ``h`` (default ``radius / 8``). ``n_samples`` counts images that land
    within reach of the checked ball, drawn in at most ``max_rounds``
    batches. Cells still empty are then resampled from small parameter
    boxes around their preimages (``refine``, on unless a custom sampler
    restricts the domain). Returns ``(ok, report)``.
    """
    if refine is None:
        refine = sampler is None
    if n_samples < 100:
        raise ValueError("n_samples < 100 is statistically meaningless")
    cone = local_cone(m)
    q, cone_intr = _intrinsic(cone)
    if len(q) == 0:
        return True, {"required": 0, "covered": 0, "uncovered": []}
    h = radius / 8 if h is None else h
    need = _cone_ball_cells(cone_intr, radius, h)
    if sampler is None:
        sampler = _box_sampler(m, *_covering_box(m, (need + 0.5) * h @ q))
    # keep drawing until n_samples images land near the vertex
    reach = radius + h * np.sqrt(len(q))
    hit: set = set()
    kept = 0
    for rnd in range(max_rounds):
        beta, norms = _sample(m, n_samples, seed, sampler, f"vn{rnd}")
        img = (momentum_array(m, beta, norms) - np.asarray(m.base, dtype=float)) @ q.T
        img = img[np.linalg.norm(img, axis=1) <= reach]
        kept += len(img)
        hit.update(tuple(c) for c in np.floor(img / h).astype(np.int64).tolist())
        if kept >= n_samples:
            break
    missing = [tuple(int(x) for x in c) for c in need.tolist() if tuple(c) not in hit]
    if missing and refine:
        # sparse corners of the image: resample around preimages of the missed cells
        for i, c in enumerate(missing[:200]):
            centre = (np.asarray(c) + 0.5) * h
            lo, hi = _covering_box(m, (centre + h * np.array([[-0.5], [0.5]]) * np.ones(len(q))) @ q)
            beta, norms = _sample(m, 2000, seed, _box_sampler(m, lo, hi), f"vn-refine{i}")
            img = (momentum_array(m, beta, norms) - np.asarray(m.base, dtype=float)) @ q.T
            hit.update(tuple(x) for x in np.floor(img / h).astype(np.int64).tolist())
        missing = [c for c in missing if c not in hit]
    report = {
        "required": int(len(need)),
        "covered": int(len(need) - len(missing)),
        "uncovered": [[float(x) for x in (np.asarray(c) + 0.5) * h @ q] for c in missing[:50]],
    }
    return not missing, report


def check_open_onto_cone(m: LocalModel, n_trials: int = 200, seed: int = 0, lower: float = 0.0,
                         box: float = 1.0, n_scales: int = 4):
    """Openness of the model map onto its local cone, tested box by box.

    The map factors as ``(beta, v) -> (beta, |v_alpha|^2)`` followed by a
    linear map; the first factor is open onto ``R^k x R_+^w``, so it is
    enough to test the linear factor on boxes of that orthant (shifted to
    ``lower`` to model punctured domains). For each random box ``B`` and
    interior point ``x0`` we ask whether every cone point within ``rho`` of
    the image of ``x0`` is the image of a point of ``B``; a trial fails only
    if this is false at every one of ``n_scales`` halvings of ``rho``.
    Returns ``(ok, witness)``.
    """
    a = m.matrix()
    k, w = m.dim_t1, m.n_weights
    if a.shape[1] == 0:
        return True, None
    cone = local_cone(m)
    qspan, _ = _intrinsic(cone)
    sv = np.linalg.svd(a, compute_uv=False)
    smin = float(sv[sv > 1e-12 * sv[0]].min())
    base = np.asarray(m.base, dtype=float)
    dlo = np.concatenate([-box * np.ones(k), lower * np.ones(w)])
    dhi = box * np.ones(k + w)
    for t in range(n_trials):
        g = _rng.stream(seed, "open", t)
        x0 = g.uniform(dlo, dhi)
        snap = g.random(w) < 0.5
        x0[k:][snap] = lower
        delta = g.uniform(0.05, 0.2, size=k + w) * box
        # only the norm coordinates have a genuine lower face
        lo = np.concatenate([x0[:k] - delta[:k], np.maximum(x0[k:] - delta[k:], lower)])
        hi = x0 + delta
        y0 = base + a @ x0
        dirs = [g.normal(size=len(qspan)) @ qspan for _ in range(8)]
        dirs += [np.asarray(v, dtype=float) for v in m.weights]
        dirs += [s * np.asarray(v, dtype=float) for v in m.t0_perp_basis + m.weights for s in (1, -1)]
        dirs = [d / np.linalg.norm(d) for d in dirs if np.linalg.norm(d) > 0]
        rho0 = 0.5 * float(delta.min()) * smin
        witness = None
        for lvl in range(n_scales):
            rho = rho0 / 2 ** lvl
            witness = None
            for d in dirs:
                q = y0 + rho * d
                if not cone_contains(cone, q, 1e-9):
                    continue
                res = lsq_linear(a, q - base, bounds=(lo, hi), method="bvls")
                if np.linalg.norm(a @ res.x - (q - base)) > 1e-8 * max(1.0, rho):
                    witness = {"box_lo": lo.tolist(), "box_hi": hi.tolist(), "x0": x0.tolist(),
                               "target": q.tolist(), "rho": rho}
                    break
            if witness is None:
                break
        if witness is not None:
            return False, witness
    return True, None


def local_fiber_components(m: LocalModel, value, n_samples: int = 2000, seed: int = 0,
                           gap_factor: float = 5.0, box: float = 1.0) -> int:
    """Number of clusters among sampled fiber points in ``(beta, norms_sq)`` coordinates.

    Fiber points are drawn by rejection inside the polytope
    ``{x in box : A x = value - J(m)}`` and grouped by :func:`cluster_count`.
    """
    cone = local_cone(m)
    val = np.asarray(value, dtype=float)
    if not cone_contains(cone, tuple(val.tolist()), 1e-9):
        raise ValueError("empty fiber: value outside the local cone")
    a = m.matrix()
    k, w = m.dim_t1, m.n_weights
    rhs = val - np.asarray(m.base, dtype=float)
    if a.shape[1] == 0:
        return 1
    lo = np.concatenate([-box * np.ones(k), np.zeros(w)])
    hi = box * np.ones(k + w)
    res = lsq_linear(a, rhs, bounds=(lo, hi), method="bvls")
    if np.linalg.norm(a @ res.x - rhs) > 1e-9 * max(1.0, float(np.linalg.norm(rhs))):
        raise ValueError("empty fiber: value not attained inside the model neighbourhood")
    x_p = res.x
    ns = null_space(a)
    if ns.shape[1] == 0:
        return 1
    # bounding box of the fibre polytope in null-space coordinates
    cmin, cmax = [], []
    a_ub = np.vstack([ns, -ns])
    b_ub = np.concatenate([hi - x_p, x_p - lo]) + 1e-12
    for j in range(ns.shape[1]):
        e = np.zeros(ns.shape[1])
        e[j] = 1
        lo_j = linprog(e, A_ub=a_ub, b_ub=b_ub, bounds=(None, None)).fun
        hi_j = -linprog(-e, A_ub=a_ub, b_ub=b_ub, bounds=(None, None)).fun
        cmin.append(lo_j)
        cmax.append(hi_j)
    cmin, cmax = np.asarray(cmin), np.asarray(cmax)
    if np.all(cmax - cmin < 1e-12):
        return 1
    pts = []
    for i in range(50):
        g = _rng.stream(seed, "fiber", i)
        c = g.uniform(cmin, cmax, size=(n_samples, len(cmin)))
        x = x_p + c @ ns.T
        ok = np.all((x >= lo - 1e-12) & (x <= hi + 1e-12), axis=1)
        pts.append(x[ok])
        if sum(len(p) for p in pts) >= n_samples:
            break
    pts = np.concatenate(pts)[:n_samples]
    if len(pts) < 2:
        return 1
    return cluster_count(pts, gap_factor)


def cluster_count(pts: np.ndarray, gap_factor: float = 5.0) -> int:
    """Single-linkage cluster count.

    The cut is ``gap_factor * log(n)`` times the median nearest-neighbour
    distance: the largest spanning-tree edge of a uniform sample grows like
    ``log(n)`` times the typical spacing, so a plain multiple of the median
    splits long thin fibers into spurious pieces.
    """
    dist, _ = cKDTree(pts).query(pts, k=2)
    nn = dist[:, 1]
    med = float(np.median(nn))
    if med <= 0:
        med = float(nn[nn > 0].min()) if np.any(nn > 0) else 0.0
    if med == 0:
        return 1
    z = linkage(pts, method="single")
    cut = gap_factor * max(1.0, float(np.log(len(pts)))) * med
    return int(fcluster(z, t=cut, criterion="distance").max())
