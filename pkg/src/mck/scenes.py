"""Built-in scenes and experiments against classical convexity results."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError

from . import rng as _rng
from .geometry import (ConvexCone, Verdict, convex_hull, hausdorff_between_hulls, hull_membership_residual,
                       klee_certify, rasterize_points)
from .lgp import DiscreteSpace, _ccw_order, _tangent_cone, circle_height_space
from .local_model import LocalModel
from .openness import Chart, Scene, sample_scene

P_SINGULAR = 0.1


# --- samplers -------------------------------------------------------------------------

def _complex_coords(g, n: int, k: int, r2_max, p_zero: float = P_SINGULAR, r2_min=0.0) -> np.ndarray:
    """``k`` complex coordinates with ``|z_i|^2`` uniform and some coordinates pinned to zero."""
    lo = np.broadcast_to(np.asarray(r2_min, dtype=float), (k,))
    hi = np.broadcast_to(np.asarray(r2_max, dtype=float), (k,))
    r2 = g.uniform(lo, hi, size=(n, k))
    if p_zero > 0:
        r2[g.random((n, k)) < p_zero] = 0.0
    phase = g.uniform(0, 2 * np.pi, size=(n, k))
    return np.sqrt(r2) * np.exp(1j * phase)


def _rotate(pts: np.ndarray, theta: np.ndarray) -> np.ndarray:
    out = pts.copy()
    k = theta.shape[1]
    out[:, :k] = pts[:, :k] * np.exp(1j * theta)
    return out


def _half_norms(pts: np.ndarray) -> np.ndarray:
    return np.abs(pts) ** 2 / 2


def _all_nonzero(pts: np.ndarray) -> np.ndarray:
    return np.all(np.abs(pts) > 0, axis=1)


def haar_unitary(g: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Haar-random unitaries via QR of a complex Gaussian with the phases of ``R`` removed."""
    shape = (n, n) if size is None else (size, n, n)
    z = (g.normal(size=shape) + 1j * g.normal(size=shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


# --- scenes ---------------------------------------------------------------------------

def _c2_escape(g, n, t, floor=0.0):
    s = floor + 1.0 / (1.0 - t)
    u = g.random(n)
    r2 = np.stack([2 * s * u, 2 * s * (1 - u)], axis=1)
    return np.sqrt(r2) * np.exp(1j * g.uniform(0, 2 * np.pi, size=(n, 2)))


def _quadrant_oracle(v) -> list[bool]:
    return [bool(v[0] > 0 and v[1] > 0)]


def _c2_model() -> LocalModel:
    return LocalModel((0, 0), 0, [], [(1, 0), (0, 1)])


def c2_standard() -> Scene:
    chart = Chart("C2", lambda g, n: _complex_coords(g, n, 2, 3.0), _half_norms, _all_nonzero,
                  act=_rotate, escape=_c2_escape)
    return Scene("c2_standard", 2, [chart], ((0.0, 0.0), (1.5, 1.5)), torus_dim=2,
                 fixed_points=[(0.0, 0.0)],
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": True},
                 fiber_oracle=_quadrant_oracle, local_model=_c2_model(),
                 discretizer=lambda levels=6, angles=4: _c2_space(levels, angles, ball=False),
                 description="standard T^2 action on C^2, image the closed quadrant")


def c2_ball() -> Scene:
    chart = Chart("C2-ball", lambda g, n: _complex_coords(g, n, 2, 2.0),
                  _half_norms, _all_nonzero, act=_rotate,
                  accept=lambda p: np.sum(np.abs(p) ** 2, axis=1) <= 2.0)
    return Scene("c2_ball", 2, [chart], ((0.0, 0.0), (1.0 + 1 / 64, 1.0 + 1 / 64)), torus_dim=2,
                 fixed_points=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": True},
                 fiber_oracle=_quadrant_oracle, local_model=_c2_model(),
                 discretizer=lambda levels=6, angles=4: _c2_space(levels, angles, ball=True),
                 description="standard T^2 action on the closed ball |z|^2 <= 2")


def _outside_bidisk(p: np.ndarray) -> np.ndarray:
    return ~((np.abs(p[:, 0]) <= 1) & (np.abs(p[:, 1]) <= 1))


def _prato_escape(g, n, t):
    # half the points run off to infinity, half approach the removed bidisk
    far = _c2_escape(g, n - n // 2, t, floor=2.0)
    r1 = 1.0 + (1.0 - t) * g.random(n // 2)
    r2 = g.random(n // 2)
    swap = g.random(n // 2) < 0.5
    a, b = np.where(swap, r2, r1), np.where(swap, r1, r2)
    near = np.stack([a, b], axis=1) * np.exp(1j * g.uniform(0, 2 * np.pi, size=(n // 2, 2)))
    return np.concatenate([far, near])


def prato() -> Scene:
    chart = Chart("C2-minus-bidisk", lambda g, n: _complex_coords(g, n, 2, 3.0), _half_norms, _all_nonzero,
                  act=_rotate, accept=_outside_bidisk, escape=_prato_escape)
    return Scene("prato", 2, [chart], ((0.0, 0.0), (1.5, 1.5)), torus_dim=2,
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": False},
                 fiber_oracle=_quadrant_oracle,
                 description="T^2 on C^2 minus the closed unit bidisk")


def _kl_m1_sample(g, n):
    theta = g.uniform(0, 2 * np.pi, size=(n, 2))
    p = g.uniform(-1.0, 1.0, size=(n, 2))
    return np.concatenate([theta, p], axis=1)


def _kl_m1_accept(x):
    p1, p2 = x[:, 2], x[:, 3]
    return ~((p2 == 0) & (p1 >= 0))


def _kl_m1_escape(g, n, t):
    theta = g.uniform(0, 2 * np.pi, size=(n, 2))
    p1 = g.uniform(0.2, 0.9, size=n)
    p2 = np.where(g.random(n) < 0.5, 1.0, -1.0) * 0.5 * (1.0 - t)
    return np.column_stack([theta, p1, p2])


def _kl_m1_act(x, theta):
    out = x.copy()
    out[:, :2] = np.mod(x[:, :2] + theta, 2 * np.pi)
    return out


def _kl_m2_escape(g, n, t):
    z = np.sqrt(2.0 * (1.0 - t) * g.random(n) + 1e-300) * np.exp(1j * g.uniform(0, 2 * np.pi, n))
    w = np.sqrt(2.0 * g.random(n)) * np.exp(1j * g.uniform(0, 2 * np.pi, n))
    return np.column_stack([z, w])


def _kl_oracle(v) -> list[bool]:
    if v[0] == 0 and v[1] == 0:
        return []
    return [not (v[1] == 0 and v[0] > 0)]


def karshon_lerman() -> Scene:
    m1 = Chart("T*T2-over-U", _kl_m1_sample, lambda x: x[:, 2:4].copy(), lambda x: np.ones(len(x), dtype=bool),
               act=_kl_m1_act, accept=_kl_m1_accept, escape=_kl_m1_escape, weight=4.0)
    m2 = Chart("C2-z-nonzero", lambda g, n: _complex_coords(g, n, 2, 2.0), _half_norms,
               lambda p: np.abs(p[:, 1]) > 0, act=_rotate, accept=lambda p: np.abs(p[:, 0]) > 0,
               escape=_kl_m2_escape, weight=1.0)
    return Scene("karshon_lerman", 2, [m1, m2], ((-1.0, -1.0), (1.0, 1.0)), torus_dim=2,
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": False},
                 fiber_oracle=_kl_oracle,
                 description="two charts glued over the open positive quadrant; image R^2 minus the origin")


def cp2_toric() -> Scene:
    def sample(g, n):
        z = (g.normal(size=(n, 3)) + 1j * g.normal(size=(n, 3))) / np.sqrt(2)
        z[g.random((n, 3)) < P_SINGULAR] = 0.0
        return z

    def accept(z):
        return np.sum(np.abs(z) ** 2, axis=1) > 0

    def momentum(z):
        a = np.abs(z) ** 2
        return a[:, 1:] / (2 * a.sum(axis=1, keepdims=True))

    def act(z, theta):
        out = z.copy()
        out[:, 1:] = z[:, 1:] * np.exp(1j * theta)
        return out

    chart = Chart("CP2", sample, momentum, _all_nonzero, act=act, accept=accept)
    return Scene("cp2_toric", 2, [chart], ((0.0, 0.0), (0.5 + 1 / 64, 0.5 + 1 / 64)), torus_dim=2,
                 fixed_points=[(0.0, 0.0), (0.5, 0.0), (0.0, 0.5)],
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": True},
                 fiber_oracle=_quadrant_oracle,
                 description="T^2 on CP^2, image the triangle with vertices 0, e1/2, e2/2")


def cylinder() -> Scene:
    def sample(g, n):
        return np.column_stack([g.uniform(0, 2 * np.pi, n), g.uniform(-1.0, 1.0, n)])

    def escape(g, n, t):
        p = np.where(g.random(n) < 0.5, 1.0, -1.0) / (1.0 - t)
        return np.column_stack([g.uniform(0, 2 * np.pi, n), p])

    def act(x, theta):
        out = x.copy()
        out[:, 0] = np.mod(x[:, 0] + theta[:, 0], 2 * np.pi)
        return out

    chart = Chart("T*S1", sample, lambda x: x[:, 1:2].copy(), lambda x: np.ones(len(x), dtype=bool),
                  act=act, escape=escape)
    return Scene("cylinder", 1, [chart], ((-1.0,), (1.0 + 1 / 64,)), torus_dim=1,
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": True},
                 fiber_oracle=lambda v: [True],
                 discretizer=_cylinder_space,
                 description="cotangent lift of S^1 rotation; J is the fiber coordinate")


def u2_orbit_sum(a=(1.0, 0.0), b=(1.0, 0.0)) -> Scene:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def sample(g, n):
        u = haar_unitary(g, 2, n)
        v = haar_unitary(g, 2, n)
        return np.concatenate([u.reshape(n, 4), v.reshape(n, 4)], axis=1)

    def momentum(x):
        n = len(x)
        u, v = x[:, :4].reshape(n, 2, 2), x[:, 4:].reshape(n, 2, 2)
        m = (u * a[None, None, :]) @ u.conj().transpose(0, 2, 1) + (v * b[None, None, :]) @ v.conj().transpose(0, 2, 1)
        m = (m + m.conj().transpose(0, 2, 1)) / 2
        return np.linalg.eigvalsh(m)[:, ::-1].copy()

    def regular(x):
        lam = momentum(x)
        return lam[:, 0] - lam[:, 1] > 1e-12

    chart = Chart("O_a x O_b", sample, momentum, regular)
    s = float(a.sum() + b.sum())
    return Scene("u2_orbit_sum", 2, [chart], ((min(a.min(), 0) + min(b.min(), 0) - 1, ) * 2,
                                                (s + 1, s + 1)),
                 group="unitary_n",
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": True},
                 description="sum of two U(2) coadjoint orbits, swept to the positive chamber")


def two_sheet() -> Scene:
    def sample(g, n):
        return g.uniform(0.0, 1.0, size=(n, 2))

    regular_sheet = Chart("sheet-regular", sample, lambda x: x.copy(), lambda x: np.ones(len(x), dtype=bool))
    singular_sheet = Chart("sheet-singular", sample, lambda x: x.copy(), lambda x: np.zeros(len(x), dtype=bool))
    return Scene("two_sheet", 2, [regular_sheet, singular_sheet], ((0.0, 0.0), (1.0, 1.0)),
                 metadata={"fibers_connected": False, "locally_compact": True, "closed_map": True},
                 fiber_oracle=lambda v: [True, False],
                 description="two sheets over the unit square, one of them entirely singular")


def trivial_point() -> Scene:
    chart = Chart("C", lambda g, n: _complex_coords(g, n, 1, 1.0, 0.0),
                  lambda p: np.zeros((len(p), 2)), lambda p: np.zeros(len(p), dtype=bool),
                  act=lambda p, th: p.copy())
    return Scene("trivial_point", 2, [chart], ((-0.5, -0.5), (0.5, 0.5)), torus_dim=1,
                 fixed_points=[(0.0, 0.0)],
                 metadata={"fibers_connected": True, "locally_compact": True, "closed_map": True},
                 description="trivial action; every point is fixed and maps to the origin")


_BUILTINS = {
    "c2_standard": c2_standard,
    "prato": prato,
    "karshon_lerman": karshon_lerman,
    "cp2_toric": cp2_toric,
    "cylinder": cylinder,
    "circle_height_space": circle_height_space,
    "u2_orbit_sum": u2_orbit_sum,
    "two_sheet": two_sheet,
    "c2_ball": c2_ball,
    "trivial_point": trivial_point,
}


def available_scenes() -> list[str]:
    return sorted(_BUILTINS)


def builtin_scene(name: str):
    """Scene by name; ``circle_height_space`` is returned as a DiscreteSpace."""
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown scene {name!r}; available: {', '.join(available_scenes())}") from None


def scene_from_json(d: dict) -> Scene:
    """Builtin scene named by ``builtin`` (or ``name``) with box and metadata overrides."""
    name = d.get("builtin") or d.get("name")
    if not isinstance(name, str):
        raise ValueError("scene JSON needs a builtin name")
    sc = builtin_scene(name)
    if not isinstance(sc, Scene):
        raise ValueError(f"{name} is not a sampled scene")
    if "box" in d:
        sc.box = (tuple(map(float, d["box"][0])), tuple(map(float, d["box"][1])))
    if "metadata" in d:
        sc.metadata.update({k: bool(v) for k, v in d["metadata"].items()})
    if "fixed_points" in d:
        sc.fixed_points = [tuple(map(float, p)) for p in d["fixed_points"]]
    return sc


# --- discretisations ------------------------------------------------------------------

def _check_connected(s: DiscreteSpace) -> DiscreteSpace:
    if s.n > 1:
        e = np.asarray(s.edges).reshape(-1, 2)
        g = csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(s.n, s.n))
        if connected_components(g, directed=False)[0] > 1:
            raise ValueError("sample graph is disconnected: increase samples")
    return s


def _cylinder_space(levels: int = 8, angles: int = 6) -> DiscreteSpace:
    """Lattice on (theta, p) in S^1 x [-1, 1] with f = p."""
    h = 1.0 / levels
    ps = np.arange(-levels, levels + 1) * h
    idx = {}
    for i in range(angles):
        for j in range(len(ps)):
            idx[(i, j)] = len(idx)
    edges = []
    for (i, j), v in idx.items():
        edges.append((v, idx[((i + 1) % angles, j)]))
        if j + 1 < len(ps):
            edges.append((v, idx[(i, j + 1)]))
    f = np.array([[ps[j]] for (i, j) in idx])
    cones = [ConvexCone((float(x[0]),), [(1.0,)]) for x in f]
    return DiscreteSpace(len(idx), edges, f, cones, True, h / 2, h=h)


def _c2_space(levels: int = 6, angles: int = 4, ball: bool = False) -> DiscreteSpace:
    """Polar lattice on C^2: radii with ``|z_i|^2 / 2`` on a grid of step ``1/levels``, ``angles`` phases each.

    At radius zero the phases are distinct vertices with equal values, so
    the fiber quotient collapses the degenerate orbits.
    """
    h = 1.0 / levels
    pairs = [(i, j) for i in range(levels + 1) for j in range(levels + 1) if not ball or i + j <= levels]
    idx = {}
    for i, j in pairs:
        for a in range(angles):
            for b in range(angles):
                idx[(i, a, j, b)] = len(idx)
    edges = []
    steps = [(1, 0), (0, 1), (1, 1), (1, -1)]
    for (i, a, j, b), v in idx.items():
        edges.append((v, idx[(i, (a + 1) % angles, j, b)]))
        edges.append((v, idx[(i, a, j, (b + 1) % angles)]))
        for di, dj in steps:
            w = idx.get((i + di, a, j + dj, b))
            if w is not None:
                edges.append((v, w))
    f = np.array([[i * h, j * h] for (i, a, j, b) in idx])
    if ball:
        ring = _ccw_order([(0, 0), (levels, 0), (0, levels)])
        cones = [_tangent_cone((i * h, j * h), ring, (i, j)) for (i, a, j, b) in idx]
    else:
        cones = [_quadrant_cone(i, j, h) for (i, a, j, b) in idx]
    return _check_connected(DiscreteSpace(len(idx), edges, f, cones, True, h / 2, h=h))


def _quadrant_cone(i: int, j: int, h: float) -> ConvexCone:
    sub, gen = [], []
    for k, c in enumerate((i, j)):
        e = tuple(1.0 if m == k else 0.0 for m in range(2))
        (gen if c == 0 else sub).append(e)
    return ConvexCone((i * h, j * h), sub, gen)


def discretize_scene(sc, levels: int | None = None, angles: int | None = None) -> DiscreteSpace:
    """Graph discretisation of a scene for the local-to-global engine."""
    if isinstance(sc, DiscreteSpace):
        return sc
    if sc.discretizer is None:
        raise ValueError(f"scene {sc.name} has no discretisation")
    kw = {}
    if levels is not None:
        kw["levels"] = levels
    if angles is not None:
        kw["angles"] = angles
    return _check_connected(sc.discretizer(**kw))


# --- experiments ----------------------------------------------------------------------

@dataclass
class ExperimentReport:
    name: str
    trials: int
    failures: int
    max_violation: float
    artifacts: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "trials": int(self.trials),
            "failures": int(self.failures),
            "max_violation": float(self.max_violation),
            "artifacts": list(self.artifacts),
            "notes": list(self.notes),
            "extra": self.extra,
        }


@dataclass
class WeylOrbitHull:
    lam: tuple
    hull_vertices: list

    @classmethod
    def of(cls, lam) -> "WeylOrbitHull":
        lam = tuple(sorted((float(x) for x in lam), reverse=True))
        return cls(lam, sorted(set(permutations(lam))))

    def residual(self, p) -> float:
        return hull_membership_residual(self.hull_vertices, p)


def _batched(trials: int, seed: int, name: str, fn, chunk: int = 2048):
    """Run ``fn(g, m)`` over fixed-size chunks of trials, each on its own stream."""
    return [fn(_rng.stream(seed, name, i), min(chunk, trials - s)) for i, s in enumerate(range(0, trials, chunk))]


def schur_horn_experiment(lam, trials: int = 10_000, tol: float = 1e-9, seed: int = 0,
                          trace_tol: float = 1e-12) -> ExperimentReport:
    """Diagonals of Haar-conjugated ``diag(lam)`` against the permutohedron of ``lam``."""
    lam = np.asarray(lam, dtype=float)
    notes = []
    if np.any(np.diff(lam) > 0):
        notes.append("lambda was not decreasing; sorted internally")
    lam = np.sort(lam)[::-1]
    weyl = WeylOrbitHull.of(lam)
    n = len(lam)

    def run(g, m):
        u = haar_unitary(g, n, m)
        d = (np.abs(u) ** 2) @ lam
        return d

    diags = np.concatenate(_batched(trials, seed, "schur-horn", run))
    trace_err = np.abs(diags.sum(axis=1) - lam.sum())
    res = np.array([weyl.residual(d) for d in diags])
    fails = int(np.sum((res > tol) | (trace_err > trace_tol)))
    return ExperimentReport("schur-horn", trials, fails, float(res.max(initial=0.0)), notes=notes,
                            extra={"lambda": lam.tolist(), "max_trace_error": float(trace_err.max(initial=0.0)),
                                   "hull_vertices": [list(v) for v in weyl.hull_vertices]})


def _hull_of_samples(values: np.ndarray) -> list[tuple]:
    uniq = np.unique(values, axis=0)
    try:
        pre = uniq[ConvexHull(uniq).vertices] if len(uniq) > uniq.shape[1] + 1 else uniq
    except QhullError:
        pre = uniq
    return convex_hull([tuple(p) for p in pre.tolist()])


def toric_polytope_experiment(sc: Scene, n_samples: int = 100_000, h: float = 1 / 128,
                              seed: int = 0) -> tuple[ExperimentReport, list]:
    """Sampled image hull against the hull of fixed-point images, plus a raster convexity certificate."""
    if not sc.fixed_points:
        raise ValueError("scene has no fixed points")
    s = sample_scene(sc, n_samples, seed)
    hull = _hull_of_samples(s.values)
    fixed = convex_hull([tuple(map(float, p)) for p in sc.fixed_points])
    dist = hausdorff_between_hulls([np.asarray(p) for p in hull], [np.asarray(p) for p in fixed])
    raster = rasterize_points(s.values, tuple(float(x) for x in sc.box[0]), h)
    cert = klee_certify(raster)
    fails = int(dist > 2 * h) + int(cert.verdict != Verdict.CONVEX)
    rep = ExperimentReport("toric", n_samples, fails, float(dist),
                           extra={"hausdorff": float(dist), "bound": 2 * h, "klee_verdict": cert.verdict.value,
                                  "hull": [list(map(float, p)) for p in hull],
                                  "fixed_point_hull": [list(map(float, p)) for p in fixed]})
    return rep, hull


def horn_interval_experiment(a, b, trials: int = 10_000, tol: float = 1e-12, seed: int = 0,
                             tol_fill: float = 0.02) -> ExperimentReport:
    """Swept spectra of ``A + B`` over two U(2) orbits fill the predicted segment."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (2,) or b.shape != (2,):
        raise ValueError("horn interval needs 2-vectors")
    if a[0] < a[1] or b[0] < b[1]:
        raise ValueError("a and b must be sorted decreasingly")
    lo, hi = max(a[0] + b[1], a[1] + b[0]), a[0] + b[0]

    def run(g, m):
        u = haar_unitary(g, 2, m)
        v = haar_unitary(g, 2, m)
        mat = (u * a) @ u.conj().transpose(0, 2, 1) + (v * b) @ v.conj().transpose(0, 2, 1)
        mat = (mat + mat.conj().transpose(0, 2, 1)) / 2
        return np.linalg.eigvalsh(mat)[:, ::-1]

    lam = np.concatenate(_batched(trials, seed, "horn", run))
    trace_err = np.abs(lam.sum(axis=1) - (a.sum() + b.sum()))
    outside = np.maximum(lo - lam[:, 0], lam[:, 0] - hi)
    bad = (trace_err > tol) | (outside > 1e-9)
    pts = np.sort(np.concatenate([[lo, hi], np.clip(lam[:, 0], lo, hi)]))
    gap = float(np.diff(pts).max()) if hi > lo else 0.0
    fails = int(bad.sum()) + int(gap > tol_fill)
    return ExperimentReport("horn", trials, fails, float(max(trace_err.max(initial=0.0), outside.max(initial=0.0), 0.0)),
                            extra={"interval": [float(lo), float(hi)], "max_gap": gap, "tol_fill": tol_fill,
                                   "max_trace_error": float(trace_err.max(initial=0.0)),
                                   "lambda1_range": [float(lam[:, 0].min()), float(lam[:, 0].max())]})


def scene_tsv(sc: Scene, n_samples: int, seed: int) -> str:
    """Tab-separated dump of sample coordinates, image coordinates and the regular flag."""
    buf = io.StringIO()
    for ci, chart in enumerate(sc.charts):
        g = _rng.stream(seed, "tsv", sc.name, ci)
        pts = chart.sample(g, n_samples)
        if chart.accept is not None:
            pts = pts[chart.accept(pts)]
        vals = chart.momentum(pts)
        reg = chart.regular(pts)
        flat = pts.view(float) if np.iscomplexobj(pts) else pts
        if ci == 0:
            cols = [f"s{k}" for k in range(flat.shape[1])] + [f"j{k}" for k in range(vals.shape[1])]
            buf.write("\t".join(["chart"] + cols + ["regular"]) + "\n")
        for row, v, r in zip(flat, vals, reg):
            buf.write("\t".join([chart.name] + [repr(float(x)) for x in row] + [repr(float(x)) for x in v]
                                + [str(int(r))]) + "\n")
    return buf.getvalue()
