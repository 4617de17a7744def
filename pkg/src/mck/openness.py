"""Openness of momentum maps onto their image, decided from sampled rasters.

A :class:`Scene` is a union of charts. Each chart samples points of its
domain, maps them to momentum values and flags which points are regular
(on orbits of maximal dimension). The image and the regular image are
rasterised; the regular image is then probed for regions that its
complement disconnects.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import ndimage

from . import rng as _rng
from .geometry import GridRegion, rasterize_points
from .geometry.grid import label_components

DEFAULT_RADII = (8, 16, 32)
MIN_ACCEPTANCE = 0.01


@dataclass
class Chart:
    """One piece of a scene's domain.

    ``sample(g, n)`` draws candidate points (stratified so singular strata
    are hit with positive probability), ``accept`` is the rejection
    predicate, ``momentum`` maps points to values, ``regular`` flags regular
    points and ``act(points, theta)`` applies the torus action. ``escape(g,
    n, t)`` draws points that leave every compact subset of the chart as
    ``t -> 1``; it is optional.
    """

    name: str
    sample: Callable
    momentum: Callable
    regular: Callable
    act: Callable | None = None
    accept: Callable | None = None
    escape: Callable | None = None
    weight: float = 1.0


@dataclass
class Scene:
    name: str
    dim: int
    charts: list
    box: tuple
    group: str = "torus"
    torus_dim: int = 0
    fixed_points: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    fiber_oracle: Callable | None = None
    local_model: object = None
    discretizer: Callable | None = None
    description: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "builtin": self.name,
            "box": [list(map(float, self.box[0])), list(map(float, self.box[1]))],
            "regular": f"{self.name}.regular",
            "fixed_points": [list(map(float, p)) for p in self.fixed_points],
            "group": "u(n)" if self.group == "unitary_n" else "torus",
            "metadata": {k: bool(v) for k, v in sorted(self.metadata.items())},
        }


class Reason(str, Enum):
    DISCONNECTION_FOUND = "DisconnectionFound"
    CCF_VIOLATED = "CCFViolated"
    NOT_LOCALLY_COMPACT = "NotLocallyCompact"
    CLEAN = "Clean"


@dataclass
class OpennessVerdict:
    open_onto_image: bool
    reason: Reason
    witness: dict | None = None
    branch: str = "connected-fibers"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reason == Reason.DISCONNECTION_FOUND and self.witness is None:
            raise ValueError("a disconnection verdict needs a witness")

    def to_json(self) -> dict:
        return {
            "open_onto_image": self.open_onto_image,
            "reason": self.reason.value,
            "witness": self.witness,
            "branch": self.branch,
            "details": self.details,
        }


@dataclass
class ImageSample:
    values: np.ndarray
    regular: np.ndarray
    acceptance: float


def sample_scene(sc: Scene, n_samples: int, seed: int) -> ImageSample:
    """Accepted momentum values of ``n_samples`` draws split across charts by weight."""
    w = np.array([c.weight for c in sc.charts], dtype=float)
    counts = np.floor(n_samples * w / w.sum()).astype(int)
    counts[0] += n_samples - counts.sum()
    vals, regs = [], []
    drawn = kept = 0
    for ci, (chart, n) in enumerate(zip(sc.charts, counts)):
        def draw(g, m, chart=chart):
            pts = chart.sample(g, m)
            ok = np.ones(len(pts), dtype=bool) if chart.accept is None else chart.accept(pts)
            out = np.full((m, sc.dim + 1), np.nan)
            p = pts[ok]
            if len(p):
                out[ok, :sc.dim] = chart.momentum(p)
                out[ok, sc.dim] = chart.regular(p)
            return out
        arr = _rng.chunked(seed, f"scene/{sc.name}/{chart.name}/{ci}", int(n), draw)
        good = ~np.isnan(arr[:, 0])
        drawn += len(arr)
        kept += int(good.sum())
        vals.append(arr[good, :sc.dim])
        regs.append(arr[good, sc.dim] > 0.5)
    acc = kept / max(drawn, 1)
    return ImageSample(np.concatenate(vals), np.concatenate(regs), acc)


def rasterize_images(sc: Scene, h: float, n_samples: int, seed: int, box=None):
    """Rasters of the image and of the regular image.

    The regular raster keeps image cells that contain no singular value:
    singular values fill a measure-zero set, so a cell that holds one
    touches the complement of the regular image. Returns
    ``(image, regular_image, report)``.
    """
    box = box or sc.box
    s = sample_scene(sc, n_samples, seed)
    if s.acceptance < MIN_ACCEPTANCE:
        raise ValueError(f"sampler mismatch: acceptance rate {s.acceptance:.4f} < {MIN_ACCEPTANCE}")
    lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
    inside = np.all((s.values >= lo) & (s.values < hi), axis=1)
    vals, reg = s.values[inside], s.regular[inside]
    origin = tuple(lo.tolist())
    image = rasterize_points(vals, origin, h, closed=sc.metadata.get("closed_map", True))
    if (~reg).any():
        sing = rasterize_points(vals[~reg], origin, h)
        sing_cells = {tuple(c) for c in sing.cells}
    else:
        sing_cells = set()
    reg_cells = [c for c in image.cells if c not in sing_cells]
    regular = GridRegion.from_cells(origin, h, reg_cells, image.closed) if reg_cells else \
        GridRegion.from_cells(origin, h, [], image.closed)
    report = {
        "acceptance": round(s.acceptance, 6),
        "samples_in_box": int(inside.sum()),
        "image_cells": len(image),
        "regular_cells": len(regular),
        "regular_dense": _dense(image, regular),
    }
    return image, regular, report


def _dense(image: GridRegion, regular: GridRegion) -> bool:
    """Every image cell lies within one cell (any direction) of a regular cell."""
    if len(image) == 0:
        return True
    if len(regular) == 0:
        return False
    lo, shape = image.offset, image.mask.shape
    reg = regular.window(lo, shape)
    near = ndimage.binary_dilation(reg, structure=np.ones((3,) * image.dim, dtype=bool))
    return bool(np.all(near[image.mask]))


def _ball_mask(radius_cells: float, n: int) -> np.ndarray:
    k = int(np.floor(radius_cells))
    ax = np.arange(-k, k + 1)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    return sum(g.astype(float) ** 2 for g in grids) <= radius_cells ** 2


def disconnection_test(image: GridRegion, regular: GridRegion, n_probes: int = 4096,
                       radii_cells=DEFAULT_RADII, stride: int | None = None,
                       min_reproduce: int = 2) -> tuple[bool, dict | None]:
    """Does the complement of the regular image disconnect a region of the image?

    Probe balls of the given radii (in cells) are centred on a sub-lattice
    of image cells. A probe disconnects if some component of ``V & image``
    contains more than one component of ``V & regular``. A centre counts
    only if it disconnects at ``min_reproduce`` radii or more; the witness
    is the centre reproducing at the most (then the largest) radii.
    """
    if len(image) == 0:
        return False, None
    n = image.dim
    lo, shape = image.offset, image.mask.shape
    img = image.mask
    reg = regular.window(lo, shape) & img
    if np.array_equal(reg, img):
        return False, None
    stride = stride or max(1, min(radii_cells) // 2)
    centres = np.argwhere(img)
    centres = centres[np.all(centres % stride == 0, axis=1)]
    if len(centres) > n_probes:
        pick = np.linspace(0, len(centres) - 1, n_probes).round().astype(int)
        centres = centres[pick]
    balls = {r: _ball_mask(r, n) for r in radii_cells}
    # only centres whose largest ball meets a removed cell can disconnect anything
    removed = img & ~reg
    rmax = max(radii_cells)
    near_removed = ndimage.binary_dilation(removed, structure=_ball_mask(rmax, n))
    best = None
    for c in centres:
        if not near_removed[tuple(c)]:
            continue
        hits = []
        for r in radii_cells:
            ball = balls[r]
            k = ball.shape[0] // 2
            sl_img, sl_ball = [], []
            for d in range(n):
                a, b = c[d] - k, c[d] + k + 1
                sl_img.append(slice(max(a, 0), min(b, shape[d])))
                sl_ball.append(slice(max(a, 0) - a, ball.shape[d] - (b - min(b, shape[d]))))
            v = ball[tuple(sl_ball)]
            vi = img[tuple(sl_img)] & v
            vr = reg[tuple(sl_img)] & v
            li, ni = label_components(vi)
            lr, nr = label_components(vr)
            if nr <= ni:
                continue
            for comp in range(1, ni + 1):
                inside = np.unique(lr[(li == comp) & vr])
                if len(inside) > 1:
                    hits.append(r)
                    break
        # prefer the centre reproducing at the most radii, then at the largest ones
        key = (len(hits), sorted(hits, reverse=True))
        if len(hits) >= min_reproduce and (best is None or key > best[0]):
            best = (key, c, hits)
    if best is None:
        return False, None
    _, c, hits = best
    cell = [int(x) + o for x, o in zip(c, lo)]
    return True, {
        "center": [float(x) for x in image.center(cell)],
        "center_cell": cell,
        "radii": [float(r * image.h) for r in hits],
        "radii_cells": [int(r) for r in hits],
    }


def ccf_check(sc: Scene, n_value_probes: int = 200, seed: int = 0) -> tuple[bool, dict | None]:
    """Whenever one fiber component meets the regular set, all of them must."""
    if sc.fiber_oracle is None:
        raise ValueError("CCF undecidable for this scene: no fiber component oracle")
    g = _rng.stream(seed, "ccf", sc.name)
    lo, hi = np.asarray(sc.box[0], dtype=float), np.asarray(sc.box[1], dtype=float)
    probes = g.uniform(lo, hi, size=(n_value_probes, sc.dim))
    for v in probes:
        flags = sc.fiber_oracle(v)
        if flags and any(flags) and not all(flags):
            return False, {"value": v.tolist(), "components_meet_regular": list(map(bool, flags))}
    return True, None


def prato_properness_check(sc: Scene, xi, levels: int = 8, n_samples: int = 2000,
                           seed: int = 0, growth: float = 4.0) -> tuple[bool, dict | None]:
    """Statistical properness of ``<J, xi>`` along sequences leaving every compact set.

    At escape levels ``t_k = k / (levels + 1)`` each chart draws points
    through its ``escape`` sampler. The component is judged proper when
    the smallest ``|<J, xi>|`` per level never decreases and ends at least
    ``growth`` times above its first value.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if len(xi) != sc.dim:
        raise ValueError("xi has the wrong dimension")
    charts = [c for c in sc.charts if c.escape is not None]
    if not charts:
        raise ValueError("scene provides no escape sampler")
    mins = []
    for k in range(1, levels + 1):
        t = k / (levels + 1)
        low = np.inf
        for ci, chart in enumerate(charts):
            g = _rng.stream(seed, "escape", sc.name, ci, k)
            pts = chart.escape(g, n_samples, t)
            if chart.accept is not None:
                pts = pts[chart.accept(pts)]
            if len(pts):
                low = min(low, float(np.abs(chart.momentum(pts) @ xi).min()))
        mins.append(low)
    mins = np.asarray(mins)
    grows = bool(np.all(np.diff(mins) >= -1e-12) and mins[-1] >= growth * max(mins[0], 1e-12))
    if grows:
        return True, None
    return False, {"levels": [k / (levels + 1) for k in range(1, levels + 1)],
                   "min_abs_component": mins.tolist()}


def diagnose(sc: Scene, h: float = 1 / 64, n_samples: int = 200_000, seed: int = 0,
             radii_cells=DEFAULT_RADII, n_probes: int = 4096) -> OpennessVerdict:
    """Rasterise, pick the branch by fiber metadata, then probe for disconnection."""
    image, regular, rep = rasterize_images(sc, h, n_samples, seed)
    details = {"raster": rep, "h": float(h), "radii_cells": list(radii_cells)}
    connected = bool(sc.metadata.get("fibers_connected", False))
    branch = "connected-fibers" if connected else "fiber-components"
    if not connected:
        if not sc.metadata.get("locally_compact", False):
            return OpennessVerdict(False, Reason.NOT_LOCALLY_COMPACT, None, branch, details)
        ok, cex = ccf_check(sc, seed=seed)
        if not ok:
            return OpennessVerdict(False, Reason.CCF_VIOLATED, cex, branch, details)
    found, wit = disconnection_test(image, regular, n_probes, radii_cells)
    if found:
        return OpennessVerdict(False, Reason.DISCONNECTION_FOUND, wit, branch, details)
    return OpennessVerdict(True, Reason.CLEAN, None, branch, details)


def sweep(a) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in decreasing order."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("sweep needs a square matrix")
    if np.abs(a - a.conj().T).max(initial=0.0) > 1e-12:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigvalsh(a)[::-1].copy()
