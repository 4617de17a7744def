from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mck.geometry import ConvexCone
from mck.lgp import (DiscreteSpace, build_quotient, check_lfc, check_local_convexity_data, circle_height_space,
                     fibers_connected, geodesic_straightness, image_convex, image_raster, lattice_space,
                     lgp_verdict, open_onto_image, path_space, quotient_metric, random_octagon_space)


def level_classes_oracle(s):
    """Connected components of each level set, by BFS restricted to the level."""
    seen = [False] * s.n
    comps = []
    for v in range(s.n):
        if seen[v]:
            continue
        comp, q = [v], deque([v])
        seen[v] = True
        while q:
            u = q.popleft()
            for w in s.neighbors(u):
                if not seen[w] and np.linalg.norm(s.f[w] - s.f[u]) <= s.eps:
                    seen[w] = True
                    comp.append(w)
                    q.append(w)
        comps.append(sorted(comp))
    return sorted(comps)


@st.composite
def spaces(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    dim = draw(st.integers(1, 2))
    f = draw(st.lists(st.lists(st.integers(-2, 2), min_size=dim, max_size=dim), min_size=n, max_size=n))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    return DiscreteSpace(n, edges, np.array(f, float).reshape(n, dim), eps=0.5)


# --- quotient ------------------------------------------------------------------------

def test_quotient_examples():
    assert build_quotient(path_space([0, 1, 2], eps=0.1)).n_classes == 3
    const = DiscreteSpace(4, [(0, 1), (1, 2), (2, 3)], np.zeros((4, 1)))
    assert build_quotient(const).n_classes == 1
    s = circle_height_space(64)
    q = build_quotient(s)
    assert q.n_classes == 64
    for k in range(1, 32):
        assert q.class_of[k] != q.class_of[64 - k]
        assert s.f[k, 0] == s.f[64 - k, 0]


@given(spaces())
def test_quotient_matches_level_set_bfs(s):
    q = build_quotient(s)
    got = sorted(sorted(q.members(c)) for c in range(q.n_classes))
    assert got == level_classes_oracle(s)


@given(spaces(), st.randoms(use_true_random=False))
def test_quotient_permutation_invariance(s, rnd):
    perm = list(range(s.n))
    rnd.shuffle(perm)
    inv = np.argsort(perm)
    t = DiscreteSpace(s.n, [(perm[a], perm[b]) for a, b in s.edges], s.f[inv], eps=s.eps)
    qs, qt = build_quotient(s), build_quotient(t)
    part_s = sorted(sorted(perm[v] for v in qs.members(c)) for c in range(qs.n_classes))
    part_t = sorted(sorted(qt.members(c)) for c in range(qt.n_classes))
    assert part_s == part_t


# --- metric ----------------------------------------------------------------------------

def test_metric_examples():
    q = build_quotient(path_space([0, 1, 2]))
    assert quotient_metric(q)[0, 2] == 2.0
    assert quotient_metric(q, source=1)[1] == 0.0
    s = circle_height_space(64)
    q = build_quotient(s)
    d = quotient_metric(q)
    for k in (5, 16, 27):
        v = s.f[k, 0]
        over_top = 2 * (1 - v)
        under = 2 * (1 + v)
        assert d[q.class_of[k], q.class_of[64 - k]] == pytest.approx(min(over_top, under), abs=1e-12)
    two = DiscreteSpace(2, [], np.array([[0.0], [1.0]]))
    assert np.isinf(quotient_metric(build_quotient(two))[0, 1])


@given(spaces(max_n=8))
def test_metric_axioms(s):
    q = build_quotient(s)
    d = quotient_metric(q)
    k = q.n_classes
    assert np.array_equal(d, d.T)
    for a in range(k):
        for b in range(k):
            if a != b:
                assert d[a, b] > 0
            if np.isfinite(d[a, b]):
                assert np.linalg.norm(q.class_values[a] - q.class_values[b]) <= d[a, b] + 1e-12
            for c in range(k):
                assert d[a, c] <= d[a, b] + d[b, c] + 1e-12


@pytest.mark.parametrize("k", [4, 8, 16])
def test_lattice_metric_is_octile_at_every_refinement(k):
    lat = lattice_space([(x, y) for x in range(k + 1) for y in range(k + 1)], spacing=1 / k)
    q = build_quotient(lat)
    d = quotient_metric(q)
    dx = np.abs(q.class_values[:, None, 0] - q.class_values[None, :, 0])
    dy = np.abs(q.class_values[:, None, 1] - q.class_values[None, :, 1])
    octile = np.abs(dx - dy) + np.sqrt(2) * np.minimum(dx, dy)
    assert np.allclose(d, octile, atol=1e-12)
    euclid = np.hypot(dx, dy)
    assert (d <= np.sqrt(4 - 2 * np.sqrt(2)) * euclid + 1e-12).all()
    a, b = q.class_of[0], q.class_of[int(np.argmin(np.hypot(lat.f[:, 0] - 1, lat.f[:, 1] - 0.5)))]
    assert d[a, b] == pytest.approx(0.5 + np.sqrt(2) / 2, abs=1e-12)


def test_geodesic_straightness():
    s = circle_height_space(64)
    q = build_quotient(s)
    a, b = int(q.class_of[16]), int(q.class_of[48])
    straight, _ = geodesic_straightness(q, a, b)
    assert not straight
    assert geodesic_straightness(q, a, a) == (True, 0.0)
    lat = lattice_space([(x, y) for x in range(8) for y in range(8)])
    ql = build_quotient(lat)
    g = np.random.default_rng(0)
    for _ in range(20):
        a, b = (int(x) for x in g.integers(0, ql.n_classes, 2))
        assert geodesic_straightness(ql, a, b)[0]
    two = DiscreteSpace(2, [], np.array([[0.0], [1.0]]))
    with pytest.raises(ValueError, match="infinite"):
        geodesic_straightness(build_quotient(two), 0, 1)


# --- hypotheses ------------------------------------------------------------------------

def test_lfc_examples():
    assert check_lfc(circle_height_space(64)) == [0, 32]
    assert check_lfc(path_space(np.arange(10.0))) == []
    with pytest.raises(ValueError):
        check_lfc(path_space([0, 1]), 0)


def test_local_convexity_examples():
    assert check_local_convexity_data(path_space(np.arange(10.0))).ok
    # the value 0 is missing from a space that claims to be a piece of [0, 9]
    half_open = path_space(np.arange(1.0, 10.0), window=((0.0,), (9.0,)))
    rep = check_local_convexity_data(half_open)
    assert rep.vn == [0]
    circ = check_local_convexity_data(circle_height_space(64))
    assert circ.ok
    with pytest.raises(ValueError, match="cones"):
        check_local_convexity_data(path_space([0, 1], cones=None))


def test_containment_failure_is_reported():
    s = path_space([0.0, 1.0, 2.0])
    s.cones[1] = ConvexCone((1.0,), (), ((1.0,),))
    rep = check_local_convexity_data(s)
    assert 1 in rep.containment and not rep.ok


# --- conclusions and verdicts ------------------------------------------------------------

def test_circle_verdict():
    v = lgp_verdict(circle_height_space(64))
    assert not v.hypotheses["lfc_ok"] and v.hypotheses["witnesses"]["lfc"] == [0, 32]
    assert v.hypotheses["lcd_ok"] and not v.hypotheses_ok
    assert not v.conclusions["fibers_connected"]
    assert v.consistent


def test_single_vertex_space():
    s = DiscreteSpace(1, [], np.array([[0.5, 0.5]]), [ConvexCone((0.5, 0.5))])
    v = lgp_verdict(s)
    assert v.hypotheses_ok and v.conclusions_ok and v.consistent


def test_open_failure_with_fold():
    # values fold back: the ball around vertex 2 misses image values on the far side
    s = path_space([0.0, 1.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0])
    ok, fails, _ = open_onto_image(s)
    assert ok is False and fails


def test_fibers_connected_witness():
    ok, split = fibers_connected(circle_height_space(8))
    assert not ok and len(split) == 3


def test_image_raster_lattice_and_generic():
    lat = lattice_space([(x, y) for x in range(4) for y in range(3)], spacing=0.5)
    r = image_raster(lat)
    assert len(r) == 12 and r.h == 0.5
    assert image_convex(lat)[0]
    p = path_space(np.linspace(0, 1, 11))
    assert image_convex(p)[0]


def test_octagon_spaces_satisfy_everything():
    for seed in range(3):
        v = lgp_verdict(random_octagon_space(seed))
        assert v.hypotheses_ok and v.conclusions_ok and v.consistent


def test_json_round_trip():
    s = lattice_space([(x, y) for x in range(3) for y in range(3)])
    t = DiscreteSpace.from_json(s.to_json())
    assert t.n == s.n and t.edges == s.edges and np.array_equal(t.f, s.f) and t.h == s.h
    assert [c.to_json() for c in t.cones] == [c.to_json() for c in s.cones]
    with pytest.raises(ValueError, match="malformed"):
        DiscreteSpace.from_json({"edges": []})


def test_validation():
    with pytest.raises(ValueError):
        DiscreteSpace(2, [(0, 5)], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        DiscreteSpace(2, [], np.zeros((3, 1)))
    with pytest.raises(ValueError):
        DiscreteSpace(1, [], np.zeros((1, 1)), [ConvexCone((1.0,))])
    with pytest.raises(ValueError):
        DiscreteSpace(1, [], np.zeros((1, 1)), eps=0)


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_hypotheses_imply_conclusions_on_lattice_spaces(seed):
    v = lgp_verdict(random_octagon_space(seed, size=8))
    assert v.consistent
