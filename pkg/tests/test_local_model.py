from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mck import rng
from mck.geometry import ConvexCone, cone_contains
from mck.local_model import (LocalModel, ModelSample, check_open_onto_cone, check_vertex_neighborhood,
                             cluster_count, cone_at_sample, default_sampler, local_cone,
                             local_fiber_components, momentum_array, normal_form_momentum)

C2 = LocalModel((0, 0), 0, (), ((1, 0), (0, 1)))


def test_documented_momentum_values():
    m = LocalModel((0, 0), 1, ((1, 0),), ((0, 2),))
    assert normal_form_momentum(m, ModelSample(F(3, 10), (1,))) == (F(3, 10), F(1))
    assert np.allclose(normal_form_momentum(m, ModelSample(0.3, (1.0,))), (0.3, 1.0))
    assert normal_form_momentum(m, ModelSample(0, (0,))) == (0, 0)
    t = LocalModel((1, 1), 2, ((1, 0), (0, 1)), ())
    assert np.allclose(normal_form_momentum(t, ModelSample((0.2, -0.4), ())), (1.2, 0.6))


def test_validation():
    with pytest.raises(ValueError):
        LocalModel((0, 0), 1, (), ())
    with pytest.raises(ValueError):
        LocalModel((0, 0), 0, (), ((0, 0),))
    with pytest.raises(ValueError):
        LocalModel((0, 0), 2, ((1, 0), (2, 0)), ())
    with pytest.raises(ValueError):
        LocalModel((0, 0), 0, (), ((1, 0, 0),))
    with pytest.raises(ValueError):
        ModelSample((), (-1.0,))
    with pytest.raises(ValueError):
        normal_form_momentum(C2, ModelSample((), (1,)))


def test_json_round_trip():
    m = LocalModel((F(1, 2), 0, 1), 1, ((0, 0, 1),), ((1, -1, 0), (2, 0, 0)))
    d = m.to_json()
    assert set(d) == {"base", "dim_t1", "t0_perp", "weights"}
    assert LocalModel.from_json(d) == m


def test_local_cone_examples():
    c = local_cone(C2)
    assert c == ConvexCone((0, 0), (), ((1, 0), (0, 1)))
    # membership agrees with direct sampling of (|z1|^2, |z2|^2)/2 near the origin
    g = rng.stream(0, "c2")
    z = g.normal(size=(500, 2)) + 1j * g.normal(size=(500, 2))
    vals = np.abs(z) ** 2 / 2 * 0.01
    assert all(cone_contains(c, tuple(v)) for v in vals)
    assert not cone_contains(c, (-0.01, 0.02))
    regular = LocalModel((1, 2), 2, ((1, 0), (0, 1)), ())
    assert cone_contains(local_cone(regular), (-50, 7))
    half = local_cone(LocalModel((0,), 0, (), ((2,),)))
    assert cone_contains(half, (3,)) and not cone_contains(half, (-1,))


def test_cone_at_sample_frees_active_weights():
    c = cone_at_sample(C2, ModelSample((), (1, 0)))
    assert c.vertex == (F(1, 2), 0)
    assert c.subspace_basis == ((1, 0),) and c.generators == ((0, 1),)


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=4),
       st.integers(0, 10_000))
def test_image_lies_in_cone_exact(ws, seed):
    ws = [w for w in ws if any(w)]
    if not ws:
        return
    m = LocalModel((1, -1), 0, (), tuple(ws))
    c = local_cone(m)
    g = np.random.default_rng(seed)
    for _ in range(50):
        s = ModelSample((), tuple(F(int(x), 16) for x in g.integers(0, 17, len(ws))))
        assert cone_contains(c, normal_form_momentum(m, s))


def test_rotation_invariance_of_weight_components():
    g = rng.stream(1, "rot")
    v = g.normal(size=(200, 2)) + 1j * g.normal(size=(200, 2))
    theta = g.uniform(0, 2 * np.pi, size=(200, 2))
    a = momentum_array(C2, np.zeros((200, 0)), np.abs(v) ** 2)
    b = momentum_array(C2, np.zeros((200, 0)), np.abs(v * np.exp(1j * theta)) ** 2)
    assert np.allclose(a, b, atol=1e-12, rtol=0)


def test_vertex_neighbourhood_examples():
    ok, rep = check_vertex_neighborhood(C2, 0.1, 100_000, seed=0)
    assert ok and rep["required"] == rep["covered"] > 0

    def pinned(g, n):
        beta, norms = default_sampler(C2)(g, n)
        norms[:, 0] = 0.0
        return beta, norms
    ok, rep = check_vertex_neighborhood(C2, 0.1, 10_000, seed=0, sampler=pinned)
    assert not ok
    unc = np.array(rep["uncovered"])
    assert (unc[:, 0] > 0).all()
    assert (unc[:, 1] < 0.02).any()  # cells along the (1,0) edge are among them
    regular = LocalModel((0, 0), 2, ((1, 0), (0, 1)), ())
    assert check_vertex_neighborhood(regular, 0.1, 1000, seed=0)[0]
    with pytest.raises(ValueError):
        check_vertex_neighborhood(C2, 0.1, 99)


def test_open_onto_cone_examples():
    assert check_open_onto_cone(C2, 200, seed=0) == (True, None)
    assert check_open_onto_cone(LocalModel((0, 0), 2, ((1, 0), (0, 1)), ()), 50, seed=0)[0]
    ok, wit = check_open_onto_cone(C2, 200, seed=0, lower=0.5)
    assert not ok
    assert set(wit) == {"box_lo", "box_hi", "x0", "target", "rho"}


@st.composite
def models(draw):
    n = draw(st.integers(1, 3))
    vec = st.tuples(*[st.integers(-2, 2)] * n)
    k = draw(st.integers(0, n))
    t = []
    for v in draw(st.lists(vec, max_size=6)):
        if len(t) < k and np.linalg.matrix_rank(np.array(t + [v], float)) == len(t) + 1:
            t.append(v)
    ws = [w for w in draw(st.lists(vec, max_size=4)) if any(w)]
    base = draw(vec)
    return LocalModel(tuple(float(x) for x in base), len(t), tuple(t), tuple(ws))


@settings(max_examples=15)
@given(models(), st.integers(0, 1000))
def test_random_models_have_local_convexity_data(m, seed):
    assert check_vertex_neighborhood(m, 0.1, 20_000, seed=seed)[0]
    assert check_open_onto_cone(m, 40, seed=seed)[0]


def test_fiber_components_examples():
    assert local_fiber_components(C2, (0.1, 0.1), seed=0) == 1
    assert local_fiber_components(C2, (0, 0), seed=0) == 1
    with pytest.raises(ValueError, match="empty fiber"):
        local_fiber_components(C2, (-0.1, 0.1), seed=0)
    redundant = LocalModel((0.0,), 0, (), ((1,), (-1,)))
    assert local_fiber_components(redundant, (0.1,), seed=0) == 1


@settings(max_examples=10)
@given(models(), st.integers(0, 1000))
def test_fibers_are_connected(m, seed):
    g = np.random.default_rng(seed)
    x = np.concatenate([g.uniform(-0.2, 0.2, m.dim_t1), g.uniform(0, 0.2, m.n_weights)])
    value = np.asarray(m.base, float) + m.matrix() @ x
    assert local_fiber_components(m, value, n_samples=800, seed=seed) == 1


def test_cluster_count_oracle():
    g = rng.stream(2, "blobs")
    a = g.normal(size=(300, 2)) * 0.05
    assert cluster_count(a) == 1
    assert cluster_count(np.vstack([a, a + 10.0])) == 2
    line = np.column_stack([np.linspace(0, 1, 500), np.zeros(500)])
    assert cluster_count(line) == 1
