
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mck import rng
from mck.geometry import GridRegion
from mck.openness import (Chart, OpennessVerdict, Reason, Scene, ccf_check, diagnose, disconnection_test,
                          prato_properness_check, rasterize_images, sample_scene, sweep)
from mck.scenes import builtin_scene, haar_unitary

H = 1 / 32


def box_cells(n):
    return {(i, j) for i in range(n) for j in range(n)}


def identity_scene():
    chart = Chart("square", lambda g, n: g.uniform(0, 1, size=(n, 2)), lambda x: x.copy(),
                  lambda x: np.ones(len(x), dtype=bool))
    return Scene("identity", 2, [chart], ((0.0, 0.0), (1.0, 1.0)))


# --- rasters ---------------------------------------------------------------------------

def test_c2_rasters():
    image, regular, rep = rasterize_images(builtin_scene("c2_standard"), H, 100_000, seed=0)
    full = box_cells(48)
    assert set(image.cells) == full
    # singular values sit on the axes, i.e. in the first row and column of cells
    assert set(regular.cells) == {c for c in full if c[0] > 0 and c[1] > 0}
    assert rep["regular_dense"] and rep["acceptance"] == 1.0


def test_prato_image_is_quadrant_minus_square():
    image, regular, _ = rasterize_images(builtin_scene("prato"), H, 200_000, seed=0)
    expect = {c for c in box_cells(48) if c[0] >= 16 or c[1] >= 16}
    assert set(image.cells) == expect


def test_identity_scene_fills_box():
    image, regular, _ = rasterize_images(identity_scene(), 1 / 16, 20_000, seed=0)
    assert set(image.cells) == box_cells(16) and image == regular


def test_sampler_mismatch():
    sc = identity_scene()
    sc.charts[0].accept = lambda x: x[:, 0] < 0.001
    with pytest.raises(ValueError, match="sampler mismatch"):
        rasterize_images(sc, 1 / 16, 10_000, seed=0)


def test_sample_scene_splits_by_weight():
    s = sample_scene(builtin_scene("two_sheet"), 1000, seed=0)
    assert len(s.values) == 1000 and s.regular.sum() == 500


# --- disconnection ---------------------------------------------------------------------------

@settings(max_examples=20)
@given(st.integers(0, 100_000))
def test_image_never_disconnects_itself(seed):
    mask = rng.stream(seed, "mask").random((40, 40)) < 0.6
    r = GridRegion((0.0, 0.0), 1.0, mask, (0, 0))
    assert disconnection_test(r, r) == (False, None)


def test_slit_disconnects():
    mask = np.ones((80, 80), bool)
    reg = mask.copy()
    reg[40, 40:] = False
    image = GridRegion((0.0, 0.0), 1.0, mask, (0, 0))
    regular = GridRegion((0.0, 0.0), 1.0, reg, (0, 0))
    found, wit = disconnection_test(image, regular)
    assert found and wit["center_cell"][0] in range(32, 49) and wit["center_cell"][1] >= 40 - 8
    # a removed point in the interior does not disconnect anything
    reg2 = mask.copy()
    reg2[40, 40] = False
    assert not disconnection_test(image, GridRegion((0.0, 0.0), 1.0, reg2, (0, 0)))[0]


def test_prato_and_kl_disconnection():
    img, reg, _ = rasterize_images(builtin_scene("prato"), 1 / 64, 200_000, seed=1)
    assert not disconnection_test(img, reg)[0]
    img, reg, _ = rasterize_images(builtin_scene("karshon_lerman"), 1 / 64, 200_000, seed=1)
    found, wit = disconnection_test(img, reg)
    assert found
    x, y = wit["center"]
    assert x > 0 and abs(y) < min(wit["radii"])


# --- CCF and properness -------------------------------------------------------------------------

def test_ccf():
    assert ccf_check(builtin_scene("c2_standard"))[0]
    assert ccf_check(builtin_scene("karshon_lerman"))[0]
    ok, cex = ccf_check(builtin_scene("two_sheet"))
    assert not ok and cex["components_meet_regular"] == [True, False]
    with pytest.raises(ValueError, match="CCF undecidable"):
        ccf_check(identity_scene())


def test_properness():
    assert prato_properness_check(builtin_scene("c2_standard"), (1, 1))[0]
    assert prato_properness_check(builtin_scene("cylinder"), (1,))[0]
    kl = builtin_scene("karshon_lerman")
    for xi in [(1, 0), (0, 1), (1, 1), (1, -1)]:
        ok, wit = prato_properness_check(kl, xi)
        assert not ok and wit["min_abs_component"]
    with pytest.raises(ValueError):
        prato_properness_check(kl, (1, 0, 0))


# --- diagnose --------------------------------------------------------------------------------

def test_diagnose_examples():
    v = diagnose(builtin_scene("prato"), 1 / 64, 200_000, seed=1)
    assert v.open_onto_image and v.reason == Reason.CLEAN
    v = diagnose(builtin_scene("karshon_lerman"), 1 / 64, 200_000, seed=1)
    assert not v.open_onto_image and v.reason == Reason.DISCONNECTION_FOUND and v.witness
    assert diagnose(builtin_scene("c2_standard"), 1 / 64, 100_000, seed=1).open_onto_image
    v = diagnose(builtin_scene("two_sheet"), 1 / 16, 10_000, seed=1)
    assert v.reason == Reason.CCF_VIOLATED and v.branch == "fiber-components"


@pytest.mark.parametrize("name", ["prato", "karshon_lerman"])
def test_verdict_stable_under_refinement(name):
    coarse = diagnose(builtin_scene(name), 1 / 32, 100_000, seed=2)
    fine = diagnose(builtin_scene(name), 1 / 64, 200_000, seed=2)
    assert coarse.open_onto_image == fine.open_onto_image and coarse.reason == fine.reason


def test_branches_agree_with_single_component_oracle():
    sc = builtin_scene("c2_standard")
    a = diagnose(sc, 1 / 32, 50_000, seed=3)
    sc.metadata = {**sc.metadata, "fibers_connected": False}
    b = diagnose(sc, 1 / 32, 50_000, seed=3)
    assert b.branch != a.branch
    assert (a.open_onto_image, a.reason) == (b.open_onto_image, b.reason)


def test_not_locally_compact_branch():
    sc = builtin_scene("two_sheet")
    sc.metadata = {**sc.metadata, "locally_compact": False}
    assert diagnose(sc, 1 / 16, 5_000, seed=0).reason == Reason.NOT_LOCALLY_COMPACT


def test_verdict_needs_witness():
    with pytest.raises(ValueError):
        OpennessVerdict(False, Reason.DISCONNECTION_FOUND)
    d = OpennessVerdict(True, Reason.CLEAN).to_json()
    assert d["reason"] == "Clean" and d["witness"] is None


# --- sweep -----------------------------------------------------------------------------------

def test_sweep_examples():
    assert sweep(np.diag([1.0, 3.0])).tolist() == [3.0, 1.0]
    assert sweep(np.zeros((3, 3))).tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        sweep(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        sweep(np.zeros((2, 3)))


@given(st.integers(0, 100_000), st.integers(2, 4))
def test_sweep_unitary_invariance(seed, n):
    g = rng.stream(seed, "sweep")
    x = g.normal(size=(n, n)) + 1j * g.normal(size=(n, n))
    a = (x + x.conj().T) / 2
    u = haar_unitary(g, n)
    b = u @ a @ u.conj().T
    b = (b + b.conj().T) / 2
    assert np.allclose(sweep(a), sweep(b), atol=1e-9, rtol=0)
    s = sweep(a)
    assert np.all(np.diff(s) <= 0)
    perm = g.permutation(n)
    assert np.allclose(sweep(a[np.ix_(perm, perm)]), s, atol=1e-12, rtol=0)
