import numpy as np
import pytest

import diffreg


@pytest.fixture(scope="module")
def scene():
    vol, landmarks = diffreg.make_phantom("spheres", dims=(32, 32, 32), spacing=(4, 4, 4), seed=3)
    k = diffreg.default_intrinsics(vol, pixels=48)
    return vol, landmarks, k


def test_exp_log_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = np.concatenate([rng.uniform(-1, 1, 3), rng.uniform(-50, 50, 3)])
        T = diffreg.exp_se3(v)
        assert T.shape == (4, 4)
        np.testing.assert_allclose(diffreg.log_se3(T), v, atol=1e-9)


def test_geodesics():
    R = diffreg.exp_so3(np.array([0.0, 0.0, 0.3]))
    assert diffreg.geodesic_so3(np.eye(3), R) == pytest.approx(0.3, abs=1e-12)
    T = np.eye(4)
    T[:3, 3] = [3, 4, 0]
    assert diffreg.double_geodesic(np.eye(4), T, 1000.0) == pytest.approx(5.0)


def test_volume_roundtrip(tmp_path):
    data = np.arange(24, dtype=float).reshape(2, 3, 4)
    v = diffreg.Volume(data, spacing=(1, 2, 3))
    assert v.dims == [4, 3, 2]
    np.testing.assert_array_equal(v.data, data)
    diffreg.save_volume(v, str(tmp_path / "v.raw"), str(tmp_path / "v.json"))
    back = diffreg.load_volume(str(tmp_path / "v.json"))
    np.testing.assert_allclose(back.data, data)


def test_render_and_jacobian(scene):
    vol, _, k = scene
    iso = diffreg.isocenter_pose(vol)
    img = diffreg.render(vol, iso, k)
    assert img.shape == (48, 48)
    assert img[24, 24] > 0 and img[0, 0] == 0
    pose = diffreg.exp_se3(np.array([0.03, -0.02, 0.05, 1.3, -0.7, 2.1])) @ iso
    img, grad = diffreg.render_with_jacobian(vol, pose, k)
    np.testing.assert_array_equal(img, diffreg.render(vol, pose, k))
    assert grad.shape == (48, 48, 6)
    h = 1e-2
    e = np.zeros(6)
    e[4] = h
    fd = (diffreg.render(vol, diffreg.exp_se3(e) @ pose, k)
          - diffreg.render(vol, diffreg.exp_se3(-e) @ pose, k)) / (2 * h)
    tested = np.abs(fd) > 1e-8
    ok = np.abs(fd - grad[..., 4]) <= 1e-3 * np.abs(fd)
    assert ok[tested].mean() > 0.95


def test_sparse_render(scene):
    vol, _, k = scene
    centers = diffreg.sample_patch_centers(48, 48, 5, 7, seed=1)
    img, mask = diffreg.render(vol, diffreg.isocenter_pose(vol), k, centers=centers, patch_size=7)
    assert mask.sum() <= 5 * 49
    assert np.all(img[mask == 0] == 0)


def test_metrics_bounds():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(2, 20, 20))
    for s in (diffreg.ncc(a, b), diffreg.local_ncc(a, b, 5), diffreg.mncc(a, b, [5, diffreg.FULL_IMAGE])):
        assert -1 <= s <= 1
    assert diffreg.ncc(a, 2 * a + 1) == pytest.approx(1.0)
    centers = diffreg.sample_patch_centers(20, 20, 4, 5, seed=2)
    assert diffreg.sparse_mncc(a, a, centers, 5) == pytest.approx(1.0)
    assert diffreg.mse(a, a) == 0.0
    with pytest.raises(diffreg.DegenerateInput):
        diffreg.ncc(np.ones((8, 8)), b[:8, :8])


def test_register_from_truth(scene):
    vol, landmarks, k = scene
    truth = diffreg.exp_se3(np.array([0.02, -0.01, 0.03, 2.0, -1.0, 3.0])) @ diffreg.isocenter_pose(vol)
    fixed = diffreg.render(vol, truth, k)
    res = diffreg.register(fixed, vol, k, truth, iters=3, n_patches=20, patch_size=7)
    assert res["similarity"] == pytest.approx(1.0, abs=1e-9)
    assert diffreg.mtre(truth, res["pose"], landmarks) < 1e-6
    assert len(res["similarities"]) == res["iterations"]


def test_register_improves(scene):
    vol, landmarks, k = scene
    iso = diffreg.isocenter_pose(vol)
    truth = diffreg.exp_se3(np.array([0.0, 0.0, 0.0, 0.0, 2.0, 0.0])) @ iso
    fixed = diffreg.render(vol, truth, k)
    res = diffreg.register(fixed, vol, k, iso, metric="mncc", iters=40, early_stop=False,
                           lr_trans=1.0, patch_size=7)
    assert diffreg.mtre(truth, res["pose"], landmarks) < diffreg.mtre(truth, iso, landmarks)


def test_bad_arguments(scene):
    vol, _, k = scene
    with pytest.raises(ValueError):
        diffreg.render(vol, np.eye(4) * 2, k)
    with pytest.raises(ValueError):
        diffreg.register(np.zeros((48, 48)), vol, k, np.eye(4), metric="nope")
