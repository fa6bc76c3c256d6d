"""End-to-end smoke tests for the python bindings."""

import numpy as np
import pytest

import lsepose


@pytest.fixture(scope="module")
def wedge_model():
    mesh = lsepose.make_wedge(1.0)
    samples = lsepose.sample_surface(mesh, 1500, 7)
    params = lsepose.LseParams()
    index = lsepose.build_index(samples, params, "wedge")
    return lsepose.LoadedModel("wedge", False, mesh, index)


@pytest.fixture(scope="module")
def camera():
    cam = lsepose.CameraIntrinsics()
    cam.fx = cam.fy = 400.0
    cam.cx, cam.cy = 160.0, 120.0
    cam.width, cam.height = 320, 240
    return cam


def make_pose(seed, z=60.0):
    rng = np.random.default_rng(seed)
    # random rotation via QR of a gaussian matrix
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return lsepose.Pose(q, np.array([0.0, 0.0, z]))


def test_mesh_and_sampling():
    mesh = lsepose.make_lblock(1.0)
    assert mesh.vertex_count > 0
    samples = lsepose.sample_surface(mesh, 500, 3)
    assert len(samples) == 500
    diameter = lsepose.model_diameter(samples)
    assert 10.0 < diameter < 25.0


def test_index_self_query(wedge_model):
    index = wedge_model  # LoadedModel
    # re-build a small index to query directly
    mesh = lsepose.make_wedge(1.0)
    samples = lsepose.sample_surface(mesh, 800, 5)
    idx = lsepose.build_index(samples, lsepose.LseParams(), "wedge")
    v = idx.vector(10)
    hits = idx.knn(v, 5)
    assert hits[0].distance == 0.0
    assert np.allclose(idx.vector(hits[0].entry), v)
    # accelerated and linear paths agree
    lin = idx.knn_linear(v, 5)
    assert [h.entry for h in hits] == [h.entry for h in lin]


def test_pnp_recovery(camera):
    rng = np.random.default_rng(11)
    pose = make_pose(11, z=30.0)
    points = rng.uniform(-3, 3, size=(8, 3))
    pixels = np.zeros((8, 2))
    for i, p in enumerate(points):
        q = pose.apply(p)
        pixels[i] = [
            camera.fx * q[0] / q[2] + camera.cx,
            camera.fy * q[1] / q[2] + camera.cy,
        ]
    got = lsepose.solve_pnp(pixels, points, camera)
    assert np.allclose(got.rotation, pose.rotation, atol=1e-6)
    assert np.allclose(got.translation, pose.translation, atol=1e-5)


def test_full_pipeline(wedge_model, camera, tmp_path):
    spec = lsepose.SceneSpec()
    spec.name = "smoke"
    spec.camera = camera
    spec.seed = 9
    spec.objects = [lsepose.ObjectPlacement("wedge", make_pose(9))]

    mesh = lsepose.make_wedge(1.0)
    samples = lsepose.sample_surface(mesh, 1500, 7)
    index = lsepose.build_index(samples, lsepose.LseParams(), "wedge")
    bundle = lsepose.render_scene(spec, {"wedge": mesh}, {"wedge": index})

    depth = bundle.scene_depth()
    assert depth.shape == (240, 320)
    assert np.isfinite(depth).sum() > 2000
    assert bundle.mask_count == 1
    assert bundle.mask(0).sum() == np.isfinite(depth).sum()

    # round trip through the on-disk layout
    lsepose.write_scene(tmp_path / "scene", bundle)
    back = lsepose.read_scene(tmp_path / "scene")
    assert np.array_equal(back.scene_depth(), depth, equal_nan=True)

    cfg = lsepose.PipelineConfig()
    cfg.seed = 5
    cfg.ransac.n_iter = 200
    hyps = lsepose.estimate_scene(bundle, [wedge_model], cfg, 1)
    assert len(hyps) == 1
    assert hyps[0].model_id == "wedge"
    assert hyps[0].score > 0.8

    records = lsepose.evaluate_scene("smoke", bundle, [wedge_model], hyps, cfg)
    report = lsepose.aggregate(records, cfg.vsd)
    assert report.add_recall == 1.0
    assert report.vsd_recall == 1.0
    assert records[0].add < 0.02 * wedge_model.diameter
