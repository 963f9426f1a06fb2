import numpy as np
import pytest

from losslandscape.data import make_synthetic
from losslandscape.models import ParamVector, build, mlp_spec
from losslandscape.objectives import ModelObjective
from losslandscape.trainer import Checkpoint, TrainConfig, TrajectoryRecord, train
from losslandscape.trajectory import (
    captured_variance,
    difference_matrix,
    fit_axis,
    pca_directions,
    project,
    random_orthonormal_pair,
    trajectory_surface,
)


def _svd_oracle(w):
    m = w[:-1] - w[-1]
    _, s, vt = np.linalg.svd(m, full_matrices=False)
    return s**2 / np.sum(s**2), vt


def test_matches_dense_svd(rng):
    w = rng.standard_normal((11, 50))
    frac, vt = _svd_oracle(w)
    p = pca_directions(w)
    np.testing.assert_allclose(p.explained, frac[:2], atol=1e-8)
    for k in range(2):
        assert min(np.abs(p.axes[k] - vt[k]).max(), np.abs(p.axes[k] + vt[k]).max()) < 1e-8
    np.testing.assert_allclose(p.axes @ p.axes.T, np.eye(2), atol=1e-10)


def test_straight_line_is_rank_one(rng):
    d = rng.standard_normal(30)
    w = np.outer(np.linspace(0, 1, 8), d)
    p = pca_directions(w)
    assert abs(p.explained[0] - 1) < 1e-12
    assert p.degenerate == (False, True)
    assert np.all(p.axes[1] == 0)


def test_plane_trajectory_sums_to_one(rng):
    w = np.zeros((9, 40))
    w[:, 3] = rng.standard_normal(9)
    w[:, 17] = rng.standard_normal(9)
    p = pca_directions(w)
    assert abs(p.explained.sum() - 1) < 1e-10


def test_row_order_does_not_matter(rng):
    w = rng.standard_normal((8, 20))
    perm = np.concatenate([rng.permutation(7), [7]])
    np.testing.assert_allclose(pca_directions(w).explained, pca_directions(w[perm]).explained, rtol=1e-12)


def test_needs_three_checkpoints(rng):
    with pytest.raises(ValueError):
        pca_directions(rng.standard_normal((2, 5)))


def test_projection_basics(rng):
    w = rng.standard_normal((6, 12))
    p = pca_directions(w)
    c = project(w, p.axes)
    assert np.all(c[-1] == 0)
    np.testing.assert_allclose(c, p.coords)
    with pytest.raises(ValueError):
        project(w, np.zeros((2, 5)))
    still = np.tile(w[0], (5, 1))
    assert np.all(project(still, random_orthonormal_pair(12, 0)) == 0)


def test_reconstruction_residual(rng):
    w = rng.standard_normal((10, 25))
    p = pca_directions(w)
    m = difference_matrix(w)
    recon = p.coords[:-1] @ p.axes
    total = np.sum(m * m)
    assert abs(np.sum((m - recon) ** 2) - (1 - p.captured) * total) < 1e-8 * total


def test_random_pair_is_orthonormal():
    q = random_orthonormal_pair(100, 3)
    np.testing.assert_allclose(q @ q.T, np.eye(2), atol=1e-12)
    assert np.array_equal(q, random_orthonormal_pair(100, 3))


def test_fit_axis():
    a = fit_axis(np.array([0.2, 1.0]), 11)
    assert a.min < 0 < 1.0 < a.max and a.steps == 11
    z = fit_axis(np.zeros(3), 5)
    assert (z.min, z.max) == (-1.0, 1.0)


@pytest.fixture(scope="module")
def run():
    model, theta = build(mlp_spec(depth=2, width=16), 0)
    ds = make_synthetic("two-moons", 128, 0.1, 0)
    rec = train(model, theta, ds, TrainConfig(batch_size=16, epochs=12, lr_drops=(6,), seed=0))
    return model, rec, ModelObjective(model, ds)


def test_real_run_pca_beats_random(run):
    _, rec, _ = run
    p = pca_directions(rec)
    assert p.captured >= 0.4
    n = rec.final.layout.weight_mask.sum()
    for s in range(10):
        assert captured_variance(rec, random_orthonormal_pair(n, s)) < p.captured


def test_surface_overlay(run):
    model, rec, obj = run
    p = pca_directions(rec)
    ts = trajectory_surface(rec, p, ("-1:1:5", "-1:1:5"), obj)
    assert ts.grid.shape == (5, 5)
    np.testing.assert_array_equal(ts.coords[-1], [0, 0])
    np.testing.assert_array_equal(ts.plane_coords[-1], [0, 0])
    assert ts.grid.loss[2, 2] == obj.evaluate(rec.final)[0]
    assert ts.lr_drop.tolist() == [e == 6 for e in rec.epochs]
    assert ts.meta["pca_projection"] == "orthonormal"
    assert p.direction(0).scheme == "none"
    dirs = ts.grid.meta
    assert dirs["x_scheme"] == "filter"


def test_rank_one_falls_back_to_profile():
    model, theta = build(mlp_spec(2, 2, depth=1, width=4), 0)
    lay = theta.layout
    step = np.where(lay.weight_mask, 0.1, 0.0)
    cks = [Checkpoint(i, ParamVector(theta.data + i * step, lay)) for i in range(4)]
    rec = TrajectoryRecord(cks)
    obj = ModelObjective(model, make_synthetic("two-moons", 16, 0.1, 0))
    p = pca_directions(rec)
    ts = trajectory_surface(rec, p, ("-1:1:5", "-1:1:5"), obj)
    assert ts.grid.ndim == 1


def test_still_trajectory_sits_at_origin():
    model, theta = build(mlp_spec(2, 2, depth=1, width=4), 0)
    rec = TrajectoryRecord([Checkpoint(i, theta) for i in range(4)])
    obj = ModelObjective(model, make_synthetic("two-moons", 16, 0.1, 0))
    p = pca_directions(rec)
    assert p.degenerate == (True, True) and np.all(p.explained == 0)
    ts = trajectory_surface(rec, p, ("-1:1:3", "-1:1:3"), obj)
    assert np.all(ts.coords == 0) and np.all(ts.plane_coords == 0)
    assert ts.grid.ndim == 2
