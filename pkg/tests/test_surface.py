import numpy as np
import pytest

from losslandscape.data import make_synthetic
from losslandscape.directions import Direction, random_direction
from losslandscape.models import ParamVector, build, mlp_spec
from losslandscape.objectives import ModelObjective, QuadraticObjective
from losslandscape.render import width_summary
from losslandscape.surface import (
    OVERFLOW_SENTINEL,
    AxisSpec,
    LossGrid,
    digest,
    grid_2d,
    interpolate_1d,
    ray_1d,
    repeat_study,
)


@pytest.fixture(scope="module")
def setup():
    model, theta = build(mlp_spec(2, 2, depth=2, width=8), 0)
    train = ModelObjective(model, make_synthetic("two-moons", 64, 0.15, 0))
    test = ModelObjective(model, make_synthetic("two-moons", 32, 0.15, 1).subset(np.arange(32)))
    return model, theta, train, test


def test_axis_spec():
    a = AxisSpec.parse("-1:1:5")
    np.testing.assert_array_equal(a.points(), [-1, -0.5, 0, 0.5, 1])
    assert str(AxisSpec.parse(str(a))) == str(a)
    for bad in ("1:-1:51", "0:1:1", "a:b:c", "0:1"):
        with pytest.raises(ValueError):
            AxisSpec.parse(bad)


def test_center_requires_zero():
    g = ray_1d(np.zeros(2), np.ones(2), "0.5:1:3", QuadraticObjective(np.eye(2)))
    with pytest.raises(ValueError):
        g.center_index()


def test_interpolation_scalar_square():
    obj = QuadraticObjective(np.array([[2.0]]))
    g = interpolate_1d(np.zeros(1), np.array([2.0]), "0:1:3", obj)
    assert g.loss.tolist() == [0.0, 1.0, 4.0]


def test_interpolation_equal_endpoints_is_constant(setup):
    model, theta, train, _ = setup
    g = interpolate_1d(theta, theta, "-0.5:1.5:9", train)
    assert np.all(g.loss == g.loss[0])


def test_interpolation_endpoints_are_exact(setup):
    model, theta, train, test = setup
    _, other = build(mlp_spec(2, 2, depth=2, width=8), 1)
    g = interpolate_1d(theta, other, "-0.5:1.5:41", train, test)
    xs = g.coords[0]
    i0, i1 = int(np.flatnonzero(xs == 0)[0]), int(np.flatnonzero(xs == 1)[0])
    assert g.loss[i0] == train.evaluate(theta)[0]
    assert g.loss[i1] == train.evaluate(other)[0]
    assert g.values["test_loss"][i1] == test.evaluate(other)[0]


def test_interpolation_states_mode_with_batchnorm():
    model, a = build(mlp_spec(2, 2, depth=2, width=6, batchnorm=True), 0)
    _, b = build(mlp_spec(2, 2, depth=2, width=6, batchnorm=True), 1)
    running = a.layout.mask("bn-running-stat")
    bdata = b.data.copy()
    bdata[running] = np.abs(bdata[running]) + 0.5
    b = ParamVector(bdata, b.layout)
    obj = ModelObjective(model, make_synthetic("two-moons", 32, 0.1, 0))
    states = interpolate_1d(a, b, "0:1:3", obj, dir_type="states")
    assert states.loss[-1] == obj.evaluate(b)[0]
    weights = interpolate_1d(a, b, "0:1:3", obj, dir_type="weights")
    assert weights.loss[-1] != obj.evaluate(b)[0]
    with pytest.raises(ValueError):
        interpolate_1d(a, b, "0:1:3", obj, dir_type="both")


def test_interpolation_rejects_other_spec(setup):
    _, theta, train, _ = setup
    _, other = build(mlp_spec(2, 2, depth=2, width=9), 0)
    with pytest.raises(ValueError, match="spec"):
        interpolate_1d(theta, other, "0:1:3", train)


def test_ray_quadratic_closed_form(rng):
    obj = QuadraticObjective(np.eye(6))
    d = rng.standard_normal(6)
    d /= np.linalg.norm(d)
    g = ray_1d(np.zeros(6), d, "-1:1:401", obj)
    np.testing.assert_allclose(g.loss, g.coords[0] ** 2 / 2, rtol=1e-13, atol=1e-16)


def test_ray_symmetry_and_zero_direction(setup):
    _, theta, train, _ = setup
    d = random_direction(theta, 3)
    a = ray_1d(theta, d, "-1:1:21", train).loss
    b = ray_1d(theta, -d, "-1:1:21", train).loss
    np.testing.assert_array_equal(a, b[::-1])
    z = ray_1d(theta, np.zeros(theta.layout.size), "-1:1:5", train).loss
    assert np.all(z == train.evaluate(theta)[0])


def test_ray_center_and_dimension(setup):
    _, theta, train, _ = setup
    g = ray_1d(theta, random_direction(theta, 3), "-1:1:11", train)
    assert g.loss[g.center_index()] == train.evaluate(theta)[0]
    assert g.meta["x_seed"] == "3" and g.meta["center"] == digest(theta)
    with pytest.raises(ValueError):
        ray_1d(theta, np.zeros(3), "-1:1:11", train)


def test_ray_second_derivative_on_quadratic(rng):
    for _ in range(3):
        n = int(rng.integers(3, 30))
        m = rng.standard_normal((n, n))
        a = m @ m.T + n * np.eye(n)
        d = rng.standard_normal(n)
        g = ray_1d(np.zeros(n), d, "-1:1:41", QuadraticObjective(a))
        c2 = np.polyfit(g.coords[0], g.loss, 2)[0]
        assert abs(2 * c2 - d @ a @ d) <= 1e-6 * abs(d @ a @ d)


def test_plane_quadratic_closed_form():
    obj = QuadraticObjective(np.eye(3))
    g = grid_2d(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), ("-1:1:5", "-1:1:5"), obj)
    a, b = np.meshgrid(*g.coords, indexing="ij")
    np.testing.assert_allclose(g.loss, (a**2 + b**2) / 2, rtol=1e-15)
    z = grid_2d(np.ones(3), np.zeros(3), np.zeros(3), ("-1:1:3", "-1:1:3"), obj)
    assert np.all(z.loss == 1.5)


def test_plane_matches_brute_force(setup):
    model, theta, train, _ = setup
    dx, dy = random_direction(theta, 1), random_direction(theta, 2)
    g = grid_2d(theta, dx, dy, ("-1:1:3", "-1:1:3"), train)
    xs, ys = g.coords
    for i in range(3):
        for j in range(3):
            p = theta.data + xs[i] * dx.data + ys[j] * dy.data
            assert g.loss[i, j] == train.evaluate(p)[0]
    assert g.loss[1, 1] == train.evaluate(theta)[0]


def test_plane_rejects_same_seed(setup):
    _, theta, train, _ = setup
    with pytest.raises(ValueError, match="seed"):
        grid_2d(theta, random_direction(theta, 1), random_direction(theta, 1), ("-1:1:3", "-1:1:3"), train)


def test_bn_entries_not_perturbed():
    model, theta = build(mlp_spec(2, 2, depth=2, width=6, batchnorm=True), 0)
    d = random_direction(theta, 1)
    lay = theta.layout
    assert np.all(d.data[lay.mask("bn-scale", "bn-shift", "bn-running-stat")] == 0)


def test_parallel_equals_sequential(setup):
    _, theta, train, test = setup
    dx, dy = random_direction(theta, 1), random_direction(theta, 2)
    a = grid_2d(theta, dx, dy, ("-1:1:7", "-1:1:7"), train, test, workers=1)
    b = grid_2d(theta, dx, dy, ("-1:1:7", "-1:1:7"), train, test, workers=4)
    for k in a.values:
        assert a.values[k].tobytes() == b.values[k].tobytes()


def test_overflow_is_flagged():
    class Exploding:
        split = "train"
        spec_hash = "x"

        def evaluate(self, theta):
            return (np.inf if theta[0] > 0.5 else 1.0), 0.0

    g = ray_1d(np.zeros(1), np.ones(1), "-1:1:5", Exploding())
    assert g.overflow.tolist() == [False, False, False, False, True]
    assert g.loss[-1] == OVERFLOW_SENTINEL


def test_grid_shape_check():
    with pytest.raises(ValueError):
        LossGrid((AxisSpec(-1, 1, 3),), {"train_loss": np.zeros(4)}, {}, np.zeros(4, dtype=bool))


def test_repeat_study(setup):
    _, theta, train, _ = setup
    grids = repeat_study(theta, "-1:1:21", train, seeds=[4, 4])
    assert grids[0].loss.tobytes() == grids[1].loss.tobytes()
    grids = repeat_study(theta, ("-1:1:5", "-1:1:5"), train, n_seeds=2)
    assert [g.meta["repeat_seed"] for g in grids] == ["1", "2"]
    assert grids[0].shape == (5, 5)
    with pytest.raises(ValueError):
        repeat_study(theta, "-1:1:5", train, n_seeds=1)


def test_repeat_study_on_trained_model():
    from losslandscape.trainer import TrainConfig, train as fit

    model, theta = build(mlp_spec(depth=2, width=32), 0)
    ds = make_synthetic("two-moons", 128, 0.1, 0)
    rec = fit(model, theta, ds, TrainConfig(batch_size=16, epochs=30))
    obj = ModelObjective(model, ds)
    grids = repeat_study(rec.final, "-1:1:41", obj, n_seeds=10)
    for g in grids:
        assert abs(int(np.argmin(g.loss)) - 20) <= 1
    assert width_summary(grids)["cv"] < 0.5


def test_direction_meta_in_plane(setup):
    _, theta, train, _ = setup
    dx = random_direction(theta, 1)
    dy = Direction(np.zeros(theta.layout.size), theta.layout)
    g = grid_2d(theta, dx, dy, ("-1:1:3", "-1:1:3"), train)
    assert g.meta["x_scheme"] == "filter" and g.meta["y_seed"] == "none"
