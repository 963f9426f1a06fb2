import numpy as np
import pytest

from losslandscape.data import make_synthetic
from losslandscape.directions import (
    Direction,
    cosine_similarity,
    filter_normalize,
    layer_normalize,
    normalize,
    random_direction,
    sample_gaussian,
)
from losslandscape.models import LayerSpec, ModelSpec, ParamVector, build, filters_of, mlp_spec, rescale_pair
from losslandscape.objectives import ModelObjective
from losslandscape.surface import ray_1d
from test_models import ALL_SPECS


def _filter_norms(vec, theta):
    out = []
    for layer in range(len(theta.layout.weight_regions)):
        out += [np.linalg.norm(vec[a:b]) for a, b in filters_of(theta, layer)]
    return np.array(out)


def _single_linear(out, inp):
    _, theta = build(ModelSpec((LayerSpec("linear", out=out),), (inp,), out), 0)
    return theta


def test_filter_rescale_hand_example():
    theta = _single_linear(2, 2)
    data = np.zeros(theta.layout.size)
    data[:4] = [6.0, 8.0, 1.0, 0.0]
    theta = ParamVector(data, theta.layout)
    d = Direction(np.array([3.0, 4.0, 0.0, 2.0, 0.0, 0.0]), theta.layout)
    out = filter_normalize(d, theta)
    np.testing.assert_allclose(out.data, [6.0, 8.0, 0.0, 1.0, 0.0, 0.0], rtol=1e-15)
    assert out.scheme == "filter"


def test_direction_equal_to_theta_is_unchanged():
    _, theta = build(ALL_SPECS["convnet"], 2)
    w = theta.layout.weight_mask
    d = Direction(np.where(w, theta.data, 0.0), theta.layout)
    np.testing.assert_allclose(filter_normalize(d, theta).data, d.data, rtol=1e-13)


def test_zero_theta_filter_gives_zero():
    theta = _single_linear(2, 2)
    data = theta.data.copy()
    data[0:2] = 0.0
    out = filter_normalize(sample_gaussian(theta, 0), ParamVector(data, theta.layout))
    assert np.all(out.data[0:2] == 0.0)
    assert np.all(out.data[2:4] != 0.0)


def test_zero_direction_filter_gives_zero():
    theta = _single_linear(2, 2)
    d = sample_gaussian(theta, 0)
    d.data[2:4] = 0.0
    out = filter_normalize(d, theta)
    assert np.all(out.data[2:4] == 0.0)


@pytest.mark.parametrize("name", sorted(ALL_SPECS))
def test_filter_norms_match(name):
    _, theta = build(ALL_SPECS[name], 1)
    d = random_direction(theta, 7)
    np.testing.assert_allclose(_filter_norms(d.data, theta), _filter_norms(theta.data, theta), rtol=1e-12)
    assert np.all(d.data[~theta.layout.weight_mask] == 0.0)


def test_direction_within_filter_unchanged():
    _, theta = build(ALL_SPECS["mlp"], 1)
    d = sample_gaussian(theta, 3)
    out = filter_normalize(d, theta)
    for a, b in filters_of(theta, 1):
        u, v = d.data[a:b], out.data[a:b]
        assert abs(cosine_similarity(u, v) - 1.0) < 1e-12


def test_layer_normalization():
    _, theta = build(ALL_SPECS["mlp"], 1)
    out = layer_normalize(sample_gaussian(theta, 3), theta)
    for r in theta.layout.weight_regions:
        a, b = r.start, r.stop
        assert abs(np.linalg.norm(out.data[a:b]) / np.linalg.norm(theta.data[a:b]) - 1) < 1e-12


def test_layer_scale_factor():
    theta = _single_linear(2, 2)
    data = np.zeros(theta.layout.size)
    data[:4] = [6.0, 0.0, 0.0, 0.0]
    theta = ParamVector(data, theta.layout)
    d = Direction(np.array([0.0, 2.0, 0.0, 0.0, 0.0, 0.0]), theta.layout)
    np.testing.assert_allclose(layer_normalize(d, theta).data[:4], [0.0, 6.0, 0.0, 0.0])


def test_layer_and_filter_agree_only_for_one_filter():
    one = _single_linear(1, 3)
    d = sample_gaussian(one, 0)
    np.testing.assert_allclose(filter_normalize(d, one).data, layer_normalize(d, one).data, rtol=1e-14)
    two = _single_linear(2, 3)
    d = sample_gaussian(two, 0)
    assert not np.allclose(filter_normalize(d, two).data, layer_normalize(d, two).data)


def test_sampling_is_deterministic_and_ignores_bias():
    _, theta = build(ALL_SPECS["mlp-bn"], 0)
    a, b = sample_gaussian(theta, 11), sample_gaussian(theta, 11)
    assert a.data.tobytes() == b.data.tobytes()
    assert np.all(a.data[~theta.layout.weight_mask] == 0.0)
    full = sample_gaussian(theta, 11, ignore="none")
    assert np.all(full.data[theta.layout.mask("bn-running-stat")] == 0.0)
    assert np.all(full.data[theta.layout.mask("bias")] != 0.0)
    states = sample_gaussian(theta, 11, ignore="none", dir_type="states")
    assert np.all(states.data[theta.layout.mask("bn-running-stat")] != 0.0)


def test_sample_moments():
    _, theta = build(mlp_spec(2, 2, depth=3, width=128), 0)
    d = sample_gaussian(theta, 5)
    w = d.data[theta.layout.weight_mask]
    assert w.size >= 10_000
    assert abs(w.mean()) < 0.05 and abs(w.var() - 1) < 0.05


def test_ignore_none_normalizes_bias_per_layer():
    _, theta = build(ALL_SPECS["mlp-bn"], 0)
    data = theta.data.copy()
    data[theta.layout.mask("bias")] = 0.3
    theta = ParamVector(data, theta.layout)
    d = random_direction(theta, 2, ignore="none")
    for r in theta.layout.regions:
        if r.kind in ("bias", "bn-scale", "bn-shift"):
            dn = np.linalg.norm(d.data[r.start : r.stop])
            tn = np.linalg.norm(theta.data[r.start : r.stop])
            assert abs(dn - tn) <= 1e-12 * max(tn, 1.0)


def test_idempotent_and_scale_equivariant():
    _, theta = build(ALL_SPECS["skipnet"], 0)
    d = random_direction(theta, 4)
    np.testing.assert_allclose(filter_normalize(d, theta).data, d.data, rtol=1e-12, atol=0)
    scaled = ParamVector(theta.data * 3.5, theta.layout)
    np.testing.assert_allclose(
        filter_normalize(sample_gaussian(theta, 4), scaled).data, 3.5 * d.data, rtol=1e-12, atol=1e-15
    )


def test_unknown_options():
    _, theta = build(ALL_SPECS["mlp"], 0)
    with pytest.raises(ValueError):
        normalize(sample_gaussian(theta, 0), theta, "unit")
    with pytest.raises(ValueError):
        sample_gaussian(theta, 0, ignore="bias")
    with pytest.raises(ValueError):
        Direction(np.zeros(3), theta.layout)


def test_cosine_similarity_basics(rng):
    d = rng.standard_normal(30)
    assert abs(cosine_similarity(d, d) - 1) < 1e-15
    assert abs(cosine_similarity(d, -d) + 1) < 1e-15
    with pytest.raises(ValueError):
        cosine_similarity(d, np.zeros(30))
    with pytest.raises(ValueError):
        cosine_similarity(d, d[:5])


def test_scale_invariant_profiles():
    model, theta = build(mlp_spec(2, 2, depth=2, width=16, bias=False), 3)
    obj = ModelObjective(model, make_synthetic("two-moons", 64, 0.1, 0))
    scaled = rescale_pair(theta, 0, 10.0)
    a = ray_1d(theta, random_direction(theta, 9), "-1:1:41", obj).loss
    b = ray_1d(scaled, random_direction(scaled, 9), "-1:1:41", obj).loss
    np.testing.assert_allclose(a, b, rtol=1e-9)
    # without normalization the rescaled net looks different
    c = ray_1d(scaled, random_direction(scaled, 9, scheme="none"), "-1:1:41", obj).loss
    d = ray_1d(theta, random_direction(theta, 9, scheme="none"), "-1:1:41", obj).loss
    assert np.max(np.abs(c - d)) > 1e-3
