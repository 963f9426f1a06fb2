import numpy as np
import pytest

from losslandscape.models import (
    KINDS,
    LayerSpec,
    ModelError,
    ModelSpec,
    ParamVector,
    build,
    convnet_spec,
    filters_of,
    mlp_spec,
    rescale_pair,
    skipnet_spec,
)

ALL_SPECS = {
    "mlp": mlp_spec(2, 2, depth=3, width=8),
    "mlp-bn": mlp_spec(2, 3, depth=2, width=8, batchnorm=True),
    "convnet": convnet_spec((1, 6, 6), 4, depth=2, channels=3),
    "skipnet": skipnet_spec((1, 6, 6), 4, depth=5, channels=3),
}


def test_linear_layer_filters():
    spec = ModelSpec((LayerSpec("linear", out=3),), (2,), 3)
    _, theta = build(spec, 0)
    ranges = filters_of(theta, 0)
    assert ranges == [(0, 2), (2, 4), (4, 6)]


def test_conv_layer_filters():
    spec = ModelSpec(
        (LayerSpec("conv", out=8, kernel=3), LayerSpec("flatten"), LayerSpec("linear", out=2)), (3, 4, 4), 2
    )
    _, theta = build(spec, 0)
    ranges = filters_of(theta, 0)
    assert len(ranges) == 8
    assert all(b - a == 27 for a, b in ranges)


def test_small_conv_and_linear_filters():
    spec = ModelSpec(
        (LayerSpec("conv", out=2, kernel=2, padding=0), LayerSpec("flatten"), LayerSpec("linear", out=2)),
        (1, 2, 2), 2,
    )
    _, theta = build(spec, 0)
    assert [b - a for a, b in filters_of(theta, 0)] == [4, 4]
    spec = ModelSpec((LayerSpec("linear", out=2),), (4,), 2)
    _, theta = build(spec, 0)
    assert [b - a for a, b in filters_of(theta, 0)] == [4, 4]


def test_bias_entries_are_in_no_filter():
    _, theta = build(ALL_SPECS["mlp"], 0)
    covered = np.zeros(theta.layout.size, dtype=bool)
    for layer in range(len(theta.layout.weight_regions)):
        for a, b in filters_of(theta, layer):
            covered[a:b] = True
    assert not np.any(covered & theta.layout.mask("bias"))
    np.testing.assert_array_equal(covered, theta.layout.weight_mask)


def test_filters_of_out_of_range():
    _, theta = build(ALL_SPECS["mlp"], 0)
    with pytest.raises(IndexError):
        filters_of(theta, 4)


@pytest.mark.parametrize("name", sorted(ALL_SPECS))
def test_regions_partition_the_vector(name):
    model, theta = build(ALL_SPECS[name], 0)
    regions = theta.layout.regions
    assert regions[0].start == 0
    for a, b in zip(regions, regions[1:]):
        assert a.stop == b.start
    assert sum(r.size for r in regions) == model.size == theta.data.size
    assert all(r.kind in KINDS for r in regions)
    counts = sum(theta.layout.mask(k).sum() for k in KINDS)
    assert counts == model.size


@pytest.mark.parametrize("name", sorted(ALL_SPECS))
def test_same_seed_same_parameters(name):
    _, a = build(ALL_SPECS[name], 9)
    _, b = build(ALL_SPECS[name], 9)
    assert a.data.tobytes() == b.data.tobytes()


def test_initialization_conventions():
    _, theta = build(ALL_SPECS["skipnet"], 0)
    lay = theta.layout
    assert np.all(theta.data[lay.mask("bias")] == 0)
    assert np.all(theta.data[lay.mask("bn-shift")] == 0)
    assert np.all(theta.data[lay.mask("bn-scale")] == 1)
    for r in lay.weight_regions:
        fan_in = int(np.prod(r.shape[1:]))
        fan_out = r.shape[0] * (int(np.prod(r.shape[2:])) if len(r.shape) > 2 else 1)
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        assert np.abs(theta.data[r.start : r.stop]).max() <= bound


def test_incompatible_chain_names_the_layer():
    spec = ModelSpec(
        (LayerSpec("conv", out=2, kernel=3), LayerSpec("skip", inner=(LayerSpec("conv", out=3, kernel=3),)),
         LayerSpec("flatten"), LayerSpec("linear", out=2)),
        (1, 4, 4), 2,
    )
    with pytest.raises(ModelError, match="skip"):
        build(spec, 0)


def test_wrong_class_count_is_rejected():
    spec = ModelSpec((LayerSpec("linear", out=3),), (2,), 2)
    with pytest.raises(ModelError):
        build(spec, 0)


def test_skip_block_adds_identity(rng):
    inner = (LayerSpec("conv", out=2, kernel=3), LayerSpec("relu"))
    with_skip = ModelSpec(
        (LayerSpec("conv", out=2, kernel=3), LayerSpec("skip", inner=inner), LayerSpec("flatten"),
         LayerSpec("linear", out=2)), (1, 4, 4), 2,
    )
    model, theta = build(with_skip, 1)
    x = rng.standard_normal((3, 1, 4, 4))
    lay = theta.layout
    # zeroing the inner conv makes the block an exact identity
    inner_w = [r for r in lay.regions if r.name.startswith("2.")]
    data = theta.data.copy()
    for r in inner_w:
        data[r.start : r.stop] = 0.0
    plain = ModelSpec(
        (LayerSpec("conv", out=2, kernel=3), LayerSpec("flatten"), LayerSpec("linear", out=2)), (1, 4, 4), 2
    )
    pmodel, _ = build(plain, 0)
    keep = np.ones(lay.size, dtype=bool)
    for r in inner_w:
        keep[r.start : r.stop] = False
    out_skip = model.forward(data, x).data
    out_plain = pmodel.forward(data[keep], x).data
    np.testing.assert_array_equal(out_skip, out_plain)


def test_spec_text_round_trip():
    for spec in ALL_SPECS.values():
        text = spec.to_text()
        again = ModelSpec.from_text(text)
        assert again == spec
        assert again.digest == spec.digest


def test_rescale_identity():
    _, theta = build(ALL_SPECS["mlp"], 0)
    assert rescale_pair(theta, 0, 1.0).data.tobytes() == theta.data.tobytes()


def test_rescale_preserves_bias_free_network(rng):
    model, theta = build(mlp_spec(3, 2, depth=1, width=6, bias=False), 4)
    x = rng.standard_normal((50, 3))
    y = rng.integers(0, 2, 50)
    scaled = rescale_pair(theta, 0, 10.0)
    a, b = model.forward(theta, x).data, model.forward(scaled, x).data
    assert np.max(np.abs(a - b)) < 1e-9
    assert abs(model.loss(theta, x, y).item() - model.loss(scaled, x, y).item()) < 1e-9


def test_rescale_through_pool_and_flatten(rng):
    spec = ModelSpec(
        (LayerSpec("conv", out=2, kernel=3, bias=False), LayerSpec("relu"), LayerSpec("maxpool"),
         LayerSpec("flatten"), LayerSpec("linear", out=2, bias=False)), (1, 4, 4), 2,
    )
    model, theta = build(spec, 0)
    x = rng.standard_normal((4, 1, 4, 4))
    out = model.forward(rescale_pair(theta, 0, 3.0), x).data
    np.testing.assert_allclose(out, model.forward(theta, x).data, rtol=1e-12, atol=1e-12)


def test_rescale_rejects_batchnorm_between():
    _, theta = build(ALL_SPECS["mlp-bn"], 0)
    with pytest.raises(ModelError, match="batchnorm"):
        rescale_pair(theta, 0, 2.0)


def test_rescale_rejects_bad_factor_and_last_layer():
    _, theta = build(ALL_SPECS["mlp"], 0)
    with pytest.raises(ValueError):
        rescale_pair(theta, 0, 0.0)
    with pytest.raises(IndexError):
        rescale_pair(theta, 3, 2.0)


def test_param_vector_checks_length():
    _, theta = build(ALL_SPECS["mlp"], 0)
    with pytest.raises(ValueError):
        ParamVector(np.zeros(3), theta.layout)


def test_layout_table_round_trip():
    from losslandscape.models import Layout

    _, theta = build(ALL_SPECS["skipnet"], 0)
    assert Layout.from_table(theta.layout.to_table()) == theta.layout
