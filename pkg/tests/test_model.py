"""ModelGraph construction, determinism, and binary round-trips."""

import numpy as np
import pytest

from anomdet.errors import DataError, ShapeError
from anomdet.nn import (
    LayerSpec,
    ModelGraph,
    RmsProp,
    load_model,
    mse,
    save_model,
)


def small_specs():
    return [
        LayerSpec("conv2d", filters=4, kernel=3, stride=1, padding=1),
        LayerSpec("activation", activation="relu"),
        LayerSpec("maxpool2d"),
        LayerSpec("batchnorm"),
        LayerSpec("flatten"),
        LayerSpec("dense", units=5),
        LayerSpec("activation", activation="sigmoid"),
    ]


def test_empty_layer_list_is_identity():
    m = ModelGraph([], (2, 3, 3), rng_seed=1)
    x = np.random.default_rng(0).standard_normal((4, 2, 3, 3))
    np.testing.assert_array_equal(m.forward(x), x)


def test_single_dense_identity_layer():
    m = ModelGraph(
        [LayerSpec("flatten"), LayerSpec("dense", units=4)], (1, 2, 2), rng_seed=1
    )
    m.params["1.w"] = np.eye(4, dtype=np.float32)
    x = np.random.default_rng(1).standard_normal((3, 1, 2, 2)).astype(np.float32)
    np.testing.assert_allclose(m.forward(x), x.reshape(3, 4))


def test_shape_inference_recorded_per_layer():
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=2)
    assert m.shapes == [
        (1, 8, 8),
        (4, 8, 8),
        (4, 8, 8),
        (4, 4, 4),
        (4, 4, 4),
        (64,),
        (5,),
        (5,),
    ]


def test_incompatible_stack_fails_with_layer_index():
    specs = [LayerSpec("dense", units=3)]  # dense straight onto (C,H,W)
    with pytest.raises(ShapeError, match=r"layer 0 \(dense\)"):
        ModelGraph(specs, (1, 4, 4), rng_seed=3)


def test_bad_reshape_element_count():
    specs = [LayerSpec("flatten"), LayerSpec("reshape", target_shape=(2, 3, 3))]
    with pytest.raises(ShapeError, match="layer 1"):
        ModelGraph(specs, (1, 4, 4), rng_seed=4)


def test_input_shape_validated_at_forward():
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=5)
    with pytest.raises(ShapeError, match="input shape"):
        m.forward(np.zeros((2, 1, 6, 6)))


def test_init_determinism_bitwise():
    a = ModelGraph(small_specs(), (1, 8, 8), rng_seed=77)
    b = ModelGraph(small_specs(), (1, 8, 8), rng_seed=77)
    assert a.params.keys() == b.params.keys()
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])
    c = ModelGraph(small_specs(), (1, 8, 8), rng_seed=78)
    assert any(not np.array_equal(a.params[k], c.params[k]) for k in a.params)


def test_init_ranges_follow_fan_rules():
    specs = [
        LayerSpec("conv2d", filters=8, kernel=3, stride=1, padding=1),
        LayerSpec("activation", activation="relu"),
        LayerSpec("flatten"),
        LayerSpec("dense", units=6),
        LayerSpec("activation", activation="sigmoid"),
    ]
    m = ModelGraph(specs, (2, 4, 4), rng_seed=6)
    he_limit = np.sqrt(6.0 / (2 * 9))  # feeds relu
    w0 = m.params["0.w"]
    assert np.max(np.abs(w0)) <= he_limit
    assert np.max(np.abs(w0)) > 0.8 * he_limit  # actually fills the range
    fan_in = 8 * 4 * 4  # conv keeps 4x4 at stride 1 pad 1
    xavier_limit = np.sqrt(6.0 / (fan_in + 6))  # feeds sigmoid
    w3 = m.params["3.w"]
    assert np.max(np.abs(w3)) <= xavier_limit
    assert np.max(np.abs(w3)) > 0.8 * xavier_limit


def test_biases_start_at_zero():
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=7)
    assert np.all(m.params["0.b"] == 0)
    assert np.all(m.params["5.b"] == 0)


def test_training_determinism_bitwise():
    def train_once():
        m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=42)
        opt = RmsProp(lr=1e-3)
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 1, 8, 8)).astype(np.float32)
        t = rng.uniform(0, 1, (4, 5)).astype(np.float32)
        for _ in range(5):
            caches = []
            y = m.forward(x, mode="train", caches=caches)
            _, dy = mse(y, t)
            _, grads = m.backward(dy, caches)
            opt.step(m.params, grads)
        return m

    a, b = train_once(), train_once()
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])
    for k in a.buffers:
        np.testing.assert_array_equal(a.buffers[k], b.buffers[k])


def test_forward_outputs_finite_on_finite_input():
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=8)
    x = np.random.default_rng(2).standard_normal((4, 1, 8, 8)).astype(np.float32)
    caches = []
    y = m.forward(x, mode="train", caches=caches)
    assert np.all(np.isfinite(y))
    _, grads = m.backward(np.ones_like(y), caches)
    assert all(np.all(np.isfinite(g)) for g in grads.values())


def test_forward_to_bottleneck():
    specs = [
        LayerSpec("conv2d", filters=3, kernel=3, stride=2, padding=1),
        LayerSpec("activation", activation="relu"),
        LayerSpec("flatten"),
    ]
    m = ModelGraph(specs, (1, 8, 8), rng_seed=9, bottleneck=2)
    x = np.random.default_rng(3).standard_normal((2, 1, 8, 8)).astype(np.float32)
    z = m.forward_to(m.bottleneck, x)
    assert z.shape == (2, 3 * 4 * 4)
    np.testing.assert_array_equal(z, m.forward(x))  # flatten is the last layer


# ------------------------------------------------------------ serialization


def test_save_load_round_trip_bitwise(tmp_path):
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=10, model_kind="test", bottleneck=4)
    # make buffers non-trivial
    x = np.random.default_rng(4).standard_normal((4, 1, 8, 8)).astype(np.float32)
    m.forward(x, mode="train", caches=[])
    p = tmp_path / "m.anomf"
    save_model(m, p)
    m2 = load_model(p)
    assert m2.model_kind == "test"
    assert m2.bottleneck == 4
    assert m2.rng_seed == 10
    assert m2.input_shape == (1, 8, 8)
    assert m2.specs == m.specs
    for k in m.params:
        assert m.params[k].tobytes() == m2.params[k].tobytes()
    for k in m.buffers:
        assert m.buffers[k].tobytes() == m2.buffers[k].tobytes()


def test_save_load_file_level_round_trip(tmp_path):
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=11)
    p1, p2 = tmp_path / "a.anomf", tmp_path / "b.anomf"
    save_model(m, p1)
    save_model(load_model(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_loaded_model_same_outputs(tmp_path):
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=12)
    x = np.random.default_rng(5).standard_normal((3, 1, 8, 8)).astype(np.float32)
    m.forward(x, mode="train", caches=[])  # move running stats off init
    p = tmp_path / "m.anomf"
    save_model(m, p)
    y1 = m.forward(x, mode="eval")
    y2 = load_model(p).forward(x, mode="eval")
    np.testing.assert_array_equal(y1, y2)


def test_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.anomf"
    p.write_bytes(b"NOTFMT" + b"\x00" * 64)
    with pytest.raises(DataError, match="magic"):
        load_model(p)


def test_load_rejects_truncated(tmp_path):
    m = ModelGraph(small_specs(), (1, 8, 8), rng_seed=13)
    p = tmp_path / "m.anomf"
    save_model(m, p)
    data = p.read_bytes()
    p.write_bytes(data[: len(data) // 2])
    with pytest.raises(DataError, match="truncated"):
        load_model(p)
