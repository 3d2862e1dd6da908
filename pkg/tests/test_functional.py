"""Forward-pass behaviour of the layer primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from anomdet.errors import ShapeError
from anomdet.nn import functional as F


def rnd(*shape, seed=0, dtype=np.float64):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape).astype(dtype)


# ---------------------------------------------------------------- conv2d


def test_conv2d_zero_input_zero_output():
    x = np.zeros((1, 1, 4, 4))
    w = rnd(3, 1, 3, 3, seed=1)
    y, _ = F.conv2d(x, w, np.zeros(3), stride=1, padding=1)
    assert np.all(y == 0)


def test_conv2d_identity_kernel():
    x = rnd(2, 1, 5, 5, seed=2)
    w = np.ones((1, 1, 1, 1))
    y, _ = F.conv2d(x, w, np.zeros(1))
    np.testing.assert_array_equal(y, x)


def test_conv2d_sum_kernel():
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    w = np.ones((1, 1, 2, 2))
    y, _ = F.conv2d(x, w, np.zeros(1))
    assert y.shape == (1, 1, 1, 1)
    assert y[0, 0, 0, 0] == 10.0


@pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 0), (2, 1), (3, 2)])
def test_conv2d_matches_nested_loop(stride, padding):
    x = rnd(2, 3, 7, 8, seed=3)
    w = rnd(4, 3, 3, 3, seed=4)
    b = rnd(4, seed=5)
    y, _ = F.conv2d(x, w, b, stride=stride, padding=padding)
    ref = oracles.conv2d_naive(x, w, b, stride=stride, padding=padding)
    np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-12)


def test_conv2d_channel_mismatch_names_dimension():
    x = rnd(1, 2, 4, 4)
    w = rnd(3, 5, 3, 3)
    with pytest.raises(ShapeError, match="2 channels.*expect 5"):
        F.conv2d(x, w, np.zeros(3))


def test_conv2d_kernel_too_large():
    x = rnd(1, 1, 3, 3)
    w = rnd(1, 1, 5, 5)
    with pytest.raises(ShapeError, match="kernel 5"):
        F.conv2d(x, w, np.zeros(1))


def test_conv2d_preserves_float32():
    x = rnd(1, 1, 4, 4, dtype=np.float32)
    w = rnd(2, 1, 3, 3, dtype=np.float32)
    y, _ = F.conv2d(x, w, np.zeros(2, dtype=np.float32), padding=1)
    assert y.dtype == np.float32


# ------------------------------------------------------ conv2d_transpose


def test_conv_transpose_zero_input():
    x = np.zeros((1, 2, 3, 3))
    w = rnd(2, 3, 4, 4, seed=6)
    y, _ = F.conv2d_transpose(x, w, np.zeros(3), stride=2, padding=1)
    assert y.shape == (1, 3, 6, 6)
    assert np.all(y == 0)


def test_conv_transpose_unit_kernel_identity():
    x = rnd(2, 3, 5, 5, seed=7)
    w = np.zeros((3, 3, 1, 1))
    for c in range(3):
        w[c, c, 0, 0] = 1.0
    y, _ = F.conv2d_transpose(x, w, np.zeros(3))
    np.testing.assert_array_equal(y, x)


@pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), (2, 0), (3, 1)])
def test_conv_transpose_matches_scatter_oracle(stride, padding):
    x = rnd(2, 3, 4, 5, seed=8)
    w = rnd(3, 2, 4, 4, seed=9)
    b = rnd(2, seed=10)
    y, _ = F.conv2d_transpose(x, w, b, stride=stride, padding=padding)
    ref = oracles.conv2d_transpose_naive(x, w, b, stride=stride, padding=padding)
    np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize(
    "k,s,p,extent",
    [(3, 1, 0, 4), (3, 1, 1, 5), (4, 2, 1, 6), (2, 2, 0, 4), (5, 3, 2, 4)],
)
def test_conv_transpose_is_adjoint_of_conv(k, s, p, extent):
    """<conv(x), y> == <x, conv_t(y)> to 1e-10 for shared hyperparameters.

    Extents here are stride-compatible ((extent + 2p - k) % s == 0) so the
    transpose output shape matches x; incompatible extents lose trailing
    rows in conv and the two maps act on different spaces."""
    rng = np.random.default_rng(11)
    in_c, out_c = 3, 2
    x = rng.standard_normal((2, in_c, extent, extent))
    oh = F.conv_out_extent(extent, k, s, p)
    y = rng.standard_normal((2, out_c, oh, oh))
    w = rng.standard_normal((out_c, in_c, k, k))
    cx, _ = F.conv2d(x, w, np.zeros(out_c), stride=s, padding=p)
    # the same array maps out_c -> in_c when read from the transpose side
    ty, _ = F.conv2d_transpose(y, w, np.zeros(in_c), stride=s, padding=p)
    lhs = oracles.inner(cx, y)
    rhs = oracles.inner(x, ty)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# -------------------------------------------------------------- maxpool2d


def test_maxpool_constant():
    x = np.full((1, 2, 4, 4), 3.5)
    y, _ = F.maxpool2d(x)
    assert y.shape == (1, 2, 2, 2)
    assert np.all(y == 3.5)


def test_maxpool_single_window():
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    y, _ = F.maxpool2d(x)
    assert y[0, 0, 0, 0] == 4.0


def test_maxpool_matches_bruteforce():
    x = rnd(3, 2, 4, 4, seed=12)
    y, _ = F.maxpool2d(x)
    np.testing.assert_array_equal(y, oracles.maxpool2d_naive(x))


def test_maxpool_odd_extent_rejected_by_default():
    with pytest.raises(ShapeError, match="odd"):
        F.maxpool2d(rnd(1, 1, 5, 4))


def test_maxpool_odd_extent_floors_when_allowed():
    x = rnd(1, 1, 5, 5, seed=13)
    y, _ = F.maxpool2d(x, allow_odd=True)
    assert y.shape == (1, 1, 2, 2)
    np.testing.assert_array_equal(y, oracles.maxpool2d_naive(x[:, :, :4, :4]))


# ------------------------------------------------------------------ dense


def test_dense_identity():
    x = rnd(3, 4, seed=14)
    y, _ = F.dense(x, np.eye(4), np.zeros(4))
    np.testing.assert_allclose(y, x)


def test_dense_zero_weights_bias_rows():
    x = rnd(3, 4, seed=15)
    y, _ = F.dense(x, np.zeros((2, 4)), np.array([5.0, -1.0]))
    np.testing.assert_array_equal(y, np.tile([5.0, -1.0], (3, 1)))


def test_dense_matches_nested_loop():
    x = rnd(1, 4, seed=16)
    w = rnd(3, 4, seed=17)
    b = rnd(3, seed=18)
    y, _ = F.dense(x, w, b)
    np.testing.assert_allclose(y, oracles.dense_naive(x, w, b), rtol=1e-12)


def test_dense_width_mismatch():
    with pytest.raises(ShapeError, match="width 5"):
        F.dense(rnd(2, 5), rnd(3, 4), np.zeros(3))


# ------------------------------------------------------------- activations


def test_activation_point_values():
    x = np.array([[-3.0, 2.5, 0.0, -1.0]])
    assert F.activate(x, "relu")[0][0, 0] == 0.0
    assert F.activate(x, "relu")[0][0, 1] == 2.5
    assert F.activate(x, "sigmoid")[0][0, 2] == 0.5
    np.testing.assert_allclose(F.activate(x, "leaky_relu")[0][0, 3], -0.2)


def test_activation_ranges():
    x = rnd(4, 100, seed=19) * 5  # tanh saturates to exactly 1.0 beyond ~|19|
    relu, _ = F.activate(x, "relu")
    sig, _ = F.activate(x, "sigmoid")
    tanh, _ = F.activate(x, "tanh")
    assert np.all(relu >= 0)
    assert np.all((sig > 0) & (sig < 1))
    assert np.all((tanh > -1) & (tanh < 1))
    extreme, _ = F.activate(np.array([[-50.0, 50.0]]), "tanh")
    assert np.all(np.abs(extreme) <= 1.0)


def test_activation_unknown_name():
    with pytest.raises(ValueError, match="unknown activation"):
        F.activate(rnd(1, 1), "elu")


# -------------------------------------------------------------- batchnorm


def _bn_state(c):
    return (
        np.ones(c),
        np.zeros(c),
        np.zeros(c),
        np.ones(c),
    )


def test_batchnorm_normalizes_train():
    x = rnd(8, 3, 5, 5, seed=20) * 4 + 2
    g, b, rm, rv = _bn_state(3)
    y, _ = F.batchnorm(x, g, b, rm, rv, mode="train")
    means = y.mean(axis=(0, 2, 3))
    var = y.var(axis=(0, 2, 3))
    np.testing.assert_allclose(means, 0, atol=1e-6)
    np.testing.assert_allclose(var, 1, atol=1e-4)


def test_batchnorm_gamma_zero_gives_beta():
    x = rnd(4, 2, 3, 3, seed=21)
    g = np.zeros(2)
    b = np.array([1.5, -0.5])
    _, _, rm, rv = _bn_state(2)
    y, _ = F.batchnorm(x, g, b, rm, rv, mode="train")
    np.testing.assert_allclose(y, np.broadcast_to(b.reshape(1, 2, 1, 1), y.shape))


def test_batchnorm_constant_channel_stays_finite():
    x = np.full((4, 1, 3, 3), 7.0)
    g, b, rm, rv = _bn_state(1)
    b[:] = 0.25
    y, _ = F.batchnorm(x, g, b, rm, rv, mode="train")
    assert np.all(np.isfinite(y))
    np.testing.assert_allclose(y, 0.25, atol=1e-8)


def test_batchnorm_batch_of_one_rejected():
    g, b, rm, rv = _bn_state(2)
    with pytest.raises(ShapeError, match="batch size"):
        F.batchnorm(rnd(1, 2, 3, 3), g, b, rm, rv, mode="train")


def test_batchnorm_eval_uses_running_stats():
    x = rnd(2, 2, 3, 3, seed=22)
    g, b, rm, rv = _bn_state(2)
    rm[:] = [1.0, -1.0]
    rv[:] = [4.0, 0.25]
    y, _ = F.batchnorm(x, g, b, rm, rv, mode="eval")
    expect = (x - rm.reshape(1, 2, 1, 1)) / np.sqrt(rv.reshape(1, 2, 1, 1) + 1e-5)
    np.testing.assert_allclose(y, expect, rtol=1e-6)


def test_batchnorm_train_updates_running_stats():
    x = rnd(6, 2, 4, 4, seed=23) + 3.0
    g, b, rm, rv = _bn_state(2)
    F.batchnorm(x, g, b, rm, rv, mode="train")
    expect_mean = 0.1 * x.mean(axis=(0, 2, 3))
    np.testing.assert_allclose(rm, expect_mean, rtol=1e-6)
    expect_var = 0.9 * 1.0 + 0.1 * x.var(axis=(0, 2, 3))
    np.testing.assert_allclose(rv, expect_var, rtol=1e-6)


# ------------------------------------------------------------ shape algebra


@settings(max_examples=200, deadline=None)
@given(
    h=st.integers(1, 16),
    w=st.integers(1, 16),
    k=st.integers(1, 5),
    s=st.integers(1, 3),
    p=st.integers(0, 2),
)
def test_conv_shape_formula_holds(h, w, k, s, p):
    if h + 2 * p < k or w + 2 * p < k:
        return
    x = np.zeros((1, 1, h, w))
    wts = np.zeros((1, 1, k, k))
    y, _ = F.conv2d(x, wts, np.zeros(1), stride=s, padding=p)
    assert y.shape == (1, 1, (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)


@settings(max_examples=200, deadline=None)
@given(
    h=st.integers(1, 16),
    w=st.integers(1, 16),
    k=st.integers(1, 5),
    s=st.integers(1, 3),
    p=st.integers(0, 2),
)
def test_conv_transpose_shape_formula_holds(h, w, k, s, p):
    oh = (h - 1) * s - 2 * p + k
    ow = (w - 1) * s - 2 * p + k
    x = np.zeros((1, 1, h, w))
    wts = np.zeros((1, 1, k, k))
    if oh < 1 or ow < 1:
        with pytest.raises(ShapeError):
            F.conv2d_transpose(x, wts, np.zeros(1), stride=s, padding=p)
        return
    y, _ = F.conv2d_transpose(x, wts, np.zeros(1), stride=s, padding=p)
    assert y.shape == (1, 1, oh, ow)


@settings(max_examples=100, deadline=None)
@given(h=st.integers(1, 8), w=st.integers(1, 8))
def test_pool_shape_formula_holds(h, w):
    x = np.zeros((1, 1, 2 * h, 2 * w))
    y, _ = F.maxpool2d(x)
    assert y.shape == (1, 1, h, w)
