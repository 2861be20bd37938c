"""Sine-network initialization and per-pixel grid evaluation."""

import numpy as np
import pytest

from sirenanim.autodiff import Tensor
from sirenanim.siren import SirenMlp, siren_forward, siren_init

from gradcheck import check_grads, rand_tensor, scalarize


def test_same_seed_identical_parameters():
    a = siren_init([4, 8, 2], seed=11)
    b = siren_init([4, 8, 2], seed=11)
    for la, lb in zip(a.layers, b.layers):
        np.testing.assert_array_equal(la.weight.data, lb.weight.data)
        np.testing.assert_array_equal(la.bias.data, lb.bias.data)


def test_different_seed_differs():
    a = siren_init([4, 8, 2], seed=11)
    b = siren_init([4, 8, 2], seed=12)
    assert not np.array_equal(a.layers[0].weight.data, b.layers[0].weight.data)


def test_hidden_bound_formula():
    # fan_in=128, w0=30 -> bound sqrt(6/128)/30 ~ 0.00722
    mlp = siren_init([128, 128, 1], w0_first=30.0, w0_hidden=30.0, seed=0)
    bound = np.sqrt(6.0 / 128.0) / 30.0
    assert bound == pytest.approx(0.007216878, rel=1e-6)
    hidden = mlp.layers[1]
    assert np.abs(hidden.weight.data).max() <= bound
    assert np.abs(hidden.bias.data).max() <= bound


def test_init_bounds_hold_for_every_layer():
    widths = [41] + [128] * 8 + [4]
    mlp = siren_init(widths, w0_first=30.0, w0_hidden=1.0, seed=3)
    first = mlp.layers[0]
    assert np.abs(first.weight.data).max() <= 1.0 / 41.0
    for layer in mlp.layers[1:]:
        bound = np.sqrt(6.0 / layer.fan_in) / 1.0
        assert np.abs(layer.weight.data).max() <= bound
        assert np.abs(layer.bias.data).max() <= bound


def test_default_face_widths_parameter_count():
    widths = [41] + [128] * 8 + [4]
    mlp = siren_init(widths, seed=0)
    expect = sum(widths[i + 1] * widths[i] + widths[i + 1] for i in range(9))
    assert expect == 121_476
    assert mlp.param_count() == 121_476


def test_rejects_short_width_list():
    with pytest.raises(ValueError):
        siren_init([7])


def test_final_layer_is_linear():
    mlp = siren_init([3, 5, 5, 2], seed=0)
    assert [layer.sine for layer in mlp.layers] == [True, True, False]


def test_zero_params_output_is_final_bias():
    mlp = siren_init([3, 6, 2], seed=0)
    for layer in mlp.layers:
        layer.weight = Tensor(np.zeros_like(layer.weight.data))
        layer.bias = Tensor(np.zeros_like(layer.bias.data))
    mlp.layers[-1].bias = Tensor(np.full((2, 1), 0.25, dtype=np.float32))
    out = siren_forward(mlp, Tensor(np.ones(3, dtype=np.float32)))
    np.testing.assert_allclose(out.data, [0.25, 0.25])


def test_single_sine_layer_scalar_value():
    # sin(w0 * (w*x + b)) with w=1, b=0, w0=30, x=pi/60 -> sin(pi/2) = 1
    layer_mlp = SirenMlp()
    from sirenanim.siren import SirenLayer

    layer_mlp.layers = [
        SirenLayer(weight=Tensor([[1.0]]), bias=Tensor([[0.0]]), w0=30.0, sine=True),
        SirenLayer(weight=Tensor([[1.0]]), bias=Tensor([[0.0]]), w0=1.0, sine=False),
    ]
    out = siren_forward(layer_mlp, Tensor([np.pi / 60.0]))
    assert out.data[0] == pytest.approx(1.0, abs=1e-6)


def test_width_mismatch_raises():
    mlp = siren_init([3, 4, 2], seed=0)
    with pytest.raises(ValueError):
        siren_forward(mlp, Tensor(np.ones(5, dtype=np.float32)))


def test_grid_eval_equals_pixel_loop():
    mlp = siren_init([5, 7, 3], seed=21)
    rng = np.random.default_rng(0)
    fmap = Tensor(rng.uniform(-1, 1, size=(5, 8, 8)).astype(np.float32), _check=False)
    grid_out = siren_forward(mlp, fmap)
    assert grid_out.shape == (3, 8, 8)
    for y in range(8):
        for x in range(8):
            px = siren_forward(mlp, Tensor(fmap.data[:, y, x]))
            np.testing.assert_allclose(grid_out.data[:, y, x], px.data, atol=1e-6)


def test_prefinal_activation_bounds_output():
    # every path through >= 1 sine keeps |pre-final| <= 1, so the output is
    # bounded by |W_last| * 1 + |b_last| row sums
    mlp = siren_init([2, 16, 16, 3], seed=5)
    rng = np.random.default_rng(1)
    xs = Tensor(rng.uniform(-10, 10, size=(2, 256)).astype(np.float32), _check=False)
    out = siren_forward(mlp, xs)
    last = mlp.layers[-1]
    bound = np.abs(last.weight.data).sum(axis=1, keepdims=True) + np.abs(last.bias.data)
    assert np.all(np.abs(out.data) <= bound + 1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_siren_parameter_gradcheck(seed):
    mlp = siren_init([3, 4, 2], seed=seed, dtype=np.float64)
    rng = np.random.default_rng(700 + seed)
    x = rand_tensor(rng, (3, 5))
    proj = rand_tensor(rng, (2, 5))

    def f(w0, b0, w1, b1, xin):
        mlp.layers[0].weight = w0
        mlp.layers[0].bias = b0
        mlp.layers[1].weight = w1
        mlp.layers[1].bias = b1
        return siren_forward(mlp, xin)

    params = [
        mlp.layers[0].weight,
        mlp.layers[0].bias,
        mlp.layers[1].weight,
        mlp.layers[1].bias,
        x,
    ]
    check_grads(scalarize(f, proj), params)
