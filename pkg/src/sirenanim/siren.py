"""Sine-activated fully connected networks evaluated per pixel.

A network is an ordered stack of layers y = sin(w0 * (W x + b)); the final
layer is linear. "Per pixel" evaluation treats a (C, H, W) feature map as a
(C, H*W) matrix so each layer is a single matrix product, which is
mathematically a 1x1 convolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

__all__ = ["SirenLayer", "SirenMlp", "siren_init", "siren_forward", "layer_forward"]


@dataclass
class SirenLayer:
    weight: Tensor  # (out, in)
    bias: Tensor  # (out, 1)
    w0: float
    sine: bool

    @property
    def fan_in(self) -> int:
        return self.weight.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[0]

    def param_count(self) -> int:
        return self.weight.size + self.bias.size


@dataclass
class SirenMlp:
    layers: list[SirenLayer] = field(default_factory=list)

    @property
    def in_width(self) -> int:
        return self.layers[0].fan_in

    @property
    def out_width(self) -> int:
        return self.layers[-1].fan_out

    def param_count(self) -> int:
        return sum(layer.param_count() for layer in self.layers)

    def parameters(self) -> list[Tensor]:
        params = []
        for layer in self.layers:
            params.append(layer.weight)
            params.append(layer.bias)
        return params

    def parameter_names(self, prefix: str = "layer") -> list[str]:
        names = []
        for i, _ in enumerate(self.layers):
            names.append(f"{prefix}{i}.weight")
            names.append(f"{prefix}{i}.bias")
        return names


def init_layer(rng: np.random.Generator, fan_in: int, fan_out: int, w0: float,
               first: bool, sine: bool, dtype=np.float32) -> SirenLayer:
    """Draw one layer's parameters from the sine-network scheme.

    First layer: U[-1/fan_in, 1/fan_in]. Later layers: U[-b, b] with
    b = sqrt(6/fan_in)/w0, biases in the same range as their weights.
    """
    if first:
        bound = 1.0 / fan_in
    else:
        bound = np.sqrt(6.0 / fan_in) / w0
    weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
    bias = rng.uniform(-bound, bound, size=(fan_out, 1))
    return SirenLayer(
        weight=Tensor(weight.astype(dtype), _check=False),
        bias=Tensor(bias.astype(dtype), _check=False),
        w0=float(w0),
        sine=sine,
    )


def siren_init(widths, w0_first: float = 30.0, w0_hidden: float = 1.0,
               seed: int = 0, dtype=np.float32) -> SirenMlp:
    """Build a sine network from a width list; the last layer is linear.

    The hidden frequency scale defaults to 1 with the usual factor folded
    into the initialization bound, which is distributionally identical to
    the classic scheme.
    """
    widths = list(widths)
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    rng = np.random.Generator(np.random.PCG64(seed))
    layers = []
    n = len(widths) - 1
    for i in range(n):
        first = i == 0
        last = i == n - 1
        w0 = w0_first if first else w0_hidden
        layers.append(init_layer(rng, widths[i], widths[i + 1], w0,
                                 first=first, sine=not last, dtype=dtype))
    return SirenMlp(layers=layers)


def layer_forward(layer: SirenLayer, x: Tensor) -> Tensor:
    pre = ad.add(ad.matmul(layer.weight, x), layer.bias)
    if not layer.sine:
        return pre
    if layer.w0 != 1.0:
        pre = ad.scale(pre, layer.w0)
    return ad.sin(pre)


def siren_forward(mlp: SirenMlp, x: Tensor) -> Tensor:
    """Evaluate the network on a vector, matrix of columns, or feature map.

    Accepted input shapes: (in,), (in, N), or (in, H, W); the output keeps
    the same spatial arrangement with the network's output width.
    """
    ndim = x.data.ndim
    if x.shape[0] != mlp.in_width:
        raise ValueError(f"input width {x.shape[0]} does not match network ({mlp.in_width})")
    if ndim == 1:
        cols = ad.reshape(x, (x.shape[0], 1))
    elif ndim == 3:
        cols = ad.reshape(x, (x.shape[0], x.shape[1] * x.shape[2]))
    elif ndim == 2:
        cols = x
    else:
        raise ValueError(f"unsupported input rank {ndim}")
    for layer in mlp.layers:
        cols = layer_forward(layer, cols)
    if ndim == 1:
        return ad.reshape(cols, (mlp.out_width,))
    if ndim == 3:
        return ad.reshape(cols, (mlp.out_width, x.shape[1], x.shape[2]))
    return cols
