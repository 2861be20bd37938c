"""Dense tensor arithmetic with tape-based reverse-mode differentiation.

The op set is closed on purpose: it contains exactly the operations the two
student networks and their losses are built from, so every backward rule can
be tested in isolation against finite differences. There is no general
broadcasting engine; ops accept the shapes the callers actually use and numpy
broadcasting is undone by summing over expanded axes.

Tensors are immutable value objects (their buffers are write-protected).
The one sanctioned exception is the optimizer, which swaps a parameter's
buffer for the updated one.
"""

from __future__ import annotations

import threading
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "Node",
    "UnsupportedOpError",
    "tensor",
    "tape_forward",
    "backward",
    "register_op",
    "record",
    "add",
    "sub",
    "neg",
    "mul",
    "scale",
    "shift",
    "matmul",
    "sin",
    "tanh",
    "abs_",
    "concat",
    "slice_axis",
    "reshape",
    "sum_",
    "mean",
    "AdamState",
    "adam_step",
]


class UnsupportedOpError(ValueError):
    """Raised when a graph tries to record an op kind outside the closed set."""


_OP_KINDS: set[str] = set()


def register_op(kind: str) -> str:
    """Add an op kind to the closed set. Returns the kind for convenience."""
    _OP_KINDS.add(kind)
    return kind


class Tensor:
    """Immutable dense tensor; float32 in production, float64 for checking."""

    __slots__ = ("data",)

    def __init__(self, data, dtype=None, _check: bool = True):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        if _check:
            if not np.all(np.isfinite(arr)):
                raise ValueError("tensor created from non-finite data")
            if arr is data or arr.base is not None:
                arr = arr.copy()  # never lock a caller-owned buffer
        elif arr.base is not None and not arr.flags.owndata:
            arr = arr.copy()
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.data = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), _check=False)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"

    # operator sugar over the closed op set
    def __add__(self, other):
        return shift(self, other) if isinstance(other, (int, float)) else add(self, other)

    def __sub__(self, other):
        return shift(self, -other) if isinstance(other, (int, float)) else sub(self, other)

    def __mul__(self, other):
        return scale(self, other) if isinstance(other, (int, float)) else mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def slice(self, axis: int, start: int, stop: int) -> "Tensor":
        return slice_axis(self, axis, start, stop)

    def reshape(self, shape) -> "Tensor":
        return reshape(self, shape)

    def sin(self) -> "Tensor":
        return sin(self)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def abs(self) -> "Tensor":
        return abs_(self)

    def sum(self) -> "Tensor":
        return sum_(self)

    def mean(self) -> "Tensor":
        return mean(self)


def tensor(data, dtype=np.float32) -> Tensor:
    return Tensor(data, dtype=dtype)


def _wrap(arr: np.ndarray) -> Tensor:
    return Tensor(arr, _check=False)


class Node:
    """One recorded operation: kind, inputs, output, forward/backward rules."""

    __slots__ = ("op", "inputs", "output", "fwd", "bwd")

    def __init__(self, op, inputs, output, fwd, bwd):
        self.op = op
        self.inputs = inputs  # tuple[Tensor]
        self.output = output  # Tensor
        self.fwd = fwd  # (*input arrays) -> output array
        self.bwd = bwd  # (grad array) -> tuple of grad arrays (None = no grad)


_ACTIVE = threading.local()


def _tape_stack() -> list:
    stack = getattr(_ACTIVE, "stack", None)
    if stack is None:
        stack = []
        _ACTIVE.stack = stack
    return stack


class Tape:
    """Ordered record of ops. Confined to the thread that builds it."""

    def __init__(self):
        self.nodes: list[Node] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        popped = _tape_stack().pop()
        assert popped is self, "tapes must unwind in LIFO order"
        return False

    def replay(self) -> Tensor:
        """Recompute every node from its recorded inputs; returns final output.

        The recorded output tensors are not modified; this checks that the
        tape is a faithful, re-executable description of the forward pass.
        """
        if not self.nodes:
            raise ValueError("empty tape")
        values: dict[int, np.ndarray] = {}
        out = None
        for node in self.nodes:
            args = [values.get(id(t), t.data) for t in node.inputs]
            out = node.fwd(*args)
            values[id(node.output)] = out
        return _wrap(out)


def record(
    op: str,
    inputs: Sequence[Tensor],
    fwd: Callable[..., np.ndarray],
    bwd_builder: Callable[[np.ndarray], Callable],
) -> Tensor:
    """Run `fwd` on the input arrays; record a node on the active tape.

    `bwd_builder(out_data)` returns the backward closure so ops can save
    forward results without recomputing them in the backward pass.
    """
    if op not in _OP_KINDS:
        raise UnsupportedOpError(f"op kind {op!r} is not in the supported op set")
    out_data = fwd(*[t.data for t in inputs])
    out = _wrap(out_data)
    stack = _tape_stack()
    if stack:
        stack[-1].nodes.append(Node(op, tuple(inputs), out, fwd, bwd_builder(out_data)))
    return out


def tape_forward(fn: Callable[..., Tensor], *inputs: Tensor) -> tuple[Tensor, Tape]:
    """Evaluate `fn(*inputs)` while recording; returns (output, tape)."""
    with Tape() as tape:
        out = fn(*inputs)
    if not isinstance(out, Tensor):
        raise TypeError("graph closure must return a Tensor")
    return out, tape


def backward(tape: Tape, output_grad=None, output: Tensor | None = None) -> dict[Tensor, np.ndarray]:
    """Walk the tape in reverse; return gradients for every leaf tensor.

    Leaves are tensors that are not produced by any node on this tape.
    Fan-out gradients accumulate by summation in fixed node order.
    """
    if not tape.nodes:
        raise ValueError("cannot run backward on an empty tape")
    if output is None:
        output = tape.nodes[-1].output
    if output_grad is None:
        grad0 = np.ones_like(output.data)
    else:
        grad0 = np.asarray(output_grad, dtype=output.data.dtype)
        if grad0.shape != output.data.shape:
            raise ValueError(
                f"output gradient shape {grad0.shape} does not match output {output.data.shape}"
            )
    produced = {id(node.output) for node in tape.nodes}
    grads: dict[int, np.ndarray] = {id(output): grad0}
    by_id: dict[int, Tensor] = {id(output): output}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        in_grads = node.bwd(g)
        for t, ig in zip(node.inputs, in_grads):
            if ig is None:
                continue
            key = id(t)
            by_id[key] = t
            if key in grads:
                grads[key] = grads[key] + ig
            else:
                grads[key] = ig
    return {by_id[k]: g for k, g in grads.items() if k not in produced}


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_dtypes(*tensors: Tensor):
    dt = tensors[0].data.dtype
    for t in tensors[1:]:
        if t.data.dtype != dt:
            raise TypeError("mixed tensor dtypes in one op")


# ---------------------------------------------------------------------------
# elementwise arithmetic

OP_ADD = register_op("add")
OP_SUB = register_op("sub")
OP_NEG = register_op("neg")
OP_MUL = register_op("mul")
OP_SCALE = register_op("scale")
OP_SHIFT = register_op("shift")
OP_MATMUL = register_op("matmul")
OP_SIN = register_op("sin")
OP_TANH = register_op("tanh")
OP_ABS = register_op("abs")
OP_CONCAT = register_op("concat")
OP_SLICE = register_op("slice")
OP_RESHAPE = register_op("reshape")
OP_SUM = register_op("sum")
OP_MEAN = register_op("mean")


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    sa, sb = a.shape, b.shape

    def bwd_builder(out):
        return lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb))

    return record(OP_ADD, (a, b), lambda x, y: x + y, bwd_builder)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    sa, sb = a.shape, b.shape

    def bwd_builder(out):
        return lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb))

    return record(OP_SUB, (a, b), lambda x, y: x - y, bwd_builder)


def neg(a: Tensor) -> Tensor:
    return record(OP_NEG, (a,), lambda x: -x, lambda out: lambda g: (-g,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    sa, sb = a.shape, b.shape
    ad, bd = a.data, b.data

    def bwd_builder(out):
        return lambda g: (_unbroadcast(g * bd, sa), _unbroadcast(g * ad, sb))

    return record(OP_MUL, (a, b), lambda x, y: x * y, bwd_builder)


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    dt = a.data.dtype.type

    def bwd_builder(out):
        return lambda g: (g * dt(s),)

    return record(OP_SCALE, (a,), lambda x: x * dt(s), bwd_builder)


def shift(a: Tensor, c: float) -> Tensor:
    c = float(c)
    dt = a.data.dtype.type

    def bwd_builder(out):
        return lambda g: (g,)

    return record(OP_SHIFT, (a,), lambda x: x + dt(c), bwd_builder)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check_dtypes(a, b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D tensors")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def bwd_builder(out):
        return lambda g: (g @ bd.T, ad.T @ g)

    return record(OP_MATMUL, (a, b), lambda x, y: x @ y, bwd_builder)


def sin(a: Tensor) -> Tensor:
    ad = a.data

    def bwd_builder(out):
        return lambda g: (g * np.cos(ad),)

    return record(OP_SIN, (a,), np.sin, bwd_builder)


def tanh(a: Tensor) -> Tensor:
    def bwd_builder(out):
        return lambda g: (g * (1.0 - out * out),)

    return record(OP_TANH, (a,), np.tanh, bwd_builder)


def abs_(a: Tensor) -> Tensor:
    ad = a.data

    def bwd_builder(out):
        return lambda g: (g * np.sign(ad),)

    return record(OP_ABS, (a,), np.abs, bwd_builder)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = tuple(parts)
    if not parts:
        raise ValueError("concat of zero tensors")
    _check_dtypes(*parts)
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def bwd_builder(out):
        return lambda g: tuple(np.split(g, splits, axis=axis))

    return record(OP_CONCAT, parts, lambda *xs: np.concatenate(xs, axis=axis), bwd_builder)


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    if not (0 <= start <= stop <= a.shape[axis]):
        raise ValueError(f"slice [{start}:{stop}] out of range for axis {axis} of {a.shape}")
    idx = tuple(slice(None) if d != axis else slice(start, stop) for d in range(a.data.ndim))
    in_shape = a.shape

    def bwd_builder(out):
        def bwd(g):
            full = np.zeros(in_shape, dtype=g.dtype)
            full[idx] = g
            return (full,)

        return bwd

    return record(OP_SLICE, (a,), lambda x: x[idx].copy(), bwd_builder)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    in_shape = a.shape

    def bwd_builder(out):
        return lambda g: (g.reshape(in_shape),)

    return record(OP_RESHAPE, (a,), lambda x: x.reshape(shape).copy(), bwd_builder)


def sum_(a: Tensor) -> Tensor:
    in_shape = a.shape
    dt = a.data.dtype

    def bwd_builder(out):
        return lambda g: (np.broadcast_to(g, in_shape).astype(dt, copy=True),)

    return record(OP_SUM, (a,), lambda x: np.asarray(x.sum(), dtype=dt), bwd_builder)


def mean(a: Tensor) -> Tensor:
    in_shape = a.shape
    n = a.data.size
    dt = a.data.dtype

    def bwd_builder(out):
        return lambda g: ((np.broadcast_to(g, in_shape) / dt.type(n)).astype(dt, copy=False),)

    return record(OP_MEAN, (a,), lambda x: np.asarray(x.mean(), dtype=dt), bwd_builder)


# ---------------------------------------------------------------------------
# Adam


class AdamState:
    """First/second moment accumulators for one parameter list."""

    def __init__(self, params: Sequence[Tensor], beta1=0.9, beta2=0.999, eps=1e-8,
                 names: Sequence[str] | None = None):
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.names = list(names) if names is not None else [f"param[{i}]" for i in range(len(params))]
        if len(self.names) != len(self.m):
            raise ValueError("names length must match params length")


def adam_step(params: Sequence[Tensor], grads, state: AdamState, lr: float) -> Sequence[Tensor]:
    """Standard bias-corrected Adam update, applied in place of `params`.

    `grads` may be the mapping returned by `backward` or a parallel sequence.
    Parameters missing from a mapping are treated as zero-gradient.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if isinstance(grads, Mapping):
        grad_list = [grads.get(p) for p in params]
    else:
        grad_list = list(grads)
        if len(grad_list) != len(params):
            raise ValueError("grads length must match params length")
    state.step += 1
    t = state.step
    b1, b2, eps = state.beta1, state.beta2, state.eps
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for i, (p, g) in enumerate(zip(params, grad_list)):
        if g is None:
            g = np.zeros_like(p.data)
        g = np.asarray(g)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape mismatch for {state.names[i]}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {state.names[i]}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        new = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
        new = new.astype(p.data.dtype, copy=False)
        new.flags.writeable = False
        p.data = new
    return params
