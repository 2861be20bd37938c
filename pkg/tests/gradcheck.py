"""Central finite-difference gradient checking against the analytic backward.

Everything runs in float64. The oracle is plain numpy arithmetic on the
recorded forward closure; it never touches the backward implementations.
"""

import numpy as np

from sirenanim import autodiff as ad
from sirenanim.autodiff import Tensor, tape_forward, backward

DEFAULT_STEP = 1e-5


def numeric_grad(f, tensors, wrt, h=DEFAULT_STEP):
    """Central differences of scalar f(*tensors) w.r.t. tensors[wrt]."""
    base = [t.data.copy() for t in tensors]
    grad = np.zeros_like(base[wrt])
    flat = grad.ravel()
    for i in range(flat.size):
        for sign in (+1.0, -1.0):
            bumped = [arr.copy() for arr in base]
            bumped[wrt].ravel()[i] += sign * h
            val = f(*[Tensor(a, dtype=np.float64) for a in bumped]).item()
            flat[i] += sign * val
    return grad / (2.0 * h)


def check_grads(f, tensors, h=DEFAULT_STEP, tol=1e-6, skip=()):
    """Assert analytic gradients of scalar-valued f match central differences.

    Returns the worst relative error seen, for reporting.
    """
    out, tape = tape_forward(lambda *ts: f(*ts), *tensors)
    assert out.shape == (), f"gradcheck needs a scalar output, got {out.shape}"
    grads = backward(tape)
    worst = 0.0
    for i, t in enumerate(tensors):
        if i in skip:
            continue
        analytic = grads.get(t)
        if analytic is None:
            analytic = np.zeros_like(t.data)
        fd = numeric_grad(f, tensors, i, h=h)
        rel = np.abs(analytic - fd) / (np.abs(fd) + 1e-8)
        err = float(rel.max()) if rel.size else 0.0
        worst = max(worst, err)
        assert err <= tol, (
            f"gradient mismatch for input {i}: rel err {err:.3g} > {tol}\n"
            f"analytic={analytic.ravel()[:8]}\nfd={fd.ravel()[:8]}"
        )
    return worst


def scalarize(out_builder, proj):
    """Wrap an op returning a tensor into a scalar via a fixed projection."""

    def f(*tensors):
        out = out_builder(*tensors)
        return ad.mean(ad.mul(out, proj))

    return f


def rand_tensor(rng, shape, lo=-1.0, hi=1.0):
    return Tensor(rng.uniform(lo, hi, size=shape), dtype=np.float64)
