"""Central finite-difference gradient checking.

The reference gradient is always taken in float64 with step 1e-5, where
central differences have ~1e-11 noise. Analytic float64 gradients must
match within 1e-5 relative; the float32 build of the same case is then
compared against the float64 reference at 1e-3, which is the headroom
the 64-bit scalar mode exists to provide.
"""

import numpy as np

from vsrgan import tensor as T

FD_STEP = 1e-5
TOL_F64 = 1e-5
TOL_F32 = 1e-3
# denominator floors keep near-zero gradient components from blowing up
# the relative error on pure roundoff
_FLOOR = {np.dtype(np.float32): 1e-4, np.dtype(np.float64): 1e-7}


def fd_grad(loss_fn, arr, h=FD_STEP):
    """d(loss)/d(arr) element by element, mutating arr in place."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    with T.no_grad():
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = loss_fn().item()
            flat[i] = keep - h
            down = loss_fn().item()
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * h)
    return grad


def fd_grad_at(loss_fn, arr, indices, h=FD_STEP):
    """Finite differences at selected flat indices only."""
    flat = arr.reshape(-1)
    out = {}
    with T.no_grad():
        for i in indices:
            keep = flat[i]
            flat[i] = keep + h
            up = loss_fn().item()
            flat[i] = keep - h
            down = loss_fn().item()
            flat[i] = keep
            out[int(i)] = (up - down) / (2.0 * h)
    return out


def max_rel_err(analytic, reference, dtype):
    floor = _FLOOR[np.dtype(dtype)]
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(reference, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def run_case(build, seed):
    """Run one seeded case of a builder in both precisions.

    ``build(rng, dtype)`` must return ``(leaves, loss_fn)`` where leaves is a
    name -> Tensor dict (grad-requiring entries get checked) and ``loss_fn``
    re-runs the forward pass on the live tensor buffers. Returns the worst
    relative error per precision.
    """
    rng = np.random.default_rng(seed)
    leaves64, loss_fn64 = build(rng, np.float64)
    for t in leaves64.values():
        t.zero_grad()
    loss_fn64().backward()
    refs = {}
    worst64 = 0.0
    for name, t in leaves64.items():
        if not t.requires_grad:
            continue
        assert t.grad is not None, f"{name}: no gradient reached this leaf"
        refs[name] = fd_grad(loss_fn64, t.data)
        worst64 = max(worst64, max_rel_err(t.grad, refs[name], np.float64))

    rng = np.random.default_rng(seed)
    leaves32, loss_fn32 = build(rng, np.float32)
    loss_fn32().backward()
    worst32 = 0.0
    for name in refs:
        g = leaves32[name].grad
        assert g is not None, f"{name}: float32 build lost the gradient"
        worst32 = max(worst32, max_rel_err(g, refs[name], np.float32))
    return worst32, worst64


def run_op_check(build, n_seeds=20):
    """Worst relative errors of a builder across seeded cases."""
    worst32 = worst64 = 0.0
    for seed in range(n_seeds):
        w32, w64 = run_case(build, seed)
        worst32 = max(worst32, w32)
        worst64 = max(worst64, w64)
    return worst32, worst64


def away_from_zero(rng, shape, low=0.2, high=1.5):
    """Draws with |x| in [low, high]: keeps kinked activations off their corner."""
    mag = rng.uniform(low, high, size=shape)
    sign = rng.choice([-1.0, 1.0], size=shape)
    return mag * sign


def leaf(arr, dtype, grad=True):
    return T.Tensor(np.asarray(arr, dtype=np.float64).astype(dtype), requires_grad=grad)


def projector(rng, shape, dtype):
    """Fixed random projection; makes the scalar loss sensitive to every output."""
    return T.Tensor(rng.normal(size=shape).astype(dtype), requires_grad=False)


def project(out, proj):
    return T.mean(T.mul(out, proj))
