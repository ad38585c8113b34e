"""Rank-N tensors with reverse-mode automatic differentiation.

Everything is numpy-backed. float32 is the working precision; float64 is
available so gradient checks have numerical headroom. There is no implicit
broadcasting between tensors: elementwise ops demand equal shapes, and the
only scalar mixing allowed is via ``scale``/``add_scalar`` (or the operator
sugar, which routes python scalars there).
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

_FLOAT_DTYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    """Operand shapes (or dtypes) violate an operation's contract."""


class ContractError(RuntimeError):
    """An operation was called outside its stated contract."""


class StateError(RuntimeError):
    """Required state (e.g. running statistics) is missing."""


class NumericError(ArithmeticError):
    """A tensor holds non-finite values."""


_grad_enabled = True


class no_grad:
    """Context manager that suspends graph recording."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor:
    """A numpy array plus optional gradient tracking.

    ``data`` is always a float32 or float64 ndarray. When an op runs under
    grad mode and any input requires grad, the output records its parents
    and a backward rule; ``backward()`` on a scalar then fills ``grad`` on
    every tracked ancestor. Grads accumulate across backward calls until
    ``zero_grad()``.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_bw")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            raise TypeError("wrap raw array data, not another Tensor")
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not (isinstance(data, np.ndarray) and arr.dtype in _FLOAT_DTYPES):
            # lists, ints, odd dtypes: working precision is float32
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: tuple = ()
        self._bw = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def numel(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError("item() needs a single-element tensor")
        return float(self.data.reshape(()))

    def __float__(self) -> float:
        return self.item()

    def __repr__(self):
        tag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype.name}{tag})"

    def validate_finite(self) -> "Tensor":
        """Raise NumericError if any stored value is NaN or infinite."""
        if not np.isfinite(self.data).all():
            raise NumericError("tensor contains non-finite values")
        return self

    # -- graph plumbing ------------------------------------------------

    def detach(self) -> "Tensor":
        """Same data, severed from the graph, grad not required."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Reverse-mode sweep from this scalar; accumulates leaf grads."""
        if self.data.size != 1:
            raise ContractError("backward() requires a scalar loss tensor")
        order = _toposort(self)
        flowing = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = flowing.pop(id(node), None)
            if g is None:
                continue
            if node._bw is None:
                # leaf: fold into the persistent grad slot
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._bw(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in flowing:
                    flowing[key] = flowing[key] + pg
                else:
                    flowing[key] = pg

    # -- operator sugar (python scalars route to scale/add_scalar) -----

    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return add_scalar(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return add_scalar(self, -float(other))

    def __rsub__(self, other):
        return add_scalar(scale(self, -1.0), float(other))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __getitem__(self, key):
        return getitem(self, key)


def _toposort(root: Tensor):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def _result(out_data, parents, bw) -> Tensor:
    """Wrap an op result, attaching the backward rule if tracking is on."""
    out = Tensor(out_data, dtype=out_data.dtype)
    if _grad_enabled and any(p.requires_grad or p._bw is not None for p in parents):
        out.requires_grad = any(_tracked(p) for p in parents)
        out._parents = tuple(parents)
        out._bw = bw
    return out


def _tracked(t: Tensor) -> bool:
    return t.requires_grad or t._bw is not None


def _check_same(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")
    if a.dtype != b.dtype:
        raise ShapeError(f"{op}: dtypes {a.dtype} and {b.dtype} differ")


# -- constructors -------------------------------------------------------


def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def full(shape, value: float, dtype=np.float32) -> Tensor:
    return Tensor(np.full(shape, value, dtype=dtype))


def scalar(value: float, dtype=np.float32) -> Tensor:
    return Tensor(np.asarray(value, dtype=dtype))


# -- elementwise and reductions -----------------------------------------


def add(x: Tensor, y: Tensor) -> Tensor:
    _check_same(x, y, "add")
    return _result(x.data + y.data, (x, y), lambda g: (g, g))


def sub(x: Tensor, y: Tensor) -> Tensor:
    _check_same(x, y, "sub")
    return _result(x.data - y.data, (x, y), lambda g: (g, -g))


def mul(x: Tensor, y: Tensor) -> Tensor:
    _check_same(x, y, "mul")
    xd, yd = x.data, y.data
    return _result(xd * yd, (x, y), lambda g: (g * yd, g * xd))


def scale(x: Tensor, k: float) -> Tensor:
    k = float(k)
    return _result(x.data * np.asarray(k, dtype=x.dtype), (x,), lambda g: (g * k,))


def add_scalar(x: Tensor, k: float) -> Tensor:
    return _result(x.data + np.asarray(float(k), dtype=x.dtype), (x,), lambda g: (g,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    """Numerically stable logistic sigmoid."""
    d = x.data
    y = np.empty_like(d)
    pos = d >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    y[~pos] = e / (1.0 + e)
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _result(np.where(mask, x.data, 0.0).astype(x.dtype), (x,), lambda g: (g * mask,))


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    """y = x for x >= 0, slope * x otherwise; slope must lie in (0, 1)."""
    if not 0.0 < slope < 1.0:
        raise ContractError(f"leaky_relu slope must be in (0,1), got {slope}")
    mask = x.data >= 0
    factor = np.where(mask, 1.0, slope).astype(x.dtype)
    return _result(x.data * factor, (x,), lambda g: (g * factor,))


def prelu(x: Tensor, a: Tensor) -> Tensor:
    """PReLU with a learnable slope, shared (size 1) or per channel (axis 1)."""
    ad = a.data
    if ad.size == 1:
        aslope = ad.reshape(())
    else:
        if x.data.ndim < 2 or x.shape[1] != ad.size:
            raise ShapeError(
                f"prelu: slope of size {ad.size} does not match channel axis of {x.shape}"
            )
        aslope = ad.reshape((1, ad.size) + (1,) * (x.data.ndim - 2))
    neg = x.data < 0
    out = np.where(neg, aslope * x.data, x.data).astype(x.dtype)

    def bw(g):
        gx = np.where(neg, aslope, 1.0).astype(x.dtype) * g
        ga_full = np.where(neg, x.data, 0.0) * g
        if ad.size == 1:
            ga = ga_full.sum(dtype=x.dtype).reshape(ad.shape)
        else:
            axes = (0,) + tuple(range(2, x.data.ndim))
            ga = ga_full.sum(axis=axes, dtype=x.dtype).reshape(ad.shape)
        return gx, ga

    return _result(out, (x, a), bw)


def mean(x: Tensor, axis=None) -> Tensor:
    """Mean over all elements (axis=None) or over the given axes."""
    if axis is None:
        n = x.data.size
        out = x.data.mean(dtype=x.dtype).reshape(())
        return _result(out, (x,), lambda g: (np.broadcast_to(g / n, x.shape).astype(x.dtype),))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    n = int(np.prod([x.shape[a] for a in axes]))
    out = x.data.mean(axis=axes, dtype=x.dtype)

    def bw(g):
        expanded = np.expand_dims(g, axes)
        return (np.broadcast_to(expanded / n, x.shape).astype(x.dtype),)

    return _result(out, (x,), bw)


def mse(x: Tensor, y: Tensor) -> Tensor:
    """Mean squared error over all elements."""
    _check_same(x, y, "mse")
    d = sub(x, y)
    return mean(mul(d, d))


# -- structural ops ------------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.data.size:
        raise ShapeError(f"reshape: cannot view {x.shape} as {shape}")
    old = x.shape
    return _result(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def getitem(x: Tensor, key) -> Tensor:
    """Basic (slice/index) selection; advanced indexing is not supported."""
    out = x.data[key]
    if not isinstance(out, np.ndarray):
        out = np.asarray(out, dtype=x.dtype)

    def bw(g):
        gx = np.zeros_like(x.data)
        gx[key] = g
        return (gx,)

    return _result(out, (x,), bw)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    if not tensors:
        raise ContractError("concat: empty tensor list")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return _result(out, tuple(tensors), bw)


def matmul(x: Tensor, y: Tensor) -> Tensor:
    """2-D matrix product."""
    if x.data.ndim != 2 or y.data.ndim != 2 or x.shape[1] != y.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {x.shape} @ {y.shape}")
    xd, yd = x.data, y.data
    return _result(xd @ yd, (x, y), lambda g: (g @ yd.T, xd.T @ g))


# -- network primitives --------------------------------------------------


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w.T + b for x:[B,N], w:[M,N], b:[M]."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"linear: x {x.shape} does not match w {w.shape}")
    if b.shape != (w.shape[0],):
        raise ShapeError(f"linear: bias {b.shape} does not match out width {w.shape[0]}")
    xd, wd = x.data, w.data
    out = xd @ wd.T + b.data

    def bw(g):
        return g @ wd, g.T @ xd, g.sum(axis=0)

    return _result(out, (x, w, b), bw)


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation (no kernel flip) with zero padding.

    x:[B,Cin,H,W], w:[Cout,Cin,kh,kw], b:[Cout]. The output size
    (H + 2*pad - kh)/stride + 1 must divide exactly; a fractional size is a
    shape error rather than a silent floor.
    """
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeError("conv2d: x must be [B,Cin,H,W] and w [Cout,Cin,kh,kw]")
    B, Cin, H, W = x.shape
    Cout, Cw, kh, kw = w.shape
    if kh < 1 or kw < 1:
        raise ShapeError("conv2d: zero-sized kernel")
    if Cin != Cw:
        raise ShapeError(f"conv2d: input has {Cin} channels but kernel expects {Cw}")
    if b.shape != (Cout,):
        raise ShapeError(f"conv2d: bias {b.shape} does not match {Cout} output channels")
    if stride < 1 or pad < 0:
        raise ContractError("conv2d: stride must be >=1 and pad >=0")
    if (H + 2 * pad - kh) % stride or (W + 2 * pad - kw) % stride:
        raise ShapeError(
            f"conv2d: output size not integral for H,W={H},{W} k={kh},{kw} "
            f"stride={stride} pad={pad}"
        )
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    if Ho < 1 or Wo < 1:
        raise ShapeError(f"conv2d: non-positive output size {Ho}x{Wo}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (B,Cin,Ho,Wo,kh,kw)
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(B, Ho * Wo, Cin * kh * kw)
    wmat = w.data.reshape(Cout, Cin * kh * kw)
    out = (cols @ wmat.T + b.data).transpose(0, 2, 1).reshape(B, Cout, Ho, Wo)

    def bw(g):
        gmat = g.reshape(B, Cout, Ho * Wo).transpose(0, 2, 1)  # (B,L,Cout)
        gw = np.einsum("blc,blk->ck", gmat, cols).reshape(w.shape)
        gb = g.sum(axis=(0, 2, 3))
        gcols = (gmat @ wmat).reshape(B, Ho, Wo, Cin, kh, kw)
        gxp = np.zeros((B, Cin, H + 2 * pad, W + 2 * pad), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride] += (
                    gcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        gx = gxp[:, :, pad : pad + H, pad : pad + W] if pad else gxp
        return gx, gw, gb

    return _result(out, (x, w, b), bw)


def batchnorm2d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    eps: float = 1e-5,
    mode: str = "train",
    running_mean: Optional[Tensor] = None,
    running_var: Optional[Tensor] = None,
    momentum: float = 0.1,
) -> Tensor:
    """Per-channel batch normalization over (B,H,W).

    Train mode normalizes by batch statistics (population variance) and,
    when running buffers are supplied, folds them in with the given
    momentum. Eval mode requires populated running buffers.
    """
    if x.data.ndim != 4:
        raise ShapeError("batchnorm2d: x must be [B,C,H,W]")
    C = x.shape[1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeError("batchnorm2d: gamma/beta must be shape [C]")
    if mode not in ("train", "eval"):
        raise ContractError(f"batchnorm2d: unknown mode {mode!r}")

    if mode == "eval":
        if running_mean is None or running_var is None:
            raise StateError("batchnorm2d: eval mode requires populated running stats")
        mu = running_mean.data.reshape(1, C, 1, 1)
        ivstd = 1.0 / np.sqrt(running_var.data.reshape(1, C, 1, 1) + eps)
        xhat = (x.data - mu) * ivstd
        out = gamma.data.reshape(1, C, 1, 1) * xhat + beta.data.reshape(1, C, 1, 1)

        def bw_eval(g):
            gx = g * (gamma.data.reshape(1, C, 1, 1) * ivstd)
            ggamma = (g * xhat).sum(axis=(0, 2, 3))
            gbeta = g.sum(axis=(0, 2, 3))
            return gx.astype(x.dtype), ggamma.astype(x.dtype), gbeta.astype(x.dtype)

        return _result(out.astype(x.dtype), (x, gamma, beta), bw_eval)

    n = x.shape[0] * x.shape[2] * x.shape[3]
    mu = x.data.mean(axis=(0, 2, 3), keepdims=True)
    var = x.data.var(axis=(0, 2, 3), keepdims=True)  # population variance
    ivstd = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * ivstd
    out = gamma.data.reshape(1, C, 1, 1) * xhat + beta.data.reshape(1, C, 1, 1)

    if running_mean is not None and running_var is not None:
        running_mean.data[...] = (1 - momentum) * running_mean.data + momentum * mu.reshape(C)
        running_var.data[...] = (1 - momentum) * running_var.data + momentum * var.reshape(C)

    def bw_train(g):
        gam = gamma.data.reshape(1, C, 1, 1)
        gxhat = g * gam
        s1 = gxhat.sum(axis=(0, 2, 3), keepdims=True)
        s2 = (gxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        gx = ivstd / n * (n * gxhat - s1 - xhat * s2)
        ggamma = (g * xhat).sum(axis=(0, 2, 3))
        gbeta = g.sum(axis=(0, 2, 3))
        return gx.astype(x.dtype), ggamma.astype(x.dtype), gbeta.astype(x.dtype)

    return _result(out.astype(x.dtype), (x, gamma, beta), bw_train)


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Channel-to-space rearrangement: [B,C*r^2,H,W] -> [B,C,rH,rW]."""
    if r < 1:
        raise ContractError("pixel_shuffle: r must be positive")
    if x.data.ndim != 4:
        raise ShapeError("pixel_shuffle: x must be [B,C,H,W]")
    B, C2, H, W = x.shape
    if C2 % (r * r):
        raise ShapeError(f"pixel_shuffle: {C2} channels not divisible by r^2={r * r}")
    C = C2 // (r * r)
    out = (
        x.data.reshape(B, C, r, r, H, W).transpose(0, 1, 4, 2, 5, 3).reshape(B, C, H * r, W * r)
    )

    def bw(g):
        gi = (
            g.reshape(B, C, H, r, W, r).transpose(0, 1, 3, 5, 2, 4).reshape(B, C2, H, W)
        )
        return (np.ascontiguousarray(gi),)

    return _result(np.ascontiguousarray(out), (x,), bw)


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Inverse of pixel_shuffle: [B,C,rH,rW] -> [B,C*r^2,H,W]."""
    if r < 1:
        raise ContractError("pixel_unshuffle: r must be positive")
    if x.data.ndim != 4:
        raise ShapeError("pixel_unshuffle: x must be [B,C,H,W]")
    B, C, Hr, Wr = x.shape
    if Hr % r or Wr % r:
        raise ShapeError(f"pixel_unshuffle: spatial dims {Hr}x{Wr} not divisible by {r}")
    H, W = Hr // r, Wr // r
    out = x.data.reshape(B, C, H, r, W, r).transpose(0, 1, 3, 5, 2, 4).reshape(B, C * r * r, H, W)

    def bw(g):
        gi = g.reshape(B, C, r, r, H, W).transpose(0, 1, 4, 2, 5, 3).reshape(B, C, Hr, Wr)
        return (np.ascontiguousarray(gi),)

    return _result(np.ascontiguousarray(out), (x,), bw)


def maxpool2d(x: Tensor, k: int = 2) -> Tensor:
    """Non-overlapping k x k max pooling; spatial dims must divide by k."""
    if x.data.ndim != 4:
        raise ShapeError("maxpool2d: x must be [B,C,H,W]")
    B, C, H, W = x.shape
    if H % k or W % k:
        raise ShapeError(f"maxpool2d: {H}x{W} not divisible by pool size {k}")
    Ho, Wo = H // k, W // k
    tiles = x.data.reshape(B, C, Ho, k, Wo, k).transpose(0, 1, 2, 4, 3, 5).reshape(
        B, C, Ho, Wo, k * k
    )
    arg = tiles.argmax(axis=-1)
    out = np.take_along_axis(tiles, arg[..., None], axis=-1)[..., 0]

    def bw(g):
        gt = np.zeros_like(tiles)
        np.put_along_axis(gt, arg[..., None], g[..., None], axis=-1)
        gx = gt.reshape(B, C, Ho, Wo, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(B, C, H, W)
        return (np.ascontiguousarray(gx),)

    return _result(np.ascontiguousarray(out), (x,), bw)


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator], mode: str) -> Tensor:
    """Inverted dropout; identity in eval mode or at rate 0."""
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate must be in [0,1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return x
    if mode != "train":
        raise ContractError(f"dropout: unknown mode {mode!r}")
    if rng is None:
        raise StateError("dropout: train mode needs a random generator")
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return _result(x.data * mask, (x,), lambda g: (g * mask,))


def lstm_sequence(
    x: Tensor,
    w_ih: Tensor,
    w_hh: Tensor,
    b_ih: Tensor,
    b_hh: Tensor,
    hidden_size: int,
) -> Tensor:
    """Single-layer batch-first LSTM over x:[B,T,N]; returns all hidden states.

    Gate blocks are packed row-wise as [input, forget, cell, output] in the
    [4H,N] / [4H,H] weight matrices. Initial hidden and cell states are zero.
    Built from the primitive ops, so backpropagation through time falls out
    of the graph.
    """
    if x.data.ndim != 3:
        raise ShapeError("lstm_sequence: x must be [B,T,N]")
    B, T, N = x.shape
    if T == 0:
        raise ShapeError("lstm_sequence: empty time axis")
    H = int(hidden_size)
    if w_ih.shape != (4 * H, N) or w_hh.shape != (4 * H, H):
        raise ShapeError(
            f"lstm_sequence: weight shapes {w_ih.shape}/{w_hh.shape} do not match "
            f"N={N}, H={H}"
        )
    if b_ih.shape != (4 * H,) or b_hh.shape != (4 * H,):
        raise ShapeError("lstm_sequence: bias shapes must be [4H]")

    h = zeros((B, H), dtype=x.dtype)
    c = zeros((B, H), dtype=x.dtype)
    outs = []
    for t in range(T):
        xt = getitem(x, (slice(None), t, slice(None)))
        gates = add(linear(xt, w_ih, b_ih), linear(h, w_hh, b_hh))
        i = sigmoid(getitem(gates, (slice(None), slice(0, H))))
        f = sigmoid(getitem(gates, (slice(None), slice(H, 2 * H))))
        g = tanh(getitem(gates, (slice(None), slice(2 * H, 3 * H))))
        o = sigmoid(getitem(gates, (slice(None), slice(3 * H, 4 * H))))
        c = add(mul(f, c), mul(i, g))
        h = mul(o, tanh(c))
        outs.append(reshape(h, (B, 1, H)))
    return concat(outs, axis=1)
