"""Tour of the tensor engine: building a graph, backward, and a finite-difference check.

Everything downstream (losses, networks, the training loop) is built from the
handful of primitives shown here.
"""

import numpy as np

from vsrgan import tensor as T
from vsrgan.tensor import Tensor


def main():
    rng = np.random.default_rng(0)

    # leaves carry requires_grad; everything else is derived
    x = Tensor(rng.standard_normal((4, 3)).astype(np.float32), requires_grad=True)
    w = Tensor(rng.standard_normal((2, 3)).astype(np.float32), requires_grad=True)
    b = Tensor(np.zeros(2, np.float32), requires_grad=True)

    y = T.tanh(T.linear(x, w, b))
    loss = T.mean(T.mul(y, y))
    print(f"loss = {loss.item():.6f}")

    loss.backward()
    print(f"grad shapes: x {x.grad.shape}, w {w.grad.shape}, b {b.grad.shape}")

    # cross-check one weight entry against central differences
    h = 1e-3
    keep = w.data[0, 0]
    with T.no_grad():
        w.data[0, 0] = keep + h
        up = T.mean(T.mul(T.tanh(T.linear(x, w, b)), T.tanh(T.linear(x, w, b)))).item()
        w.data[0, 0] = keep - h
        down = T.mean(T.mul(T.tanh(T.linear(x, w, b)), T.tanh(T.linear(x, w, b)))).item()
        w.data[0, 0] = keep
    fd = (up - down) / (2 * h)
    print(f"analytic dL/dw[0,0] = {w.grad[0, 0]:+.6f}, finite difference = {fd:+.6f}")

    # grads accumulate across backward calls until cleared
    loss2 = T.mean(T.mul(T.tanh(T.linear(x, w, b)), T.tanh(T.linear(x, w, b))))
    loss2.backward()
    print(f"after second backward, dL/dw[0,0] doubles: {w.grad[0, 0]:+.6f}")
    for t in (x, w, b):
        t.zero_grad()

    # no_grad turns graph building off for evaluation-only code
    with T.no_grad():
        frozen = T.mean(T.tanh(T.linear(x, w, b)))
    print(f"no_grad result has no backward hook: {frozen.item():.6f}")


if __name__ == "__main__":
    main()
