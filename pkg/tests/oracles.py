"""Naive reference implementations used as test oracles.

Everything here is written as plain scalar loops (or the most direct
formula transcription possible) so it shares no code path with the
library. Slow on purpose; only run on tiny inputs.
"""

import math

import numpy as np


def conv2d_ref(x, w, b, stride=1, pad=0):
    """Sliding-window cross-correlation with zero padding, scalar loops."""
    B, Cin, H, W = x.shape
    Cout, _, kh, kw = w.shape
    xp = np.pad(np.asarray(x, dtype=np.float64), ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    out = np.zeros((B, Cout, Ho, Wo))
    for bi in range(B):
        for co in range(Cout):
            for i in range(Ho):
                for j in range(Wo):
                    acc = 0.0
                    for ci in range(Cin):
                        for u in range(kh):
                            for v in range(kw):
                                acc += xp[bi, ci, i * stride + u, j * stride + v] * float(
                                    w[co, ci, u, v]
                                )
                    out[bi, co, i, j] = acc + float(b[co])
    return out


def mse_ref(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    return total / a.size


def psnr_ref(a, b, peak=1.0):
    err = mse_ref(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def gaussian_window_ref(size, sigma):
    half = size // 2
    w = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            w[i, j] = math.exp(-((i - half) ** 2 + (j - half) ** 2) / (2.0 * sigma**2))
    return w / w.sum()


def ssim_ref(a, b, window=11, sigma=1.5, peak=1.0, k1=0.01, k2=0.03):
    """Per-channel windowed SSIM over valid positions, scalar loops."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
        b = b[None]
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    w = gaussian_window_ref(window, sigma)
    C, H, W = a.shape
    per_channel = []
    for ch in range(C):
        vals = []
        for i in range(H - window + 1):
            for j in range(W - window + 1):
                pa = a[ch, i : i + window, j : j + window]
                pb = b[ch, i : i + window, j : j + window]
                mu_a = float((w * pa).sum())
                mu_b = float((w * pb).sum())
                var_a = float((w * pa * pa).sum()) - mu_a**2
                var_b = float((w * pb * pb).sum()) - mu_b**2
                cov = float((w * pa * pb).sum()) - mu_a * mu_b
                num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
                den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
                vals.append(num / den)
        per_channel.append(sum(vals) / len(vals))
    return sum(per_channel) / len(per_channel)


def lstm_step_ref(x, h, c, w_ih, w_hh, b_ih, b_hh, hidden):
    """One LSTM step on plain floats; gate order [input, forget, cell, output]."""

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    gates = w_ih @ x + b_ih + w_hh @ h + b_hh
    i = [sig(g) for g in gates[0:hidden]]
    f = [sig(g) for g in gates[hidden : 2 * hidden]]
    g = [math.tanh(v) for v in gates[2 * hidden : 3 * hidden]]
    o = [sig(v) for v in gates[3 * hidden : 4 * hidden]]
    c_new = [f[k] * c[k] + i[k] * g[k] for k in range(hidden)]
    h_new = [o[k] * math.tanh(c_new[k]) for k in range(hidden)]
    return np.array(h_new), np.array(c_new)
