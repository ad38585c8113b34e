"""Dense optical flow, motion-vector smoothing, and frame alignment.

The estimator follows the polynomial-expansion approach: each pixel
neighborhood is fit with a quadratic f(x) ~ x'Ax + b'x + c by
Gaussian-weighted least squares, and the displacement between two frames
falls out of the coefficient differences, refined iteratively over a
coarse-to-fine pyramid. Flow vectors are (dx, dy): dx is horizontal
(column) displacement, dy vertical (row), such that the earlier frame at p
matches the later frame at p + flow(p).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import ndimage

from .tensor import ContractError, ShapeError

_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])  # ITU-R BT.601


@dataclass
class FlowField:
    """Per-pixel displacement grid, shape (H, W, 2): [..., 0]=dx, [..., 1]=dy."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float32)
        if v.ndim != 3 or v.shape[2] != 2:
            raise ShapeError(f"flow vectors must be (H,W,2), got {v.shape}")
        if not np.isfinite(v).all():
            raise ContractError("flow field contains non-finite values")
        self.vectors = v

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]


@dataclass
class FlowParams:
    pyr_scale: float = 0.5
    levels: int = 3
    winsize: int = 15
    iterations: int = 3
    poly_n: int = 5
    poly_sigma: float = 1.2

    def __post_init__(self):
        if not 0.0 < self.pyr_scale < 1.0:
            raise ContractError(f"pyr_scale must lie in (0,1), got {self.pyr_scale}")
        if self.levels < 1:
            raise ContractError("levels must be >= 1")
        if self.winsize < 3 or self.winsize % 2 == 0:
            raise ContractError(f"winsize must be odd >= 3, got {self.winsize}")
        if self.poly_n not in (5, 7):
            raise ContractError(f"poly_n must be 5 or 7, got {self.poly_n}")


@dataclass
class SmoothingParams:
    alpha: float = 0.9
    # alternative temporal filter: symmetric Gaussian window over frame index
    # instead of the exponential moving average
    gaussian: bool = False
    gaussian_std: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ContractError(f"alpha must lie in (0,1], got {self.alpha}")
        if self.gaussian_std <= 0.0:
            raise ContractError("gaussian_std must be positive")


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """Luminance of a (3,H,W) frame in [0,1] via BT.601 weights."""
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise ShapeError(f"expected (3,H,W) RGB frame, got {frame.shape}")
    return np.tensordot(_GRAY_WEIGHTS, frame, axes=1)


# -- polynomial expansion ------------------------------------------------


def _poly_expand(img: np.ndarray, n: int, sigma: float):
    """Per-pixel quadratic fit coefficients (A11, A12, A22, b1, b2).

    The Gaussian-weighted least squares over a (2n+1)^2 window separates into
    six 1-D correlations; the constant normal-equation matrix is inverted once.
    """
    half = n // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(t**2) / (2.0 * sigma * sigma))
    g /= g.sum()
    xg = t * g
    xxg = t * t * g

    def sep(ky, kx):
        tmp = ndimage.correlate1d(img, kx, axis=1, mode="nearest")
        return ndimage.correlate1d(tmp, ky, axis=0, mode="nearest")

    m00 = sep(g, g)
    m10 = sep(g, xg)
    m01 = sep(xg, g)
    m20 = sep(g, xxg)
    m02 = sep(xxg, g)
    m11 = sep(xg, xg)

    s2 = float((t * t * g).sum())
    s4 = float((t**4 * g).sum())
    # basis order (1, x, y, x^2, y^2, xy); odd moments vanish by symmetry
    G = np.array(
        [
            [1.0, 0, 0, s2, s2, 0],
            [0, s2, 0, 0, 0, 0],
            [0, 0, s2, 0, 0, 0],
            [s2, 0, 0, s4, s2 * s2, 0],
            [s2, 0, 0, s2 * s2, s4, 0],
            [0, 0, 0, 0, 0, s2 * s2],
        ]
    )
    Ginv = np.linalg.inv(G)
    m = np.stack([m00, m10, m01, m20, m02, m11])
    coef = np.einsum("ij,jhw->ihw", Ginv, m)
    b1, b2 = coef[1], coef[2]
    A11, A22, A12 = coef[3], coef[4], coef[5] * 0.5
    return A11, A12, A22, b1, b2


def _bilinear_planes(planes, sx, sy):
    """Sample each (H,W) plane at float coords (sx, sy), clamped to the edges."""
    H, W = planes[0].shape
    sx = np.clip(sx, 0, W - 1)
    sy = np.clip(sy, 0, H - 1)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    fx = sx - x0
    fy = sy - y0
    out = []
    for p in planes:
        top = (1.0 - fx) * p[y0, x0] + fx * p[y0, x1]
        bot = (1.0 - fx) * p[y1, x0] + fx * p[y1, x1]
        out.append((1.0 - fy) * top + fy * bot)
    return out


def _update_flow(p1, p2, flow: np.ndarray, winsize: int) -> np.ndarray:
    A11_1, A12_1, A22_1, b1_1, b2_1 = p1
    H, W = b1_1.shape
    yy, xx = np.mgrid[0:H, 0:W]
    fx, fy = flow[..., 0], flow[..., 1]
    # fetch the later frame's coefficients where the content moved to;
    # sampling must be smooth in the flow or subpixel estimates oscillate
    A11_2, A12_2, A22_2, b1_2, b2_2 = _bilinear_planes(p2, xx + fx, yy + fy)
    A11 = 0.5 * (A11_1 + A11_2)
    A12 = 0.5 * (A12_1 + A12_2)
    A22 = 0.5 * (A22_1 + A22_2)
    db1 = 0.5 * (b1_1 - b1_2) + A11 * fx + A12 * fy
    db2 = 0.5 * (b2_1 - b2_2) + A12 * fx + A22 * fy
    # window-averaged normal equations G d = h, G = A'A, h = A'db
    G11 = ndimage.uniform_filter(A11 * A11 + A12 * A12, winsize, mode="nearest")
    G12 = ndimage.uniform_filter(A12 * (A11 + A22), winsize, mode="nearest")
    G22 = ndimage.uniform_filter(A12 * A12 + A22 * A22, winsize, mode="nearest")
    h1 = ndimage.uniform_filter(A11 * db1 + A12 * db2, winsize, mode="nearest")
    h2 = ndimage.uniform_filter(A12 * db1 + A22 * db2, winsize, mode="nearest")
    # tiny diagonal loading: flat regions solve to ~zero instead of blowing up
    load = 1e-9 + 1e-6 * (G11 + G22)
    G11 = G11 + load
    G22 = G22 + load
    det = G11 * G22 - G12 * G12
    out = np.empty_like(flow)
    out[..., 0] = (G22 * h1 - G12 * h2) / det
    out[..., 1] = (G11 * h2 - G12 * h1) / det
    return out


def _resize(img: np.ndarray, shape) -> np.ndarray:
    zy = shape[0] / img.shape[0]
    zx = shape[1] / img.shape[1]
    out = ndimage.zoom(img, (zy, zx), order=1, mode="nearest", grid_mode=True)
    assert out.shape == tuple(shape)
    return out


def estimate_flow(prev_gray: np.ndarray, next_gray: np.ndarray, params: FlowParams = None) -> FlowField:
    """Dense displacement field between two grayscale frames."""
    if params is None:
        params = FlowParams()
    if prev_gray.shape != next_gray.shape:
        raise ShapeError(f"frame dims differ: {prev_gray.shape} vs {next_gray.shape}")
    if prev_gray.ndim != 2:
        raise ShapeError(f"expected 2-D grayscale input, got {prev_gray.shape}")
    H, W = prev_gray.shape
    if min(H, W) < 2 * params.winsize:
        raise ContractError(
            f"image {H}x{W} smaller than 2*winsize = {2 * params.winsize}"
        )

    a = np.asarray(prev_gray, dtype=np.float64)
    b = np.asarray(next_gray, dtype=np.float64)
    # coarse-to-fine pyramid; levels below a usable polynomial window are skipped
    shapes = [(H, W)]
    for _ in range(params.levels - 1):
        h = int(round(shapes[-1][0] * params.pyr_scale))
        w = int(round(shapes[-1][1] * params.pyr_scale))
        if min(h, w) < 2 * params.poly_n + 2:
            break
        shapes.append((h, w))

    blur_sigma = 0.5 * (1.0 / params.pyr_scale - 1.0)
    pyr_a, pyr_b = [a], [b]
    for shape in shapes[1:]:
        pyr_a.append(_resize(ndimage.gaussian_filter(pyr_a[-1], blur_sigma), shape))
        pyr_b.append(_resize(ndimage.gaussian_filter(pyr_b[-1], blur_sigma), shape))

    flow = np.zeros(shapes[-1] + (2,), dtype=np.float64)
    for lvl in range(len(shapes) - 1, -1, -1):
        if flow.shape[:2] != shapes[lvl]:
            scale_x = shapes[lvl][1] / flow.shape[1]
            scale_y = shapes[lvl][0] / flow.shape[0]
            up = np.stack(
                [_resize(flow[..., 0], shapes[lvl]) * scale_x,
                 _resize(flow[..., 1], shapes[lvl]) * scale_y],
                axis=-1,
            )
            flow = up
        p1 = _poly_expand(pyr_a[lvl], params.poly_n, params.poly_sigma)
        p2 = _poly_expand(pyr_b[lvl], params.poly_n, params.poly_sigma)
        win = params.winsize if lvl == 0 else max(3, params.winsize | 1)
        for _ in range(params.iterations):
            flow = _update_flow(p1, p2, flow, win)
    return FlowField(flow.astype(np.float32))


def estimate_motion_vectors(frames, params: FlowParams = None) -> List[FlowField]:
    """Flow between each consecutive grayscale frame pair, order preserved."""
    if len(frames) < 2:
        raise ContractError(f"need at least 2 frames, got {len(frames)}")
    grays = [to_grayscale(f) for f in frames]
    return [estimate_flow(grays[i], grays[i + 1], params) for i in range(len(grays) - 1)]


def smooth_motion_vectors(
    flows: List[FlowField], params: SmoothingParams = None
) -> List[FlowField]:
    """Temporal smoothing of a flow list; EMA by default, Gaussian behind the flag."""
    if params is None:
        params = SmoothingParams()
    if not flows:
        raise ContractError("empty flow list")
    dims = {(f.height, f.width) for f in flows}
    if len(dims) != 1:
        raise ShapeError(f"flow dims not uniform: {sorted(dims)}")

    if params.gaussian:
        radius = max(1, int(round(3.0 * params.gaussian_std)))
        idx = np.arange(-radius, radius + 1)
        kernel = np.exp(-(idx**2) / (2.0 * params.gaussian_std**2))
        out = []
        for i in range(len(flows)):
            lo = max(0, i - radius)
            hi = min(len(flows), i + radius + 1)
            w = kernel[(lo - i) + radius : (hi - i) + radius]
            stack = np.stack([flows[j].vectors for j in range(lo, hi)])
            out.append(FlowField(np.tensordot(w / w.sum(), stack, axes=1)))
        return out

    smoothed = [FlowField(flows[0].vectors.copy())]
    for f in flows[1:]:
        prev = smoothed[-1].vectors
        smoothed.append(FlowField(params.alpha * f.vectors + (1.0 - params.alpha) * prev))
    return smoothed


def warp_frame(frame: np.ndarray, flow: FlowField) -> np.ndarray:
    """Bilinear warp: output(y,x) samples the input at (x+dx, y+dy), edges clamped."""
    chans = frame if frame.ndim == 3 else frame[None]
    _, H, W = chans.shape
    if (flow.height, flow.width) != (H, W):
        raise ShapeError(f"flow {flow.height}x{flow.width} vs frame {H}x{W}")
    yy, xx = np.mgrid[0:H, 0:W]
    sx = np.clip(xx + flow.vectors[..., 0].astype(np.float64), 0, W - 1)
    sy = np.clip(yy + flow.vectors[..., 1].astype(np.float64), 0, H - 1)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    fx = (sx - x0).astype(frame.dtype)
    fy = (sy - y0).astype(frame.dtype)
    out = np.empty_like(chans)
    for c in range(chans.shape[0]):
        ch = chans[c]
        top = (1.0 - fx) * ch[y0, x0] + fx * ch[y0, x1]
        bot = (1.0 - fx) * ch[y1, x0] + fx * ch[y1, x1]
        out[c] = (1.0 - fy) * top + fy * bot
    return out if frame.ndim == 3 else out[0]


def align_frames(frames, smoothed: List[FlowField]):
    """Warp each frame toward its predecessor's geometry; frame 0 passes through."""
    from .data import FrameSequence

    if len(smoothed) != len(frames) - 1:
        raise ContractError(
            f"need {len(frames) - 1} flow fields for {len(frames)} frames, got {len(smoothed)}"
        )
    aligned = [frames[0].copy()]
    for i in range(1, len(frames)):
        aligned.append(warp_frame(frames[i], smoothed[i - 1]))
    return FrameSequence(aligned, fps=getattr(frames, "fps", 24.0))
