"""Image and video quality metrics: PSNR, windowed SSIM, and a temporal
inconsistency diagnostic for super-resolved sequences."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tensor import ContractError, ShapeError

__all__ = [
    "MetricParams",
    "MetricReport",
    "psnr",
    "ssim",
    "temporal_inconsistency",
    "relative_improvement",
    "evaluate_sequence",
]


@dataclass(frozen=True)
class MetricParams:
    psnr_max: float = 1.0
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self):
        if self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise ContractError(f"ssim_window must be odd and >= 3, got {self.ssim_window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ContractError("k1 and k2 must be positive")
        if self.psnr_max <= 0:
            raise ContractError("psnr_max must be positive")


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    per_frame_psnr: Optional[list] = None
    per_frame_ssim: Optional[list] = None
    infinite_psnr_frames: int = 0

    @property
    def all_psnr_infinite(self) -> bool:
        if self.per_frame_psnr is None:
            return math.isinf(self.psnr_db)
        return self.infinite_psnr_frames == len(self.per_frame_psnr)

    def as_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "per_frame_psnr": self.per_frame_psnr,
            "per_frame_ssim": self.per_frame_ssim,
            "infinite_psnr_frames": self.infinite_psnr_frames,
        }


def _frames_of(seq) -> list:
    # accepts a FrameSequence, a list of arrays, or a stacked array
    frames = getattr(seq, "frames", seq)
    return [np.asarray(f) for f in frames]


def psnr(a, b, params: MetricParams = None) -> float:
    """10*log10(peak^2 / mse). Identical inputs return +inf."""
    params = params or MetricParams()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    err = float(np.mean((a - b) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(params.psnr_max**2 / err)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(t**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _windowed(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    # valid-position weighted local mean; exact, no FFT rounding
    k = win.shape[0]
    patches = np.lib.stride_tricks.sliding_window_view(x, (k, k))
    return np.tensordot(patches, win, axes=([2, 3], [0, 1]))


def ssim(a, b, params: MetricParams = None) -> float:
    """Mean local SSIM over valid 11x11 Gaussian windows, channels averaged.

    Local values can dip below 0 on anti-correlated patches; they are not
    clamped.
    """
    params = params or MetricParams()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[None]
        b = b[None]
    if a.ndim != 3:
        raise ShapeError(f"expected (C, H, W) or (H, W) image, got {a.shape}")
    k = params.ssim_window
    if min(a.shape[1], a.shape[2]) < k:
        raise ContractError(f"image {a.shape[1]}x{a.shape[2]} smaller than {k}x{k} window")

    c1 = (params.k1 * params.psnr_max) ** 2
    c2 = (params.k2 * params.psnr_max) ** 2
    win = _gaussian_window(k, params.ssim_sigma)

    vals = []
    for ch in range(a.shape[0]):
        x, y = a[ch], b[ch]
        mu_x = _windowed(x, win)
        mu_y = _windowed(y, win)
        var_x = _windowed(x * x, win) - mu_x**2
        var_y = _windowed(y * y, win) - mu_y**2
        cov = _windowed(x * y, win) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
        den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
        vals.append(float(np.mean(num / den)))
    return float(np.mean(vals))


def temporal_inconsistency(out_seq, target_seq) -> float:
    """Mean over t>=1 of mse(out[t]-out[t-1], target[t]-target[t-1]).

    Zero when the output's frame-to-frame changes track the target's
    exactly, regardless of any static per-frame error.
    """
    out = _frames_of(out_seq)
    tgt = _frames_of(target_seq)
    if len(out) != len(tgt):
        raise ShapeError(f"sequence lengths differ: {len(out)} vs {len(tgt)}")
    if len(out) < 2:
        raise ContractError("need at least two frames to measure temporal change")
    total = 0.0
    for t in range(1, len(out)):
        d_out = out[t].astype(np.float64) - out[t - 1]
        d_tgt = tgt[t].astype(np.float64) - tgt[t - 1]
        if d_out.shape != d_tgt.shape:
            raise ShapeError(f"frame {t} shape mismatch {d_out.shape} vs {d_tgt.shape}")
        total += float(np.mean((d_out - d_tgt) ** 2))
    return total / (len(out) - 1)


def relative_improvement(new: float, old: float) -> float:
    """Percent change of new over old; old must be positive."""
    if old <= 0:
        raise ContractError(f"baseline must be positive, got {old}")
    return 100.0 * (new - old) / old


def evaluate_sequence(pred_seq, gt_seq, params: MetricParams = None) -> MetricReport:
    """Per-frame PSNR/SSIM and their means.

    Frames with infinite PSNR are left out of the PSNR mean and counted in
    the report; if every frame is infinite the mean itself is +inf.
    """
    params = params or MetricParams()
    pred = _frames_of(pred_seq)
    gt = _frames_of(gt_seq)
    if len(pred) != len(gt):
        raise ShapeError(f"sequence lengths differ: {len(pred)} vs {len(gt)}")
    if not pred:
        raise ContractError("empty sequence")

    per_psnr = [psnr(p, g, params) for p, g in zip(pred, gt)]
    per_ssim = [ssim(p, g, params) for p, g in zip(pred, gt)]

    finite = [v for v in per_psnr if math.isfinite(v)]
    n_inf = len(per_psnr) - len(finite)
    mean_psnr = sum(finite) / len(finite) if finite else math.inf
    return MetricReport(
        psnr_db=mean_psnr,
        ssim=sum(per_ssim) / len(per_ssim),
        per_frame_psnr=per_psnr,
        per_frame_ssim=per_ssim,
        infinite_psnr_frames=n_inf,
    )
