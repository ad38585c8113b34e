"""Frame-sequence I/O, binary persistence, and synthetic video generation.

Images are float32 arrays shaped (3, H, W) with values in [0, 1]; 8-bit PNG
files are the interchange format, so quantization happens only at the I/O
boundary. The tensor container and checkpoint formats are sealed binary
layouts with bit-exact round trips.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from PIL import Image

from .flow import FlowField
from .tensor import ShapeError

FRAME_PATTERN = "frame_{:06d}.png"


class FormatError(ValueError):
    """A file does not conform to one of the sealed binary layouts."""


@dataclass
class FrameSequence:
    """Ordered RGB frames, uniform dims, values in [0, 1]. Order is load-bearing."""

    frames: List[np.ndarray]
    fps: float = 24.0  # informational only

    def __post_init__(self):
        if not self.frames:
            raise ShapeError("FrameSequence: no frames")
        dims = {f.shape for f in self.frames}
        if len(dims) != 1:
            raise ShapeError(f"FrameSequence: inconsistent frame dims {sorted(dims)}")
        shape = self.frames[0].shape
        if len(shape) != 3 or shape[0] != 3:
            raise ShapeError(f"FrameSequence: frames must be (3,H,W), got {shape}")

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i) -> np.ndarray:
        return self.frames[i]

    @property
    def height(self) -> int:
        return self.frames[0].shape[1]

    @property
    def width(self) -> int:
        return self.frames[0].shape[2]


def save_frame_sequence(seq: FrameSequence, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        arr = np.clip(frame, 0.0, 1.0)
        img = (arr * 255.0).round().astype(np.uint8).transpose(1, 2, 0)
        Image.fromarray(img, mode="RGB").save(out / FRAME_PATTERN.format(i))


def load_frame_sequence(in_dir) -> FrameSequence:
    """Load frame_*.png in strict lexicographic order, mapping 8-bit to [0,1]."""
    root = Path(in_dir)
    paths = sorted(root.glob("frame_*.png"))
    if not paths:
        raise FileNotFoundError(f"no frame_*.png files in {root}")
    frames = []
    for p in paths:
        with Image.open(p) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
        frames.append(np.clip(arr.transpose(2, 0, 1), 0.0, 1.0))
    return FrameSequence(frames)


# -- sealed binary formats ----------------------------------------------

_TENSOR_MAGIC = b"VTSR"
_TENSOR_VERSION = 1
_CKPT_MAGIC = b"VSRCKPT1"


def tensor_to_bytes(arr: np.ndarray) -> bytes:
    if arr.dtype != np.float32:
        raise FormatError(f"container stores float32 only, got {arr.dtype}")
    head = _TENSOR_MAGIC + struct.pack("<BBB", _TENSOR_VERSION, 0, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return head + dims + payload


def tensor_from_bytes(buf: bytes, offset: int = 0) -> Tuple[np.ndarray, int]:
    if buf[offset : offset + 4] != _TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {buf[offset:offset + 4]!r}")
    version, dtype_code, rank = struct.unpack_from("<BBB", buf, offset + 4)
    if version != _TENSOR_VERSION:
        raise FormatError(f"unsupported tensor container version {version}")
    if dtype_code != 0:
        raise FormatError(f"unknown dtype code {dtype_code}")
    pos = offset + 7
    if len(buf) < pos + 8 * rank:
        raise FormatError("truncated tensor header")
    dims = struct.unpack_from(f"<{rank}Q", buf, pos)
    pos += 8 * rank
    count = int(np.prod(dims)) if rank else 1
    end = pos + 4 * count
    if len(buf) < end:
        raise FormatError(f"truncated tensor payload: need {4 * count} bytes")
    arr = np.frombuffer(buf[pos:end], dtype="<f4").reshape(dims).copy()
    return arr, end


def write_tensor(arr: np.ndarray, path) -> None:
    Path(path).write_bytes(tensor_to_bytes(arr))


def read_tensor(path) -> np.ndarray:
    arr, end = tensor_from_bytes(Path(path).read_bytes())
    return arr


def write_checkpoint(params: dict, path) -> None:
    """Write named float32 tensors; accepts raw arrays or .data holders."""
    chunks = [_CKPT_MAGIC, struct.pack("<I", len(params))]
    for name, value in params.items():
        arr = np.asarray(getattr(value, "data", value))
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FormatError(f"name too long: {name[:40]}...")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(tensor_to_bytes(arr))
    Path(path).write_bytes(b"".join(chunks))


def read_checkpoint(path) -> dict:
    buf = Path(path).read_bytes()
    if buf[:8] != _CKPT_MAGIC:
        raise FormatError(f"bad checkpoint magic {buf[:8]!r}")
    (count,) = struct.unpack_from("<I", buf, 8)
    pos = 12
    out: dict = {}
    for _ in range(count):
        if len(buf) < pos + 2:
            raise FormatError("truncated checkpoint entry header")
        (name_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = buf[pos : pos + name_len].decode("utf-8")
        pos += name_len
        if name in out:
            raise FormatError(f"duplicate checkpoint entry {name!r}")
        out[name], pos = tensor_from_bytes(buf, pos)
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after last entry")
    return out


def write_flow_field(flow: FlowField, path) -> None:
    write_tensor(flow.vectors.astype(np.float32), path)


def read_flow_field(path) -> FlowField:
    arr = read_tensor(path)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise FormatError(f"flow container must be (H,W,2), got {arr.shape}")
    return FlowField(arr)


# -- resampling ----------------------------------------------------------


def _catrom(x: np.ndarray) -> np.ndarray:
    # Catmull-Rom cubic, a = -0.5
    ax = np.abs(x)
    a = -0.5
    w = np.where(
        ax <= 1.0,
        (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0,
        np.where(ax < 2.0, a * ax**3 - 5.0 * a * ax**2 + 8.0 * a * ax - 4.0 * a, 0.0),
    )
    return w


def _downscale_axis(x: np.ndarray, f: int) -> np.ndarray:
    """Anti-aliased cubic decimation along the last axis by integer factor f."""
    n = x.shape[-1]
    no = n // f
    # output center o maps to input coordinate o*f + (f-1)/2; the tap layout
    # around it is identical for every o, so weights are computed once
    off = 2 * f - (f - 1) // 2
    taps = 4 * f + 1
    rel = (np.arange(taps) - off - (f - 1) / 2.0) / f
    w = _catrom(rel)
    w /= w.sum()
    # linear extrapolation padding keeps ramps exactly linear at the borders
    left = x[..., :1] + (x[..., :1] - x[..., 1:2]) * np.arange(off, 0, -1)
    right = x[..., -1:] + (x[..., -1:] - x[..., -2:-1]) * np.arange(1, taps)
    xp = np.concatenate([left, x, right], axis=-1)
    out = np.zeros(x.shape[:-1] + (no,), dtype=np.float64)
    for j in range(taps):
        out += w[j] * xp[..., j : j + f * no : f]
    return out


def bicubic_downscale(frame: np.ndarray, factor: int) -> np.ndarray:
    """Separable Catmull-Rom decimation by a power-of-two factor, clamped to [0,1]."""
    if factor < 1 or factor & (factor - 1):
        raise ShapeError(f"downscale factor must be a power of 2, got {factor}")
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise ShapeError(f"expected (3,H,W) frame, got {frame.shape}")
    _, H, W = frame.shape
    if H % factor or W % factor:
        raise ShapeError(f"dims {H}x{W} not divisible by factor {factor}")
    if factor == 1:
        return frame.astype(np.float32).copy()
    out = _downscale_axis(frame.astype(np.float64), factor)
    out = _downscale_axis(np.swapaxes(out, -1, -2), factor)
    out = np.swapaxes(out, -1, -2)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def nearest_upscale(frame: np.ndarray, factor: int) -> np.ndarray:
    """Pixel-replication upscaling; the do-nothing baseline."""
    if factor < 1:
        raise ShapeError(f"upscale factor must be positive, got {factor}")
    return np.repeat(np.repeat(frame, factor, axis=-2), factor, axis=-1)


# -- synthetic clips with known motion ------------------------------------

_SYNTH_KINDS = ("translating-texture", "moving-checker", "gradient-drift")


@dataclass
class SynthSpec:
    """Recipe for a deterministic clip whose true motion is known exactly."""

    kind: str = "translating-texture"
    velocity: Tuple[float, float] = (1.0, 0.0)  # (dx, dy) pixels per frame
    frames: int = 4
    height: int = 64
    width: int = 64
    seed: int = 0
    scale: int = 4  # LR synthesis factor
    bandwidth: float = 2.5  # texture fineness: spectral envelope width in cycles

    def __post_init__(self):
        if self.kind not in _SYNTH_KINDS:
            raise ValueError(f"unknown synth kind {self.kind!r}; one of {_SYNTH_KINDS}")
        if max(abs(self.velocity[0]), abs(self.velocity[1])) > 4:
            raise ValueError("velocity components must stay within 4 px/frame")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def _texture_spectra(rng, H: int, W: int, bandwidth: float = 2.5):
    """Per-channel random spectra with a Gaussian low-frequency envelope.

    Building the texture in the Fourier domain makes translation an exact
    phase multiplication (periodic, subpixel-exact) and fills every spatial
    direction, so the motion is recoverable without aperture ambiguity.
    """
    ky = np.fft.fftfreq(H) * H  # integer cycles per image
    kx = np.fft.fftfreq(W) * W
    r2 = ky[:, None] ** 2 + kx[None, :] ** 2
    env = np.exp(-r2 / (2.0 * bandwidth**2))
    env[0, 0] = 0.0  # no DC; the midpoint offset is added at evaluation
    specs = []
    for _ in range(3):
        noise = rng.normal(size=(H, W)) + 1j * rng.normal(size=(H, W))
        s = env * noise
        base = np.fft.ifft2(s).real
        specs.append((s, float(np.abs(base).max()) + 1e-12))
    return specs, ky, kx


def _texture_frame(spec: SynthSpec, spectra, t: float) -> np.ndarray:
    specs, ky, kx = spectra
    H, W = spec.height, spec.width
    dx, dy = spec.velocity
    phase = np.exp(
        -2j * math.pi * (ky[:, None] * (t * dy) / H + kx[None, :] * (t * dx) / W)
    )
    chans = [0.5 + 0.42 * np.fft.ifft2(s * phase).real / m for s, m in specs]
    return np.clip(np.stack(chans), 0.0, 1.0).astype(np.float32)


def _checker_frame(spec: SynthSpec, offsets, t: float, block: int = 4) -> np.ndarray:
    H, W = spec.height, spec.width
    y = np.arange(H).reshape(H, 1)
    x = np.arange(W).reshape(1, W)
    dx, dy = spec.velocity
    ox, oy = offsets
    xs = np.mod(x - t * dx - ox, W)
    ys = np.mod(y - t * dy - oy, H)
    cell = (np.floor(xs / block) + np.floor(ys / block)) % 2
    shades = (0.9, 0.7, 0.5)
    return np.stack([(0.05 + s * cell) for s in shades]).astype(np.float32)


def _gradient_frame(spec: SynthSpec, phase: float, t: float) -> np.ndarray:
    H, W = spec.height, spec.width
    y = np.arange(H).reshape(H, 1)
    x = np.arange(W).reshape(1, W)
    dx, dy = spec.velocity
    wave = np.cos(2.0 * math.pi * ((x - t * dx) / W + (y - t * dy) / H) + phase)
    base = 0.5 + 0.4 * wave
    return np.stack([base, 0.5 + 0.35 * wave, 0.5 + 0.3 * wave]).astype(np.float32)


def synth_sequence(spec: SynthSpec):
    """Build (hr, lr, gt_flows): closed-form translation, so motion is exact.

    Frame t is the base pattern translated by t*velocity with periodic wrap;
    the ground-truth flow between consecutive frames is the constant velocity
    field, and warping frame t by it reproduces frame t-1.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "translating-texture":
        spectra = _texture_spectra(rng, spec.height, spec.width, spec.bandwidth)
        make = lambda t: _texture_frame(spec, spectra, t)
    elif spec.kind == "moving-checker":
        offsets = (float(rng.uniform(0, spec.width)), float(rng.uniform(0, spec.height)))
        make = lambda t: _checker_frame(spec, offsets, t)
    else:
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
        make = lambda t: _gradient_frame(spec, phase, t)

    hr_frames = [make(t) for t in range(spec.frames)]
    lr_frames = [bicubic_downscale(f, spec.scale) for f in hr_frames]
    vec = np.empty((spec.height, spec.width, 2), dtype=np.float32)
    vec[..., 0] = spec.velocity[0]
    vec[..., 1] = spec.velocity[1]
    flows = [FlowField(vec.copy()) for _ in range(spec.frames - 1)]
    return FrameSequence(hr_frames), FrameSequence(lr_frames), flows
