"""Seeded GAN training loop, Adam optimizer, and the operations behind the
CLI subcommands: train, upscale, evaluate, flow debug.

Determinism is the organizing constraint: every random draw flows from
TrainConfig.seed through named generator streams, so a (config, seed) pair
reproduces checkpoints bit for bit. The wall_seconds log column is the one
value allowed to differ between runs.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import tensor as T
from .data import (
    FrameSequence,
    SynthSpec,
    bicubic_downscale,
    load_frame_sequence,
    read_checkpoint,
    save_frame_sequence,
    synth_sequence,
    write_flow_field,
)
from .flow import (
    FlowParams,
    SmoothingParams,
    align_frames,
    estimate_motion_vectors,
    smooth_motion_vectors,
)
from .losses import LossWeights, discriminator_loss, generator_total_loss
from .metrics import evaluate_sequence, psnr, ssim, temporal_inconsistency
from .models import (
    DiscriminatorConfig,
    FeatureNetConfig,
    GeneratorConfig,
    apply_state,
    discriminator_forward,
    feature_extract,
    feature_net_params,
    generator_forward,
    init_params,
    save_state,
)
from .tensor import ContractError, Tensor

__all__ = [
    "TrainConfig",
    "TrainLogRow",
    "TrainResult",
    "Adam",
    "train",
    "upscale",
    "evaluate",
    "flow_debug",
    "detect_discriminator_drift",
    "LOG_HEADER",
]


@dataclass
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-4
    scale: int = 4
    sequence_length: int = 3
    batch_size: int = 1
    seed: int = 0
    crop: int = 16
    use_lstm: bool = True
    use_alignment: bool = True
    use_temporal_loss: bool = True
    discriminator_dropout: float = 0.0
    weights: LossWeights = field(default_factory=LossWeights)
    data_dir: Optional[str] = None
    out_dir: str = "runs/latest"
    max_steps: Optional[int] = None
    # desk-scale architecture knobs; defaults reproduce the full-size nets
    base_channels: int = 64
    lstm_hidden: int = 256
    residual_blocks: Optional[int] = None
    disc_channels: tuple = (64, 64, 128, 128, 256, 256, 512, 512)
    feat_widths: tuple = (16, 32, 64, 128)
    flow_params: Optional[FlowParams] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be positive")
        if self.scale not in (2, 4, 8):
            raise ContractError(f"scale must be 2, 4 or 8, got {self.scale}")
        if self.sequence_length < 1 or self.batch_size < 1 or self.crop < 2:
            raise ContractError("sequence_length, batch_size and crop must be positive")
        if not 0.0 <= self.discriminator_dropout < 1.0:
            raise ContractError("discriminator_dropout must be in [0,1)")
        if self.max_steps is not None and self.max_steps < 1:
            raise ContractError("max_steps must be >= 1 when given")


LOG_HEADER = [
    "epoch",
    "adversarial",
    "perceptual",
    "image",
    "tv",
    "temporal",
    "total",
    "d_loss",
    "psnr_db",
    "ssim",
    "wall_seconds",
]


@dataclass
class TrainLogRow:
    epoch: int
    adversarial: float
    perceptual: float
    image: float
    tv: float
    temporal: float
    total: float
    d_loss: float
    psnr_db: float
    ssim: float
    wall_seconds: float

    def as_list(self) -> list:
        return [getattr(self, name) for name in LOG_HEADER]


@dataclass
class TrainResult:
    log_rows: list
    log_path: Path
    checkpoint_path: Path
    gen_cfg: GeneratorConfig
    disc_cfg: DiscriminatorConfig
    gen_params: dict
    disc_params: dict
    total_history: list
    d_loss_history: list


class Adam:
    """Adam with bias correction; state keyed by parameter name."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.tracked = {k: t for k, t in params.items() if t.requires_grad}
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(t.data) for k, t in self.tracked.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in self.tracked.items()}

    def zero_grad(self):
        for t in self.tracked.values():
            t.zero_grad()

    def step(self):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, t in self.tracked.items():
            if t.grad is None:
                continue
            g = t.grad
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            mhat = self.m[k] / c1
            vhat = self.v[k] / c2
            t.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(t.data.dtype)


def _auto_flow_params(h: int, w: int, base: Optional[FlowParams]) -> FlowParams:
    """Shrink the flow window so small frames satisfy the size contract."""
    base = base or FlowParams()
    limit = min(h, w) // 2
    win = min(base.winsize, limit if limit % 2 else limit - 1)
    if win < 3:
        raise ContractError(f"{h}x{w} frames are too small for flow-based alignment")
    return FlowParams(
        pyr_scale=base.pyr_scale,
        levels=base.levels,
        winsize=win,
        iterations=base.iterations,
        poly_n=base.poly_n,
        poly_sigma=base.poly_sigma,
    )


def _default_dataset(config: TrainConfig) -> list:
    """Two seeded translating-texture clips sized to the crop; stands in
    when no data directory is given."""
    size = config.crop * config.scale
    clips = []
    for i, vel in enumerate([(1.0, 0.0), (-1.0, 1.0)]):
        spec = SynthSpec(
            kind="translating-texture",
            velocity=vel,
            frames=2 * config.sequence_length,
            height=size,
            width=size,
            seed=config.seed + i,
            scale=config.scale,
        )
        hr, _, _ = synth_sequence(spec)
        clips.append(hr)
    return clips


def _load_dataset(data_dir) -> list:
    root = Path(data_dir)
    clips = [load_frame_sequence(d) for d in sorted(root.iterdir()) if d.is_dir()]
    if not clips:
        raise FileNotFoundError(f"no sequence directories under {root}")
    return clips


def _sample_windows(clips: list, t: int) -> list:
    """(clip index, start frame) pairs covering each clip with stride T."""
    samples = []
    for ci, clip in enumerate(clips):
        if len(clip) < t:
            continue
        samples.extend((ci, s) for s in range(0, len(clip) - t + 1, t))
    if not samples:
        raise ContractError(f"dataset has no window of {t} consecutive frames")
    return samples


def _prepare_sample(config, lr_clips, hr_clips, sample, rng, flow_params):
    """One (lr window, hr window) crop pair, aligned first when enabled."""
    ci, start = sample
    t = config.sequence_length
    lr_frames = [lr_clips[ci][start + i] for i in range(t)]
    hr_frames = [hr_clips[ci][start + i] for i in range(t)]

    if config.use_alignment:
        seq = FrameSequence(lr_frames)
        flows = estimate_motion_vectors(seq, flow_params)
        aligned = align_frames(seq, smooth_motion_vectors(flows))
        lr_frames = list(aligned.frames)

    lh, lw = lr_frames[0].shape[1:]
    c = config.crop
    cy = int(rng.integers(0, lh - c + 1))
    cx = int(rng.integers(0, lw - c + 1))
    s = config.scale
    lr_crop = np.stack([f[:, cy : cy + c, cx : cx + c] for f in lr_frames])
    hr_crop = np.stack(
        [f[:, cy * s : (cy + c) * s, cx * s : (cx + c) * s] for f in hr_frames]
    )
    return lr_crop, hr_crop


def _frames_along_time(x: Tensor, t: int) -> list:
    return [T.getitem(x, (slice(None), i)) for i in range(t)]


def train(config: TrainConfig, dataset: Optional[list] = None) -> TrainResult:
    """Run the full adversarial training loop.

    dataset: optional list of HR FrameSequences; otherwise loaded from
    config.data_dir or synthesized. LR inputs are always derived by bicubic
    downscaling, so every clip is a supervised pair.
    """
    if dataset is None:
        dataset = _load_dataset(config.data_dir) if config.data_dir else _default_dataset(config)
    if not dataset:
        raise ContractError("empty dataset")
    for clip in dataset:
        if clip.height % config.scale or clip.width % config.scale:
            raise ContractError(
                f"clip dims {clip.height}x{clip.width} not divisible by scale {config.scale}"
            )

    hr_clips = dataset
    lr_clips = [
        FrameSequence([bicubic_downscale(f, config.scale) for f in clip.frames], fps=clip.fps)
        for clip in dataset
    ]
    lr_h, lr_w = lr_clips[0].height, lr_clips[0].width
    if lr_h < config.crop or lr_w < config.crop:
        raise ContractError(f"LR frames {lr_h}x{lr_w} smaller than crop {config.crop}")

    gen_cfg = GeneratorConfig(
        scale_factor=config.scale,
        sequence_length=config.sequence_length,
        base_channels=config.base_channels,
        lstm_hidden=config.lstm_hidden,
        lr_height=config.crop,
        lr_width=config.crop,
        residual_blocks=config.residual_blocks,
        use_lstm=config.use_lstm,
    )
    disc_cfg = DiscriminatorConfig(
        channels=config.disc_channels, dropout_rate=config.discriminator_dropout
    )
    hr_crop_px = config.crop * config.scale
    if hr_crop_px % disc_cfg.min_input:
        raise ContractError(
            f"HR crop {hr_crop_px} not divisible by the discriminator's "
            f"downsampling factor {disc_cfg.min_input}"
        )
    feat_cfg = FeatureNetConfig(widths=config.feat_widths)
    feat_div = 2 ** len(config.feat_widths)
    if hr_crop_px % feat_div:
        raise ContractError(
            f"HR crop {hr_crop_px} not divisible by the feature net's "
            f"pooling factor {feat_div}"
        )

    gen_params = init_params(gen_cfg, config.seed)
    disc_params = init_params(disc_cfg, config.seed + 1)
    feat_params = feature_net_params(feat_cfg)
    featnet = lambda x: feature_extract(x, feat_params)

    adam_g = Adam(gen_params, config.learning_rate)
    adam_d = Adam(disc_params, config.learning_rate)
    rng_shuffle = np.random.default_rng(config.seed + 2)
    rng_dropout = np.random.default_rng(config.seed + 3)
    flow_params = (
        _auto_flow_params(lr_h, lr_w, config.flow_params) if config.use_alignment else None
    )

    samples = _sample_windows(hr_clips, config.sequence_length)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "log.csv"

    rows = []
    total_history = []
    d_loss_history = []
    step = 0
    stop = False
    t_seq = config.sequence_length

    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_HEADER)
        for epoch in range(1, config.epochs + 1):
            t0 = time.perf_counter()
            order = rng_shuffle.permutation(len(samples))
            sums = {k: 0.0 for k in ("adversarial", "perceptual", "image", "tv", "temporal", "total", "d_loss")}
            n_steps_epoch = 0
            last_out = last_hr = None

            for lo in range(0, len(order), config.batch_size):
                batch_idx = order[lo : lo + config.batch_size]
                pairs = [
                    _prepare_sample(
                        config, lr_clips, hr_clips, samples[i], rng_shuffle, flow_params
                    )
                    for i in batch_idx
                ]
                lr_batch = Tensor(np.stack([p[0] for p in pairs]))
                hr_batch = Tensor(np.stack([p[1] for p in pairs]))
                b = lr_batch.shape[0]
                fold = (b * t_seq, 3, hr_crop_px, hr_crop_px)

                out = generator_forward(lr_batch, gen_cfg, gen_params, mode="train")

                # discriminator step on reals vs detached fakes
                d_real = discriminator_forward(
                    T.reshape(hr_batch, fold), disc_cfg, disc_params, "train", rng_dropout
                )
                d_fake = discriminator_forward(
                    T.reshape(out.detach(), fold), disc_cfg, disc_params, "train", rng_dropout
                )
                d_loss = discriminator_loss(d_real, d_fake)
                adam_d.zero_grad()
                d_loss.backward()
                adam_d.step()

                # generator step against the updated discriminator
                d_fake_live = discriminator_forward(
                    T.reshape(out, fold), disc_cfg, disc_params, "train", rng_dropout
                )
                breakdown = generator_total_loss(
                    d_fake_live,
                    _frames_along_time(out, t_seq),
                    _frames_along_time(hr_batch, t_seq),
                    weights=config.weights,
                    featnet=featnet,
                    include_temporal=config.use_temporal_loss,
                )
                adam_g.zero_grad()
                adam_d.zero_grad()  # the live pass deposits grads on the critic too
                breakdown.total.backward()
                adam_g.step()

                vals = breakdown.values()
                for k in ("adversarial", "perceptual", "image", "tv", "temporal", "total"):
                    sums[k] += vals[k]
                sums["d_loss"] += float(d_loss.data)
                total_history.append(vals["total"])
                d_loss_history.append(float(d_loss.data))
                last_out, last_hr = out.data, hr_batch.data
                n_steps_epoch += 1
                step += 1
                if config.max_steps is not None and step >= config.max_steps:
                    stop = True
                    break

            # epoch diagnostics from the final batch (cheap, representative)
            flat_out = last_out.reshape(-1, *last_out.shape[2:])
            flat_hr = last_hr.reshape(-1, *last_hr.shape[2:])
            psnr_vals = [psnr(o, h) for o, h in zip(flat_out, flat_hr)]
            finite = [v for v in psnr_vals if math.isfinite(v)]
            ssim_val = float(np.mean([ssim(o, h) for o, h in zip(flat_out, flat_hr)]))
            row = TrainLogRow(
                epoch=epoch,
                adversarial=sums["adversarial"] / n_steps_epoch,
                perceptual=sums["perceptual"] / n_steps_epoch,
                image=sums["image"] / n_steps_epoch,
                tv=sums["tv"] / n_steps_epoch,
                temporal=sums["temporal"] / n_steps_epoch,
                total=sums["total"] / n_steps_epoch,
                d_loss=sums["d_loss"] / n_steps_epoch,
                psnr_db=float(np.mean(finite)) if finite else math.inf,
                ssim=ssim_val,
                wall_seconds=time.perf_counter() - t0,
            )
            rows.append(row)
            writer.writerow(row.as_list())
            fh.flush()

            ckpt = out_dir / f"checkpoint_ep{epoch:04d}.ckpt"
            save_state({**gen_params, **disc_params}, ckpt)
            if stop:
                break

    final = out_dir / "model.ckpt"
    save_state({**gen_params, **disc_params}, final)
    return TrainResult(
        log_rows=rows,
        log_path=log_path,
        checkpoint_path=final,
        gen_cfg=gen_cfg,
        disc_cfg=disc_cfg,
        gen_params=gen_params,
        disc_params=disc_params,
        total_history=total_history,
        d_loss_history=d_loss_history,
    )


def upscale(input_dir, checkpoint_path, config: TrainConfig, out_dir) -> FrameSequence:
    """Eval-mode super-resolution of a frame directory.

    The generator runs over windows of T frames with stride T; a ragged
    tail is covered by one final window ending at the last frame. Full
    frames are processed (no crops), so the architecture is rebuilt at the
    input's native size.
    """
    frames = load_frame_sequence(input_dir)
    t = config.sequence_length
    if len(frames) < t:
        raise ContractError(f"need at least {t} frames, found {len(frames)}")

    gen_cfg = GeneratorConfig(
        scale_factor=config.scale,
        sequence_length=t,
        base_channels=config.base_channels,
        lstm_hidden=config.lstm_hidden,
        lr_height=frames.height,
        lr_width=frames.width,
        residual_blocks=config.residual_blocks,
        use_lstm=config.use_lstm,
    )
    gen_params = init_params(gen_cfg, 0)
    loaded = read_checkpoint(checkpoint_path)
    apply_state(gen_params, {k: v for k, v in loaded.items() if k.startswith("gen.")})

    starts = list(range(0, len(frames) - t + 1, t))
    if starts[-1] + t < len(frames):
        starts.append(len(frames) - t)
    outputs = [None] * len(frames)
    for s in starts:
        window = np.stack(frames.frames[s : s + t])[None]
        out = generator_forward(Tensor(window), gen_cfg, gen_params, mode="eval")
        for i in range(t):
            outputs[s + i] = out.data[0, i]

    result = FrameSequence(outputs, fps=frames.fps)
    save_frame_sequence(result, out_dir)
    return result


def evaluate(pred_dir, gt_dir, out_path=None):
    """Score a prediction directory against ground truth.

    Writes sibling ``<out_path>.txt`` (key=value lines) and
    ``<out_path>.json`` when a path is given; returns (report,
    temporal_inconsistency or None).
    """
    pred = load_frame_sequence(pred_dir)
    gt = load_frame_sequence(gt_dir)
    report = evaluate_sequence(pred, gt)
    ti = temporal_inconsistency(pred, gt) if len(pred) >= 2 else None

    if out_path is not None:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        lines = [
            f"psnr_db={report.psnr_db}",
            f"ssim={report.ssim}",
            f"infinite_psnr_frames={report.infinite_psnr_frames}",
            f"all_psnr_infinite={report.all_psnr_infinite}",
        ]
        if ti is not None:
            lines.append(f"temporal_inconsistency={ti}")
        out_path.with_suffix(".txt").write_text("\n".join(lines) + "\n")
        payload = report.as_dict()
        payload["temporal_inconsistency"] = ti
        out_path.with_suffix(".json").write_text(json.dumps(payload, indent=2) + "\n")
    return report, ti


def flow_debug(frames_dir, out_dir, alpha: float = 0.9, params: Optional[FlowParams] = None):
    """Write raw flows, smoothed flows, and aligned frames; returns the
    per-pair mean flow magnitudes it prints."""
    seq = load_frame_sequence(frames_dir)
    if len(seq) < 2:
        raise ContractError("flow debug needs at least two frames")
    p = params or _auto_flow_params(seq.height, seq.width, None)
    raw = estimate_motion_vectors(seq, p)
    smoothed = smooth_motion_vectors(raw, SmoothingParams(alpha=alpha))
    aligned = align_frames(seq, smoothed)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    magnitudes = []
    for i, (r, s) in enumerate(zip(raw, smoothed)):
        write_flow_field(r, out / f"raw_{i:06d}.flow")
        write_flow_field(s, out / f"smoothed_{i:06d}.flow")
        mag = float(np.sqrt(r.vectors[..., 0] ** 2 + r.vectors[..., 1] ** 2).mean())
        magnitudes.append(mag)
        print(f"pair {i}: mean |flow| = {mag:.3f} px")
    save_frame_sequence(aligned, out / "aligned")
    return magnitudes


def detect_discriminator_drift(d_losses) -> bool:
    """True when d_loss trends toward 1.0 over the final third of training.

    A healthy adversarial balance hovers near 0.5; a sustained climb to 1.0
    means the discriminator can no longer separate real from fake and the
    gradient signal to the generator has collapsed.
    """
    d = np.asarray(list(d_losses), dtype=np.float64)
    if d.size < 3:
        return False
    tail = d[-max(3, int(math.ceil(d.size / 3))):]
    x = np.linspace(0.0, 1.0, tail.size)
    slope = float(np.polyfit(x, tail, 1)[0])
    return slope > 0.1 and float(tail[-3:].mean()) > 0.8
