"""Network definitions: the recurrent super-resolution generator, an
SRGAN-style discriminator, and a small frozen feature network for the
perceptual loss.

Parameters are plain name -> Tensor dicts keyed by stable layer paths
(``gen.res0.c1.w``, ``disc.block3.bn.gamma``, ...), so checkpoints stay
readable and diffable. Batch-norm running statistics live in the same
dict as non-gradient buffers.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import tensor as T
from .data import FormatError, read_checkpoint, write_checkpoint
from .tensor import ContractError, ShapeError, Tensor

__all__ = [
    "GeneratorConfig",
    "DiscriminatorConfig",
    "FeatureNetConfig",
    "init_params",
    "generator_forward",
    "discriminator_forward",
    "feature_extract",
    "feature_net_params",
    "save_state",
    "load_state",
    "apply_state",
]

Params = Dict[str, Tensor]

# Kaiming fan-in gains, squared, for the activation that follows a layer.
_GAIN2_RELU = 2.0
_GAIN2_PRELU = 2.0 / (1.0 + 0.25**2)
_GAIN2_TANH = (5.0 / 3.0) ** 2
_GAIN2_LINEAR = 1.0


@dataclass(frozen=True)
class GeneratorConfig:
    scale_factor: int = 4
    sequence_length: int = 3
    base_channels: int = 64
    lstm_hidden: int = 256
    lr_height: int = 16
    lr_width: int = 16
    # the residual depth rides on sequence_length by default; override to
    # decouple them
    residual_blocks: Optional[int] = None
    use_lstm: bool = True

    def __post_init__(self):
        if self.scale_factor not in (2, 4, 8):
            raise ContractError(f"scale_factor must be 2, 4 or 8, got {self.scale_factor}")
        if self.sequence_length < 1:
            raise ContractError("sequence_length must be >= 1")
        if min(self.base_channels, self.lstm_hidden, self.lr_height, self.lr_width) < 1:
            raise ContractError("channel and spatial sizes must be positive")
        if self.residual_blocks is not None and self.residual_blocks < 1:
            raise ContractError("residual_blocks override must be >= 1")

    @property
    def n_residual_blocks(self) -> int:
        return self.residual_blocks if self.residual_blocks is not None else self.sequence_length

    @property
    def n_upsample_blocks(self) -> int:
        return int(round(math.log2(self.scale_factor)))

    @property
    def feature_width(self) -> int:
        return self.base_channels * self.lr_height * self.lr_width


@dataclass(frozen=True)
class DiscriminatorConfig:
    channels: tuple = (64, 64, 128, 128, 256, 256, 512, 512)
    leaky_slope: float = 0.2
    dropout_rate: float = 0.0
    dense_width: int = 1024

    def __post_init__(self):
        if not self.channels or any(c < 1 for c in self.channels):
            raise ContractError(f"bad channel ladder {self.channels}")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ContractError(f"leaky_slope must be in (0,1), got {self.leaky_slope}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ContractError(f"dropout_rate must be in [0,1), got {self.dropout_rate}")
        if self.dense_width < 1:
            raise ContractError("dense_width must be positive")

    @property
    def n_halvings(self) -> int:
        # odd-indexed blocks stride by 2
        return len(self.channels) // 2

    @property
    def min_input(self) -> int:
        return 2**self.n_halvings


@dataclass(frozen=True)
class FeatureNetConfig:
    widths: tuple = (16, 32, 64, 128)
    seed: int = 989

    def __post_init__(self):
        if not self.widths or any(w < 1 for w in self.widths):
            raise ContractError(f"bad stage widths {self.widths}")


def _conv_w(rng, c_out, c_in, k, gain2) -> np.ndarray:
    fan_in = c_in * k * k
    return (rng.standard_normal((c_out, c_in, k, k)) * math.sqrt(gain2 / fan_in)).astype(
        np.float32
    )


def _dense_w(rng, n_out, n_in, gain2) -> np.ndarray:
    return (rng.standard_normal((n_out, n_in)) * math.sqrt(gain2 / n_in)).astype(np.float32)


def _grad(arr) -> Tensor:
    return Tensor(arr, requires_grad=True)


def _buf(arr) -> Tensor:
    return Tensor(arr, requires_grad=False)


def _bn_entries(p: Params, path: str, c: int):
    p[f"{path}.gamma"] = _grad(np.ones(c, np.float32))
    p[f"{path}.beta"] = _grad(np.zeros(c, np.float32))
    p[f"{path}.mean"] = _buf(np.zeros(c, np.float32))
    p[f"{path}.var"] = _buf(np.ones(c, np.float32))


def _init_generator(cfg: GeneratorConfig, rng) -> Params:
    p: Params = {}
    c = cfg.base_channels
    p["gen.head.w"] = _grad(_conv_w(rng, c, 3, 9, _GAIN2_PRELU))
    p["gen.head.b"] = _grad(np.zeros(c, np.float32))
    p["gen.head.a"] = _grad(np.full(c, 0.25, np.float32))
    for i in range(cfg.n_residual_blocks):
        p[f"gen.res{i}.c1.w"] = _grad(_conv_w(rng, c, c, 3, _GAIN2_PRELU))
        p[f"gen.res{i}.c1.b"] = _grad(np.zeros(c, np.float32))
        _bn_entries(p, f"gen.res{i}.bn1", c)
        p[f"gen.res{i}.a"] = _grad(np.full(c, 0.25, np.float32))
        p[f"gen.res{i}.c2.w"] = _grad(_conv_w(rng, c, c, 3, _GAIN2_LINEAR))
        p[f"gen.res{i}.c2.b"] = _grad(np.zeros(c, np.float32))
        _bn_entries(p, f"gen.res{i}.bn2", c)
    p["gen.post.w"] = _grad(_conv_w(rng, c, c, 3, _GAIN2_LINEAR))
    p["gen.post.b"] = _grad(np.zeros(c, np.float32))
    _bn_entries(p, "gen.post.bn", c)

    n = cfg.feature_width
    h = cfg.lstm_hidden
    if cfg.use_lstm:
        p["gen.lstm.w_ih"] = _grad(_dense_w(rng, 4 * h, n, _GAIN2_LINEAR))
        p["gen.lstm.w_hh"] = _grad(_dense_w(rng, 4 * h, h, _GAIN2_LINEAR))
        p["gen.lstm.b_ih"] = _grad(np.zeros(4 * h, np.float32))
        p["gen.lstm.b_hh"] = _grad(np.zeros(4 * h, np.float32))
        fc_in = h
    else:
        fc_in = n
    p["gen.fc.w"] = _grad(_dense_w(rng, n, fc_in, _GAIN2_LINEAR))
    p["gen.fc.b"] = _grad(np.zeros(n, np.float32))

    for i in range(cfg.n_upsample_blocks):
        p[f"gen.up{i}.w"] = _grad(_conv_w(rng, 4 * c, c, 3, _GAIN2_PRELU))
        p[f"gen.up{i}.b"] = _grad(np.zeros(4 * c, np.float32))
        p[f"gen.up{i}.a"] = _grad(np.full(c, 0.25, np.float32))
    p["gen.tail.w"] = _grad(_conv_w(rng, 3, c, 9, _GAIN2_TANH))
    p["gen.tail.b"] = _grad(np.zeros(3, np.float32))
    return p


def _init_discriminator(cfg: DiscriminatorConfig, rng) -> Params:
    p: Params = {}
    gain2 = 2.0 / (1.0 + cfg.leaky_slope**2)
    prev = 3
    for i, c in enumerate(cfg.channels):
        k = 4 if i % 2 else 3
        p[f"disc.block{i}.w"] = _grad(_conv_w(rng, c, prev, k, gain2))
        p[f"disc.block{i}.b"] = _grad(np.zeros(c, np.float32))
        if i > 0:
            _bn_entries(p, f"disc.block{i}.bn", c)
        prev = c
    p["disc.fc1.w"] = _grad(_dense_w(rng, cfg.dense_width, prev, gain2))
    p["disc.fc1.b"] = _grad(np.zeros(cfg.dense_width, np.float32))
    p["disc.fc2.w"] = _grad(_dense_w(rng, 1, cfg.dense_width, _GAIN2_LINEAR))
    p["disc.fc2.b"] = _grad(np.zeros(1, np.float32))
    return p


def _init_featnet(cfg: FeatureNetConfig, rng) -> Params:
    # frozen by construction: nothing here ever requires a gradient
    p: Params = {}
    prev = 3
    for i, c in enumerate(cfg.widths):
        p[f"feat.stage{i}.w"] = _buf(_conv_w(rng, c, prev, 3, _GAIN2_RELU))
        p[f"feat.stage{i}.b"] = _buf(np.zeros(c, np.float32))
        prev = c
    return p


def init_params(cfg, seed: int) -> Params:
    """Deterministic parameter set for any of the three configs."""
    rng = np.random.default_rng(seed)
    if isinstance(cfg, GeneratorConfig):
        return _init_generator(cfg, rng)
    if isinstance(cfg, DiscriminatorConfig):
        return _init_discriminator(cfg, rng)
    if isinstance(cfg, FeatureNetConfig):
        return _init_featnet(cfg, rng)
    raise ContractError(f"unknown config type {type(cfg).__name__}")


def _bn(x, p: Params, path: str, mode: str):
    return T.batchnorm2d(
        x,
        p[f"{path}.gamma"],
        p[f"{path}.beta"],
        mode=mode,
        running_mean=p[f"{path}.mean"],
        running_var=p[f"{path}.var"],
    )


def generator_forward(seq: Tensor, cfg: GeneratorConfig, p: Params, mode: str = "train") -> Tensor:
    """Super-resolve a batch of frame sequences.

    [B,T,3,h,w] -> [B,T,3,s*h,s*w]. Time is folded into the batch for the
    convolutional stages; the LSTM then runs over per-frame feature
    vectors, so each output frame can depend on everything before it.
    """
    if seq.data.ndim != 5:
        raise ShapeError(f"expected [B,T,3,h,w], got {seq.data.shape}")
    b, t, ch, h, w = seq.shape
    if t != cfg.sequence_length:
        raise ShapeError(f"sequence length {t} != configured {cfg.sequence_length}")
    if ch != 3 or h != cfg.lr_height or w != cfg.lr_width:
        raise ShapeError(
            f"frame dims {ch}x{h}x{w} != configured 3x{cfg.lr_height}x{cfg.lr_width}"
        )

    c = cfg.base_channels
    x = T.reshape(seq, (b * t, 3, h, w))
    x = T.prelu(T.conv2d(x, p["gen.head.w"], p["gen.head.b"], pad=4), p["gen.head.a"])
    skip = x
    for i in range(cfg.n_residual_blocks):
        y = T.conv2d(x, p[f"gen.res{i}.c1.w"], p[f"gen.res{i}.c1.b"], pad=1)
        y = _bn(y, p, f"gen.res{i}.bn1", mode)
        y = T.prelu(y, p[f"gen.res{i}.a"])
        y = T.conv2d(y, p[f"gen.res{i}.c2.w"], p[f"gen.res{i}.c2.b"], pad=1)
        y = _bn(y, p, f"gen.res{i}.bn2", mode)
        x = T.add(x, y)
    x = _bn(T.conv2d(x, p["gen.post.w"], p["gen.post.b"], pad=1), p, "gen.post.bn", mode)
    x = T.add(x, skip)

    feats = T.reshape(x, (b, t, cfg.feature_width))
    if cfg.use_lstm:
        feats = T.lstm_sequence(
            feats,
            p["gen.lstm.w_ih"],
            p["gen.lstm.w_hh"],
            p["gen.lstm.b_ih"],
            p["gen.lstm.b_hh"],
            cfg.lstm_hidden,
        )
        width = cfg.lstm_hidden
    else:
        width = cfg.feature_width
    x = T.linear(T.reshape(feats, (b * t, width)), p["gen.fc.w"], p["gen.fc.b"])
    x = T.reshape(x, (b * t, c, h, w))

    for i in range(cfg.n_upsample_blocks):
        x = T.conv2d(x, p[f"gen.up{i}.w"], p[f"gen.up{i}.b"], pad=1)
        x = T.pixel_shuffle(x, 2)
        x = T.prelu(x, p[f"gen.up{i}.a"])
    x = T.conv2d(x, p["gen.tail.w"], p["gen.tail.b"], pad=4)
    x = T.scale(T.add_scalar(T.tanh(x), 1.0), 0.5)
    s = cfg.scale_factor
    return T.reshape(x, (b, t, 3, s * h, s * w))


def discriminator_forward(
    img: Tensor,
    cfg: DiscriminatorConfig,
    p: Params,
    mode: str = "train",
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """Real/fake scores in (0,1) for a batch of images: [B,3,H,W] -> [B]."""
    if img.data.ndim != 4 or img.shape[1] != 3:
        raise ShapeError(f"expected [B,3,H,W], got {img.data.shape}")
    _, _, h, w = img.shape
    need = cfg.min_input
    if h % need or w % need or h < need or w < need:
        raise ShapeError(
            f"{h}x{w} input does not survive {cfg.n_halvings} stride-2 blocks "
            f"(needs multiples of {need})"
        )

    x = img
    for i in range(len(cfg.channels)):
        stride = 2 if i % 2 else 1
        x = T.conv2d(x, p[f"disc.block{i}.w"], p[f"disc.block{i}.b"], stride=stride, pad=1)
        if i > 0:
            x = _bn(x, p, f"disc.block{i}.bn", mode)
        x = T.leaky_relu(x, cfg.leaky_slope)

    x = T.mean(x, axis=(2, 3))  # global average pool -> [B, C]
    x = T.dropout(x, cfg.dropout_rate, rng, mode)
    x = T.leaky_relu(T.linear(x, p["disc.fc1.w"], p["disc.fc1.b"]), cfg.leaky_slope)
    x = T.sigmoid(T.linear(x, p["disc.fc2.w"], p["disc.fc2.b"]))
    return T.reshape(x, (x.shape[0],))


def feature_extract(img: Tensor, p: Params) -> Tensor:
    """Frozen conv/ReLU/max-pool pyramid for the perceptual loss."""
    if img.data.ndim != 4 or img.shape[1] != 3:
        raise ShapeError(f"expected [B,3,H,W], got {img.data.shape}")
    n_stages = sum(1 for k in p if k.startswith("feat.stage") and k.endswith(".w"))
    need = 2**n_stages
    if img.shape[2] % need or img.shape[3] % need:
        raise ShapeError(
            f"{img.shape[2]}x{img.shape[3]} input not divisible by {need} "
            f"({n_stages} pooling stages)"
        )
    x = img
    for i in range(n_stages):
        x = T.relu(T.conv2d(x, p[f"feat.stage{i}.w"], p[f"feat.stage{i}.b"], pad=1))
        x = T.maxpool2d(x, 2)
    return x


def feature_net_params(cfg: FeatureNetConfig = None, checkpoint_path=None) -> Params:
    """Feature-network weights: from a checkpoint when given a path, else a
    deterministic draw from the config seed."""
    cfg = cfg or FeatureNetConfig()
    if checkpoint_path is None:
        return init_params(cfg, cfg.seed)
    loaded = read_checkpoint(checkpoint_path)  # propagates missing-file errors
    expect = init_params(cfg, cfg.seed)
    if set(loaded) != set(expect):
        missing = sorted(set(expect) - set(loaded))
        extra = sorted(set(loaded) - set(expect))
        raise FormatError(f"feature checkpoint mismatch: missing {missing}, extra {extra}")
    return {k: _buf(loaded[k]) for k in expect}


def save_state(params: Params, path) -> None:
    write_checkpoint(params, path)


def apply_state(params: Params, loaded: Dict[str, np.ndarray]) -> None:
    """Fill an existing parameter dict from loaded arrays, in place.

    The name sets must match exactly; anything missing or unexpected is an
    error listing the offending paths. Buffers keep their identity so
    optimizer state and closures stay valid.
    """
    missing = sorted(set(params) - set(loaded))
    extra = sorted(set(loaded) - set(params))
    if missing or extra:
        raise FormatError(f"checkpoint mismatch: missing {missing}, extra {extra}")
    for name, arr in loaded.items():
        if arr.shape != params[name].data.shape:
            raise FormatError(
                f"{name}: stored shape {arr.shape} != expected {params[name].data.shape}"
            )
        params[name].data[...] = arr


def load_state(params: Params, path) -> None:
    """apply_state from a checkpoint file."""
    apply_state(params, read_checkpoint(path))
