"""Video super-resolution with a recurrent GAN and motion-compensated inputs.

The package splits into a small autodiff engine (``vsrgan.tensor``, usually
imported as ``T``), dense optical flow and alignment (``vsrgan.flow``),
frame/checkpoint IO plus synthetic clips (``vsrgan.data``), quality metrics
(``vsrgan.metrics``), the adversarial objective (``vsrgan.losses``), the
three networks (``vsrgan.models``), and the seeded training loop with its
CLI operations (``vsrgan.train``). The names re-exported here are the
day-to-day surface; everything else stays module-qualified.
"""

from .data import (
    FormatError,
    FrameSequence,
    SynthSpec,
    bicubic_downscale,
    load_frame_sequence,
    nearest_upscale,
    read_checkpoint,
    save_frame_sequence,
    synth_sequence,
    write_checkpoint,
)
from .flow import (
    FlowField,
    FlowParams,
    SmoothingParams,
    align_frames,
    estimate_flow,
    estimate_motion_vectors,
    smooth_motion_vectors,
    warp_frame,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    discriminator_loss,
    generator_total_loss,
)
from .metrics import (
    MetricParams,
    MetricReport,
    evaluate_sequence,
    psnr,
    relative_improvement,
    ssim,
    temporal_inconsistency,
)
from .models import (
    DiscriminatorConfig,
    FeatureNetConfig,
    GeneratorConfig,
    discriminator_forward,
    generator_forward,
    init_params,
    load_state,
    save_state,
)
from .tensor import ContractError, NumericError, ShapeError, StateError, Tensor
from .train import TrainConfig, TrainResult, evaluate, flow_debug, train, upscale

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ContractError",
    "FormatError",
    "NumericError",
    "ShapeError",
    "StateError",
    # data
    "FrameSequence",
    "SynthSpec",
    "bicubic_downscale",
    "load_frame_sequence",
    "nearest_upscale",
    "read_checkpoint",
    "save_frame_sequence",
    "synth_sequence",
    "write_checkpoint",
    # flow
    "FlowField",
    "FlowParams",
    "SmoothingParams",
    "align_frames",
    "estimate_flow",
    "estimate_motion_vectors",
    "smooth_motion_vectors",
    "warp_frame",
    # losses
    "LossBreakdown",
    "LossWeights",
    "discriminator_loss",
    "generator_total_loss",
    # metrics
    "MetricParams",
    "MetricReport",
    "evaluate_sequence",
    "psnr",
    "relative_improvement",
    "ssim",
    "temporal_inconsistency",
    # models
    "DiscriminatorConfig",
    "FeatureNetConfig",
    "GeneratorConfig",
    "Tensor",
    "discriminator_forward",
    "generator_forward",
    "init_params",
    "load_state",
    "save_state",
    # training and inference
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "flow_debug",
    "train",
    "upscale",
]
