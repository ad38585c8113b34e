"""Generator and discriminator training objectives.

The generator objective is a weighted sum of five terms: image mse,
adversarial score, feature-space (perceptual) mse, total variation, and
temporal consistency between frame-to-frame changes of output and target.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from . import tensor as T
from .tensor import ContractError, ShapeError, Tensor

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "adversarial_loss",
    "perceptual_loss",
    "image_loss",
    "tv_loss",
    "temporal_consistency_loss",
    "generator_total_loss",
    "discriminator_loss",
]


@dataclass(frozen=True)
class LossWeights:
    w_image: float = 1.0
    w_adv: float = 0.001
    w_perc: float = 0.006
    w_tv: float = 2e-8
    w_temporal: float = 0.1

    def __post_init__(self):
        for name in ("w_image", "w_adv", "w_perc", "w_tv", "w_temporal"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass
class LossBreakdown:
    adversarial: Tensor
    perceptual: Tensor
    image: Tensor
    tv: Tensor
    temporal: Tensor
    total: Tensor

    def values(self) -> dict:
        return {
            "adversarial": float(self.adversarial.data),
            "perceptual": float(self.perceptual.data),
            "image": float(self.image.data),
            "tv": float(self.tv.data),
            "temporal": float(self.temporal.data),
            "total": float(self.total.data),
        }


def _mean_of(terms: Sequence[Tensor]) -> Tensor:
    acc = terms[0]
    for t in terms[1:]:
        acc = T.add(acc, t)
    return T.scale(acc, 1.0 / len(terms))


def adversarial_loss(d_fake: Tensor) -> Tensor:
    """mean(1 - score); zero when the discriminator is fully deceived."""
    if d_fake.data.size == 0:
        raise ContractError("adversarial_loss needs at least one score")
    return T.mean(T.add_scalar(T.scale(d_fake, -1.0), 1.0))


def perceptual_loss(out: Tensor, target: Tensor, featnet: Callable[[Tensor], Tensor]) -> Tensor:
    """mse in the feature space of a frozen network."""
    if out.data.shape != target.data.shape:
        raise ShapeError(f"shape mismatch {out.data.shape} vs {target.data.shape}")
    return T.mse(featnet(out), featnet(target))


def image_loss(out: Tensor, target: Tensor) -> Tensor:
    return T.mse(out, target)


def tv_loss(out: Tensor) -> Tensor:
    """Anisotropic squared total variation.

    (sum of vertical diffs^2 / count_v + sum of horizontal diffs^2 /
    count_h) * 2 / B. An axis too short to form differences contributes
    zero; it is an error only when both axes are degenerate.
    """
    if out.data.ndim != 4:
        raise ShapeError(f"expected (B, C, H, W), got {out.data.shape}")
    b, _, h, w = out.data.shape
    if h < 2 and w < 2:
        raise ShapeError(f"no neighboring pixels in a {h}x{w} image")
    full = slice(None)
    terms = []
    if h >= 2:
        dv = T.sub(
            T.getitem(out, (full, full, slice(1, None), full)),
            T.getitem(out, (full, full, slice(0, -1), full)),
        )
        terms.append(T.mean(T.mul(dv, dv)))
    if w >= 2:
        dh = T.sub(
            T.getitem(out, (full, full, full, slice(1, None))),
            T.getitem(out, (full, full, full, slice(0, -1))),
        )
        terms.append(T.mean(T.mul(dh, dh)))
    acc = terms[0]
    for t in terms[1:]:
        acc = T.add(acc, t)
    return T.scale(acc, 2.0 / b)


def temporal_consistency_loss(
    out_t: Tensor,
    out_prev: Optional[Tensor],
    target_t: Tensor,
    target_prev: Optional[Tensor],
) -> Tensor:
    """mse between output and target frame-to-frame changes.

    The first frame of a sequence has no predecessor; with both prev
    arguments absent the loss is exactly zero.
    """
    if (out_prev is None) != (target_prev is None):
        raise ContractError("out_prev and target_prev must both be given or both absent")
    if out_prev is None:
        return T.scalar(0.0)
    return T.mse(T.sub(out_t, out_prev), T.sub(target_t, target_prev))


def generator_total_loss(
    d_fake: Tensor,
    out_seq: Sequence[Tensor],
    target_seq: Sequence[Tensor],
    weights: LossWeights = None,
    featnet: Callable[[Tensor], Tensor] = None,
    include_temporal: bool = True,
) -> LossBreakdown:
    """Weighted five-term objective, per-frame terms averaged over the
    sequence so the magnitude does not grow with T."""
    weights = weights or LossWeights()
    if featnet is None:
        raise ContractError("generator_total_loss requires a feature network")
    if len(out_seq) != len(target_seq):
        raise ShapeError(f"sequence lengths differ: {len(out_seq)} vs {len(target_seq)}")
    if not out_seq:
        raise ContractError("empty sequence")

    adv = adversarial_loss(d_fake)
    image = _mean_of([image_loss(o, t) for o, t in zip(out_seq, target_seq)])
    perc = _mean_of([perceptual_loss(o, t, featnet) for o, t in zip(out_seq, target_seq)])
    tv = _mean_of([tv_loss(o) for o in out_seq])

    if include_temporal and len(out_seq) >= 2:
        pairs = [
            temporal_consistency_loss(out_seq[t], out_seq[t - 1], target_seq[t], target_seq[t - 1])
            for t in range(1, len(out_seq))
        ]
        temporal = _mean_of(pairs)
    else:
        temporal = T.scalar(0.0)

    total = T.add(
        T.add(
            T.add(T.scale(image, weights.w_image), T.scale(adv, weights.w_adv)),
            T.add(T.scale(perc, weights.w_perc), T.scale(tv, weights.w_tv)),
        ),
        T.scale(temporal, weights.w_temporal),
    )
    return LossBreakdown(
        adversarial=adv, perceptual=perc, image=image, tv=tv, temporal=temporal, total=total
    )


def discriminator_loss(d_real: Tensor, d_fake: Tensor) -> Tensor:
    """1 - mean(real scores) + mean(fake scores); 0 for a perfect critic."""
    if d_real.data.size == 0 or d_fake.data.size == 0:
        raise ContractError("discriminator_loss needs non-empty score batches")
    return T.add(T.add_scalar(T.scale(T.mean(d_real), -1.0), 1.0), T.mean(d_fake))
