"""Run a desk-sized training job end to end and read its log.

Two seeded synthetic clips, a narrow generator, and a few epochs: enough to
watch the loss move and the checkpoints appear. Rerunning reproduces the
same checkpoint bytes; only wall_seconds differs.
"""

from vsrgan.train import TrainConfig, detect_discriminator_drift, train

OUT = "runs/demo_tiny"


def main():
    config = TrainConfig(
        epochs=6,
        scale=2,
        sequence_length=2,
        seed=3,
        crop=16,
        base_channels=4,
        lstm_hidden=8,
        residual_blocks=1,
        disc_channels=(8, 8, 16, 16),
        feat_widths=(4, 8),
        out_dir=OUT,
    )
    result = train(config)

    print("epoch  total    d_loss   psnr_db")
    for row in result.log_rows:
        print(f"{row.epoch:5d}  {row.total:.5f}  {row.d_loss:.5f}  {row.psnr_db:6.2f}")

    first, last = result.log_rows[0], result.log_rows[-1]
    print(f"\ntotal loss {first.total:.5f} -> {last.total:.5f}")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"log: {result.log_path}")

    if detect_discriminator_drift(result.d_loss_history):
        print("warning: discriminator drifting toward 1.0; generator gradient is starving")
    else:
        print("adversarial balance looks healthy")


if __name__ == "__main__":
    main()
