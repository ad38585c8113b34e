"""Command line entry points: vsr train | upscale | evaluate | flow."""

import argparse
import sys

from .train import TrainConfig, evaluate, flow_debug, train, upscale


def _add_arch_flags(p: argparse.ArgumentParser):
    p.add_argument("--scale", type=int, default=4, help="upscale factor (2, 4 or 8)")
    p.add_argument("--seq-len", type=int, default=3, help="frames per training sample")
    p.add_argument("--no-lstm", action="store_true", help="replace the LSTM with an identity")
    p.add_argument("--base-channels", type=int, default=64)
    p.add_argument("--lstm-hidden", type=int, default=256)
    p.add_argument("--residual-blocks", type=int, default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vsr", description="video super-resolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run adversarial training")
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--lr", type=float, default=1e-4, help="learning rate for both nets")
    p_train.add_argument("--batch", type=int, default=1)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--crop", type=int, default=16, help="low-resolution crop size")
    p_train.add_argument("--no-alignment", action="store_true", help="skip flow alignment")
    p_train.add_argument(
        "--no-temporal-loss", action="store_true", help="zero the temporal loss term"
    )
    p_train.add_argument(
        "--disc-dropout", type=float, default=0.0, help="discriminator dropout rate"
    )
    p_train.add_argument("--data", default=None, help="directory of sequence directories")
    p_train.add_argument("--out", default="runs/latest", help="output directory")
    p_train.add_argument("--max-steps", type=int, default=None)
    _add_arch_flags(p_train)

    p_up = sub.add_parser("upscale", help="super-resolve a frame directory")
    p_up.add_argument("input", help="directory of frame_NNNNNN.png files")
    p_up.add_argument("checkpoint", help="trained checkpoint file")
    p_up.add_argument("output", help="directory for upscaled frames")
    _add_arch_flags(p_up)

    p_eval = sub.add_parser("evaluate", help="score predictions against ground truth")
    p_eval.add_argument("pred", help="directory of predicted frames")
    p_eval.add_argument("gt", help="directory of ground-truth frames")
    p_eval.add_argument("--out", default=None, help="report path stem (.txt/.json appended)")

    p_flow = sub.add_parser("flow", help="dump flow fields and aligned frames")
    p_flow.add_argument("input", help="directory of frames")
    p_flow.add_argument("output", help="directory for flow/alignment artifacts")
    p_flow.add_argument("--alpha", type=float, default=0.9, help="EMA smoothing coefficient")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "train":
        config = TrainConfig(
            epochs=args.epochs,
            learning_rate=args.lr,
            scale=args.scale,
            sequence_length=args.seq_len,
            batch_size=args.batch,
            seed=args.seed,
            crop=args.crop,
            use_lstm=not args.no_lstm,
            use_alignment=not args.no_alignment,
            use_temporal_loss=not args.no_temporal_loss,
            discriminator_dropout=args.disc_dropout,
            data_dir=args.data,
            out_dir=args.out,
            max_steps=args.max_steps,
            base_channels=args.base_channels,
            lstm_hidden=args.lstm_hidden,
            residual_blocks=args.residual_blocks,
        )
        result = train(config)
        last = result.log_rows[-1]
        print(f"trained {last.epoch} epochs; final total loss {last.total:.4f}")
        print(f"log: {result.log_path}")
        print(f"checkpoint: {result.checkpoint_path}")
        return 0

    if args.command == "upscale":
        config = TrainConfig(
            scale=args.scale,
            sequence_length=args.seq_len,
            use_lstm=not args.no_lstm,
            base_channels=args.base_channels,
            lstm_hidden=args.lstm_hidden,
            residual_blocks=args.residual_blocks,
        )
        result = upscale(args.input, args.checkpoint, config, args.output)
        print(f"wrote {len(result)} frames ({result.height}x{result.width}) to {args.output}")
        return 0

    if args.command == "evaluate":
        report, ti = evaluate(args.pred, args.gt, args.out)
        print(f"psnr_db={report.psnr_db}")
        print(f"ssim={report.ssim}")
        if ti is not None:
            print(f"temporal_inconsistency={ti}")
        return 0

    if args.command == "flow":
        flow_debug(args.input, args.output, alpha=args.alpha)
        return 0

    return 2  # unreachable with required=True


if __name__ == "__main__":
    sys.exit(main())
