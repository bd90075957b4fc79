"""Standalone command line: encode a corpus, or fine-tune the encoder."""

import argparse
import sys

from .encode import MAX_TOKEN_CEILING, POOLINGS, EncoderConfig, encode_corpus
from .errors import EncoderExportError
from .finetune import HyperParams, finetune_classifier


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encoder-export",
        description="Transformer embeddings and fine-tuning for the speech pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="write pooled embeddings as WEMB")
    enc.add_argument("--manifest", required=True)
    enc.add_argument("--encoder", required=True, help="local checkpoint directory")
    enc.add_argument("--out", required=True)
    enc.add_argument("--pooling", choices=POOLINGS, default="first_token")
    enc.add_argument("--max-tokens", type=int, default=MAX_TOKEN_CEILING)
    enc.add_argument("--batch-size", type=int, default=8)
    enc.add_argument("--device", default="cpu")

    ft = sub.add_parser("finetune", help="fine-tune a classification head")
    ft.add_argument("--manifest", required=True)
    ft.add_argument("--encoder", required=True, help="local checkpoint directory")
    ft.add_argument("--out", required=True)
    ft.add_argument("--epochs", type=int, default=10)
    ft.add_argument("--batch-size", type=int, default=32)
    ft.add_argument("--lr", type=float, default=3e-7)
    ft.add_argument("--seed", type=int, default=0)
    ft.add_argument("--tag", default="bert-finetuned")
    ft.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "encode":
            config = EncoderConfig(
                model_path=args.encoder,
                max_tokens=args.max_tokens,
                pooling=args.pooling,
                batch_size=args.batch_size,
                device=args.device,
            )
            n, dim = encode_corpus(args.manifest, config, args.out)
            print(f"encoded {n} docs at dim {dim} -> {args.out}")
        else:
            hp = HyperParams(
                learning_rate=args.lr,
                epochs=args.epochs,
                batch_size=args.batch_size,
                seed=args.seed,
                device=args.device,
            )
            doc = finetune_classifier(
                args.manifest, args.encoder, hp, out_path=args.out, model_tag=args.tag
            )
            flag = " (partial)" if doc["partial"] else ""
            print(
                f"finetuned {doc['model']}{flag}: accuracy {doc['test']['accuracy']:.3f} "
                f"auc {doc['test']['auc']:.3f} -> {args.out}"
            )
    except EncoderExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
