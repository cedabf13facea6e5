"""Command line: turn an instance dump into an embedding matrix file.

    semshift-extract --model pierluigic/xl-lexeme --in instances.jsonl \
        --out word.suse --batch 32

``--model toy`` (or ``toy:<dims>``) selects the deterministic offline
encoder; anything else is treated as a transformers checkpoint id.
"""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractionError, ExtractionJob, extract_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semshift-extract", description=__doc__)
    parser.add_argument("--model", default="pierluigic/xl-lexeme",
                        help="encoder checkpoint id, or toy[:dims] for the offline encoder")
    parser.add_argument("--in", dest="input_path", required=True,
                        help="instances JSONL produced by the ingest stage")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="output .suse matrix (ids go to the sibling .ids file)")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--target-only", action="store_true",
                        help="average only the tokens overlapping the target span")
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        model=args.model,
        input_path=args.input_path,
        output_path=args.output_path,
        batch_size=args.batch,
        device=args.device,
        target_only=args.target_only,
    )
    try:
        count = extract_embeddings(job)
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    print(f"wrote {count} rows to {args.output_path}")


if __name__ == "__main__":
    main()
