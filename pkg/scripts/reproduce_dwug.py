#!/usr/bin/env python3
"""Reproduction recipe for the DWUG EN v3 experiments (optional; needs data
and a large encoder, so it is not part of the test gate).

Expected inputs, not bundled with this repository:

  1. DWUG EN v3 unpacked under --dwug (one directory per target word with
     data/uses.csv and clusters/opt/<word>.csv in the usual layout).
  2. An encoder checkpoint usable by semshift-extract (the documented
     default is pierluigic/xl-lexeme, hidden size 1024).

Steps performed per target word: parse uses and cluster assignments, dump
the instance JSONL, extract embeddings (via semshift-extract, which must be
installed with its hf extra), run the processing pipeline over the default
penalty grid, then evaluate all four tasks with 100 repeated 8:2 splits.

Reference points from the original study of this method (informational
only): instance-level tau_sus around 0.46, f_sus around 0.69, g_sus around
0.55 on this dataset.
"""

import argparse
import subprocess
import sys
from pathlib import Path

from semshift.cli import dispatch
from semshift.ingest import Period, dump_instances_jsonl, parse_senses, parse_uses

GROUPING_MAP = {"1": Period.OLD, "2": Period.MODERN}


def collect_instances(dwug_root: Path):
    instances = []
    for uses_file in sorted(dwug_root.glob("*/uses.csv")) + sorted(
        dwug_root.glob("data/*/uses.csv")
    ):
        word_dir = uses_file.parent
        parsed = parse_uses(uses_file, GROUPING_MAP)
        clusters = None
        for candidate in (
            word_dir / "clusters" / "opt" / f"{word_dir.name}.csv",
            word_dir.parent / "clusters" / "opt" / f"{word_dir.name}.csv",
        ):
            if candidate.exists():
                clusters = candidate
                break
        if clusters is not None:
            parsed, warnings = parse_senses(clusters, parsed)
            for warning in warnings:
                print(f"warning: {warning}", file=sys.stderr)
        instances.extend(parsed)
    return instances


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dwug", required=True, help="unpacked DWUG EN v3 root")
    parser.add_argument("--model", default="pierluigic/xl-lexeme")
    parser.add_argument("--workdir", default="dwug_run")
    parser.add_argument("--repetitions", type=int, default=100)
    args = parser.parse_args()

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    instances_path = workdir / "instances.jsonl"
    embeddings_path = workdir / "embeddings.suse"

    instances = collect_instances(Path(args.dwug))
    if not instances:
        sys.exit("no uses.csv files found; check the --dwug layout")
    dump_instances_jsonl(instances, instances_path)
    print(f"parsed {len(instances)} instances")

    subprocess.run(
        [
            "semshift-extract",
            "--model", args.model,
            "--in", str(instances_path),
            "--out", str(embeddings_path),
            "--batch", "32",
        ],
        check=True,
    )

    cache = workdir / "cache"
    assert dispatch([
        "process",
        "--instances", str(instances_path),
        "--embeddings", str(embeddings_path),
        "--out", str(cache),
    ]) == 0

    for task in ("instance", "sense", "word-magnitude", "word-scope"):
        dispatch([
            "eval",
            "--cache", str(cache),
            "--task", task,
            "--repetitions", str(args.repetitions),
            "--summary-csv", str(workdir / f"summary_{task}.csv"),
        ])


if __name__ == "__main__":
    main()
