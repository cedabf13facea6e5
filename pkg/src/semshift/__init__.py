"""Lexical semantic change detection via unbalanced optimal transport."""

from .ingest import (
    Period,
    SenseFrequencyDistribution,
    UsageInstance,
    WordDataset,
    assemble_word_dataset,
    build_gold_sfd,
    dump_instances_jsonl,
    load_instances_jsonl,
    parse_senses,
    parse_uses,
)
from .matrixio import EmbeddingMatrix, cosine_cost, normalize_rows, read_matrix, write_matrix
from .otcore import (
    TransportPlan,
    marginals,
    solve_exact_ot,
    solve_uot_mm,
    uniform_weights,
    uot_objective,
)
from .sus import SusScores, compute_sus
from .vmf import VmfParams, fit_vmf, ldr_scores, log_bessel_iv, vmf_log_normalizer

__all__ = [
    "Period",
    "SenseFrequencyDistribution",
    "UsageInstance",
    "WordDataset",
    "assemble_word_dataset",
    "build_gold_sfd",
    "dump_instances_jsonl",
    "load_instances_jsonl",
    "parse_senses",
    "parse_uses",
    "EmbeddingMatrix",
    "cosine_cost",
    "normalize_rows",
    "read_matrix",
    "write_matrix",
    "TransportPlan",
    "marginals",
    "solve_exact_ot",
    "solve_uot_mm",
    "uniform_weights",
    "uot_objective",
    "SusScores",
    "compute_sus",
    "VmfParams",
    "fit_vmf",
    "ldr_scores",
    "log_bessel_iv",
    "vmf_log_normalizer",
]

__version__ = "0.1.0"
