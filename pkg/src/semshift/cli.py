"""Command-line interface.

Subcommands: ingest (parse DWUG-style tables to the JSONL dump), process
(per-word pipeline over the penalty grid, cached on disk), sus (per-instance
score table for one word), solve (raw transport between two matrix files),
baseline (affinity-propagation clusters), eval (the four rank-correlation
tasks), export-plan (dump a cached transport matrix).

Every flag has a config-file equivalent (a JSON object keyed by the flag
name with dashes as underscores); flags override the config.  Exit codes:
0 success, 1 usage error, 2 data error, 3 solver non-convergence when
--strict-convergence is set.  SEMSHIFT_CACHE_DIR overrides the cache
location.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline as pl
from .evaluation import EvalConfig, Task, constant_provider, run_repeated, write_summary_csv
from .ingest import (
    IngestError,
    Period,
    assemble_word_dataset,
    dump_instances_jsonl,
    load_instances_jsonl,
    parse_senses,
    parse_uses,
)
from .matrixio import MatrixFormatError, cosine_cost, read_matrix
from .otcore import export_plan_block, export_plan_csv, solve_exact_ot, solve_uot_mm, uniform_weights

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NONCONVERGED = 3

CONFIG_SCHEMA_VERSION = 1

INSTANCE_METHODS = ("tau_sus", "tau_ldr", "tau_widid")
MAGNITUDE_METRICS = ("f_sus", "f1", "f2", "f3", "f_ot", "f_apd", "f_ldr", "f_widid", "f_apdp")
SCOPE_METRICS = ("g_sus", "g1", "g_vmf", "g_ldr", "g_widid")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _parse_grid(text):
    return tuple(float(v) for v in str(text).split(",") if v != "")


def build_parser() -> _Parser:
    parser = _Parser(prog="semshift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--threads", type=int, default=None, help="parallel word workers (1 = serial)")
        p.add_argument("--seed", type=int, default=None)

    ingest = sub.add_parser("ingest", help="parse uses/senses tables into a JSONL dump")
    ingest.add_argument("--uses", help="tab-separated usage table")
    ingest.add_argument("--senses", help="tab-separated sense assignments")
    ingest.add_argument("--out", help="output directory")
    ingest.add_argument("--old-grouping", help="grouping value(s) of the old period, comma separated")
    ingest.add_argument("--modern-grouping", help="grouping value(s) of the modern period")
    add_common(ingest)

    process = sub.add_parser("process", help="run the per-word pipeline and fill the cache")
    process.add_argument("--instances", help="JSONL dump from ingest")
    process.add_argument("--embeddings", help=".suse matrix covering all instance ids")
    process.add_argument("--out", help="cache directory")
    process.add_argument("--lambda-grid", type=_parse_grid, default=None)
    process.add_argument("--damping-grid", type=_parse_grid, default=None)
    process.add_argument("--lambda", dest="default_lambda", type=float, default=None)
    process.add_argument("--drop-undefined", action="store_true", default=None,
                         help="exclude undefined-sense instances from transport weights")
    process.add_argument("--word", help="process only this word")
    process.add_argument("--strict-convergence", action="store_true", default=None)
    add_common(process)

    sus = sub.add_parser("sus", help="export the per-instance score table of a word")
    sus.add_argument("--cache", help="cache directory (or SEMSHIFT_CACHE_DIR)")
    sus.add_argument("--word", required=False)
    sus.add_argument("--lambda", dest="default_lambda", type=float, default=None)
    sus.add_argument("--out", help="output CSV path")
    add_common(sus)

    solve = sub.add_parser("solve", help="raw transport between two matrix files")
    solve.add_argument("--u", help="old-side .suse matrix")
    solve.add_argument("--v", help="modern-side .suse matrix")
    solve.add_argument("--lambda", dest="default_lambda", type=float, default=None)
    solve.add_argument("--balanced", action="store_true", default=None)
    solve.add_argument("--out", help="plan CSV path")
    solve.add_argument("--block", help="optional dense binary plan path")
    solve.add_argument("--strict-convergence", action="store_true", default=None)
    add_common(solve)

    baseline = sub.add_parser("baseline", help="export affinity-propagation clusters")
    baseline.add_argument("--cache")
    baseline.add_argument("--word")
    baseline.add_argument("--damping", type=float, default=None)
    baseline.add_argument("--out")
    add_common(baseline)

    evaluate = sub.add_parser("eval", help="repeated-split rank-correlation evaluation")
    evaluate.add_argument("--cache")
    evaluate.add_argument("--task", choices=[t.value for t in Task])
    evaluate.add_argument("--method", help="restrict to one method/metric")
    evaluate.add_argument("--out", help="report JSON path (one file per method)")
    evaluate.add_argument("--summary-csv")
    evaluate.add_argument("--lambda-grid", type=_parse_grid, default=None)
    evaluate.add_argument("--r-grid", type=_parse_grid, default=None)
    evaluate.add_argument("--damping-grid", type=_parse_grid, default=None)
    evaluate.add_argument("--repetitions", type=int, default=None)
    evaluate.add_argument("--split-ratio", type=float, default=None)
    evaluate.add_argument("--word-metrics-csv",
                          help="also dump one row per word with every f/g metric and the gold scores")
    evaluate.add_argument("--lambda", dest="default_lambda", type=float, default=None,
                          help="penalty weight for the word-metrics dump")
    evaluate.add_argument("--metrics-r", type=float, default=None,
                          help="threshold ratio for f2/g1 in the word-metrics dump")
    add_common(evaluate)

    export = sub.add_parser("export-plan", help="dump a cached transport matrix")
    export.add_argument("--cache")
    export.add_argument("--word")
    export.add_argument("--lambda", dest="default_lambda", type=float, default=None)
    export.add_argument("--balanced", action="store_true", default=None)
    export.add_argument("--out")
    export.add_argument("--block")
    add_common(export)

    return parser


def _load_config(path):
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"cannot read config {path}: {exc}") from exc
    version = config.pop("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise IngestError(f"unsupported config schema version {version}")
    return config


def _setting(args, config, name, default=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _cache_dir(args, config):
    value = _setting(args, config, "cache") or os.environ.get("SEMSHIFT_CACHE_DIR")
    if not value:
        raise UsageError("no cache directory: pass --cache or set SEMSHIFT_CACHE_DIR")
    return Path(value)


def _load_cached_artifacts(cache, word=None):
    words = {}
    if not cache.is_dir():
        raise IngestError(f"cache directory {cache} not found; run process first")
    for meta in sorted(cache.glob("*/meta.json")):
        directory = meta.parent
        if word is not None and directory.name != word:
            continue
        words[directory.name] = pl.load_artifacts(directory)
    if not words:
        target = word or "any word"
        raise IngestError(f"no cached artifacts for {target}; run process first")
    return words


def _grouping_map(args, config):
    old = _setting(args, config, "old_grouping")
    modern = _setting(args, config, "modern_grouping")
    if not old or not modern:
        raise UsageError("grouping map required: --old-grouping and --modern-grouping")
    mapping = {}
    for value in str(old).split(","):
        mapping[value] = Period.OLD
    for value in str(modern).split(","):
        mapping[value] = Period.MODERN
    return mapping


def cmd_ingest(args, config):
    uses = _setting(args, config, "uses")
    out = _setting(args, config, "out")
    if not uses or not out:
        raise UsageError("ingest needs --uses and --out")
    instances = parse_uses(uses, _grouping_map(args, config))
    senses = _setting(args, config, "senses")
    if senses:
        instances, warnings = parse_senses(senses, instances)
        for warning in warnings:
            print(f"warning: {warning}", file=sys.stderr)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_instances_jsonl(instances, out_dir / "instances.jsonl")
    print(f"wrote {len(instances)} instances to {out_dir / 'instances.jsonl'}")
    return EXIT_OK


def _pipeline_config(args, config):
    return pl.PipelineConfig(
        lambda_grid=tuple(_setting(args, config, "lambda_grid", pl.DEFAULT_LAMBDA_GRID)),
        damping_grid=tuple(_setting(args, config, "damping_grid", pl.DEFAULT_DAMPING_GRID)),
        default_lambda=float(_setting(args, config, "default_lambda", 100.0)),
        drop_undefined=bool(_setting(args, config, "drop_undefined", False)),
        solver_tol=float(_setting(args, config, "solver_tol", 1e-8)),
        solver_max_iter=int(_setting(args, config, "solver_max_iter", 10_000)),
        ap_max_iter=int(_setting(args, config, "ap_max_iter", 500)),
        ap_convergence_iter=int(_setting(args, config, "ap_convergence_iter", 20)),
    )


def cmd_process(args, config):
    instances_path = _setting(args, config, "instances")
    embeddings_path = _setting(args, config, "embeddings")
    out = _setting(args, config, "out") or os.environ.get("SEMSHIFT_CACHE_DIR")
    if not instances_path or not embeddings_path or not out:
        raise UsageError("process needs --instances, --embeddings and --out")
    pipeline_config = _pipeline_config(args, config)
    threads = int(_setting(args, config, "threads", 1))

    instances = load_instances_jsonl(instances_path)
    embeddings = read_matrix(embeddings_path)
    only_word = _setting(args, config, "word")
    words = sorted({i.word for i in instances})
    if only_word:
        if only_word not in words:
            raise IngestError(f"word {only_word!r} not present in {instances_path}")
        words = [only_word]
    datasets = [assemble_word_dataset(instances, w) for w in words]

    key = pl.cache_key(instances_path, embeddings_path, pipeline_config)
    cache = Path(out) / key
    artifacts = pl.process_corpus(datasets, embeddings, pipeline_config, threads=threads)
    nonconverged = []
    for word, art in artifacts.items():
        pl.save_artifacts(art, cache / word)
        nonconverged.extend(
            f"{word}@{lam:g}" for lam, plan in art.uot_plans.items() if not plan.converged
        )
    (Path(out) / "latest").write_text(key + "\n")
    print(f"cached {len(artifacts)} words under {cache}")
    if nonconverged:
        print(f"warning: solver convergence flag unset for {', '.join(nonconverged)}", file=sys.stderr)
        if _setting(args, config, "strict_convergence", False):
            return EXIT_NONCONVERGED
    return EXIT_OK


def _resolve_cache(args, config):
    cache = _cache_dir(args, config)
    latest = cache / "latest"
    if latest.is_file():
        return cache / latest.read_text().strip()
    return cache


def cmd_sus(args, config):
    word = _setting(args, config, "word")
    out = _setting(args, config, "out")
    if not word or not out:
        raise UsageError("sus needs --word and --out")
    lam = float(_setting(args, config, "default_lambda", 100.0))
    artifacts = _load_cached_artifacts(_resolve_cache(args, config), word)[word]
    pl.export_instance_table(artifacts, lam, out)
    print(f"wrote instance table for {word!r} at lambda={lam:g} to {out}")
    return EXIT_OK


def cmd_solve(args, config):
    u_path = _setting(args, config, "u")
    v_path = _setting(args, config, "v")
    out = _setting(args, config, "out")
    if not u_path or not v_path or not out:
        raise UsageError("solve needs --u, --v and --out")
    u = read_matrix(u_path)
    v = read_matrix(v_path)
    cost = cosine_cost(u, v)
    a = uniform_weights(u.rows)
    b = uniform_weights(v.rows)
    if _setting(args, config, "balanced", False):
        plan = solve_exact_ot(a, b, cost)
    else:
        lam = float(_setting(args, config, "default_lambda", 100.0))
        plan = solve_uot_mm(a, b, cost, lam, lam)
        if not plan.converged and _setting(args, config, "strict_convergence", False):
            print(f"solver did not converge: residual {plan.kkt_residual:g}", file=sys.stderr)
            return EXIT_NONCONVERGED
    export_plan_csv(plan, list(u.instance_ids), list(v.instance_ids), out)
    block = _setting(args, config, "block")
    if block:
        export_plan_block(plan, list(u.instance_ids), block)
    print(f"objective {plan.objective!r}; plan written to {out}")
    return EXIT_OK


def cmd_baseline(args, config):
    word = _setting(args, config, "word")
    out = _setting(args, config, "out")
    if not word or not out:
        raise UsageError("baseline needs --word and --out")
    artifacts = _load_cached_artifacts(_resolve_cache(args, config), word)[word]
    if not artifacts.clusters:
        raise IngestError("no clustering in cache; re-run process with a damping grid")
    damping = _setting(args, config, "damping")
    damping = float(damping) if damping is not None else sorted(artifacts.clusters)[0]
    if damping not in artifacts.clusters:
        raise IngestError(f"damping {damping:g} not cached; available: {sorted(artifacts.clusters)}")
    assignment = artifacts.clusters[damping]
    instances = list(artifacts.dataset.all_instances())
    exemplar_set = set(assignment.exemplars.tolist())
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,period,estimated_sense,is_exemplar\n")
        for idx, inst in enumerate(instances):
            fh.write(
                f"{inst.id},{inst.period.value},{int(assignment.labels[idx])},"
                f"{int(idx in exemplar_set)}\n"
            )
    print(f"wrote {len(instances)} cluster rows to {out}")
    return EXIT_OK


def _eval_task(args, config):
    task_name = _setting(args, config, "task")
    if not task_name:
        raise UsageError("eval needs --task")
    return Task(task_name)


def _coarse_lambda_grid(artifacts):
    """Joint (lambda, r) tuning searches a 3-point lambda grid when available."""
    cached = sorted(next(iter(artifacts.values())).sus_by_lambda)
    coarse = [lam for lam in (10.0, 100.0, 1000.0) if lam in cached]
    return tuple(coarse) if coarse else tuple(cached)


def _eval_candidates(task, method, artifacts, eval_config):
    if task in (Task.INSTANCE, Task.SENSE):
        builders = {
            "tau_sus": lambda: pl.sus_instance_candidates(artifacts),
            "tau_ldr": lambda: pl.ldr_instance_candidates(artifacts),
            "tau_widid": lambda: pl.widid_instance_candidates(artifacts),
        }
    else:
        metrics = MAGNITUDE_METRICS if task is Task.WORD_MAGNITUDE else SCOPE_METRICS
        threshold_grid = _coarse_lambda_grid(artifacts)
        builders = {
            m: (lambda m=m: pl.word_metric_candidates(
                artifacts, m, r_grid=eval_config.r_grid,
                lambda_grid=threshold_grid if m in ("f2", "g1") else None))
            for m in metrics
        }
    if method:
        if method not in builders:
            raise UsageError(f"method {method!r} not valid for task {task.value}")
        return {method: builders[method]()}
    return {name: build() for name, build in builders.items()}


def cmd_eval(args, config):
    task = _eval_task(args, config)
    artifacts = _load_cached_artifacts(_resolve_cache(args, config))
    eval_config = EvalConfig(
        lambda_grid=tuple(_setting(args, config, "lambda_grid", pl.DEFAULT_LAMBDA_GRID)),
        r_grid=tuple(_setting(args, config, "r_grid", (0.4, 0.6, 0.8))),
        damping_grid=tuple(_setting(args, config, "damping_grid", pl.DEFAULT_DAMPING_GRID)),
        split_ratio=float(_setting(args, config, "split_ratio", 0.8)),
        repetitions=int(_setting(args, config, "repetitions", 100)),
        rng_seed=int(_setting(args, config, "seed", 0)),
    )
    words = sorted(artifacts)
    method = _setting(args, config, "method")
    candidate_sets = _eval_candidates(task, method, artifacts, eval_config)

    if task in (Task.INSTANCE, Task.SENSE):
        gold = pl.gold_tau_provider(artifacts)
        senses = pl.defined_sense_labels(artifacts)
    else:
        kind = "f" if task is Task.WORD_MAGNITUDE else "g"
        gold = constant_provider(pl.gold_word_scores(artifacts, kind))
        senses = None

    reports = []
    for name, candidates in sorted(candidate_sets.items()):
        try:
            report = run_repeated(
                words, task, eval_config, candidates, gold, senses, method=name
            )
        except ValueError as exc:
            print(f"{name}: skipped ({exc})", file=sys.stderr)
            continue
        reports.append(report)
        print(f"{task.value} {name}: mean spearman {report.mean_spearman:.4f} "
              f"over {len(report.per_split)} splits")
    if not reports:
        raise IngestError("no method produced a report")

    out = _setting(args, config, "out")
    if out:
        out_path = Path(out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        if len(reports) == 1:
            reports[0].to_json(out_path)
        else:
            for report in reports:
                target = out_path.with_name(f"{out_path.stem}_{report.method}{out_path.suffix}")
                report.to_json(target)
    summary = _setting(args, config, "summary_csv")
    if summary:
        write_summary_csv(reports, summary)
    metrics_csv = _setting(args, config, "word_metrics_csv")
    if metrics_csv:
        pl.export_word_metrics(
            artifacts,
            float(_setting(args, config, "default_lambda", 100.0)),
            float(_setting(args, config, "metrics_r", 0.8)),
            metrics_csv,
        )
    return EXIT_OK


def cmd_export_plan(args, config):
    word = _setting(args, config, "word")
    out = _setting(args, config, "out")
    if not word or not out:
        raise UsageError("export-plan needs --word and --out")
    artifacts = _load_cached_artifacts(_resolve_cache(args, config), word)[word]
    if _setting(args, config, "balanced", False):
        plan = artifacts.ot_plan
    else:
        lam = float(_setting(args, config, "default_lambda", 100.0))
        if lam not in artifacts.uot_plans:
            raise IngestError(
                f"lambda {lam:g} not cached; available: {sorted(artifacts.uot_plans)}"
            )
        plan = artifacts.uot_plans[lam]
    export_plan_csv(plan, list(artifacts.old_ids), list(artifacts.modern_ids), out)
    block = _setting(args, config, "block")
    if block:
        export_plan_block(plan, list(artifacts.old_ids), block)
    print(f"plan for {word!r} written to {out}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "process": cmd_process,
    "sus": cmd_sus,
    "solve": cmd_solve,
    "baseline": cmd_baseline,
    "eval": cmd_eval,
    "export-plan": cmd_export_plan,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(getattr(args, "config", None))
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, MatrixFormatError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
