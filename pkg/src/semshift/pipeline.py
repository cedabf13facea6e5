"""Per-word orchestration: costs, transport plans, shift scores, baselines.

``process_word`` computes everything one word needs (cosine costs, the
balanced plan, one unbalanced plan per penalty weight, shift scores, vMF
fits, log-density ratios, affinity-propagation baselines, the gold sense
distribution) under uniform instance weights and the ordering fixed by
``assemble_word_dataset``.  Results live in ``WordArtifacts`` and can be
persisted as a directory of .npy arrays plus a canonical meta.json, keyed by
a content hash of the inputs, so identical runs are bitwise identical.

The provider builders at the bottom adapt artifacts to the evaluation
harness: per-instance change scores for the instance/sense tasks and the
word-level metric families, each as a function of the word set in play
(imputation bounds and shift thresholds depend on it).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import (
    ClusterAssignment,
    affinity_propagation,
    cosine_similarity_matrix,
    estimate_sfd,
    sense_prototypes,
)
from .evaluation import Candidate, compute_gold_imputation_bounds
from .ingest import (
    IngestError,
    Period,
    SenseFrequencyDistribution,
    UsageInstance,
    WordDataset,
    build_gold_sfd,
)
from .matrixio import EmbeddingMatrix, cosine_cost, normalize_rows
from .metrics import (
    WordChangeScores,
    jsd,
    entropy,
    magnitude_suite,
    scope_suite,
    tau_score,
    threshold_from_ratio,
)
from .otcore import TransportPlan, solve_exact_ot, solve_uot_mm, uniform_weights
from .sus import SusScores, compute_sus
from .vmf import VmfParams, fit_vmf, ldr_scores

DEFAULT_LAMBDA_GRID = (10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0)
DEFAULT_DAMPING_GRID = (0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class PipelineConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    damping_grid: tuple[float, ...] = DEFAULT_DAMPING_GRID
    default_lambda: float = 100.0
    include_normalizer: bool = True
    drop_undefined: bool = False
    solver_tol: float = 1e-8
    solver_max_iter: int = 10_000
    ap_max_iter: int = 500
    ap_convergence_iter: int = 20

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def all_lambdas(self) -> tuple[float, ...]:
        values = set(self.lambda_grid) | {self.default_lambda}
        return tuple(sorted(values))


@dataclass
class WordArtifacts:
    word: str
    dataset: WordDataset
    cost: np.ndarray
    ot_plan: TransportPlan
    uot_plans: dict[float, TransportPlan]
    sus_by_lambda: dict[float, SusScores]
    vmf_old: VmfParams | None
    vmf_modern: VmfParams | None
    ldr_old: np.ndarray | None
    ldr_modern: np.ndarray | None
    clusters: dict[float, ClusterAssignment]
    estimated_sfds: dict[float, SenseFrequencyDistribution]
    prototypes: dict[float, tuple[list[np.ndarray], list[np.ndarray]]]
    gold_sfd: SenseFrequencyDistribution | None
    apd_value: float
    _scores_cache: dict = field(default_factory=dict, repr=False)

    @property
    def old_ids(self) -> tuple[str, ...]:
        return tuple(i.id for i in self.dataset.old_instances)

    @property
    def modern_ids(self) -> tuple[str, ...]:
        return tuple(i.id for i in self.dataset.modern_instances)

    def word_scores(self, lambda_: float, theta: float | None = None) -> WordChangeScores:
        """Magnitude and scope metrics at one penalty weight, memoized."""
        key = (lambda_, theta)
        if key in self._scores_cache:
            return self._scores_cache[key]
        sus = self.sus_by_lambda[lambda_]
        sfd_hat = next(iter(self.estimated_sfds.values()), None)
        protos = next(iter(self.prototypes.values()), ([], []))
        magnitude = magnitude_suite(
            self.word,
            sus=sus,
            theta=theta,
            uot_plan=self.uot_plans[lambda_],
            cost=self.cost,
            ot_plan=self.ot_plan,
            ldr_old=self.ldr_old,
            ldr_modern=self.ldr_modern,
            sfd_hat=sfd_hat,
            old_prototypes=protos[0],
            modern_prototypes=protos[1],
        )
        magnitude.f_apd = self.apd_value
        scope = scope_suite(
            self.word,
            sus=sus,
            theta=theta,
            kappa_old=self.vmf_old.kappa if self.vmf_old else None,
            kappa_modern=self.vmf_modern.kappa if self.vmf_modern else None,
            ldr_old=self.ldr_old,
            ldr_modern=self.ldr_modern,
            sfd_hat=sfd_hat,
        )
        merged = magnitude.merge(scope)
        self._scores_cache[key] = merged
        return merged


def process_word(
    dataset: WordDataset,
    embeddings: EmbeddingMatrix,
    config: PipelineConfig = PipelineConfig(),
) -> WordArtifacts:
    """Everything the scoring and evaluation stages need for one word."""
    if config.drop_undefined:
        old = tuple(i for i in dataset.old_instances if i.gold_sense is not None)
        modern = tuple(i for i in dataset.modern_instances if i.gold_sense is not None)
        if not old or not modern:
            raise IngestError(
                f"word {dataset.word!r}: dropping undefined senses emptied a period"
            )
        dataset = WordDataset(dataset.word, old, modern)

    old_ids = [i.id for i in dataset.old_instances]
    modern_ids = [i.id for i in dataset.modern_instances]
    u = embeddings.select(old_ids)
    v = embeddings.select(modern_ids)

    cost = cosine_cost(u, v)
    a = uniform_weights(dataset.m)
    b = uniform_weights(dataset.n)

    ot_plan = solve_exact_ot(a, b, cost)
    uot_plans: dict[float, TransportPlan] = {}
    sus_by_lambda: dict[float, SusScores] = {}
    for lam in config.all_lambdas():
        plan = solve_uot_mm(
            a, b, cost, lam, lam, tol=config.solver_tol, max_iter=config.solver_max_iter
        )
        uot_plans[lam] = plan
        sus_by_lambda[lam] = compute_sus(plan, a, b, old_ids, modern_ids)

    un = normalize_rows(u)
    vn = normalize_rows(v)
    vmf_old = fit_vmf(un) if dataset.m >= 2 else None
    vmf_modern = fit_vmf(vn) if dataset.n >= 2 else None
    ldr_old = ldr_modern = None
    if (
        vmf_old is not None
        and vmf_modern is not None
        and not vmf_old.degenerate
        and not vmf_modern.degenerate
    ):
        ldr_old, ldr_modern = ldr_scores(u, v, config.include_normalizer)

    pooled = np.vstack([u.data, v.data])
    periods = [Period.OLD] * dataset.m + [Period.MODERN] * dataset.n
    clusters: dict[float, ClusterAssignment] = {}
    estimated: dict[float, SenseFrequencyDistribution] = {}
    prototypes: dict[float, tuple[list[np.ndarray], list[np.ndarray]]] = {}
    if config.damping_grid:
        similarity = cosine_similarity_matrix(pooled)
        for damping in config.damping_grid:
            assignment = affinity_propagation(
                similarity,
                damping=damping,
                max_iter=config.ap_max_iter,
                convergence_iter=config.ap_convergence_iter,
            )
            clusters[damping] = assignment
            estimated[damping] = estimate_sfd(assignment, periods)
            prototypes[damping] = sense_prototypes(assignment, pooled, periods)

    try:
        gold_sfd = build_gold_sfd(dataset)
    except IngestError:
        gold_sfd = None

    return WordArtifacts(
        word=dataset.word,
        dataset=dataset,
        cost=cost,
        ot_plan=ot_plan,
        uot_plans=uot_plans,
        sus_by_lambda=sus_by_lambda,
        vmf_old=vmf_old,
        vmf_modern=vmf_modern,
        ldr_old=ldr_old,
        ldr_modern=ldr_modern,
        clusters=clusters,
        estimated_sfds=estimated,
        prototypes=prototypes,
        gold_sfd=gold_sfd,
        apd_value=float(cost.mean()),
    )


def process_corpus(
    datasets: Iterable[WordDataset],
    embeddings: EmbeddingMatrix,
    config: PipelineConfig = PipelineConfig(),
    threads: int = 1,
) -> dict[str, WordArtifacts]:
    """Process many words; word order of the result is input order."""
    datasets = list(datasets)
    if threads <= 1:
        artifacts = [process_word(ds, embeddings, config) for ds in datasets]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            artifacts = list(
                pool.map(lambda ds: process_word(ds, embeddings, config), datasets)
            )
    return {art.word: art for art in artifacts}


# ---------------------------------------------------------------------------
# on-disk cache
# ---------------------------------------------------------------------------


def cache_key(instances_path: str | Path, embeddings_path: str | Path, config: PipelineConfig) -> str:
    """Content hash of the inputs; any change invalidates the cache."""
    digest = hashlib.sha256()
    digest.update(Path(instances_path).read_bytes())
    digest.update(Path(embeddings_path).read_bytes())
    digest.update(config.canonical_json().encode())
    return digest.hexdigest()[:16]


def _plan_meta(plan: TransportPlan) -> dict:
    return {
        "lambda1": plan.lambda1 if math.isfinite(plan.lambda1) else "balanced",
        "lambda2": plan.lambda2 if math.isfinite(plan.lambda2) else "balanced",
        "objective": plan.objective,
        "iterations": plan.iterations,
        "converged": plan.converged,
        "kkt_residual": plan.kkt_residual,
    }


def save_artifacts(artifacts: WordArtifacts, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.save(directory / "cost.npy", artifacts.cost)
    np.save(directory / "plan_balanced.npy", artifacts.ot_plan.plan)
    for lam, plan in sorted(artifacts.uot_plans.items()):
        np.save(directory / f"plan_lambda_{lam:g}.npy", plan.plan)
    if artifacts.ldr_old is not None:
        np.save(directory / "ldr_old.npy", artifacts.ldr_old)
        np.save(directory / "ldr_modern.npy", artifacts.ldr_modern)
    for damping, assignment in sorted(artifacts.clusters.items()):
        np.save(directory / f"labels_damping_{damping:g}.npy", assignment.labels)
        np.save(directory / f"exemplars_damping_{damping:g}.npy", assignment.exemplars)
    for damping, (old_p, modern_p) in sorted(artifacts.prototypes.items()):
        if old_p:
            np.save(directory / f"proto_old_damping_{damping:g}.npy", np.vstack(old_p))
        if modern_p:
            np.save(directory / f"proto_modern_damping_{damping:g}.npy", np.vstack(modern_p))

    instances = [
        {
            "id": inst.id,
            "period": inst.period.value,
            "context": inst.context,
            "target_start": inst.target_start,
            "target_end": inst.target_end,
            "gold_sense": inst.gold_sense,
        }
        for inst in artifacts.dataset.all_instances()
    ]
    meta = {
        "word": artifacts.word,
        "instances": instances,
        "plans": {f"{lam:g}": _plan_meta(p) for lam, p in sorted(artifacts.uot_plans.items())},
        "balanced_plan": _plan_meta(artifacts.ot_plan),
        "apd": artifacts.apd_value,
        "vmf": {
            side: None
            if params is None
            else {
                "kappa": params.kappa,
                "resultant_length": params.resultant_length,
                "dims": params.dims,
                "degenerate": params.degenerate,
                "mu": params.mu.tolist(),
            }
            for side, params in (("old", artifacts.vmf_old), ("modern", artifacts.vmf_modern))
        },
        "clusters": {
            f"{damping:g}": {
                "n_clusters": assignment.n_clusters,
                "converged": assignment.converged,
                "damping": assignment.damping,
                "iterations": assignment.iterations,
            }
            for damping, assignment in sorted(artifacts.clusters.items())
        },
        "gold_sfd": None
        if artifacts.gold_sfd is None
        else {
            "sense_ids": list(artifacts.gold_sfd.sense_ids),
            "x": artifacts.gold_sfd.x.tolist(),
            "y": artifacts.gold_sfd.y.tolist(),
        },
    }
    (directory / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def load_artifacts(directory: str | Path) -> WordArtifacts:
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    word = meta["word"]

    instances = []
    for obj in meta["instances"]:
        instances.append(
            UsageInstance(
                id=obj["id"],
                word=word,
                period=Period(obj["period"]),
                context=obj["context"],
                target_start=obj["target_start"],
                target_end=obj["target_end"],
                gold_sense=obj["gold_sense"],
            )
        )
    old = tuple(i for i in instances if i.period is Period.OLD)
    modern = tuple(i for i in instances if i.period is Period.MODERN)
    dataset = WordDataset(word, old, modern)
    m, n = dataset.m, dataset.n
    a, b = uniform_weights(m), uniform_weights(n)

    cost = np.load(directory / "cost.npy")

    def plan_from(path, info, lam1, lam2):
        matrix = np.load(path)
        return TransportPlan(
            plan=matrix,
            lambda1=lam1,
            lambda2=lam2,
            objective=info["objective"],
            iterations=info["iterations"],
            objective_trace=np.array([info["objective"]]),
            converged=info["converged"],
            kkt_residual=info["kkt_residual"],
        )

    ot_plan = plan_from(directory / "plan_balanced.npy", meta["balanced_plan"], math.inf, math.inf)
    uot_plans = {}
    sus_by_lambda = {}
    for key, info in meta["plans"].items():
        lam = float(key)
        plan = plan_from(directory / f"plan_lambda_{key}.npy", info, lam, lam)
        uot_plans[lam] = plan
        sus_by_lambda[lam] = compute_sus(plan, a, b)

    def vmf_from(obj):
        if obj is None:
            return None
        return VmfParams(
            mu=np.array(obj["mu"]),
            kappa=obj["kappa"],
            resultant_length=obj["resultant_length"],
            dims=obj["dims"],
            degenerate=obj["degenerate"],
        )

    ldr_old = ldr_modern = None
    if (directory / "ldr_old.npy").exists():
        ldr_old = np.load(directory / "ldr_old.npy")
        ldr_modern = np.load(directory / "ldr_modern.npy")

    periods = [Period.OLD] * m + [Period.MODERN] * n
    clusters = {}
    estimated = {}
    prototypes = {}
    for key, info in meta["clusters"].items():
        damping = float(key)
        assignment = ClusterAssignment(
            labels=np.load(directory / f"labels_damping_{key}.npy"),
            exemplars=np.load(directory / f"exemplars_damping_{key}.npy"),
            damping=info["damping"],
            n_clusters=info["n_clusters"],
            converged=info["converged"],
            iterations=info["iterations"],
        )
        clusters[damping] = assignment
        estimated[damping] = estimate_sfd(assignment, periods)
        old_path = directory / f"proto_old_damping_{key}.npy"
        modern_path = directory / f"proto_modern_damping_{key}.npy"
        prototypes[damping] = (
            list(np.load(old_path)) if old_path.exists() else [],
            list(np.load(modern_path)) if modern_path.exists() else [],
        )

    gold = meta["gold_sfd"]
    gold_sfd = (
        None
        if gold is None
        else SenseFrequencyDistribution(
            tuple(gold["sense_ids"]), np.array(gold["x"]), np.array(gold["y"])
        )
    )

    return WordArtifacts(
        word=word,
        dataset=dataset,
        cost=cost,
        ot_plan=ot_plan,
        uot_plans=uot_plans,
        sus_by_lambda=sus_by_lambda,
        vmf_old=vmf_from(meta["vmf"]["old"]),
        vmf_modern=vmf_from(meta["vmf"]["modern"]),
        ldr_old=ldr_old,
        ldr_modern=ldr_modern,
        clusters=clusters,
        estimated_sfds=estimated,
        prototypes=prototypes,
        gold_sfd=gold_sfd,
        apd_value=meta["apd"],
    )


# ---------------------------------------------------------------------------
# instance table export
# ---------------------------------------------------------------------------


def export_instance_table(
    artifacts: WordArtifacts, lambda_: float, path: str | Path, snippet_bytes: int = 60
) -> None:
    """Per-instance scores sorted by shift value (descending, id tie-break)."""
    if lambda_ not in artifacts.sus_by_lambda:
        raise KeyError(
            f"no cached plan for lambda={lambda_:g}; available: "
            f"{sorted(artifacts.sus_by_lambda)}"
        )
    sus = artifacts.sus_by_lambda[lambda_]
    rows = []
    instances = list(artifacts.dataset.old_instances) + list(
        artifacts.dataset.modern_instances
    )
    scores = np.concatenate([sus.alpha, sus.beta])
    ldr = None
    if artifacts.ldr_old is not None:
        ldr = np.concatenate([artifacts.ldr_old, artifacts.ldr_modern])
    for k, inst in enumerate(instances):
        snippet = inst.context[:snippet_bytes].replace("\n", " ")
        rows.append(
            {
                "id": inst.id,
                "period": inst.period.value,
                "context": snippet,
                "gold_sense": "" if inst.gold_sense is None else inst.gold_sense,
                "sus": repr(float(scores[k])),
                "ldr": "" if ldr is None else repr(float(ldr[k])),
            }
        )
    rows.sort(key=lambda r: (-float(r["sus"]), r["id"]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["id", "period", "context", "gold_sense", "sus", "ldr"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows)


def read_instance_table(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


METRIC_FIELDS = (
    "f_sus", "f1", "f2", "f3", "f_ot", "f_apd", "f_ldr", "f_widid", "f_apdp",
    "g_sus", "g1", "g_vmf", "g_ldr", "g_widid",
)


def export_word_metrics(
    artifacts_by_word: Mapping[str, WordArtifacts],
    lambda_: float,
    ratio: float,
    path: str | Path,
) -> None:
    """One CSV row per word with every magnitude/scope metric plus the gold
    scores.  The shift threshold is ratio * max|SUS| over the exported words
    at the given penalty weight; undefined fields stay empty."""
    words = sorted(artifacts_by_word)
    theta = threshold_from_ratio(
        [artifacts_by_word[w].sus_by_lambda[lambda_] for w in words], ratio
    )
    gold_f = gold_word_scores(artifacts_by_word, "f")
    gold_g = gold_word_scores(artifacts_by_word, "g")

    def fmt(value):
        return "" if value is None else repr(float(value))

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["word", "lambda", "theta", *METRIC_FIELDS, "f_gold", "g_gold"])
        for word in words:
            scores = artifacts_by_word[word].word_scores(lambda_, theta)
            writer.writerow(
                [word, repr(float(lambda_)), repr(float(theta))]
                + [fmt(getattr(scores, name)) for name in METRIC_FIELDS]
                + [fmt(gold_f[word]), fmt(gold_g[word])]
            )


# ---------------------------------------------------------------------------
# evaluation providers
# ---------------------------------------------------------------------------


def _defined_instances(artifacts: WordArtifacts):
    """Defined-gold-sense instances with their pooled index (old then modern)."""
    out = []
    pooled = list(artifacts.dataset.old_instances) + list(artifacts.dataset.modern_instances)
    for idx, inst in enumerate(pooled):
        if inst.gold_sense is not None:
            out.append((idx, inst))
    return out


def defined_sense_labels(artifacts_by_word: Mapping[str, WordArtifacts]) -> dict[str, list[int]]:
    return {
        word: [inst.gold_sense for _, inst in _defined_instances(art)]
        for word, art in artifacts_by_word.items()
    }


def gold_tau_provider(artifacts_by_word: Mapping[str, WordArtifacts]):
    """Gold change scores per defined instance; imputation bounds come from
    the word set the provider is called with."""

    def provide(words: Sequence[str]) -> dict[str, np.ndarray]:
        sfds = {w: artifacts_by_word[w].gold_sfd for w in words}
        missing = [w for w, sfd in sfds.items() if sfd is None]
        if missing:
            raise ValueError(f"no gold senses for word {missing[0]!r}")
        bounds = compute_gold_imputation_bounds(sfds)
        scores = {}
        for w in words:
            art = artifacts_by_word[w]
            sfd = art.gold_sfd
            values = []
            for _, inst in _defined_instances(art):
                tau, _ = tau_score(sfd.index_of(inst.gold_sense), sfd.x, sfd.y, bounds)
                values.append(tau)
            scores[w] = np.array(values)
        return scores

    return provide


def sus_instance_candidates(artifacts_by_word: Mapping[str, WordArtifacts]) -> list[Candidate]:
    lambdas = sorted(next(iter(artifacts_by_word.values())).sus_by_lambda)

    def make(lam):
        def provide(words: Sequence[str]) -> dict[str, np.ndarray]:
            out = {}
            for w in words:
                art = artifacts_by_word[w]
                pooled = art.sus_by_lambda[lam].pooled()
                out[w] = np.array([pooled[idx] for idx, _ in _defined_instances(art)])
            return out

        return provide

    return [Candidate(key=(lam,), label=f"lambda={lam:g}", provider=make(lam)) for lam in lambdas]


def ldr_instance_candidates(artifacts_by_word: Mapping[str, WordArtifacts]) -> list[Candidate]:
    def provide(words: Sequence[str]) -> dict[str, np.ndarray]:
        out = {}
        for w in words:
            art = artifacts_by_word[w]
            if art.ldr_old is None:
                raise ValueError(f"log-density ratio undefined for word {w!r}")
            pooled = np.concatenate([art.ldr_old, art.ldr_modern])
            out[w] = np.array([pooled[idx] for idx, _ in _defined_instances(art)])
        return out

    return [Candidate(key=(0.0,), label="ldr", provider=provide)]


def widid_instance_candidates(artifacts_by_word: Mapping[str, WordArtifacts]) -> list[Candidate]:
    dampings = sorted(next(iter(artifacts_by_word.values())).estimated_sfds)

    def make(damping):
        def provide(words: Sequence[str]) -> dict[str, np.ndarray]:
            sfds = {w: artifacts_by_word[w].estimated_sfds[damping] for w in words}
            bounds = compute_gold_imputation_bounds(sfds)
            out = {}
            for w in words:
                art = artifacts_by_word[w]
                sfd = sfds[w]
                labels = art.clusters[damping].labels
                values = []
                for idx, _ in _defined_instances(art):
                    values.append(tau_score(int(labels[idx]), sfd.x, sfd.y, bounds)[0])
                out[w] = np.array(values)
            return out

        return provide

    return [
        Candidate(key=(damping,), label=f"damping={damping:g}", provider=make(damping))
        for damping in dampings
    ]


_FIXED_METRICS = {"f_ot", "f_apd", "f_ldr", "g_vmf", "g_ldr"}
_LAMBDA_METRICS = {"f_sus", "f1", "f3", "g_sus"}
_THRESHOLD_METRICS = {"f2", "g1"}
_DAMPING_METRICS = {"f_widid", "f_apdp", "g_widid"}


def word_metric_candidates(
    artifacts_by_word: Mapping[str, WordArtifacts],
    metric: str,
    r_grid: Sequence[float] = (0.4, 0.6, 0.8),
    lambda_grid: Sequence[float] | None = None,
) -> list[Candidate]:
    """Candidates for one word-level metric, keyed by whatever it tunes."""
    some = next(iter(artifacts_by_word.values()))
    lambdas = sorted(some.sus_by_lambda) if lambda_grid is None else sorted(lambda_grid)
    dampings = sorted(some.estimated_sfds)

    def scores_at(words, lam, theta, damping=None):
        out = {}
        for w in words:
            art = artifacts_by_word[w]
            if metric in _DAMPING_METRICS:
                sfd_hat = art.estimated_sfds[damping]
                protos = art.prototypes.get(damping, ([], []))
                if metric == "f_widid":
                    out[w] = jsd(sfd_hat.p, sfd_hat.q)
                elif metric == "g_widid":
                    out[w] = entropy(sfd_hat.q) - entropy(sfd_hat.p)
                else:
                    scores = magnitude_suite(
                        w, old_prototypes=protos[0], modern_prototypes=protos[1]
                    )
                    out[w] = scores.f_apdp
            else:
                out[w] = getattr(art.word_scores(lam, theta), metric)
        return out

    if metric in _FIXED_METRICS:
        lam = lambdas[0]

        def provide(words):
            return scores_at(words, lam, None)

        return [Candidate(key=(0.0,), label=metric, provider=provide)]

    if metric in _LAMBDA_METRICS:
        def make(lam):
            def provide(words):
                return scores_at(words, lam, None)

            return provide

        return [
            Candidate(key=(lam,), label=f"lambda={lam:g}", provider=make(lam))
            for lam in lambdas
        ]

    if metric in _THRESHOLD_METRICS:
        def make(lam, r):
            def provide(words):
                theta = threshold_from_ratio(
                    [artifacts_by_word[w].sus_by_lambda[lam] for w in words], r
                )
                return scores_at(words, lam, theta)

            return provide

        return [
            Candidate(key=(lam, r), label=f"lambda={lam:g},r={r:g}", provider=make(lam, r))
            for lam in lambdas
            for r in r_grid
        ]

    if metric in _DAMPING_METRICS:
        def make(damping):
            def provide(words):
                return scores_at(words, None, None, damping)

            return provide

        return [
            Candidate(key=(d,), label=f"damping={d:g}", provider=make(d)) for d in dampings
        ]

    raise ValueError(f"unknown metric {metric!r}")


def gold_word_scores(
    artifacts_by_word: Mapping[str, WordArtifacts], kind: str
) -> dict[str, float | None]:
    """f* (distribution divergence) or g* (entropy difference) per word."""
    out: dict[str, float | None] = {}
    for word, art in artifacts_by_word.items():
        if art.gold_sfd is None:
            out[word] = None
        elif kind == "f":
            out[word] = jsd(art.gold_sfd.p, art.gold_sfd.q)
        elif kind == "g":
            out[word] = entropy(art.gold_sfd.q) - entropy(art.gold_sfd.p)
        else:
            raise ValueError(f"unknown gold kind {kind!r}")
    return out
