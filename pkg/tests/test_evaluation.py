import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semshift.evaluation import (
    Candidate,
    ConstantInputError,
    EvalConfig,
    Task,
    compute_gold_imputation_bounds,
    constant_provider,
    eval_instance_level,
    eval_sense_level,
    eval_word_level,
    rank_with_ties,
    run_repeated,
    spearman,
    split_words,
    tune_hyperparams,
)
from semshift.ingest import SenseFrequencyDistribution

from _spearman_fixtures import SPEARMAN_FIXTURES
from oracles import spearman_direct


class TestSpearman:
    def test_monotone(self):
        assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-15)

    def test_reversed(self):
        assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)

    def test_hand_computed_tied_case(self):
        assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(
            0.9486832980505139, abs=1e-12
        )

    @pytest.mark.parametrize("x,y,expected", SPEARMAN_FIXTURES)
    def test_frozen_fixtures(self, x, y, expected):
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)
        assert spearman(x, y) == pytest.approx(spearman_direct(x, y), abs=1e-13)

    def test_constant_input_raises(self):
        with pytest.raises(ConstantInputError):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_average_ranks(self):
        assert rank_with_ties(np.array([10.0, 20.0, 20.0, 5.0])).tolist() == [
            2.0,
            3.5,
            3.5,
            1.0,
        ]

    @given(
        st.lists(st.integers(-100, 100), min_size=3, max_size=20, unique=True),
        st.sampled_from(["exp", "cube", "affine"]),
    )
    @settings(max_examples=100, deadline=None)
    def test_invariant_under_monotone_transform(self, xs, transform):
        # integer inputs keep the transforms strictly monotone in floats
        rng = np.random.default_rng(len(xs))
        ys = rng.normal(size=len(xs))
        fn = {
            "exp": lambda v: math.exp(v / 50.0),
            "cube": lambda v: float(v) ** 3,
            "affine": lambda v: 3.0 * v + 7.0,
        }[transform]
        base = spearman([float(v) for v in xs], ys)
        assert spearman([fn(v) for v in xs], ys) == pytest.approx(base, abs=1e-12)


class TestSplitWords:
    WORDS = [f"w{k:02d}" for k in range(46)]

    def test_eight_two_ratio_on_46_words(self):
        validation, test = split_words(self.WORDS, 0.8, 0)
        assert len(validation) == 37
        assert len(test) == 9
        assert sorted(validation + test) == sorted(self.WORDS)

    def test_deterministic_per_seed(self):
        assert split_words(self.WORDS, 0.8, 99) == split_words(self.WORDS, 0.8, 99)

    def test_distinct_across_seeds(self):
        seen = {tuple(sorted(split_words(self.WORDS, 0.8, seed)[1])) for seed in range(100)}
        assert len(seen) >= 99

    def test_too_few_words(self):
        with pytest.raises(ValueError, match="at least 5"):
            split_words(["a", "b", "c"], 0.8, 0)


def word_candidates(scores_by_key):
    return [
        Candidate(key=(key,), label=f"lambda={key:g}", provider=constant_provider(scores))
        for key, scores in scores_by_key.items()
    ]


class TestEvalTasks:
    GOLD = {"w1": np.array([0.0, 1.0, 2.0]), "w2": np.array([-1.0, 3.0])}

    def test_instance_level_perfect(self):
        assert eval_instance_level(["w1", "w2"], self.GOLD, self.GOLD) == pytest.approx(1.0)

    def test_instance_level_reversed(self):
        flipped = {w: -v for w, v in self.GOLD.items()}
        assert eval_instance_level(["w1", "w2"], flipped, self.GOLD) == pytest.approx(-1.0)

    def test_instance_level_needs_two(self):
        with pytest.raises(ValueError, match="at least two"):
            eval_instance_level(["w2"], {"w2": np.array([1.0])}, {"w2": np.array([1.0])})

    def test_sense_level_equals_instance_level_for_singletons(self):
        senses = {"w1": [0, 1, 2], "w2": [0, 1]}
        method = {"w1": np.array([0.3, 0.1, 0.9]), "w2": np.array([0.5, 0.2])}
        inst = eval_instance_level(["w1", "w2"], method, self.GOLD)
        grouped = eval_sense_level(["w1", "w2"], method, self.GOLD, senses)
        assert grouped == pytest.approx(inst, abs=1e-12)

    def test_sense_level_group_means(self):
        senses = {"w1": [0, 0, 1]}
        gold = {"w1": np.array([5.0, 5.0, -1.0])}
        method = {"w1": np.array([0.4, 0.8, -0.3])}
        # two groups: mean(0.4, 0.8)=0.6 vs 5.0 and -0.3 vs -1.0
        assert eval_sense_level(["w1"], method, gold, senses) == pytest.approx(1.0)

    def test_word_level_pairwise_drop(self):
        gold = {"w1": 0.1, "w2": 0.5, "w3": 0.9, "w4": None}
        method = {"w1": 1.0, "w2": None, "w3": 3.0, "w4": 2.0}
        assert eval_word_level(["w1", "w2", "w3", "w4"], method, gold) == pytest.approx(1.0)

    def test_word_level_too_few_defined(self):
        gold = {"w1": 0.1, "w2": None}
        method = {"w1": 1.0, "w2": 1.0}
        with pytest.raises(ValueError, match="words have defined scores"):
            eval_word_level(["w1", "w2"], method, gold)


class TestTuning:
    def test_single_point_grid(self):
        gold = {"w1": 1.0, "w2": 2.0, "w3": 3.0}
        candidates = word_candidates({100.0: {"w1": 1.0, "w2": 2.0, "w3": 2.5}})
        best = tune_hyperparams(
            ["w1", "w2", "w3"], Task.WORD_MAGNITUDE, candidates, constant_provider(gold)
        )
        assert best.key == (100.0,)

    def test_constructed_dominant_lambda(self):
        gold = {f"w{k}": float(k) for k in range(6)}
        words = list(gold)
        good = {w: gold[w] for w in words}
        bad = {w: -gold[w] for w in words}
        candidates = word_candidates({10.0: bad, 100.0: good, 1000.0: bad})
        best = tune_hyperparams(
            words, Task.WORD_MAGNITUDE, candidates, constant_provider(gold)
        )
        assert best.key == (100.0,)

    def test_grid_cardinality_evaluated(self):
        gold = {f"w{k}": float(k) for k in range(5)}
        words = list(gold)
        calls = []

        def make_provider(key):
            def provide(ws):
                calls.append(key)
                return gold
            return provide

        candidates = [
            Candidate(key=(lam, r), label=f"lambda={lam:g},r={r:g}", provider=make_provider((lam, r)))
            for lam in (10.0, 100.0, 1000.0)
            for r in (0.4, 0.6, 0.8)
        ]
        tune_hyperparams(words, Task.WORD_MAGNITUDE, candidates, constant_provider(gold))
        assert len(calls) == 9

    def test_ties_take_smallest_key(self):
        gold = {f"w{k}": float(k) for k in range(5)}
        words = list(gold)
        same = {w: gold[w] for w in words}
        candidates = word_candidates({1000.0: same, 10.0: same, 100.0: same})
        best = tune_hyperparams(
            words, Task.WORD_MAGNITUDE, candidates, constant_provider(gold)
        )
        assert best.key == (10.0,)

    def test_all_undefined_is_error(self):
        gold = {"w1": 1.0, "w2": 2.0, "w3": 3.0, "w4": 4.0, "w5": 5.0}
        words = list(gold)
        constant = {w: 7.0 for w in words}
        candidates = word_candidates({10.0: constant})
        with pytest.raises(ValueError, match="no candidate"):
            tune_hyperparams(words, Task.WORD_MAGNITUDE, candidates, constant_provider(gold))


class TestRunRepeated:
    def test_single_repetition(self):
        gold = {f"w{k}": float(k) for k in range(8)}
        candidates = word_candidates({100.0: gold})
        config = EvalConfig(repetitions=1, rng_seed=3)
        report = run_repeated(
            list(gold), Task.WORD_MAGNITUDE, config, candidates, constant_provider(gold)
        )
        assert len(report.per_split) == 1
        assert report.mean_spearman == pytest.approx(1.0)

    def test_identical_scores_mean_one(self):
        gold = {f"w{k}": float(k) for k in range(10)}
        candidates = word_candidates({10.0: gold, 100.0: gold})
        config = EvalConfig(repetitions=20, rng_seed=0)
        report = run_repeated(
            list(gold), Task.WORD_MAGNITUDE, config, candidates, constant_provider(gold)
        )
        assert report.mean_spearman == pytest.approx(1.0)
        assert report.selected == {"lambda=10": 20}
        assert report.mean_spearman == pytest.approx(
            float(np.mean(report.per_split)), abs=1e-12
        )

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(4)
        gold = {f"w{k}": float(k) for k in range(12)}
        noisy = {w: gold[w] + rng.normal() for w in gold}
        candidates = word_candidates({10.0: noisy, 100.0: gold})
        config = EvalConfig(repetitions=10, rng_seed=123)
        first = run_repeated(list(gold), Task.WORD_MAGNITUDE, config, candidates, constant_provider(gold))
        second = run_repeated(list(gold), Task.WORD_MAGNITUDE, config, candidates, constant_provider(gold))
        assert first.per_split == second.per_split
        assert first.selected == second.selected

    def test_instance_task_with_context_dependent_gold(self):
        # gold provider scales with the word set size, mimicking imputation
        # bounds that depend on the words in play
        words = [f"w{k}" for k in range(6)]
        base = {w: np.array([0.1 * k, 0.2 + 0.1 * k]) for k, w in enumerate(words)}

        def gold_provider(ws):
            return {w: base[w] * len(ws) for w in ws}

        candidates = [
            Candidate(key=(1.0,), label="lambda=1", provider=lambda ws: {w: base[w] for w in ws})
        ]
        config = EvalConfig(repetitions=3, rng_seed=1)
        report = run_repeated(words, Task.INSTANCE, config, candidates, gold_provider)
        assert report.mean_spearman == pytest.approx(1.0)


class TestImputationBounds:
    def test_single_word_bounds(self):
        sfd = SenseFrequencyDistribution((0, 1), np.array([3, 2]), np.array([2, 4]))
        low, high = compute_gold_imputation_bounds({"w": sfd})
        assert low == pytest.approx(math.log(2 / 3))
        assert high == pytest.approx(math.log(2.0))

    def test_bounds_span_all_words(self):
        first = SenseFrequencyDistribution((0,), np.array([1]), np.array([5]))
        second = SenseFrequencyDistribution((0,), np.array([8]), np.array([2]))
        low, high = compute_gold_imputation_bounds({"a": first, "b": second})
        assert low == pytest.approx(math.log(0.25))
        assert high == pytest.approx(math.log(5.0))

    def test_record_fixture_single_finite_sense(self):
        sfd = SenseFrequencyDistribution(
            tuple(range(7)),
            np.array([99, 0, 0, 0, 0, 0, 0]),
            np.array([64, 17, 11, 1, 1, 1, 1]),
        )
        low, high = compute_gold_imputation_bounds({"record": sfd})
        assert low == high == pytest.approx(math.log(64 / 99), abs=1e-12)

    def test_no_finite_ratio_is_error(self):
        sfd = SenseFrequencyDistribution((0, 1), np.array([3, 0]), np.array([0, 4]))
        with pytest.raises(ValueError, match="bounds undefined"):
            compute_gold_imputation_bounds({"w": sfd})
