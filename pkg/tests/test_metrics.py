import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semshift.ingest import SenseFrequencyDistribution
from semshift.matrixio import EmbeddingMatrix, normalize_rows
from semshift.metrics import (
    apd,
    canberra_apdp,
    canberra_distance,
    entropy,
    jsd,
    magnitude_suite,
    scope_suite,
    tau_score,
    threshold_from_ratio,
)
from semshift.otcore import solve_exact_ot, solve_uot_mm, uniform_weights
from semshift.sus import SusScores
from semshift.vmf import ldr_scores

from oracles import entropy_direct, jsd_direct

RECORD_X = np.array([99, 0, 0, 0, 0, 0, 0])
RECORD_Y = np.array([64, 17, 11, 1, 1, 1, 1])
# frozen oracle values for the gold distributions above
RECORD_JSD = 0.13230412471889838
RECORD_ENTROPY_Q = 1.01528577287662


def distributions():
    return st.integers(2, 6).flatmap(
        lambda n: st.lists(
            st.floats(0.01, 1.0), min_size=n, max_size=n
        ).map(lambda xs: np.array(xs) / np.sum(xs))
    )


class TestTauScore:
    def test_record_counts(self):
        tau, imputed = tau_score(0, RECORD_X, RECORD_Y, (-5.0, 5.0))
        assert tau == pytest.approx(math.log(64 / 99), abs=1e-12)
        assert not imputed

    def test_equal_counts_score_zero(self):
        tau, imputed = tau_score(1, np.array([3, 7]), np.array([5, 7]), (-1, 1))
        assert tau == 0.0
        assert not imputed

    def test_disappearance_imputed(self):
        tau, imputed = tau_score(0, np.array([5]), np.array([0]), (-2.5, 3.0))
        assert tau == -2.5
        assert imputed

    def test_emergence_imputed(self):
        tau, imputed = tau_score(1, RECORD_X, RECORD_Y, (-2.5, 3.0))
        assert tau == 3.0
        assert imputed

    def test_absent_sense_is_error(self):
        with pytest.raises(ValueError, match="absent from both"):
            tau_score(0, np.array([0, 1]), np.array([0, 2]), (-1, 1))


class TestJsd:
    def test_identical(self):
        p = np.array([0.2, 0.3, 0.5])
        assert jsd(p, p) == 0.0

    def test_disjoint_supports(self):
        assert jsd(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(
            math.log(2), abs=1e-12
        )

    def test_record_gold_value(self):
        p = RECORD_X / RECORD_X.sum()
        q = RECORD_Y / RECORD_Y.sum()
        assert jsd(p, q) == pytest.approx(RECORD_JSD, abs=1e-12)
        assert jsd(p, q) == pytest.approx(jsd_direct(p, q), abs=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            jsd(np.array([1.0]), np.array([0.5, 0.5]))

    def test_negative_entries(self):
        with pytest.raises(ValueError, match="negative"):
            jsd(np.array([1.5, -0.5]), np.array([0.5, 0.5]))

    @given(distributions(), distributions())
    @settings(max_examples=150, deadline=None)
    def test_symmetric_and_bounded(self, p, q):
        if p.size != q.size:
            q = np.resize(q, p.size)
            q = q / q.sum()
        value = jsd(p, q)
        assert value == pytest.approx(jsd(q, p), abs=1e-12)
        assert -1e-15 <= value <= math.log(2) + 1e-12


class TestEntropy:
    def test_degenerate(self):
        assert entropy(np.array([1.0, 0.0, 0.0])) == 0.0

    @pytest.mark.parametrize("k", [2, 3, 7])
    def test_uniform(self, k):
        assert entropy(np.full(k, 1.0 / k)) == pytest.approx(math.log(k), abs=1e-12)

    def test_record_modern_value(self):
        q = RECORD_Y / RECORD_Y.sum()
        assert entropy(q) == pytest.approx(RECORD_ENTROPY_Q, abs=1e-12)
        assert entropy(q) == pytest.approx(entropy_direct(q), abs=1e-14)

    @given(distributions())
    @settings(max_examples=150, deadline=None)
    def test_bounds(self, p):
        value = entropy(p)
        assert -1e-15 <= value <= math.log(p.size) + 1e-12


class TestApd:
    def test_identical_single_rows(self):
        m = EmbeddingMatrix(np.array([[0.0, 2.0]]), ("a",))
        assert apd(m, m) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_sets(self):
        u = EmbeddingMatrix(np.array([[1.0, 0.0], [2.0, 0.0]]), ("a", "b"))
        v = EmbeddingMatrix(np.array([[0.0, 1.0], [0.0, 5.0]]), ("c", "d"))
        assert apd(u, v) == pytest.approx(1.0, abs=1e-12)

    def test_mean_vector_identity_for_unit_rows(self, rng):
        u = normalize_rows(EmbeddingMatrix(rng.normal(size=(9, 5)), tuple(f"u{k}" for k in range(9))))
        v = normalize_rows(EmbeddingMatrix(rng.normal(size=(7, 5)), tuple(f"v{k}" for k in range(7))))
        identity = 1.0 - float(u.data.mean(axis=0) @ v.data.mean(axis=0))
        assert apd(u, v) == pytest.approx(identity, abs=1e-9)


class TestCanberra:
    def test_identical_prototypes(self):
        assert canberra_apdp([np.array([1.0, 2.0])], [np.array([1.0, 2.0])]) == 0.0

    def test_disjoint_coordinates(self):
        assert canberra_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 2.0

    def test_single_coordinate_ratio(self):
        assert canberra_distance(np.array([2.0]), np.array([1.0])) == pytest.approx(1 / 3)

    def test_zero_zero_coordinate_contributes_nothing(self):
        assert canberra_distance(np.array([0.0, 1.0]), np.array([0.0, 1.0])) == 0.0

    def test_empty_prototype_list_is_error(self):
        with pytest.raises(ValueError, match="no prototypes in modern"):
            canberra_apdp([np.array([1.0])], [])

    def test_averages_over_pairs(self):
        old = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        modern = [np.array([1.0, 0.0])]
        assert canberra_apdp(old, modern) == pytest.approx((0.0 + 2.0) / 2)


class TestThreshold:
    def test_all_zero(self):
        scores = [SusScores(alpha=np.zeros(3), beta=np.zeros(3))]
        assert threshold_from_ratio(scores, 0.8) == 0.0

    def test_scaling(self):
        scores = [
            SusScores(alpha=np.array([-0.5, 0.1]), beta=np.array([0.3])),
            SusScores(alpha=np.array([-0.2]), beta=np.array([0.4])),
        ]
        assert threshold_from_ratio(scores, 0.8) == pytest.approx(0.4)

    def test_ratio_validated(self):
        with pytest.raises(ValueError, match="ratio"):
            threshold_from_ratio([SusScores(np.zeros(1), np.zeros(1))], 1.0)

    def test_empty_collection(self):
        with pytest.raises(ValueError, match="empty"):
            threshold_from_ratio([], 0.5)


class TestMagnitudeSuite:
    def test_zero_shift(self):
        sus = SusScores(alpha=np.zeros(3), beta=np.zeros(3))
        scores = magnitude_suite("w", sus=sus, theta=0.25)
        assert scores.f_sus == 0.0
        assert scores.f1 == 0.0
        assert scores.f2 == 0.0

    def test_hand_arithmetic(self):
        sus = SusScores(alpha=np.array([-0.5, 0.0]), beta=np.array([0.0, 0.5]))
        scores = magnitude_suite("w", sus=sus, theta=0.25)
        assert scores.f2 == pytest.approx(1.0)
        assert scores.f1 == pytest.approx(1.0)
        assert scores.f_sus == pytest.approx(0.5)

    def test_f3_equals_f_ot_in_balanced_limit(self, rng):
        a = uniform_weights(5)
        cost = rng.uniform(0, 2, (5, 5))
        uot = solve_uot_mm(a, a, cost, 1e6, 1e6, max_iter=100_000)
        ot = solve_exact_ot(a, a, cost)
        scores = magnitude_suite("w", uot_plan=uot, cost=cost, ot_plan=ot)
        assert scores.f3 == pytest.approx(scores.f_ot, abs=1e-3)

    def test_partial_inputs_leave_none(self):
        scores = magnitude_suite("w")
        assert scores.f_sus is None
        assert scores.f_widid is None

    def test_widid_fields(self):
        sfd = SenseFrequencyDistribution((0, 1), np.array([3, 1]), np.array([1, 3]))
        scores = magnitude_suite("w", sfd_hat=sfd)
        assert scores.f_widid == pytest.approx(jsd_direct(sfd.p, sfd.q), abs=1e-12)

    def test_permutation_invariance(self, rng):
        alpha = rng.normal(size=6)
        beta = rng.normal(size=4)
        sus = SusScores(alpha=alpha, beta=beta)
        perm = SusScores(alpha=alpha[rng.permutation(6)], beta=beta[rng.permutation(4)])
        theta = 0.3
        first = magnitude_suite("w", sus=sus, theta=theta)
        second = magnitude_suite("w", sus=perm, theta=theta)
        assert first.f_sus == pytest.approx(second.f_sus, abs=1e-12)
        assert first.f1 == pytest.approx(second.f1, abs=1e-12)
        assert first.f2 == pytest.approx(second.f2, abs=1e-12)


class TestScopeSuite:
    def test_identical_distributions(self, rng):
        values = rng.normal(size=5)
        sus = SusScores(alpha=values, beta=values.copy())
        scores = scope_suite("w", sus=sus, theta=0.2)
        assert scores.g_sus == pytest.approx(0.0, abs=1e-12)

    def test_hand_arithmetic(self):
        sus = SusScores(alpha=np.array([-0.5, 0.0]), beta=np.array([0.0, 0.5]))
        scores = scope_suite("w", sus=sus, theta=0.25)
        assert scores.g1 == pytest.approx(0.0, abs=1e-15)

    def test_equal_kappas(self):
        scores = scope_suite("w", kappa_old=3.5, kappa_modern=3.5)
        assert scores.g_vmf == 0.0

    def test_zero_variance_marked_undefined(self):
        sus = SusScores(alpha=np.zeros(3), beta=np.array([0.1, 0.4, 0.2]))
        scores = scope_suite("w", sus=sus)
        assert scores.g_sus is None

    def test_widid_entropy_difference(self):
        sfd = SenseFrequencyDistribution((0, 1), np.array([4, 0]), np.array([2, 2]))
        scores = scope_suite("w", sfd_hat=sfd)
        assert scores.g_widid == pytest.approx(math.log(2), abs=1e-12)


class TestLdrMetricInvariance:
    def test_normalizer_cancels_in_f_and_g(self, rng):
        u = EmbeddingMatrix(rng.normal(size=(12, 6)), tuple(f"u{k}" for k in range(12)))
        v = EmbeddingMatrix(rng.normal(size=(10, 6)), tuple(f"v{k}" for k in range(10)))
        with_norm = ldr_scores(u, v, include_normalizer=True)
        without = ldr_scores(u, v, include_normalizer=False)
        f_with = magnitude_suite("w", ldr_old=with_norm[0], ldr_modern=with_norm[1]).f_ldr
        f_without = magnitude_suite("w", ldr_old=without[0], ldr_modern=without[1]).f_ldr
        assert f_with == pytest.approx(f_without, abs=1e-9)
        g_with = scope_suite("w", ldr_old=with_norm[0], ldr_modern=with_norm[1]).g_ldr
        g_without = scope_suite("w", ldr_old=without[0], ldr_modern=without[1]).g_ldr
        assert g_with == pytest.approx(g_without, abs=1e-9)
