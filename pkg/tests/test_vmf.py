import math

import mpmath
import numpy as np
import pytest

from semshift.matrixio import EmbeddingMatrix
from semshift.vmf import (
    VmfParams,
    fit_vmf,
    ldr_from_params,
    ldr_scores,
    log_bessel_iv,
    vmf_log_normalizer,
)

mpmath.mp.dps = 40


def log_iv_half_order(order, z):
    """Closed forms for half-integer orders (test-side oracle)."""
    if order == 0.5:
        value = math.sqrt(2.0 / (math.pi * z)) * math.sinh(z)
    elif order == 1.5:
        value = math.sqrt(2.0 / (math.pi * z)) * (math.cosh(z) - math.sinh(z) / z)
    elif order == 2.5:
        value = math.sqrt(2.0 / (math.pi * z)) * (
            (3.0 / (z * z) + 1.0) * math.sinh(z) - 3.0 * math.cosh(z) / z
        )
    else:
        raise ValueError(order)
    return math.log(value)


def log_iv_mpmath(order, z):
    return float(mpmath.log(mpmath.besseli(order, z)))


class TestLogBessel:
    @pytest.mark.parametrize("order", [0.5, 1.5, 2.5])
    @pytest.mark.parametrize("z", [0.1, 1.0, 10.0, 100.0])
    def test_half_integer_closed_forms(self, order, z):
        expected = log_iv_half_order(order, z)
        assert log_bessel_iv(order, z) == pytest.approx(expected, rel=1e-8)

    def test_frozen_examples(self):
        assert log_bessel_iv(0.5, 1.0) == pytest.approx(-0.064351991073531831, abs=1e-10)
        assert log_bessel_iv(0.5, 10.0) == pytest.approx(7.9297689182371505, abs=1e-8)

    def test_large_argument_asymptote(self):
        # for fixed order, log I(z) approaches z - log(2 pi z)/2 as z grows
        for order in (0.0, 2.5, 8.0):
            z = 1e6
            leading = z - 0.5 * math.log(2.0 * math.pi * z)
            assert abs(log_bessel_iv(order, z) - leading) < 1e-6 * abs(leading) + 1e-3

    @pytest.mark.parametrize("order", [0.0, 0.3, 1.0, 2.0, 5.0, 10.0, 15.5, 16.0, 17.0, 32.0, 100.0, 511.0, 1024.0, 2048.0])
    @pytest.mark.parametrize("z", [1e-3, 0.1, 1.0, 10.0, 100.0, 399.0, 400.0, 401.0, 1e3, 1e4, 1e5, 1e6])
    def test_against_mpmath_grid(self, order, z):
        reference = log_iv_mpmath(order, z)
        value = log_bessel_iv(order, z)
        assert abs(value - reference) <= 1e-8 * max(1.0, abs(reference))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            log_bessel_iv(-1.0, 1.0)
        with pytest.raises(ValueError):
            log_bessel_iv(1.0, 0.0)


class TestLogNormalizer:
    @pytest.mark.parametrize("dims,kappa", [(3, 2.0), (16, 5.0), (1024, 300.0)])
    def test_against_mpmath(self, dims, kappa):
        order = dims / 2.0 - 1.0
        reference = float(
            (order) * mpmath.log(kappa)
            - (dims / 2.0) * mpmath.log(2 * mpmath.pi)
            - mpmath.log(mpmath.besseli(order, kappa))
        )
        assert vmf_log_normalizer(dims, kappa) == pytest.approx(reference, rel=1e-8)

    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(ValueError):
            vmf_log_normalizer(8, 0.0)


def unit_matrix(rows, ids=None):
    rows = np.asarray(rows, dtype=np.float64)
    ids = ids or tuple(f"r{k}" for k in range(rows.shape[0]))
    return EmbeddingMatrix(rows, tuple(ids))


class TestFitVmf:
    def test_antipodal_rows_are_degenerate(self):
        fit = fit_vmf(unit_matrix([[1.0, 0.0], [-1.0, 0.0]]))
        assert fit.degenerate
        assert fit.kappa == 0.0

    def test_resultant_length_half_in_three_dims(self):
        # mean of these two unit vectors has norm exactly 1/2
        rows = [[1.0, 0.0, 0.0], [-0.5, math.sqrt(0.75), 0.0]]
        fit = fit_vmf(unit_matrix(rows))
        assert fit.resultant_length == pytest.approx(0.5, abs=1e-12)
        assert fit.kappa == pytest.approx(11.0 / 6.0, abs=1e-12)

    def test_identical_rows_overflow(self):
        with pytest.raises(ValueError, match="concentration overflow"):
            fit_vmf(unit_matrix([[1.0, 0.0], [1.0, 0.0]]))

    def test_kappa_matches_closed_form_of_stored_length(self, rng):
        data = rng.normal(size=(50, 16))
        data /= np.linalg.norm(data, axis=1, keepdims=True)
        fit = fit_vmf(unit_matrix(data))
        ell, d = fit.resultant_length, fit.dims
        assert fit.kappa == pytest.approx(ell * (d - ell**2) / (1 - ell**2), rel=1e-12)
        assert np.linalg.norm(fit.mu) == pytest.approx(1.0, abs=1e-9)

    def test_requires_unit_rows(self):
        with pytest.raises(ValueError, match="unit-normalized"):
            fit_vmf(unit_matrix([[2.0, 0.0], [0.0, 1.0]]))


class TestLdr:
    def test_equal_distributions_score_zero(self, rng):
        data = rng.normal(size=(20, 8))
        u = unit_matrix(data, tuple(f"o{k}" for k in range(20)))
        v = unit_matrix(data.copy(), tuple(f"m{k}" for k in range(20)))
        old, modern = ldr_scores(u, v)
        assert np.abs(old).max() < 1e-9
        assert np.abs(modern).max() < 1e-9

    def test_normalizer_shifts_by_constant(self, rng):
        u = unit_matrix(rng.normal(size=(15, 6)))
        v = unit_matrix(rng.normal(size=(12, 6)), tuple(f"m{k}" for k in range(12)))
        with_norm = np.concatenate(ldr_scores(u, v, include_normalizer=True))
        without = np.concatenate(ldr_scores(u, v, include_normalizer=False))
        deltas = with_norm - without
        assert np.abs(deltas - deltas[0]).max() < 1e-9

    def test_synthetic_parameter_example(self):
        source = VmfParams(
            mu=np.array([1.0, 0.0, 0.0]), kappa=2.0, resultant_length=0.5, dims=3
        )
        target = VmfParams(
            mu=np.array([0.0, 1.0, 0.0]), kappa=2.0, resultant_length=0.5, dims=3
        )
        score = ldr_from_params(source, target, np.array([[1.0, 0.0, 0.0]]))
        assert score[0] == pytest.approx(-2.0, abs=1e-12)

    def test_degenerate_fit_is_an_error(self):
        u = unit_matrix([[1.0, 0.0], [-1.0, 0.0]])  # no preferred direction
        v = unit_matrix([[0.6, 0.8], [0.0, 1.0]], ("m0", "m1"))
        with pytest.raises(ValueError, match="degenerate"):
            ldr_scores(u, v)
