"""Von Mises-Fisher density estimation and log-density-ratio scoring.

Embeddings normalized to the unit sphere are modeled per period as
vMF(mu, kappa) with density C_d(kappa) * exp(kappa * mu @ x).  The mean
direction is the maximum likelihood estimate; the concentration uses the
closed-form approximation

    kappa ~= ell * (d - ell^2) / (1 - ell^2)

where ell is the mean resultant length.  The log normalizer

    log C_d(kappa) = (d/2 - 1) log kappa - (d/2) log(2 pi) - log I_{d/2-1}(kappa)

needs log I_nu over extreme ranges (nu up to ~1000 at embedding dimension
1024, kappa up to ~1e6), which no single expansion covers; ``log_bessel_iv``
combines the ascending power series, the large-argument expansion, and the
large-order uniform expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .matrixio import EmbeddingMatrix, normalize_rows

_NU_UNIFORM = 16.0  # at or above: uniform large-order expansion
_KAPPA_SERIES = 400.0  # below nu threshold: series up to here, then large-argument


def _uniform_expansion_polynomials(count: int) -> list[list[Fraction]]:
    """Coefficient lists (index = power of p) for the u_k polynomials.

    u_0 = 1 and u_{k+1}(p) = p^2 (1 - p^2) u_k'(p) / 2
                             + (1/8) * int_0^p (1 - 5 t^2) u_k(t) dt.
    """
    polys = [[Fraction(1)]]
    for _ in range(count):
        u = polys[-1]
        du = [Fraction(0)] * (len(u) + 3)
        # p^2 (1 - p^2) u'(p) / 2
        for power, coef in enumerate(u):
            if power:
                du[power + 1] += Fraction(power, 2) * coef
                du[power + 3] -= Fraction(power, 2) * coef
        # (1/8) int_0^p (1 - 5 t^2) u(t) dt
        for power, coef in enumerate(u):
            du[power + 1] += coef / Fraction(8 * (power + 1))
            du[power + 3] -= Fraction(5, 8) * coef / Fraction(power + 3)
        polys.append(du)
    return polys


_U_POLYS = [
    [float(c) for c in poly] for poly in _uniform_expansion_polynomials(14)
]


def _poly_eval(coeffs: list[float], x: float) -> float:
    value = 0.0
    for c in reversed(coeffs):
        value = value * x + c
    return value


def _log_iv_uniform(nu: float, kappa: float) -> float:
    """Large-order expansion, uniformly valid in kappa/nu."""
    z = kappa / nu
    root = math.hypot(1.0, z)
    eta = root + math.log(z / (1.0 + root))
    p = 1.0 / root
    total = 0.0
    scale = 1.0
    for poly in _U_POLYS:
        term = _poly_eval(poly, p) * scale
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
        scale /= nu
    return nu * eta - 0.5 * math.log(2.0 * math.pi * nu) - 0.25 * math.log1p(z * z) + math.log(total)


def _log_iv_series(nu: float, kappa: float) -> float:
    """Ascending series with periodic rescaling to dodge overflow."""
    q = 0.25 * kappa * kappa
    term = 1.0
    total = 1.0
    shift = 0.0
    k = 0
    while k < 20_000:
        term *= q / ((k + 1.0) * (nu + k + 1.0))
        total += term
        k += 1
        if total > 1e250:
            total *= 1e-250
            term *= 1e-250
            shift += 250.0 * math.log(10.0)
        if term <= total * 1e-18 and (k + 1.0) * (nu + k + 1.0) > q:
            break
    return nu * math.log(0.5 * kappa) - math.lgamma(nu + 1.0) + math.log(total) + shift


def _log_iv_large_argument(nu: float, kappa: float) -> float:
    """Hankel expansion for kappa well beyond nu^2; alternating, truncated
    at the smallest term."""
    mu4 = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    for k in range(40):
        factor = -(mu4 - (2.0 * k + 1.0) ** 2) / (8.0 * kappa * (k + 1.0))
        nxt = term * factor
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return kappa - 0.5 * math.log(2.0 * math.pi * kappa) + math.log(total)


def log_bessel_iv(nu: float, kappa: float) -> float:
    """log of the modified Bessel function I_nu(kappa), nu >= 0, kappa > 0."""
    if nu < 0 or not math.isfinite(nu):
        raise ValueError(f"order must be finite and nonnegative, got {nu}")
    if kappa <= 0 or not math.isfinite(kappa):
        raise ValueError(f"argument must be finite and positive, got {kappa}")
    if nu >= _NU_UNIFORM:
        return _log_iv_uniform(nu, kappa)
    if kappa <= _KAPPA_SERIES:
        return _log_iv_series(nu, kappa)
    return _log_iv_large_argument(nu, kappa)


def vmf_log_normalizer(dims: int, kappa: float) -> float:
    """log C_d(kappa) of the vMF density on the (dims-1)-sphere."""
    if dims < 2:
        raise ValueError("need at least two dimensions")
    if kappa <= 0:
        raise ValueError("concentration must be positive")
    half = dims / 2.0
    return (half - 1.0) * math.log(kappa) - half * math.log(2.0 * math.pi) - log_bessel_iv(
        half - 1.0, kappa
    )


@dataclass(frozen=True)
class VmfParams:
    """Fitted mean direction, concentration, and mean resultant length."""

    mu: np.ndarray
    kappa: float
    resultant_length: float
    dims: int
    degenerate: bool = False


def fit_vmf(normalized: EmbeddingMatrix) -> VmfParams:
    """Fit a vMF distribution to unit-norm rows.

    A resultant length below 1e-12 means no preferred direction; the fit is
    returned with kappa = 0 and the degenerate flag instead of an error.  A
    resultant length at 1 (all rows identical) has unbounded concentration
    and raises.
    """
    data = np.asarray(normalized.data, dtype=np.float64)
    if data.shape[0] < 2:
        raise ValueError("need at least two rows to fit a direction distribution")
    norms = np.linalg.norm(data, axis=1)
    if np.abs(norms - 1.0).max() > 1e-6:
        raise ValueError("rows must be unit-normalized before fitting")
    mean = data.mean(axis=0)
    ell = float(np.linalg.norm(mean))
    d = data.shape[1]
    if ell < 1e-12:
        return VmfParams(
            mu=np.zeros(d), kappa=0.0, resultant_length=ell, dims=d, degenerate=True
        )
    if ell > 1.0 - 1e-12:
        raise ValueError(
            f"concentration overflow: resultant length {ell} leaves kappa unbounded"
        )
    kappa = ell * (d - ell * ell) / (1.0 - ell * ell)
    return VmfParams(
        mu=mean / ell, kappa=kappa, resultant_length=ell, dims=d, degenerate=False
    )


def ldr_from_params(
    source: VmfParams,
    target: VmfParams,
    points: np.ndarray,
    include_normalizer: bool = True,
) -> np.ndarray:
    """log p_target(x) - log p_source(x) at unit-norm points (row-wise)."""
    if source.degenerate or target.degenerate:
        raise ValueError("log-density ratio undefined for a degenerate fit")
    points = np.asarray(points, dtype=np.float64)
    scores = target.kappa * (points @ target.mu) - source.kappa * (points @ source.mu)
    if include_normalizer:
        scores = scores + (
            vmf_log_normalizer(target.dims, target.kappa)
            - vmf_log_normalizer(source.dims, source.kappa)
        )
    return scores


def ldr_scores(
    u: EmbeddingMatrix,
    v: EmbeddingMatrix,
    include_normalizer: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Log-density ratio of the modern vs old fitted vMF densities.

    Both matrices are normalized row-wise first; the ratio is evaluated at
    every normalized old and modern embedding.  Without the normalizer term
    the scores shift by a per-word constant, which cancels in downstream
    mean-difference and variance-ratio metrics.
    """
    if u.dims != v.dims:
        raise ValueError(f"dimension mismatch: {u.dims} vs {v.dims}")
    un = normalize_rows(u)
    vn = normalize_rows(v)
    source = fit_vmf(un)
    target = fit_vmf(vn)
    return (
        ldr_from_params(source, target, un.data, include_normalizer),
        ldr_from_params(source, target, vn.data, include_normalizer),
    )
