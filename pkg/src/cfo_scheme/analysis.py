"""Closed-form error model for two-moment phase-difference CFO estimators.

For an estimator that compares two noisy copies of a symbol taken ``delta_t``
apart, with effective SNR ``snr_e`` after its internal averaging, the estimate
has variance

    (1 / (2*pi*delta_t))**2 * (1/snr_e + 1/(2*snr_e**2)) / cos(2*pi*f_e*delta_t)**4

and the decoding criterion requires the confidence bound
``q_inv(p_e/2) * std`` (taken with the cosine factor set to 1) to stay below
the largest tolerable frequency error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

SOLVER_TOL_DB = 1e-6


@dataclass(frozen=True)
class ErrorModelInput:
    snr_e: float
    delta_t_s: float
    f_e_hz: float = 0.0

    def __post_init__(self):
        if not self.snr_e > 0:
            raise DomainError("snr_e must be positive")
        if not self.delta_t_s > 0:
            raise DomainError("delta_t_s must be positive")
        if abs(2 * math.pi * self.f_e_hz * self.delta_t_s) >= math.pi / 2:
            raise DomainError("|2*pi*f_e*delta_t| must stay below pi/2")


@dataclass(frozen=True)
class CriterionInput:
    p_e: float
    delta_fmax_hz: float
    delta_t_s: float
    snr_e: float

    def __post_init__(self):
        _check_probability(self.p_e)
        if not self.delta_fmax_hz > 0:
            raise DomainError("delta_fmax_hz must be positive")
        ErrorModelInput(self.snr_e, self.delta_t_s)

    def satisfied(self) -> bool:
        return max_error_at_confidence(self.p_e, self.delta_t_s, self.snr_e) <= self.delta_fmax_hz


def _check_probability(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")


def q_func(x: float) -> float:
    """Gaussian upper-tail probability."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inv(p: float) -> float:
    """Inverse of :func:`q_func` by bisection, accurate to 1e-12 in ``x``."""
    _check_probability(p)
    lo, hi = -40.0, 40.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if q_func(mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _noise_term(snr_e: float) -> float:
    return 1.0 / (2.0 * snr_e**2) + 1.0 / snr_e


def cfo_variance(model: ErrorModelInput) -> float:
    """Variance of the CFO estimate in Hz**2."""
    scale = 1.0 / (2.0 * math.pi * model.delta_t_s)
    cos_term = math.cos(2.0 * math.pi * model.f_e_hz * model.delta_t_s)
    return scale**2 * _noise_term(model.snr_e) / cos_term**4


def cfo_std(snr_e: float, delta_t_s: float, f_e_hz: float = 0.0) -> float:
    return math.sqrt(cfo_variance(ErrorModelInput(snr_e, delta_t_s, f_e_hz)))


def max_error_at_confidence(p_e: float, delta_t_s: float, snr_e: float) -> float:
    """Smallest tolerable error that the estimator meets with probability ``1 - p_e``."""
    _check_probability(p_e)
    return q_inv(p_e / 2.0) * cfo_std(snr_e, delta_t_s)


def min_snr_for_target(p_e: float, delta_fmax_hz: float, delta_t_s: float) -> float:
    """Smallest linear effective SNR for which the criterion holds."""
    CriterionInput(p_e, delta_fmax_hz, delta_t_s, 1.0)

    def ok(snr_db: float) -> bool:
        return max_error_at_confidence(p_e, delta_t_s, 10 ** (snr_db / 10)) <= delta_fmax_hz

    lo, hi = -100.0, 100.0
    while not ok(hi):
        lo, hi = hi, hi * 2
    while hi - lo > SOLVER_TOL_DB:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return 10 ** (hi / 10)


def effective_snr(raw_snr: float, n_pairs: int) -> float:
    """Coherent combining gain over ``n_pairs`` correlated pairs."""
    if not raw_snr > 0 or n_pairs < 1:
        raise DomainError("raw_snr must be positive and n_pairs >= 1")
    return n_pairs * raw_snr


def product_effective_snr(raw_snr: float, n_pairs: int) -> float:
    """Effective SNR of a sum of ``n_pairs`` pairwise products ``conj(r1) r2``.

    Summing products (CP and pilot estimators) keeps a noise-times-noise term
    of variance ``1/(2 M raw**2)`` instead of ``1/(2 (M raw)**2)``.  The
    returned ``snr_e`` makes the two-moment variance match that to second
    order; it approaches ``effective_snr`` at high raw SNR.
    """
    if not raw_snr > 0 or n_pairs < 1:
        raise DomainError("raw_snr must be positive and n_pairs >= 1")
    target = 1.0 / (n_pairs * raw_snr) + 1.0 / (2.0 * n_pairs * raw_snr**2)
    inv = math.sqrt(1.0 + 2.0 * target) - 1.0
    return 1.0 / inv


def estimation_range(delta_t_s: float) -> float:
    if not delta_t_s > 0:
        raise DomainError("delta_t_s must be positive")
    return 1.0 / (2.0 * delta_t_s)


def qpsk_fmax(scs_hz: float, n_symbols: int) -> float:
    """Tolerable CFO for QPSK over ``n_symbols`` symbols, ``scs / (2 * n * 8)``."""
    if not scs_hz > 0 or n_symbols < 1:
        raise DomainError("scs_hz and n_symbols must be positive")
    return scs_hz / (2 * n_symbols * 8)


def qpsk_fmax_phase_margin(scs_hz: float, n_symbols: int) -> float:
    """Offset whose rotation reaches pi/4 after ``n_symbols`` CP-less symbols."""
    if not scs_hz > 0 or n_symbols < 1:
        raise DomainError("scs_hz and n_symbols must be positive")
    return (math.pi / 4) / (2 * math.pi * n_symbols / scs_hz)
