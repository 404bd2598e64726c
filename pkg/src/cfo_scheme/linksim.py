"""Monte Carlo link simulation: estimator trials, PBCH-like block decoding, sweeps.

Every trial draws its randomness from ``SeedSequence([seed, trial_index])``,
so results do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence, TypeVar

import numpy as np
from scipy import stats

from . import analysis
from .channel import NO_NOISE, ChannelConfig, transmit
from .errors import MissingPilots, TooFewSamples
from .estimators import (
    EstimatorSpec,
    estimate_cp,
    estimate_pilot,
    estimate_preamble,
    pilot_channel_estimates,
)
from .scheme import TwoStepConfig, per_subcarrier_snr, predict_mode_std, run_two_step
from .waveform import (
    LTE_1M4,
    Numerology,
    PilotLayout,
    ResourceGrid,
    default_pilot_layout,
    make_pilot_sequence,
    make_preamble,
    ofdm_demodulate,
    ofdm_modulate,
    qpsk_demap,
    qpsk_map,
)

T = TypeVar("T")

DEFAULT_THRESHOLD_HZ = 300.0


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial_index]))


def map_trials(fn: Callable[[int], T], trials: int, workers: int = 1) -> list[T]:
    """Run ``fn`` over trial indices, returning results in index order."""
    if workers <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


@lru_cache(maxsize=32)
def known_pilots(layout: PilotLayout) -> dict[tuple[int, int], complex]:
    """Cached pilot map; callers must not mutate it."""
    return make_pilot_sequence(layout)


def snr_linear(snr_db: float) -> float:
    return math.inf if snr_db == math.inf else 10 ** (snr_db / 10)


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    cfo_hz: float
    mode: str
    mean_err_hz: float
    std_err_hz: float
    model_std_hz: float
    p_exceed: float
    decode_rate: float
    ci_lo: float
    ci_hi: float
    trials: int


@dataclass(frozen=True)
class SweepSummary:
    rows: tuple[SweepRow, ...]
    threshold_hz: float = DEFAULT_THRESHOLD_HZ

    def by_snr(self) -> dict[float, SweepRow]:
        return {row.snr_db: row for row in self.rows}


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = stats.binomtest(successes, trials).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _error_stats(errors: np.ndarray, threshold_hz: float) -> tuple[float, float, float]:
    return (
        float(np.mean(errors)),
        float(np.std(errors, ddof=1)) if errors.size > 1 else 0.0,
        float(np.mean(np.abs(errors) > threshold_hz)),
    )


# --------------------------------------------------------------------------
# Estimator trials


def _random_qpsk_grid(rng, numerology: Numerology, n_symbols: int) -> np.ndarray:
    occupied = numerology.occupied_subcarriers()
    grid = np.zeros((n_symbols, numerology.n_fft), dtype=np.complex128)
    bits = rng.integers(0, 2, size=2 * n_symbols * occupied.size)
    grid[:, occupied] = qpsk_map(bits).reshape(n_symbols, -1)
    return grid


def model_std_for(spec: EstimatorSpec, numerology: Numerology, cfo_hz: float, snr_db: float) -> float:
    """Two-moment model std of an estimator at raw per-sample SNR ``snr_db``."""
    if snr_db == math.inf:
        return 0.0
    raw = snr_linear(snr_db)
    if spec.kind == "preamble":
        snr_e = analysis.effective_snr(raw, spec.n_pairs)
    elif spec.kind == "cp":
        snr_e = analysis.product_effective_snr(raw, spec.n_pairs)
    else:
        snr_e = analysis.product_effective_snr(per_subcarrier_snr(numerology, raw), spec.n_pairs)
    try:
        return analysis.cfo_std(snr_e, spec.delta_t_s, cfo_hz)
    except analysis.DomainError:
        return math.nan


def raw_snr_db_for_effective(spec: EstimatorSpec, numerology: Numerology, snr_e_db: float) -> float:
    """Raw per-sample SNR (dB) at which ``spec`` reaches effective SNR ``snr_e_db``."""
    snr_e = 10 ** (snr_e_db / 10)
    if spec.kind == "preamble":
        return snr_e_db - 10 * math.log10(spec.n_pairs)
    # the product mapping is monotone in raw SNR; invert it numerically
    scale = numerology.n_fft / numerology.n_used if spec.kind == "pilot" else 1.0
    lo, hi = -60.0, 80.0
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if analysis.product_effective_snr(scale * 10 ** (mid / 10), spec.n_pairs) < snr_e:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_estimator_trials(
    spec: EstimatorSpec,
    numerology: Numerology,
    cfo_hz: float,
    snr_db: float,
    trials: int,
    seed: int,
    workers: int = 1,
    threshold_hz: float = DEFAULT_THRESHOLD_HZ,
) -> tuple[np.ndarray, SweepRow]:
    """Estimate a known offset ``trials`` times; returns the estimates and a summary row.

    ``snr_db`` is the raw per-sample channel SNR.  CP and pilot trials carry
    random QPSK data on every occupied subcarrier.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    preamble = make_preamble(numerology, 0)
    layout = spec.pilot_layout

    def one(i: int) -> float:
        rng = trial_rng(seed, i)
        noise_seed = int(rng.integers(2**63))
        phase = float(rng.uniform(-math.pi, math.pi))
        # pilot values change every trial, as reference signals change every slot
        if layout is not None:
            layout_i = replace(layout, seed=int(rng.integers(2**31)))
            pilots = make_pilot_sequence(layout_i)
        cfg = ChannelConfig(cfo_hz=cfo_hz, phase_rad=phase, snr_db=snr_db, seed=noise_seed)
        if spec.kind == "preamble":
            return estimate_preamble(transmit(preamble, cfg), preamble).f_hat_hz
        grid = _random_qpsk_grid(rng, numerology, spec.n_symbols)
        if spec.kind == "pilot":
            for (s, k), v in pilots.items():
                grid[s, k] = v
        rx = transmit(ofdm_modulate(ResourceGrid(grid, numerology)), cfg)
        if spec.kind == "cp":
            return estimate_cp(rx, numerology, spec.n_symbols).f_hat_hz
        rx_grid = ofdm_demodulate(rx, numerology, spec.n_symbols)
        return estimate_pilot(rx_grid, layout_i, pilots, numerology).f_hat_hz

    samples = np.array(map_trials(one, trials, workers))
    mean, std, p_exceed = _error_stats(samples - cfo_hz, threshold_hz)
    row = SweepRow(
        snr_db, cfo_hz, spec.kind, mean, std,
        model_std_for(spec, numerology, cfo_hz, snr_db), p_exceed,
        math.nan, math.nan, math.nan, trials,
    )
    return samples, row


# --------------------------------------------------------------------------
# PBCH-like block decoding


@dataclass(frozen=True)
class TrialConfig:
    numerology: Numerology = LTE_1M4
    pilot_layout: PilotLayout = field(default_factory=default_pilot_layout)
    block_symbols: int = 4
    payload_bits: int = 24
    repetition: int = 23
    cfo_hz: float = 0.0
    snr_db: float = NO_NOISE
    scheme_mode: str = "two_step"
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.repetition < 1 or self.repetition % 2 == 0:
            raise ValueError("repetition must be an odd count >= 1")
        if self.scheme_mode not in ("two_step", "coarse_only", "residual_only"):
            raise ValueError(f"unknown scheme mode {self.scheme_mode!r}")
        capacity = 2 * data_positions(self.numerology, self.pilot_layout, self.block_symbols)[0].size
        if self.payload_bits < 1 or self.payload_bits * self.repetition > capacity:
            raise ValueError(
                f"{self.payload_bits} bits x {self.repetition} exceeds {capacity} coded bits"
            )

    @property
    def n_symbols(self) -> int:
        """Symbols transmitted: the payload block plus any trailing pilot symbol."""
        return max(self.block_symbols, self.pilot_layout.pilot_symbol_indices[1] + 1)

    def scheme_config(self) -> TwoStepConfig:
        return TwoStepConfig.for_mode(self.scheme_mode, self.numerology, self.pilot_layout, self.n_symbols)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    f_coarse_hz: float | None
    f_residual_hz: float | None
    final_error_hz: float
    bit_errors: int
    decode_ok: bool


def data_positions(
    numerology: Numerology, layout: PilotLayout, block_symbols: int
) -> tuple[np.ndarray, np.ndarray]:
    """Payload resource elements (symbol, subcarrier), symbol-major, pilots excluded."""
    pilot_res = {(s, k) for s in layout.pilot_symbol_indices for k in layout.pilot_subcarriers}
    occupied = numerology.occupied_subcarriers()
    pos = [(s, int(k)) for s in range(block_symbols) for k in occupied if (s, int(k)) not in pilot_res]
    arr = np.array(pos, dtype=int).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def encode_block(info_bits: np.ndarray, repetition: int) -> np.ndarray:
    """Round-robin repetition so each bit's copies spread over the whole block."""
    return np.tile(np.asarray(info_bits, dtype=np.int8), repetition)


def build_block_grid(cfg: TrialConfig, info_bits: np.ndarray, rng) -> ResourceGrid:
    grid = _random_qpsk_grid(rng, cfg.numerology, cfg.n_symbols)
    syms, scs = data_positions(cfg.numerology, cfg.pilot_layout, cfg.block_symbols)
    coded = encode_block(info_bits, cfg.repetition)
    grid[syms[: coded.size // 2], scs[: coded.size // 2]] = qpsk_map(coded)
    for (s, k), v in known_pilots(cfg.pilot_layout).items():
        grid[s, k] = v
    return ResourceGrid(grid, cfg.numerology)


def decode_block(
    grid: ResourceGrid,
    pilots: dict[tuple[int, int], complex],
    layout: PilotLayout,
    payload_bits: int,
    repetition: int,
    reference_bits: np.ndarray,
    block_symbols: int = 4,
) -> tuple[np.ndarray, int, bool]:
    """Pilot-equalized QPSK hard decisions and a majority vote over repetitions."""
    if grid.n_symbols < block_symbols:
        raise MissingPilots("grid is shorter than the payload block")
    gain = np.mean(pilot_channel_estimates(grid, layout, pilots))
    syms, scs = data_positions(grid.numerology, layout, block_symbols)
    n_re = payload_bits * repetition // 2 + (payload_bits * repetition) % 2
    eq = grid.symbols[syms[:n_re], scs[:n_re]] / gain
    coded = qpsk_demap(eq)[: payload_bits * repetition]
    votes = coded.reshape(repetition, payload_bits).sum(axis=0)
    bits = (votes > repetition // 2).astype(np.int8)
    bit_errors = int(np.count_nonzero(bits != np.asarray(reference_bits, dtype=np.int8)))
    return bits, bit_errors, bit_errors == 0


def run_decode_trial(cfg: TrialConfig, trial_index: int) -> TrialRecord:
    rng = trial_rng(cfg.seed, trial_index)
    info = rng.integers(0, 2, size=cfg.payload_bits).astype(np.int8)
    noise_seed = int(rng.integers(2**63))
    phase = float(rng.uniform(-math.pi, math.pi))
    tx = ofdm_modulate(build_block_grid(cfg, info, rng))
    rx = transmit(tx, ChannelConfig(cfo_hz=cfg.cfo_hz, phase_rad=phase, snr_db=cfg.snr_db, seed=noise_seed))

    pilots = known_pilots(cfg.pilot_layout)
    result = run_two_step(rx, cfg.scheme_config(), pilots)
    _, bit_errors, ok = decode_block(
        result.compensated_grid, pilots, cfg.pilot_layout,
        cfg.payload_bits, cfg.repetition, info, cfg.block_symbols,
    )
    return TrialRecord(
        trial_index, result.f_coarse_hz, result.f_residual_hz,
        cfg.cfo_hz - result.f_total_hz, bit_errors, ok,
    )


def run_decode_trials(cfg: TrialConfig, workers: int = 1) -> list[TrialRecord]:
    return map_trials(lambda i: run_decode_trial(cfg, i), cfg.trials, workers)


def summarize_trials(
    cfg: TrialConfig, records: Sequence[TrialRecord], threshold_hz: float = DEFAULT_THRESHOLD_HZ
) -> SweepRow:
    errors = np.array([r.final_error_hz for r in records])
    successes = sum(r.decode_ok for r in records)
    mean, std, p_exceed = _error_stats(errors, threshold_hz)
    lo, hi = wilson_interval(successes, len(records))
    model = predict_mode_std(cfg.scheme_mode, cfg.scheme_config(), snr_linear(cfg.snr_db))
    return SweepRow(
        cfg.snr_db, cfg.cfo_hz, cfg.scheme_mode, mean, std, model, p_exceed,
        successes / len(records), lo, hi, len(records),
    )


def snr_grid(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive arithmetic grid ``lo, lo+step, ..., hi``."""
    if step <= 0 or hi < lo:
        raise ValueError("need step > 0 and hi >= lo")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def run_decode_sweep(
    cfg: TrialConfig,
    snr_db_grid: Sequence[float],
    workers: int = 1,
    threshold_hz: float = DEFAULT_THRESHOLD_HZ,
) -> SweepSummary:
    rows = []
    for snr_db in snr_db_grid:
        point = replace(cfg, snr_db=float(snr_db))
        rows.append(summarize_trials(point, run_decode_trials(point, workers), threshold_hz))
    return SweepSummary(tuple(rows), threshold_hz)


# --------------------------------------------------------------------------
# Histograms


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    model_density: np.ndarray

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def histogram(
    samples: np.ndarray, bin_width_hz: float, model_mean_hz: float, model_var_hz2: float
) -> Histogram:
    """Histogram with bins aligned on the model mean, plus the Gaussian model density."""
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise TooFewSamples(f"need at least 100 samples, got {x.size}")
    if not bin_width_hz > 0:
        raise ValueError("bin_width_hz must be positive")
    idx = np.floor((x - model_mean_hz) / bin_width_hz).astype(np.int64)
    first = int(idx.min())
    counts = np.bincount(idx - first)
    edges = model_mean_hz + bin_width_hz * (first + np.arange(counts.size + 1))
    centers = 0.5 * (edges[:-1] + edges[1:])
    if model_var_hz2 > 0:
        density = stats.norm.pdf(centers, model_mean_hz, math.sqrt(model_var_hz2))
    else:
        density = np.zeros_like(centers)
    return Histogram(edges, counts, density)


def chi_square_gof(
    samples: np.ndarray, mean_hz: float, std_hz: float, n_sigma: float = 3.0, bins_per_sigma: int = 4
) -> tuple[float, int, float]:
    """Chi-square test of ``samples`` against N(mean, std) on the central bins.

    Bins of width ``std / bins_per_sigma`` span ``mean +- n_sigma * std``;
    expected counts are the model probabilities times the total sample count.
    Nothing is fitted and the window total is unconstrained, so the statistic
    has one degree of freedom per bin.  Returns ``(statistic, dof, p_value)``.
    """
    x = np.asarray(samples, dtype=float)
    n_bins = int(round(2 * n_sigma * bins_per_sigma))
    edges = mean_hz + std_hz * np.linspace(-n_sigma, n_sigma, n_bins + 1)
    observed, _ = np.histogram(x, edges)
    expected = x.size * np.diff(stats.norm.cdf(edges, mean_hz, std_hz))
    statistic = float(np.sum((observed - expected) ** 2 / expected))
    dof = n_bins
    return statistic, dof, float(stats.chi2.sf(statistic, dof))
