"""Two-step CFO estimation and compensation for a PBCH-like block.

Step one estimates a wide-range coarse offset from the cyclic prefix and
removes it in the time domain.  Step two demodulates, estimates the remaining
offset from two pilot-bearing symbols, removes it in the time domain as well,
and demodulates again.  Symbol timing is assumed known (block starts at
sample 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import analysis
from .errors import StageDisabled, ZeroCorrelation
from .estimators import CfoEstimate, compensate, estimate_cp, estimate_pilot
from .waveform import Numerology, PilotLayout, ResourceGrid, TimeSignal, ofdm_demodulate

MODES = {
    "two_step": (True, True),
    "coarse_only": (True, False),
    "residual_only": (False, True),
}


@dataclass(frozen=True)
class TwoStepConfig:
    numerology: Numerology
    pilot_layout: PilotLayout
    n_symbols: int = 5
    enable_coarse: bool = True
    enable_residual: bool = True

    def __post_init__(self):
        if not (self.enable_coarse or self.enable_residual):
            raise ValueError("at least one stage must be enabled")
        if self.pilot_layout.pilot_symbol_indices[1] >= self.n_symbols:
            raise ValueError("pilot symbols fall outside the block")
        if max(self.pilot_layout.pilot_subcarriers) >= self.numerology.n_fft:
            raise ValueError("pilot subcarrier beyond n_fft")

    @classmethod
    def for_mode(cls, mode: str, numerology: Numerology, layout: PilotLayout, n_symbols: int = 5):
        coarse, residual = MODES[mode]
        return cls(numerology, layout, n_symbols, coarse, residual)


@dataclass(frozen=True)
class TwoStepResult:
    f_coarse_hz: float | None
    f_residual_hz: float | None
    f_total_hz: float
    compensated_grid: ResourceGrid
    diagnostics: dict[str, CfoEstimate] = field(default_factory=dict)
    skipped: tuple[str, ...] = ()


def run_two_step(
    signal: TimeSignal, cfg: TwoStepConfig, pilots: dict[tuple[int, int], complex]
) -> TwoStepResult:
    num = cfg.numerology
    diagnostics = {}
    skipped = []
    f_coarse = f_residual = None

    if cfg.enable_coarse:
        est = estimate_cp(signal, num, cfg.n_symbols)
        diagnostics["coarse"] = est
        f_coarse = est.f_hat_hz
        signal = compensate(signal, f_coarse)

    grid = ofdm_demodulate(signal, num, cfg.n_symbols)

    if cfg.enable_residual:
        try:
            est = estimate_pilot(grid, cfg.pilot_layout, pilots, num)
        except ZeroCorrelation:
            skipped.append("residual")
        else:
            diagnostics["residual"] = est
            f_residual = est.f_hat_hz
            grid = ofdm_demodulate(compensate(signal, f_residual), num, cfg.n_symbols)

    total = (f_coarse or 0.0) + (f_residual or 0.0)
    return TwoStepResult(f_coarse, f_residual, total, grid, diagnostics, tuple(skipped))


def residual_delta_t(cfg: TwoStepConfig) -> float:
    return cfg.pilot_layout.symbol_spacing * cfg.numerology.symbol_duration_s


def per_subcarrier_snr(numerology: Numerology, raw_snr: float) -> float:
    """Per-resource-element SNR for a unit-power grid over the occupied band.

    Channel SNR is set against the time-domain power, which is
    ``n_used / n_fft`` for a fully loaded grid of unit-magnitude symbols.
    """
    return raw_snr * numerology.n_fft / numerology.n_used


def predict_final_error_std(cfg: TwoStepConfig, raw_snr: float) -> float:
    """Model std (Hz) of ``f_e - f_total`` after both stages.

    ``raw_snr`` is the linear per-sample channel SNR.  Valid while the coarse
    error rarely leaves the residual estimator's range.
    """
    if not (cfg.enable_coarse and cfg.enable_residual):
        raise StageDisabled("prediction needs both stages enabled")
    return _pilot_std(cfg, raw_snr)


def _pilot_std(cfg: TwoStepConfig, raw_snr: float) -> float:
    m = len(cfg.pilot_layout.pilot_subcarriers)
    snr_e = analysis.product_effective_snr(per_subcarrier_snr(cfg.numerology, raw_snr), m)
    return analysis.cfo_std(snr_e, residual_delta_t(cfg))


def predict_coarse_error_std(cfg: TwoStepConfig, raw_snr: float) -> float:
    """Model std (Hz) of the CP estimate over the whole block."""
    delta_t = cfg.numerology.n_fft / cfg.numerology.sample_rate_hz
    snr_e = analysis.product_effective_snr(raw_snr, cfg.n_symbols * cfg.numerology.cp_len)
    return analysis.cfo_std(snr_e, delta_t)


def predict_mode_std(mode: str, cfg: TwoStepConfig, raw_snr: float) -> float:
    if math.isinf(raw_snr):
        return 0.0
    if mode == "coarse_only":
        return predict_coarse_error_std(cfg, raw_snr)
    return _pilot_std(cfg, raw_snr)
