"""Flat static channel: carrier frequency offset, phase/gain, and AWGN.

Positive ``cfo_hz`` advances the phase of the received signal,
``r[n] = s[n] * exp(j*2*pi*cfo_hz*n/fs)``, and every estimator in
:mod:`cfo_scheme.estimators` reports a positive offset for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroPowerSignal
from .waveform import TimeSignal

NO_NOISE = math.inf


@dataclass(frozen=True)
class ChannelConfig:
    cfo_hz: float = 0.0
    phase_rad: float = 0.0
    gain: float = 1.0
    snr_db: float = NO_NOISE
    seed: int = 0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        if not math.isfinite(self.cfo_hz):
            raise ValueError("cfo_hz must be finite")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError("snr_db must be finite or +inf (no noise)")


def apply_cfo(signal: TimeSignal, cfo_hz: float, start_phase_rad: float = 0.0) -> TimeSignal:
    n = np.arange(len(signal))
    phase = 2 * np.pi * cfo_hz * n / signal.sample_rate_hz + start_phase_rad
    return signal.with_samples(signal.samples * np.exp(1j * phase))


def apply_awgn(signal: TimeSignal, snr_db: float, seed: int) -> TimeSignal:
    """Add complex Gaussian noise at ``snr_db`` relative to the measured signal power.

    ``snr_db = math.inf`` returns the input unchanged.
    """
    if snr_db == math.inf:
        return signal
    power = signal.power()
    if power == 0.0:
        raise ZeroPowerSignal("cannot set an SNR against a zero-power signal")
    sigma2 = power / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((len(signal), 2)) @ np.array([1.0, 1j])
    return signal.with_samples(signal.samples + math.sqrt(sigma2 / 2) * noise)


def transmit(signal: TimeSignal, cfg: ChannelConfig) -> TimeSignal:
    scaled = signal.with_samples(signal.samples * (cfg.gain * np.exp(1j * cfg.phase_rad)))
    return apply_awgn(apply_cfo(scaled, cfg.cfo_hz), cfg.snr_db, cfg.seed)
