"""OFDM dimensioning, transmit waveforms, and time/frequency conversion.

Subcarrier indices are FFT bin indices in natural order (bin ``k`` sits at
``k * scs_hz`` for ``k < n_fft / 2`` and at ``(k - n_fft) * scs_hz`` above).
Both transforms use unitary scaling, so symbol energy is the same in either
domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import max_len_seq

from .errors import InsufficientSamples

QPSK_SCALE = math.sqrt(0.5)


@dataclass(frozen=True)
class Numerology:
    scs_hz: float
    n_fft: int
    cp_len: int
    n_used: int | None = None

    def __post_init__(self):
        if self.n_fft < 8 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two >= 8, got {self.n_fft}")
        if not 0 <= self.cp_len < self.n_fft:
            raise ValueError(f"cp_len must be in [0, n_fft), got {self.cp_len}")
        if not self.scs_hz > 0:
            raise ValueError("scs_hz must be positive")
        if self.n_used is None:
            # 72 of 128 bins, the LTE 1.4 MHz occupancy ratio
            object.__setattr__(self, "n_used", 2 * ((9 * self.n_fft) // 32))
        if not 2 <= self.n_used < self.n_fft:
            raise ValueError(f"n_used must be in [2, n_fft), got {self.n_used}")

    @property
    def sample_rate_hz(self) -> float:
        return self.scs_hz * self.n_fft

    @property
    def symbol_len(self) -> int:
        """Samples per OFDM symbol including the cyclic prefix."""
        return self.n_fft + self.cp_len

    @property
    def symbol_duration_s(self) -> float:
        return self.symbol_len / self.sample_rate_hz

    def occupied_subcarriers(self) -> np.ndarray:
        """Centered occupied bins without DC, in ascending frequency order."""
        n_pos = self.n_used // 2
        n_neg = self.n_used - n_pos
        neg = np.arange(self.n_fft - n_neg, self.n_fft)
        pos = np.arange(1, n_pos + 1)
        return np.concatenate([neg, pos])


LTE_1M4 = Numerology(scs_hz=15_000.0, n_fft=128, cp_len=9)


def _frozen_complex(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSignal:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = _frozen_complex(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("TimeSignal needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("TimeSignal samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples) -> TimeSignal:
        return TimeSignal(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class ResourceGrid:
    """Frequency-domain symbols indexed ``[ofdm_symbol, subcarrier]``."""

    symbols: np.ndarray
    numerology: Numerology

    def __post_init__(self):
        symbols = _frozen_complex(self.symbols)
        if symbols.ndim != 2:
            raise ValueError("ResourceGrid symbols must be 2-D")
        if symbols.shape[1] > self.numerology.n_fft:
            raise ValueError("more subcarriers than n_fft")
        if not np.all(np.isfinite(symbols)):
            raise ValueError("ResourceGrid values must be finite")
        object.__setattr__(self, "symbols", symbols)

    @property
    def n_symbols(self) -> int:
        return self.symbols.shape[0]


@dataclass(frozen=True)
class PilotLayout:
    pilot_symbol_indices: tuple[int, int]
    pilot_subcarriers: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        syms = tuple(int(s) for s in self.pilot_symbol_indices)
        scs = tuple(int(k) for k in self.pilot_subcarriers)
        if len(syms) != 2 or not 0 <= syms[0] < syms[1]:
            raise ValueError(f"need two distinct ordered pilot symbols, got {syms}")
        if not scs or len(set(scs)) != len(scs) or min(scs) < 0:
            raise ValueError("pilot subcarriers must be distinct non-negative bins")
        object.__setattr__(self, "pilot_symbol_indices", syms)
        object.__setattr__(self, "pilot_subcarriers", scs)

    @property
    def symbol_spacing(self) -> int:
        return self.pilot_symbol_indices[1] - self.pilot_symbol_indices[0]


def default_pilot_layout(
    numerology: Numerology = LTE_1M4,
    symbols: tuple[int, int] = (0, 4),
    spacing: int = 6,
    seed: int = 0,
) -> PilotLayout:
    """CRS-like layout: every ``spacing``-th occupied subcarrier, two symbols 4 apart."""
    occupied = numerology.occupied_subcarriers()
    return PilotLayout(symbols, tuple(int(k) for k in occupied[::spacing]), seed)


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-magnitude QPSK; ``bits`` has even length."""
    b = np.asarray(bits, dtype=np.int8).reshape(-1, 2)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) * QPSK_SCALE


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    s = np.asarray(symbols)
    bits = np.empty((s.size, 2), dtype=np.int8)
    bits[:, 0] = s.real < 0
    bits[:, 1] = s.imag < 0
    return bits.reshape(-1)


def make_preamble(numerology: Numerology, seed: int) -> TimeSignal:
    """Half-periodic m-sequence preamble of ``n_fft`` samples and unit power.

    The +-1 sequence of length ``n_fft/2 - 1`` fills every even non-DC bin, so
    the time-domain waveform repeats exactly after ``n_fft/2`` samples.  The
    seed selects the LFSR start state.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    n = numerology.n_fft
    nbits = int(math.log2(n)) - 1
    period = (1 << nbits) - 1
    state_int = seed % period + 1
    state = np.array([(state_int >> i) & 1 for i in range(nbits)], dtype=np.int8)
    seq, _ = max_len_seq(nbits, state=state)
    chips = 1.0 - 2.0 * seq
    # seeds beyond one period flip the polarity of alternate chips so they stay distinct
    if (seed // period) % 2:
        chips[1::2] *= -1

    freq = np.zeros(n, dtype=np.complex128)
    half = n // 2
    even_bins = [(2 * j) % n for j in range(-(half // 2), half // 2) if j != 0]
    freq[even_bins] = chips
    samples = np.fft.ifft(freq, norm="ortho")
    samples /= math.sqrt(np.mean(np.abs(samples) ** 2))
    return TimeSignal(samples, numerology.sample_rate_hz)


def make_pilot_sequence(layout: PilotLayout) -> dict[tuple[int, int], complex]:
    """Seeded QPSK pilot values keyed by ``(symbol_index, subcarrier)``."""
    rng = np.random.default_rng(layout.seed)
    pilots = {}
    for sym in layout.pilot_symbol_indices:
        bits = rng.integers(0, 2, size=2 * len(layout.pilot_subcarriers))
        for sc, value in zip(layout.pilot_subcarriers, qpsk_map(bits)):
            pilots[(sym, sc)] = complex(value)
    return pilots


def ofdm_modulate(grid: ResourceGrid) -> TimeSignal:
    num = grid.numerology
    full = np.zeros((grid.n_symbols, num.n_fft), dtype=np.complex128)
    full[:, : grid.symbols.shape[1]] = grid.symbols
    body = np.fft.ifft(full, axis=1, norm="ortho")
    with_cp = np.concatenate([body[:, num.n_fft - num.cp_len :], body], axis=1)
    return TimeSignal(with_cp.reshape(-1), num.sample_rate_hz)


def ofdm_demodulate(signal: TimeSignal, numerology: Numerology, n_symbols: int) -> ResourceGrid:
    need = n_symbols * numerology.symbol_len
    if len(signal) < need:
        raise InsufficientSamples(f"need {need} samples for {n_symbols} symbols, got {len(signal)}")
    blocks = signal.samples[:need].reshape(n_symbols, numerology.symbol_len)
    body = blocks[:, numerology.cp_len :]
    return ResourceGrid(np.fft.fft(body, axis=1, norm="ortho"), numerology)
