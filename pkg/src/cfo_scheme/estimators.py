"""Phase-difference CFO estimators and compensation.

All three estimators share one core: accumulate ``conj(early) * late`` over a
set of pairs separated by ``delta_t`` seconds, take the angle of the sum, and
scale by ``1 / (2*pi*delta_t)``.  They differ only in what the pairs are:

* ``cp``: cyclic-prefix samples against the symbol tail, ``delta_t = n_fft/fs``
* ``preamble``: the two halves of a known preamble, each despread against it
* ``pilot``: per-subcarrier channel estimates at two pilot-bearing symbols
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .channel import apply_cfo
from .errors import InsufficientSamples, LengthMismatch, MissingPilots, ZeroCorrelation, ZeroInput
from .waveform import Numerology, PilotLayout, ResourceGrid, TimeSignal

EstimatorKind = Literal["cp", "preamble", "pilot"]


@dataclass(frozen=True)
class CfoEstimate:
    f_hat_hz: float
    delta_t_s: float
    range_hz: float
    corr_mag: float
    n_pairs: int


@dataclass(frozen=True)
class EstimatorSpec:
    """How one estimator is configured: its measurement interval and pair count.

    ``n_symbols`` applies to the CP estimator and ``pilot_layout`` to the pilot
    estimator; build instances with :func:`cp_spec`, :func:`preamble_spec`
    and :func:`pilot_spec`.
    """

    kind: EstimatorKind
    delta_t_s: float
    n_pairs: int
    description: str = ""
    n_symbols: int = 1
    pilot_layout: PilotLayout | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("cp", "preamble", "pilot"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if not self.delta_t_s > 0:
            raise ValueError("delta_t_s must be positive")
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if self.kind == "pilot" and self.pilot_layout is None:
            raise ValueError("pilot estimator needs a pilot_layout")

    @property
    def range_hz(self) -> float:
        return 1.0 / (2.0 * self.delta_t_s)


def cp_spec(numerology: Numerology, n_symbols: int = 1) -> EstimatorSpec:
    return EstimatorSpec(
        "cp",
        numerology.n_fft / numerology.sample_rate_hz,
        n_symbols * numerology.cp_len,
        f"CP correlation over {n_symbols} symbol(s)",
        n_symbols=n_symbols,
    )


def preamble_spec(numerology: Numerology) -> EstimatorSpec:
    half = numerology.n_fft // 2
    return EstimatorSpec("preamble", half / numerology.sample_rate_hz, half, "preamble half correlation")


def pilot_spec(numerology: Numerology, layout: PilotLayout) -> EstimatorSpec:
    return EstimatorSpec(
        "pilot",
        layout.symbol_spacing * numerology.symbol_duration_s,
        len(layout.pilot_subcarriers),
        f"pilot phase change over {layout.symbol_spacing} symbols",
        n_symbols=layout.pilot_symbol_indices[1] + 1,
        pilot_layout=layout,
    )


def phase_diff(r1: complex, r2: complex) -> float:
    """Principal angle of ``conj(r1) * r2`` in ``(-pi, pi]``."""
    if r1 == 0 or r2 == 0:
        raise ZeroInput("phase difference of a zero sample is undefined")
    angle = cmath.phase(r1.conjugate() * r2)
    return math.pi if angle == -math.pi else angle


def _from_correlation(corr: complex, delta_t_s: float, n_pairs: int) -> CfoEstimate:
    corr = complex(corr)
    if corr == 0:
        raise ZeroCorrelation("accumulated correlation is exactly zero")
    range_hz = 1.0 / (2.0 * delta_t_s)
    # angle/pi keeps |f_hat| <= range_hz without rounding past it
    f_hat = range_hz * (phase_diff(1.0, corr) / math.pi)
    return CfoEstimate(f_hat, delta_t_s, range_hz, abs(corr), n_pairs)


def estimate_cp(signal: TimeSignal, numerology: Numerology, n_symbols: int) -> CfoEstimate:
    n, cp = numerology.n_fft, numerology.cp_len
    need = n_symbols * numerology.symbol_len
    if n_symbols < 1 or len(signal) < need:
        raise InsufficientSamples(f"need {need} samples for {n_symbols} symbols, got {len(signal)}")
    if cp == 0:
        raise InsufficientSamples("numerology has no cyclic prefix to correlate")
    blocks = signal.samples[:need].reshape(n_symbols, numerology.symbol_len)
    corr = np.sum(np.conj(blocks[:, :cp]) * blocks[:, n : n + cp])
    return _from_correlation(corr, n / signal.sample_rate_hz, n_symbols * cp)


def estimate_preamble(signal: TimeSignal, reference: TimeSignal) -> CfoEstimate:
    if len(signal) != len(reference):
        raise LengthMismatch(f"received {len(signal)} samples, reference has {len(reference)}")
    half = len(reference) // 2
    despread = signal.samples * np.conj(reference.samples)
    first = np.sum(despread[:half])
    second = np.sum(despread[half : 2 * half])
    return _from_correlation(np.conj(first) * second, half / signal.sample_rate_hz, half)


def pilot_channel_estimates(
    grid: ResourceGrid, layout: PilotLayout, pilots: dict[tuple[int, int], complex]
) -> np.ndarray:
    """Least-squares channel ``Y / X`` at each pilot, shape ``(2, n_pilots)``."""
    s1, s2 = layout.pilot_symbol_indices
    sc = list(layout.pilot_subcarriers)
    if s2 >= grid.n_symbols or max(sc) >= grid.symbols.shape[1]:
        raise MissingPilots("grid does not contain every pilot position of the layout")
    try:
        tx = np.array([[pilots[(s, k)] for k in sc] for s in (s1, s2)])
    except KeyError as exc:
        raise MissingPilots(f"no known pilot value for {exc.args[0]}") from None
    if np.any(tx == 0):
        raise MissingPilots("pilot values must be nonzero")
    return grid.symbols[[s1, s2]][:, sc] / tx


def estimate_pilot(
    grid: ResourceGrid,
    layout: PilotLayout,
    pilots: dict[tuple[int, int], complex],
    numerology: Numerology | None = None,
) -> CfoEstimate:
    numerology = numerology or grid.numerology
    h = pilot_channel_estimates(grid, layout, pilots)
    corr = np.sum(np.conj(h[0]) * h[1])
    delta_t = layout.symbol_spacing * numerology.symbol_duration_s
    return _from_correlation(corr, delta_t, len(layout.pilot_subcarriers))


def compensate(signal: TimeSignal, f_hat_hz: float) -> TimeSignal:
    """Undo an estimated offset by counter-rotating from sample 0."""
    return apply_cfo(signal, -f_hat_hz, 0.0)
