import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfo_scheme.channel import apply_cfo
from cfo_scheme.errors import InsufficientSamples
from cfo_scheme.waveform import (
    Numerology,
    PilotLayout,
    ResourceGrid,
    TimeSignal,
    make_pilot_sequence,
    make_preamble,
    ofdm_demodulate,
    ofdm_modulate,
    qpsk_demap,
    qpsk_map,
)


def random_grid(rng, num, n_symbols):
    shape = (n_symbols, num.n_fft)
    return ResourceGrid(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), num)


@pytest.mark.parametrize("n_fft,cp", [(4, 1), (12, 2), (128, 128), (128, -1)])
def test_numerology_rejects_bad_dimensions(n_fft, cp):
    with pytest.raises(ValueError):
        Numerology(15000.0, n_fft, cp)


def test_numerology_derived_values(num):
    assert num.sample_rate_hz == 15000.0 * 128
    assert num.symbol_len == 137
    assert num.n_used == 72
    occ = num.occupied_subcarriers()
    assert occ.size == 72 and 0 not in occ and len(set(occ)) == 72


def test_time_signal_is_validated_and_immutable():
    with pytest.raises(ValueError):
        TimeSignal([], 1.0)
    with pytest.raises(ValueError):
        TimeSignal([1.0, np.nan], 1.0)
    sig = TimeSignal([1.0, 2.0], 1.0)
    with pytest.raises(ValueError):
        sig.samples[0] = 3.0


def test_preamble_deterministic_and_unit_power(num):
    a = make_preamble(num, 7)
    b = make_preamble(num, 7)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert len(a) == 128
    assert np.mean(np.abs(a.samples) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_preamble_seed_changes_signal(num):
    assert np.any(make_preamble(num, 7).samples != make_preamble(num, 8).samples)
    # seeds one LFSR period apart must still differ
    assert np.any(make_preamble(num, 0).samples != make_preamble(num, 63).samples)


@pytest.mark.parametrize("n_fft", [8, 64, 128, 256])
def test_preamble_halves_repeat(n_fft):
    p = make_preamble(Numerology(15000.0, n_fft, 0), 3).samples
    assert np.allclose(p[: n_fft // 2], p[n_fft // 2 :], atol=1e-12)
    assert np.mean(np.abs(p) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_pilot_sequence_qpsk_and_deterministic(layout):
    a = make_pilot_sequence(layout)
    assert a == make_pilot_sequence(layout)
    assert len(a) == 2 * len(layout.pilot_subcarriers)
    for v in a.values():
        assert abs(v) == pytest.approx(1.0, abs=1e-15)
        assert abs(abs(v.real) - abs(v.imag)) < 1e-15


def test_pilot_sequence_seed_changes_values(layout):
    other = PilotLayout(layout.pilot_symbol_indices, layout.pilot_subcarriers, seed=1)
    assert make_pilot_sequence(layout) != make_pilot_sequence(other)


@pytest.mark.parametrize(
    "syms,scs", [((4, 0), (1, 2)), ((1, 1), (1, 2)), ((0, 4), (3, 3)), ((0, 4), ())]
)
def test_pilot_layout_validation(syms, scs):
    with pytest.raises(ValueError):
        PilotLayout(syms, scs)


def test_qpsk_round_trip():
    bits = np.random.default_rng(0).integers(0, 2, 200)
    assert np.array_equal(qpsk_demap(qpsk_map(bits)), bits)


def test_modulate_zero_grid(num):
    out = ofdm_modulate(ResourceGrid(np.zeros((1, 128)), num))
    assert len(out) == 137 and not np.any(out.samples)


def test_modulate_cp_equals_tail(num):
    sig = ofdm_modulate(random_grid(np.random.default_rng(1), num, 3)).samples
    for s in range(3):
        sym = sig[s * 137 : (s + 1) * 137]
        assert np.array_equal(sym[:9], sym[128:137])
        assert np.max(np.abs(sig[:9] - sig[128:137])) < 1e-12


def test_single_tone_is_complex_exponential():
    num = Numerology(15000.0, 64, 0)
    k = 5
    grid = np.zeros((1, 64), complex)
    grid[0, k] = 1.0
    out = ofdm_modulate(ResourceGrid(grid, num)).samples
    n = np.arange(64)
    expected = np.exp(2j * np.pi * k * 15000.0 * n / num.sample_rate_hz) / 8.0
    assert np.allclose(out, expected, atol=1e-14)
    assert np.allclose(np.abs(out), 1 / 8)


def test_demodulate_short_signal_raises(num):
    with pytest.raises(InsufficientSamples):
        ofdm_demodulate(TimeSignal(np.ones(200), num.sample_rate_hz), num, 2)


def test_demodulate_zero_signal(num):
    grid = ofdm_demodulate(TimeSignal(np.zeros(274), num.sample_rate_hz), num, 2)
    assert grid.symbols.shape == (2, 128) and not np.any(grid.symbols)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_symbols=st.integers(1, 6), log_n=st.integers(3, 8))
def test_unitary_round_trip_and_parseval(seed, n_symbols, log_n):
    n_fft = 2**log_n
    num = Numerology(15000.0, n_fft, n_fft // 8)
    grid = random_grid(np.random.default_rng(seed), num, n_symbols)
    sig = ofdm_modulate(grid)
    back = ofdm_demodulate(sig, num, n_symbols)
    assert np.max(np.abs(back.symbols - grid.symbols)) < 1e-9
    body = sig.samples[num.cp_len : num.symbol_len]
    e_time = np.sum(np.abs(body) ** 2)
    e_freq = np.sum(np.abs(grid.symbols[0]) ** 2)
    assert e_time == pytest.approx(e_freq, rel=1e-9)


def test_integer_bin_cfo_is_circular_shift():
    num = Numerology(15000.0, 64, 0)
    grid = random_grid(np.random.default_rng(2), num, 3)
    rx = ofdm_demodulate(apply_cfo(ofdm_modulate(grid), num.scs_hz), num, 3)
    assert np.max(np.abs(rx.symbols - np.roll(grid.symbols, 1, axis=1))) < 1e-9


def test_integer_bin_cfo_with_cp_is_shift_times_symbol_phase(num):
    grid = random_grid(np.random.default_rng(3), num, 3)
    rx = ofdm_demodulate(apply_cfo(ofdm_modulate(grid), num.scs_hz), num, 3)
    for m in range(3):
        # each FFT window starts at sample m*(N+L)+L, one bin per N samples
        phase = np.exp(2j * np.pi * (m * num.symbol_len + num.cp_len) / num.n_fft)
        assert np.max(np.abs(rx.symbols[m] - phase * np.roll(grid.symbols[m], 1))) < 1e-9
