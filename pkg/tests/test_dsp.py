import math

import numpy as np
import pytest

from crossphy import dsp
from crossphy.errors import DimensionError, DomainError
from crossphy.iqfile import read_cf32, write_cf32


def random_signal(rng, n=64, fs=20e6):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return dsp.ComplexSignal(x, fs)


class TestDft:
    def test_delta_gives_flat_spectrum(self):
        x = np.zeros(64, dtype=complex)
        x[0] = 1.0
        assert np.max(np.abs(dsp.dft(x) - 1.0)) < 1e-12

    def test_all_ones_concentrates_in_bin0(self):
        bins = dsp.dft(np.ones(64))
        assert abs(bins[0] - 64.0) < 1e-12
        assert np.max(np.abs(bins[1:])) < 1e-9

    def test_matches_formula_directly(self):
        rng = dsp.make_rng(11)
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        k = 17
        expected = sum(x[n] * np.exp(-2j * np.pi * n * k / 64) for n in range(64))
        assert abs(dsp.dft(x)[k] - expected) / abs(expected) < 1e-12

    def test_inverse_pair(self):
        rng = dsp.make_rng(0)
        for _ in range(20):
            x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            assert np.max(np.abs(dsp.idft(dsp.dft(x)) - x)) < 1e-9
            X = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            assert np.max(np.abs(dsp.dft(dsp.idft(X)) - X)) < 1e-9

    def test_idft_of_bin0_is_constant(self):
        X = np.zeros(64, dtype=complex)
        X[0] = 64.0
        assert np.max(np.abs(dsp.idft(X) - 1.0)) < 1e-12
        assert np.max(np.abs(dsp.idft(np.zeros(64)))) == 0.0

    def test_wrong_length_rejected(self):
        with pytest.raises(DimensionError):
            dsp.dft(np.ones(63))
        with pytest.raises(DimensionError):
            dsp.idft(np.ones(65))


class TestFrequencyShift:
    def test_zero_shift_is_identity(self):
        sig = random_signal(dsp.make_rng(1), 256)
        out = dsp.frequency_shift(sig, 0.0)
        assert np.array_equal(out.samples, sig.samples)

    def test_shift_inverts(self):
        sig = random_signal(dsp.make_rng(2), 512)
        out = dsp.frequency_shift(dsp.frequency_shift(sig, 2.5e6), -2.5e6)
        assert np.max(np.abs(out.samples - sig.samples)) < 1e-12

    def test_tone_moves_to_expected_bin(self):
        fs = 20e6
        n = np.arange(64)
        tone = np.exp(2j * np.pi * (4 * fs / 64) * n / fs)  # bin 4 exactly
        sig = dsp.ComplexSignal(tone, fs)
        shifted = dsp.frequency_shift(sig, 2 * fs / 64)  # +2 bins
        bins = dsp.dft(shifted.samples)
        assert int(np.argmax(np.abs(bins))) == 6

    def test_power_preserved(self):
        sig = random_signal(dsp.make_rng(3), 1000)
        out = dsp.frequency_shift(sig, 1.234e6)
        assert abs(out.power - sig.power) / sig.power < 1e-12


class TestAwgn:
    def test_infinite_snr_is_identity(self):
        sig = random_signal(dsp.make_rng(4), 100)
        out = dsp.awgn(sig, math.inf, dsp.make_rng(5))
        assert np.array_equal(out.samples, sig.samples)

    def test_same_seed_bit_identical(self):
        sig = random_signal(dsp.make_rng(6), 100)
        a = dsp.awgn(sig, 10.0, dsp.make_rng(7))
        b = dsp.awgn(sig, 10.0, dsp.make_rng(7))
        assert np.array_equal(a.samples, b.samples)

    def test_empirical_snr_within_half_db(self):
        rng = dsp.make_rng(8)
        n = 10**5
        sig = dsp.ComplexSignal(np.exp(1j * rng.uniform(0, 2 * np.pi, n)), 20e6)
        out = dsp.awgn(sig, 10.0, dsp.make_rng(9))
        noise_power = np.mean(np.abs(out.samples - sig.samples) ** 2)
        measured = 10 * np.log10(sig.power / noise_power)
        assert abs(measured - 10.0) < 0.5

    def test_zero_power_rejected(self):
        sig = dsp.ComplexSignal(np.zeros(8, dtype=complex), 1e6)
        with pytest.raises(DomainError):
            dsp.awgn(sig, 10.0, dsp.make_rng(0))


class TestSignalMetrics:
    def test_identical_signals_zero(self):
        sig = random_signal(dsp.make_rng(10), 64)
        m = dsp.signal_metrics(sig, sig)
        assert m.time_mse == 0.0 and m.nmse == 0.0
        assert m.phase_mse < 1e-30  # complex-multiply rounding residue only

    def test_constant_phase_offset(self):
        sig = random_signal(dsp.make_rng(11), 64)
        rotated = dsp.ComplexSignal(sig.samples * np.exp(1j * 0.1), sig.sample_rate_hz)
        m = dsp.signal_metrics(sig, rotated)
        assert abs(m.phase_mse - 0.01) < 1e-9

    def test_parseval_links_time_and_frequency(self):
        # N * time_mse == (1/N) * sum |U-V|^2 with the unnormalized DFT
        rng = dsp.make_rng(12)
        for _ in range(50):
            u = random_signal(rng, 64)
            v = random_signal(rng, 64)
            m = dsp.signal_metrics(u, v)
            lhs = 64 * m.time_mse
            rhs = np.sum(np.abs(dsp.dft(u.samples) - dsp.dft(v.samples)) ** 2) / 64
            assert abs(lhs - rhs) / rhs < 1e-9

    def test_length_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            dsp.signal_metrics(random_signal(dsp.make_rng(0), 10),
                               random_signal(dsp.make_rng(0), 11))

    def test_wrap_stays_principal(self):
        assert dsp.wrap_phase(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
        assert dsp.wrap_phase(-np.pi - 0.1) == pytest.approx(np.pi - 0.1)


class TestComplexSignal:
    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            dsp.ComplexSignal(np.array([1.0, np.nan]), 1e6)

    def test_rejects_bad_rate(self):
        with pytest.raises(DomainError):
            dsp.ComplexSignal(np.ones(4), 0.0)


class TestRng:
    def test_same_seed_same_stream(self):
        a = dsp.make_rng(123).standard_normal(32)
        b = dsp.make_rng(123).standard_normal(32)
        assert np.array_equal(a, b)

    def test_spawn_keys_decorrelate(self):
        a = dsp.make_rng(123, 0).standard_normal(32)
        b = dsp.make_rng(123, 1).standard_normal(32)
        assert not np.array_equal(a, b)


class TestIqFile:
    def test_roundtrip(self, tmp_path):
        sig = random_signal(dsp.make_rng(13), 1000)
        path = tmp_path / "x.cf32"
        write_cf32(path, sig)
        back = read_cf32(path, sig.sample_rate_hz)
        assert len(back) == len(sig)
        # float32 quantization is the only loss
        assert np.max(np.abs(back.samples - sig.samples)) < 1e-6
        assert path.stat().st_size == 8 * len(sig)

    def test_interleaving_is_i_then_q(self, tmp_path):
        sig = dsp.ComplexSignal(np.array([1.0 + 2.0j, -3.0 + 4.0j]), 1e6)
        path = tmp_path / "iq.cf32"
        write_cf32(path, sig)
        raw = np.fromfile(path, dtype="<f4")
        assert raw.tolist() == [1.0, 2.0, -3.0, 4.0]

    def test_odd_file_rejected(self, tmp_path):
        path = tmp_path / "bad.cf32"
        np.ones(3, dtype="<f4").tofile(path)
        with pytest.raises(DimensionError):
            read_cf32(path, 1e6)
