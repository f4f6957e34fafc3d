"""Reference DSP primitives: 64-point DFT/IDFT, frequency shift, AWGN,
and signal-distance metrics.

Everything here is a plain, direct realization of the defining formulas;
the trainable emulation layers are validated against this module.

Conventions
-----------
* The DFT is unnormalized, ``X[k] = sum_n x[n] exp(-j 2 pi n k / N)``; the
  IDFT carries the ``1/N`` factor.  With this pairing the time-domain MSE of
  two signals equals ``(1/N^2) sum |U[k]-V[k]|^2`` exactly (Parseval).
* Randomness comes from an explicit :func:`make_rng` generator (PCG64 with a
  64-bit seed); the same seed always produces the same stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

N_FFT = 64

# Unnormalized DFT basis and its 1/N inverse, precomputed once.
_k = np.arange(N_FFT)
DFT_BASIS = np.exp(-2j * np.pi * np.outer(_k, _k) / N_FFT)
IDFT_BASIS = np.exp(2j * np.pi * np.outer(_k, _k) / N_FFT) / N_FFT
del _k


@dataclass(frozen=True)
class ComplexSignal:
    """Sampled complex baseband IQ with a sample rate.

    The samples array is treated as immutable by every consumer in this
    package; operations always return new signals.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if not self.sample_rate_hz > 0:
            raise DomainError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if samples.ndim != 1:
            raise DimensionError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise DomainError("samples contain NaN or Inf")

    def __len__(self):
        return len(self.samples)

    @property
    def power(self) -> float:
        """Mean of |s[n]|^2."""
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class FreqGrid:
    """Per-OFDM-symbol array of 64 complex bins, DC at column 32.

    Column ``k`` holds subcarrier ``k - 32``, i.e. the bins are stored in
    fftshifted order so negative subcarriers sit left of DC.
    """

    bins: np.ndarray

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2 or bins.shape[1] != N_FFT:
            raise DimensionError(f"bins must have shape (n_symbols, 64), got {bins.shape}")
        if not np.all(np.isfinite(bins.view(np.float64))):
            raise DomainError("bins contain NaN or Inf")
        object.__setattr__(self, "bins", bins)

    @property
    def n_symbols(self) -> int:
        return self.bins.shape[0]

    @staticmethod
    def column(subcarrier: int) -> int:
        """Column index of a subcarrier in [-32, 32)."""
        return subcarrier + 32


def make_rng(seed, *spawn_key) -> np.random.Generator:
    """Deterministic generator: PCG64 seeded through a SeedSequence.

    Extra integers extend the seed so independent streams can be derived
    from one experiment seed (e.g. per trial) without correlation.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=spawn_key)))


def dft(block) -> np.ndarray:
    """64-point DFT, ``X[k] = sum_n x[n] exp(-j 2 pi n k / 64)``."""
    block = np.asarray(block, dtype=np.complex128)
    if block.shape != (N_FFT,):
        raise DimensionError(f"dft expects {N_FFT} samples, got shape {block.shape}")
    return DFT_BASIS @ block


def idft(bins) -> np.ndarray:
    """64-point inverse DFT, ``x[n] = (1/64) sum_k X[k] exp(j 2 pi n k / 64)``."""
    bins = np.asarray(bins, dtype=np.complex128)
    if bins.shape != (N_FFT,):
        raise DimensionError(f"idft expects {N_FFT} bins, got shape {bins.shape}")
    return IDFT_BASIS @ bins


def frequency_shift(sig: ComplexSignal, delta_f_hz: float) -> ComplexSignal:
    """Multiply by a complex exponential: ``out[n] = s[n] exp(j 2 pi df n / fs)``."""
    n = np.arange(len(sig.samples))
    rot = np.exp(2j * np.pi * delta_f_hz * n / sig.sample_rate_hz)
    return ComplexSignal(sig.samples * rot, sig.sample_rate_hz)


def awgn(sig: ComplexSignal, snr_db: float, rng: np.random.Generator) -> ComplexSignal:
    """Add circularly-symmetric complex Gaussian noise at the given SNR.

    ``snr_db = +inf`` is the noise-disabled sentinel and returns the signal
    unchanged.  Noise variance is ``signal_power / 10^(snr_db/10)`` split
    evenly between the real and imaginary parts.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return ComplexSignal(sig.samples.copy(), sig.sample_rate_hz)
    p = sig.power
    if p <= 0.0:
        raise DomainError("awgn requires a signal with nonzero power")
    var = p / 10.0 ** (snr_db / 10.0)
    n = len(sig.samples)
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    noise *= math.sqrt(var / 2.0)
    return ComplexSignal(sig.samples + noise, sig.sample_rate_hz)


def wrap_phase(x) -> np.ndarray:
    """Wrap angles into the principal interval (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(x, dtype=np.float64)))


@dataclass(frozen=True)
class SignalMetrics:
    time_mse: float
    nmse: float
    phase_mse: float

    def as_dict(self) -> dict:
        return {"time_mse": self.time_mse, "nmse": self.nmse, "phase_mse": self.phase_mse}


def signal_metrics(u: ComplexSignal, v: ComplexSignal) -> SignalMetrics:
    """Distance metrics between two equal-length signals.

    time_mse  : (1/N) sum |u-v|^2
    nmse      : sum |u-v|^2 / sum |u|^2
    phase_mse : (1/N) sum wrap(angle(u) - angle(v))^2, principal value taken
                from angle(u * conj(v)) so no unwrapping ambiguity arises.
    """
    a, b = u.samples, v.samples
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    diff2 = np.abs(a - b) ** 2
    time_mse = float(np.mean(diff2))
    denom = float(np.sum(np.abs(a) ** 2))
    nmse = float(np.sum(diff2) / denom) if denom > 0 else math.inf
    dphi = np.angle(a * np.conj(b))
    phase_mse = float(np.mean(dphi**2))
    return SignalMetrics(time_mse=time_mse, nmse=nmse, phase_mse=phase_mse)
