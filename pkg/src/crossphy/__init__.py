"""crossphy: WiFi-to-ZigBee cross-technology waveform emulation toolkit.

A numpy/scipy library that derives a WiFi OFDM payload whose transmitted
waveform decodes on a ZigBee receiver: fixed-weight differentiable DSP
layers with a trainable quantizer, a GF(2) inversion of the WiFi coding
chain, a software O-QPSK/DSSS modem, and an end-to-end simulation harness.
"""

from . import diffblocks, dsp, emulation, gf2, iqfile, sim, solver, wifi, zigbee
from .dsp import (
    ComplexSignal,
    FreqGrid,
    SignalMetrics,
    awgn,
    dft,
    frequency_shift,
    idft,
    make_rng,
    signal_metrics,
    wrap_phase,
)
from .errors import ConfigError, CrossPhyError, DimensionError, DomainError
from .iqfile import read_cf32, write_cf32

__version__ = "0.1.0"

__all__ = [
    "ComplexSignal",
    "FreqGrid",
    "SignalMetrics",
    "awgn",
    "dft",
    "frequency_shift",
    "idft",
    "make_rng",
    "signal_metrics",
    "wrap_phase",
    "ConfigError",
    "CrossPhyError",
    "DimensionError",
    "DomainError",
    "read_cf32",
    "write_cf32",
    "__version__",
]
