"""Complex-valued signal primitives."""

from blindeq.dsp.constellation import Constellation, SymbolFrame, draw_symbols, make_qam
from blindeq.dsp.filters import brickwall_lowpass, decimate, fir_filter, rrc_taps, upsample
from blindeq.dsp.noise import add_awgn, snr_to_noise_variance
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal
from blindeq.dsp.units import dbm_to_watts, normalize_power, watts_to_dbm

__all__ = [
    "ComplexSignal",
    "Constellation",
    "SeededRng",
    "SymbolFrame",
    "add_awgn",
    "brickwall_lowpass",
    "dbm_to_watts",
    "decimate",
    "draw_symbols",
    "fir_filter",
    "make_qam",
    "normalize_power",
    "rrc_taps",
    "snr_to_noise_variance",
    "upsample",
    "watts_to_dbm",
]
