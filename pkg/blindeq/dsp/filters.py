from typing import Literal

import numpy as np
import scipy.fft

from blindeq.core.config import settings
from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import SymbolFrame
from blindeq.dsp.signal import ComplexSignal

DEFAULT_RRC_SPAN = 32


def rrc_taps(rolloff: float, span_symbols: int = DEFAULT_RRC_SPAN, sps: int = 2) -> np.ndarray:
    """Root-raised-cosine impulse response with unit energy, length span*sps + 1."""
    if not 0 < rolloff <= 1:
        raise InvalidParameterError(f"rolloff must be in (0, 1], got {rolloff}")
    if span_symbols <= 0 or span_symbols % 2:
        raise InvalidParameterError(f"span_symbols must be positive and even, got {span_symbols}")
    if sps < 1:
        raise InvalidParameterError(f"sps must be >= 1, got {sps}")

    beta = float(rolloff)
    t = (np.arange(span_symbols * sps + 1) - span_symbols * sps / 2) / sps
    h = np.empty_like(t)

    at_zero = np.isclose(t, 0.0, atol=1e-12)
    at_edge = np.isclose(np.abs(t), 1.0 / (4.0 * beta), atol=1e-12)
    regular = ~(at_zero | at_edge)

    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - beta)) + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    den = np.pi * tr * (1 - (4 * beta * tr) ** 2)
    h[regular] = num / den
    h[at_zero] = 1 + beta * (4 / np.pi - 1)
    h[at_edge] = beta / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
    )
    return h / np.sqrt(np.sum(h**2))


def upsample(frame: SymbolFrame | np.ndarray, factor: int) -> ComplexSignal:
    """Zero insertion: symbol k lands on sample k*factor."""
    if factor < 1:
        raise InvalidParameterError(f"upsampling factor must be >= 1, got {factor}")
    symbols = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=np.complex128)
    out = np.zeros(symbols.size * factor, dtype=np.complex128)
    out[::factor] = symbols
    return ComplexSignal(samples=out, sps=factor)


def fir_filter(
    signal: ComplexSignal,
    taps: np.ndarray,
    mode: Literal["same", "full"] = "same",
) -> ComplexSignal:
    """Linear convolution with ``taps``.

    ``same`` keeps the input length with the filter centered on tap (L-1)//2;
    ``full`` returns N+L-1 samples and adds (L-1)//2 to the reported delay.
    """
    taps = np.asarray(taps)
    if taps.size == 0:
        raise InvalidParameterError("fir_filter needs at least one tap")
    full = np.convolve(signal.samples, taps, mode="full")
    lead = (taps.size - 1) // 2
    if mode == "same":
        return signal.replace(full[lead:lead + len(signal)])
    if mode == "full":
        return signal.replace(full, delay=signal.delay + lead)
    raise InvalidParameterError(f"unknown filter mode {mode!r}")


def decimate(signal: ComplexSignal, factor: int, phase: int = 0) -> ComplexSignal:
    """Keep samples phase, phase+factor, ... (no anti-alias filtering)."""
    if factor < 1:
        raise InvalidParameterError(f"decimation factor must be >= 1, got {factor}")
    if not 0 <= phase < factor:
        raise InvalidParameterError(f"phase must satisfy 0 <= phase < {factor}, got {phase}")
    return ComplexSignal(
        samples=signal.samples[phase::factor],
        sps=max(signal.sps // factor, 1),
        delay=signal.delay // factor,
    )


def angular_frequency_grid(n: int, sample_rate_ghz: float) -> np.ndarray:
    """FFT-ordered angular frequencies in rad/ps for ``n`` samples at ``sample_rate_ghz``."""
    dt_ps = 1e3 / sample_rate_ghz
    return 2 * np.pi * scipy.fft.fftfreq(n, d=dt_ps)


def brickwall_lowpass(
    signal: ComplexSignal,
    bandwidth_ghz: float,
    sample_rate_ghz: float,
) -> ComplexSignal:
    """Ideal FFT-domain low-pass; ``bandwidth_ghz`` is the total two-sided width."""
    if bandwidth_ghz <= 0:
        raise InvalidParameterError(f"bandwidth must be positive, got {bandwidth_ghz}")
    freqs = scipy.fft.fftfreq(len(signal), d=1.0 / sample_rate_ghz)
    spectrum = scipy.fft.fft(signal.samples, workers=settings.FFT_WORKERS)
    spectrum[np.abs(freqs) > bandwidth_ghz / 2] = 0
    return signal.replace(scipy.fft.ifft(spectrum, workers=settings.FFT_WORKERS))
