"""T/2-spaced FIR equalizer evaluated at symbol instants."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.signal import ComplexSignal


def dirac_taps(n_taps: int) -> np.ndarray:
    """Unit center tap, zeros elsewhere."""
    if n_taps < 1 or n_taps % 2 == 0:
        raise InvalidParameterError(f"tap count must be odd and positive, got {n_taps}")
    taps = np.zeros(n_taps, dtype=np.complex128)
    taps[n_taps // 2] = 1.0
    return taps


@dataclass
class FirEqualizer:
    """Complex taps applied as z[n] = sum_i w[i] y[n + c - i], sampled at n = sps*k."""

    taps: np.ndarray
    sps: int = 2

    def __post_init__(self) -> None:
        self.taps = np.asarray(self.taps, dtype=np.complex128).reshape(-1)
        if self.taps.size % 2 == 0:
            raise InvalidParameterError(f"FIR equalizer needs an odd tap count, got {self.taps.size}")

    @classmethod
    def dirac(cls, n_taps: int, sps: int = 2) -> "FirEqualizer":
        return cls(taps=dirac_taps(n_taps), sps=sps)

    @property
    def n_taps(self) -> int:
        return int(self.taps.size)

    @property
    def guard_symbols(self) -> int:
        return -(-self.n_taps // 2)


def same_convolve(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Center-aligned convolution: out[n] = sum_i taps[i] x[n + c - i], c = (L-1)//2."""
    c = (taps.size - 1) // 2
    return np.convolve(x, taps, mode="full")[c:c + x.size]


def tap_windows(x: np.ndarray, n_taps: int, stride: int = 1) -> np.ndarray:
    """Rows hold x[n + c - i] for i = 0..n_taps-1 at n = 0, stride, 2*stride, ...

    Row n dotted with the taps equals same_convolve(x, taps)[n].
    """
    c = (n_taps - 1) // 2
    padded = np.concatenate([np.zeros(c, dtype=x.dtype), x, np.zeros(n_taps - 1 - c, dtype=x.dtype)])
    return sliding_window_view(padded, n_taps)[::stride, ::-1]


def correlate_grad(g: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Input gradient of same_convolve: g_x[m] = sum_i conj(taps[i]) g[m - c + i]."""
    c = (taps.size - 1) // 2
    full = np.convolve(g, np.conj(taps[::-1]), mode="full")
    start = taps.size - 1 - c
    return full[start:start + g.size]


def equalize_fir(y: ComplexSignal | np.ndarray, eq: FirEqualizer) -> np.ndarray:
    """Equalized symbols x~[k] = z[sps*k]."""
    samples = y.samples if isinstance(y, ComplexSignal) else np.asarray(y, dtype=np.complex128)
    if eq.n_taps > samples.size:
        raise InvalidParameterError(f"{eq.n_taps} taps exceed the signal length {samples.size}")
    return same_convolve(samples, eq.taps)[::eq.sps]
