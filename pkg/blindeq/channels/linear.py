from dataclasses import dataclass, field

import numpy as np

from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.filters import fir_filter
from blindeq.dsp.noise import add_awgn
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal

# Five-tap T/2-spaced reference channel with its dominant tap in the center.
REFERENCE_TAPS = np.array(
    [
        0.055 + 0.05j,
        0.283 - 0.120j,
        -0.768 + 0.279j,
        -0.064 - 0.058j,
        0.047 - 0.023j,
    ]
)


@dataclass(frozen=True)
class LinearIsiChannel:
    """y = h * x + n at 2 samples per symbol."""

    taps_h: np.ndarray = field(default_factory=lambda: REFERENCE_TAPS.copy())
    noise_variance: float = 0.0

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps_h, dtype=np.complex128).reshape(-1)
        if taps.size == 0:
            raise InvalidParameterError("channel needs at least one tap")
        if self.noise_variance < 0:
            raise InvalidParameterError(f"noise variance must be >= 0, got {self.noise_variance}")
        object.__setattr__(self, "taps_h", taps)


def linear_channel_apply(tx: ComplexSignal, ch: LinearIsiChannel, rng: SeededRng) -> ComplexSignal:
    """Same-mode convolution with the channel taps followed by AWGN."""
    if tx.sps != 2:
        raise InvalidParameterError(f"linear channel expects 2 samples per symbol, got {tx.sps}")
    return add_awgn(fir_filter(tx, ch.taps_h, mode="same"), ch.noise_variance, rng)
