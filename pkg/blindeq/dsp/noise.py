import numpy as np

from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import Constellation
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal


def add_awgn(signal: ComplexSignal, noise_variance: float, rng: SeededRng) -> ComplexSignal:
    """Add circular complex Gaussian noise, ``noise_variance`` per sample (half per dimension)."""
    if noise_variance < 0:
        raise InvalidParameterError(f"noise variance must be >= 0, got {noise_variance}")
    if noise_variance == 0:
        return signal
    n = len(signal)
    noise = rng.normal((2, n))
    scale = np.sqrt(noise_variance / 2.0)
    return signal.replace(signal.samples + scale * (noise[0] + 1j * noise[1]))


def snr_to_noise_variance(c: Constellation, snr_db: float) -> float:
    """sigma_w^2 = E|x|^2 * 10^(-snr_db/10)."""
    return c.energy * 10.0 ** (-snr_db / 10.0)
