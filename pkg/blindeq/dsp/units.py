import numpy as np

from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.signal import ComplexSignal


def dbm_to_watts(p_dbm: float) -> float:
    return float(10.0 ** ((p_dbm - 30.0) / 10.0))


def watts_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise InvalidParameterError(f"power must be positive, got {p_w}")
    return float(10.0 * np.log10(p_w) + 30.0)


def normalize_power(signal: ComplexSignal, target: float = 1.0) -> ComplexSignal:
    """Scale to mean |sample|^2 == target (receiver AGC)."""
    power = signal.power()
    if power <= 0:
        raise InvalidParameterError("cannot normalize a zero-power signal")
    return signal.replace(signal.samples * np.sqrt(target / power))
