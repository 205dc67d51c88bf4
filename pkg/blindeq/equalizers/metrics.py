from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.stats import norm

from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import SymbolFrame

AmbiguitySearch = Literal["none", "phase4", "phase4+delay"]

ROTATIONS = (1.0 + 0.0j, 1j, -1.0 + 0.0j, -1j)


@dataclass(frozen=True)
class AlignResult:
    ser: float
    delay: int
    rotation: complex
    errors: int
    compared: int


def _candidate_delays(max_delay: int) -> list[int]:
    out = [0]
    for d in range(1, max_delay + 1):
        out.extend((d, -d))
    return out


def aligned_errors(
    decided: SymbolFrame,
    truth: SymbolFrame,
    delay: int = 0,
    rotation: complex = 1.0,
) -> AlignResult:
    """Errors of ``decided`` against ``truth`` under one fixed delay and rotation."""
    x_hat, x = decided.symbols, truth.symbols
    if delay >= 0:
        a, b = x_hat[delay:], x[:x.size - delay]
    else:
        a, b = x_hat[:delay], x[-delay:]
    if a.size == 0:
        raise InvalidParameterError(f"delay {delay} leaves no symbols to compare")
    tol = 1e-6 * truth.constellation.min_distance
    errors = int(np.count_nonzero(np.abs(a * rotation - b) > tol))
    return AlignResult(ser=errors / a.size, delay=delay, rotation=rotation, errors=errors, compared=int(a.size))


def align_and_ser(
    decided: SymbolFrame,
    truth: SymbolFrame,
    search: AmbiguitySearch = "none",
    max_delay: int = 0,
) -> AlignResult:
    """SER minimized over the requested rotation/delay ambiguity set.

    A positive delay d compares decided[k] with truth[k - d]. Ties keep the
    candidate met first (delay 0 and rotation 1 come first).
    """
    if len(decided) == 0 or len(truth) == 0:
        raise InvalidParameterError("cannot score empty frames")
    if len(decided) != len(truth):
        raise InvalidParameterError(
            f"frame lengths differ ({len(decided)} vs {len(truth)})",
        )
    rotations = ROTATIONS if search != "none" else ROTATIONS[:1]
    delays = _candidate_delays(max_delay) if search == "phase4+delay" else [0]

    best: AlignResult | None = None
    for d in delays:
        if abs(d) >= len(truth):
            continue
        for r in rotations:
            result = aligned_errors(decided, truth, d, r)
            if best is None or result.ser < best.ser:
                best = result
    assert best is not None
    return best


def evm(x_soft: np.ndarray, x_ref: np.ndarray) -> float:
    """RMS error vector magnitude relative to the reference power."""
    x_soft = np.asarray(x_soft)
    x_ref = np.asarray(x_ref)
    return float(np.sqrt(np.mean(np.abs(x_soft - x_ref) ** 2) / np.mean(np.abs(x_ref) ** 2)))


def qam_ser_awgn(order: int, snr_db: float | np.ndarray) -> float | np.ndarray:
    """Square M-QAM symbol error rate on AWGN at symbol SNR ``snr_db``."""
    snr = 10.0 ** (np.asarray(snr_db, dtype=np.float64) / 10.0)
    per_axis = 2.0 * (1.0 - 1.0 / np.sqrt(order)) * norm.sf(np.sqrt(3.0 * snr / (order - 1)))
    ser = 1.0 - (1.0 - per_axis) ** 2
    return float(ser) if np.ndim(ser) == 0 else ser
