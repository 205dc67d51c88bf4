"""Digital backpropagation receiver: a non-trainable reference curve for fiber links."""

import numpy as np

from blindeq.channels.fiber import FiberLink, dbp
from blindeq.core.exceptions import MisalignedPilotsError
from blindeq.dsp.signal import ComplexSignal


def genie_gain(x_soft: np.ndarray, truth: np.ndarray) -> complex:
    """Least-squares complex scalar aligning ``x_soft`` to the transmitted symbols."""
    denom = np.vdot(x_soft, x_soft)
    if denom == 0:
        return 1.0 + 0.0j
    return complex(np.vdot(x_soft, truth) / denom)


class DbpReceiver:
    """Backpropagates the raw receiver signal with a fixed step count, then applies a genie gain."""

    name = "dbp"
    search = "none"
    guard_symbols = 0

    def __init__(self, fiber: FiberLink, steps: int, ps_rolloff: float = 0.1) -> None:
        self.fiber = fiber
        self.steps = steps
        self.ps_rolloff = ps_rolloff

    def equalize(self, rx: ComplexSignal, truth: np.ndarray | None = None, edge: int = 0) -> np.ndarray:
        """Soft symbols with ``edge`` symbols dropped at both ends, gain-corrected against ``truth`` when given."""
        x_soft = dbp(rx, self.fiber, self.steps, self.ps_rolloff).samples
        if edge:
            x_soft = x_soft[edge:x_soft.size - edge]
        if truth is not None:
            if truth.size != x_soft.size:
                raise MisalignedPilotsError(truth.size, x_soft.size)
            x_soft = genie_gain(x_soft, truth) * x_soft
        return x_soft
