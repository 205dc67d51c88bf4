from collections.abc import Callable

import numpy as np

from blindeq.core.exceptions import InvalidParameterError

BackwardFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def straight_through(x_soft: np.ndarray, x_hard: np.ndarray) -> tuple[np.ndarray, BackwardFn]:
    """Forward value is ``x_hard``; the backward pass copies the gradient onto ``x_soft``.

    Returns the forward value and a function mapping the incoming gradient
    to (grad wrt x_soft, grad wrt x_hard). The second is always zero.
    """
    if x_soft.shape != x_hard.shape:
        raise InvalidParameterError(f"shape mismatch {x_soft.shape} vs {x_hard.shape}")

    def backward(grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.array(grad, copy=True), np.zeros_like(grad)

    return x_hard.copy(), backward
