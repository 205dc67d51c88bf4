import numpy as np

from blindeq.autodiff.params import ParamSet
from blindeq.core.exceptions import InvalidParameterError


def l2_penalty(params: ParamSet, names: list[str], weight: float, accumulate: bool = True) -> float:
    """weight * sum of squared values over ``names``; adds 2*weight*w into the gradients."""
    if weight < 0:
        raise InvalidParameterError(f"l2 weight must be >= 0, got {weight}")
    if weight == 0:
        return 0.0
    total = 0.0
    for name in names:
        values = params[name].values
        total += float(np.sum(values**2))
        if accumulate:
            params[name].grad += 2.0 * weight * values
    return weight * total
