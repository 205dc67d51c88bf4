from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from blindeq.autodiff.params import ParamSet
from blindeq.dsp.rng import SeededRng

LossFn = Callable[[ParamSet], tuple[float, dict[str, np.ndarray]]]

# Denominator floor: coordinates whose gradients are both below this are compared absolutely.
GRAD_FLOOR = 1e-6


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple[int, ...]
    n_checked: int

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def finite_diff_check(
    loss_fn: LossFn,
    params: ParamSet,
    h: float = 1e-5,
    max_coords: int | None = None,
    rng: SeededRng | None = None,
) -> GradCheckReport:
    """Central differences per coordinate against the analytic gradient.

    ``loss_fn(params)`` returns the loss and the analytic gradients keyed by
    parameter name. With ``max_coords`` a random subset of coordinates is checked.
    """
    _, analytic = loss_fn(params)
    analytic = {k: np.array(v, copy=True) for k, v in analytic.items()}
    coords = [(t.name, idx) for t in params if t.name in analytic for idx in np.ndindex(t.values.shape)]
    if max_coords is not None and len(coords) > max_coords:
        picker = rng or SeededRng(0)
        chosen = np.sort(picker.permutation(len(coords))[:max_coords])
        coords = [coords[i] for i in chosen]

    worst = (0.0, "", ())
    for name, idx in coords:
        values = params[name].values
        original = values[idx]
        values[idx] = original + h
        plus, _ = loss_fn(params)
        values[idx] = original - h
        minus, _ = loss_fn(params)
        values[idx] = original
        numeric = (plus - minus) / (2.0 * h)
        exact = float(analytic[name][idx])
        err = abs(exact - numeric) / max(abs(exact), abs(numeric), GRAD_FLOOR)
        if err > worst[0]:
            worst = (err, name, tuple(int(i) for i in idx))
    return GradCheckReport(
        max_rel_error=worst[0],
        worst_param=worst[1],
        worst_index=worst[2],
        n_checked=len(coords),
    )
