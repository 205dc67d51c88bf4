from dataclasses import dataclass, field

import numpy as np

from blindeq.autodiff.params import ParamSet


@dataclass
class AdamState:
    """First and second moments per parameter tensor."""

    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def reset(self) -> None:
        self.step_count = 0
        self.first_moment.clear()
        self.second_moment.clear()


def adam_step(params: ParamSet, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update of every tensor in ``params`` from its ``grad``."""
    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for p in params:
        m = state.first_moment.setdefault(p.name, np.zeros_like(p.values))
        v = state.second_moment.setdefault(p.name, np.zeros_like(p.values))
        m *= state.beta1
        m += (1.0 - state.beta1) * p.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * p.grad**2
        if lr != 0.0:
            p.values -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    params.bump()
