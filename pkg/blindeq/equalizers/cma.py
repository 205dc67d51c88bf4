"""Constant-modulus baselines: per-symbol stochastic CMA and minibatch CMA with Adam."""

import hashlib
from dataclasses import dataclass

import numpy as np

from blindeq.autodiff.adam import adam_step
from blindeq.autodiff.params import ParamSet
from blindeq.core.exceptions import DivergenceError, InvalidParameterError
from blindeq.dsp.constellation import Constellation
from blindeq.equalizers.base import BaseEqualizer, Minibatch, StepResult
from blindeq.equalizers.components import FirDecoder
from blindeq.equalizers.fir import dirac_taps, same_convolve, tap_windows

CMA_MU0 = 1e-3
CMA_DECAY = 0.5
CMA_DECAY_EVERY = 1 << 14


@dataclass
class CmaState:
    """Taps, dispersion constant and a geometric step-size schedule over processed symbols."""

    taps: np.ndarray
    r2: float
    mu0: float = CMA_MU0
    decay: float = CMA_DECAY
    decay_every: int = CMA_DECAY_EVERY
    processed: int = 0

    @classmethod
    def dirac(cls, n_taps: int, constellation: Constellation, mu0: float = CMA_MU0) -> "CmaState":
        return cls(taps=dirac_taps(n_taps), r2=constellation.r2, mu0=mu0)

    @property
    def mu(self) -> float:
        return self.mu0 * self.decay ** (self.processed // self.decay_every)


def cma_step(window: np.ndarray, state: CmaState, mu: float | None = None) -> tuple[CmaState, complex]:
    """One stochastic update from a single tap window (window[i] = y[2k + c - i]).

    Drives |z|^2 toward r2 with w += mu (r2 - |z|^2) z conj(window).
    """
    if window.shape != state.taps.shape:
        raise InvalidParameterError(f"window of {window.size} samples for {state.taps.size} taps")
    step = state.mu if mu is None else mu
    z = complex(np.dot(state.taps, window))
    state.taps = state.taps + step * (state.r2 - abs(z) ** 2) * z * np.conj(window)
    state.processed += 1
    return state, z


class CmaEqualizer(BaseEqualizer):
    """Standard CMA: one tap update per processed symbol."""

    name = "cma"
    search = "phase4+delay"

    def __init__(self, constellation: Constellation, n_taps: int = 25, mu0: float = CMA_MU0) -> None:
        super().__init__(constellation, lr=mu0)
        self.state = CmaState.dirac(n_taps, constellation, mu0=mu0)

    @property
    def guard_symbols(self) -> int:
        return -(-self.state.taps.size // 2)

    def train_step(self, batch: Minibatch) -> StepResult:
        windows = tap_windows(batch.y, self.state.taps.size, stride=batch.sps)
        costs = []
        for k in np.flatnonzero(batch.mask):
            _, z = cma_step(np.ascontiguousarray(windows[k]), self.state)
            costs.append((abs(z) ** 2 - self.state.r2) ** 2)
        loss = float(np.mean(costs)) if costs else 0.0
        if not np.isfinite(loss) or not np.all(np.isfinite(self.state.taps)):
            raise DivergenceError(self.name, self.steps_taken, loss)
        self.steps_taken += 1
        return StepResult(loss=loss, parts={"mu": self.state.mu})

    def equalize(self, y: np.ndarray) -> np.ndarray:
        return same_convolve(y, self.state.taps)[::2]

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.state.taps).tobytes()).hexdigest()[:16]


class CmaBatchTrainer(BaseEqualizer):
    """Minibatch constant-modulus loss mean((|x~|^2 - r2)^2) on an FIR, optimized with Adam."""

    name = "cma-batch"
    search = "phase4+delay"

    def __init__(self, constellation: Constellation, lr: float = 1e-3, n_taps: int = 25) -> None:
        super().__init__(constellation, lr, ParamSet())
        self.decoder = FirDecoder(self.params, n_taps)
        self.r2 = constellation.r2

    @property
    def guard_symbols(self) -> int:
        return self.decoder.guard_symbols

    def loss_and_grads(self, batch: Minibatch) -> float:
        self.params.zero_grad()
        x_soft, cache = self.decoder.forward(batch.y)
        n = int(np.count_nonzero(batch.mask))
        if n == 0:
            raise InvalidParameterError("loss mask selects no symbols")
        dispersion = (np.abs(x_soft) ** 2 - self.r2) * batch.mask
        loss = float(np.sum(dispersion**2) / n)
        self.decoder.backward(cache, 4.0 * dispersion * x_soft / n)
        return loss

    def train_step(self, batch: Minibatch) -> StepResult:
        loss = self.loss_and_grads(batch)
        if not np.isfinite(loss) or not self.params.grads_finite():
            raise DivergenceError(self.name, self.steps_taken, loss)
        adam_step(self.params, self.adam, self.lr)
        self.steps_taken += 1
        return StepResult(loss=loss)

    def equalize(self, y: np.ndarray) -> np.ndarray:
        return self.decoder.equalize(y)


def cma_batch_step(trainer: CmaBatchTrainer, batch: Minibatch) -> tuple[float, CmaBatchTrainer]:
    result = trainer.train_step(batch)
    return result.loss, trainer
