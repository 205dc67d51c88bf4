"""Data-aided reference equalizers trained on the mean squared error to known symbols."""

import numpy as np

from blindeq.autodiff.adam import adam_step
from blindeq.autodiff.params import ParamSet
from blindeq.autodiff.penalties import l2_penalty
from blindeq.core.exceptions import DivergenceError, InvalidParameterError, MisalignedPilotsError
from blindeq.dsp.constellation import Constellation
from blindeq.equalizers.base import BaseEqualizer, BlockDecoder, Minibatch, StepResult


class SupervisedTrainer(BaseEqualizer):
    """Any decoder trained on mean |x~_k - x_k|^2 over the masked symbols.

    With an FIR decoder this is the MMSE feed-forward equalizer; with the NN
    decoder it is the supervised-learning reference network.
    """

    name = "ffe"

    def __init__(
        self,
        constellation: Constellation,
        decoder: BlockDecoder,
        params: ParamSet,
        lr: float = 1e-3,
        l2_weight: float = 0.0,
        name: str | None = None,
    ) -> None:
        super().__init__(constellation, lr, params)
        self.decoder = decoder
        self.l2_weight = l2_weight
        if name is not None:
            self.name = name

    @property
    def guard_symbols(self) -> int:
        return self.decoder.guard_symbols

    def loss_and_grads(self, batch: Minibatch, targets: np.ndarray | None = None) -> float:
        """MSE against ``targets`` (the batch symbols by default); gradients land in ``self.params``."""
        self.params.zero_grad()
        x_soft, cache = self.decoder.forward(batch.y)
        targets = batch.symbols if targets is None else targets
        if targets.size != x_soft.size:
            raise MisalignedPilotsError(targets.size, x_soft.size)
        n = int(np.count_nonzero(batch.mask))
        if n == 0:
            raise InvalidParameterError("loss mask selects no symbols")
        err = (x_soft - targets) * batch.mask
        loss = float(np.sum(np.abs(err) ** 2) / n)
        self.decoder.backward(cache, 2.0 * err / n)
        return loss + l2_penalty(self.params, self.decoder.penalty_names, self.l2_weight)

    def train_step(self, batch: Minibatch) -> StepResult:
        loss = self.loss_and_grads(batch)
        if not np.isfinite(loss) or not self.params.grads_finite():
            raise DivergenceError(self.name, self.steps_taken, loss)
        adam_step(self.params, self.adam, self.lr)
        self.steps_taken += 1
        return StepResult(loss=loss)

    def equalize(self, y: np.ndarray) -> np.ndarray:
        return self.decoder.equalize(y)


def ffe_mmse_train_step(trainer: SupervisedTrainer, batch: Minibatch) -> tuple[float, SupervisedTrainer]:
    result = trainer.train_step(batch)
    return result.loss, trainer
