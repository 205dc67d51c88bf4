"""Decision-directed LMS: pilot-aided MMSE pre-training, then training on its own decisions."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from blindeq.autodiff.adam import adam_step
from blindeq.autodiff.params import ParamSet
from blindeq.core.exceptions import ConvergenceError, DivergenceError
from blindeq.dsp.constellation import Constellation, SymbolFrame
from blindeq.equalizers.base import Minibatch, StepResult, make_minibatch
from blindeq.equalizers.components import FirDecoder
from blindeq.equalizers.demapper import nearest_indices
from blindeq.equalizers.ffe import SupervisedTrainer

DdMode = Literal["pilot", "decision"]


class DdLmsTrainer(SupervisedTrainer):
    """FIR trained on pilots until the batch SER reaches ``switch_ser``, then on hard decisions."""

    name = "ddlms"

    def __init__(
        self,
        constellation: Constellation,
        lr: float = 1e-2,
        n_taps: int = 25,
        switch_ser: float = 1e-2,
        pretrain_budget: int = 2000,
    ) -> None:
        params = ParamSet()
        super().__init__(constellation, FirDecoder(params, n_taps), params, lr=lr)
        self.switch_ser = switch_ser
        self.pretrain_budget = pretrain_budget
        self.mode: DdMode = "pilot"
        self.pilot_steps = 0

    def _batch_ser(self, batch: Minibatch) -> float:
        decided = nearest_indices(self.decoder.forward(batch.y)[0], self.constellation)
        truth = nearest_indices(batch.symbols, self.constellation)
        return float(np.mean(decided[batch.mask] != truth[batch.mask]))

    def train_step(self, batch: Minibatch) -> StepResult:
        if self.mode == "pilot":
            loss = self.loss_and_grads(batch)
        else:
            x_soft = self.decoder.forward(batch.y)[0]
            decisions = self.constellation.points[nearest_indices(x_soft, self.constellation)]
            loss = self.loss_and_grads(batch, targets=decisions)
        if not np.isfinite(loss) or not self.params.grads_finite():
            raise DivergenceError(self.name, self.steps_taken, loss)
        adam_step(self.params, self.adam, self.lr)
        self.steps_taken += 1

        ser = self._batch_ser(batch)
        if self.mode == "pilot":
            self.pilot_steps += 1
            if ser <= self.switch_ser:
                self.logger.debug(f"Switching to decision-directed mode after {self.pilot_steps} pilot steps")
                self.mode = "decision"
            elif self.pilot_steps >= self.pretrain_budget:
                raise ConvergenceError(
                    f"Pilot pre-training did not reach SER {self.switch_ser} in {self.pilot_steps} steps",
                    {"ser": ser, "steps": self.pilot_steps},
                )
        return StepResult(loss=loss, parts={"ser": ser, "decision": float(self.mode == "decision")})


@dataclass
class DdLmsResult:
    taps: np.ndarray
    switched_at: int | None
    trace: list[tuple[int, float, float, DdMode]] = field(default_factory=list)


def ddlms_run(
    y: np.ndarray,
    pilots: SymbolFrame,
    switch_ser: float = 1e-2,
    n_taps: int = 25,
    lr: float = 1e-2,
    batch_size: int = 64,
    pretrain_budget: int = 2000,
    passes: int = 1,
) -> DdLmsResult:
    """Sweep the frame in consecutive minibatches; trace rows are (step, loss, batch SER, mode)."""
    trainer = DdLmsTrainer(pilots.constellation, lr, n_taps, switch_ser, pretrain_budget)
    symbols = pilots.symbols
    result = DdLmsResult(taps=np.empty(0), switched_at=None)
    for _ in range(passes):
        for start in range(0, symbols.size - batch_size + 1, batch_size):
            batch = make_minibatch(y, symbols, start, batch_size, trainer.guard_symbols)
            mode = trainer.mode
            step = trainer.train_step(batch)
            result.trace.append((trainer.steps_taken, step.loss, step.parts["ser"], mode))
            if result.switched_at is None and trainer.mode == "decision":
                result.switched_at = trainer.steps_taken
    result.taps = trainer.decoder.taps
    return result
