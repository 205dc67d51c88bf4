"""VQ-VAE blind equalizer: decoder, hard quantizer, straight-through encoder and the commitment loss."""

from dataclasses import dataclass

import numpy as np

from blindeq.autodiff.adam import adam_step
from blindeq.autodiff.params import ParamSet
from blindeq.autodiff.penalties import l2_penalty
from blindeq.autodiff.straight_through import straight_through
from blindeq.core.exceptions import DivergenceError, InvalidParameterError
from blindeq.dsp.constellation import Constellation
from blindeq.equalizers.base import BaseEqualizer, BlockDecoder, BlockEncoder, Minibatch, StepResult
from blindeq.equalizers.demapper import nearest_indices

PSI_INIT = 0.5
PSI_FLOOR = 1e-6


@dataclass(frozen=True)
class VqVaeLoss:
    recon: float
    commit: float
    weight_recon: float
    weight_commit: float
    penalty: float = 0.0

    @property
    def total(self) -> float:
        return self.weight_recon * self.recon + self.weight_commit * self.commit + self.penalty


def _masked_mean_sq(diff: np.ndarray, mask: np.ndarray | None) -> tuple[float, int]:
    if mask is None:
        return float(np.mean(np.abs(diff) ** 2)), diff.size
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise InvalidParameterError("loss mask selects no samples")
    return float(np.sum(np.abs(diff[mask]) ** 2) / n), n


def vqvae_loss(
    y: np.ndarray,
    x_soft: np.ndarray,
    x_hard: np.ndarray,
    y_hat: np.ndarray,
    rho: float,
    symbol_mask: np.ndarray | None = None,
    sample_mask: np.ndarray | None = None,
) -> float:
    """Mean per-sample reconstruction error plus rho times the mean per-symbol commitment."""
    if y.shape != y_hat.shape or x_soft.shape != x_hard.shape:
        raise InvalidParameterError("inconsistent loss input shapes")
    recon, _ = _masked_mean_sq(y - y_hat, sample_mask)
    commit, _ = _masked_mean_sq(x_soft - x_hard, symbol_mask)
    return recon + rho * commit


def psi_update(recon_loss: float, commit_loss: float, psi_prev: float) -> float:
    """Next reconstruction weight recon / (recon + commit), kept strictly inside (0, 1)."""
    if recon_loss < 0 or commit_loss < 0:
        raise InvalidParameterError("losses must be non-negative")
    total = recon_loss + commit_loss
    if total == 0:
        return psi_prev
    return float(np.clip(recon_loss / total, PSI_FLOOR, 1.0 - PSI_FLOOR))


@dataclass(frozen=True)
class FrozenQuantization:
    """Quantizer output pinned at one parameter point.

    The encoder then sees x_soft + offset, which equals x_hard at that point and
    has the straight-through derivative around it.
    """

    x_hard: np.ndarray
    offset: np.ndarray


class VqVaeTrainer(BaseEqualizer):
    """Joint decoder/encoder training on the VQ-VAE loss.

    ``rho=None`` selects the dynamic weighting psi * recon + (1 - psi) * commit,
    with psi re-estimated from the previous step's loss terms.
    """

    name = "vqvae"

    def __init__(
        self,
        constellation: Constellation,
        decoder: BlockDecoder,
        encoder: BlockEncoder,
        params: ParamSet,
        lr: float = 1e-3,
        rho: float | None = 1.0,
        l2_weight: float = 0.0,
    ) -> None:
        super().__init__(constellation, lr, params)
        if rho is not None and rho <= 0:
            raise InvalidParameterError(f"rho must be > 0, got {rho}")
        self.decoder = decoder
        self.encoder = encoder
        self.rho = rho
        self.psi = PSI_INIT
        self.l2_weight = l2_weight

    @property
    def dynamic(self) -> bool:
        return self.rho is None

    @property
    def guard_symbols(self) -> int:
        return max(self.decoder.guard_symbols, self.encoder.guard_symbols)

    def _weights(self) -> tuple[float, float]:
        if self.rho is None:
            return self.psi, 1.0 - self.psi
        return 1.0, self.rho

    def quantize(self, x_soft: np.ndarray) -> np.ndarray:
        return self.constellation.points[nearest_indices(x_soft, self.constellation)]

    def loss_and_grads(self, batch: Minibatch, frozen: FrozenQuantization | None = None) -> VqVaeLoss:
        """Forward and backward pass; gradients land in ``self.params`` (zeroed first)."""
        self.params.zero_grad()
        x_soft, dec_cache = self.decoder.forward(batch.y)
        if frozen is None:
            x_hard = self.quantize(x_soft)
            x_enc, st_backward = straight_through(x_soft, x_hard)
        else:
            x_hard = frozen.x_hard
            x_enc = x_soft + frozen.offset
            st_backward = None
        y_hat, enc_cache = self.encoder.forward(x_enc)

        sample_mask, symbol_mask = batch.sample_mask, batch.mask
        recon, n_samples = _masked_mean_sq(batch.y - y_hat, sample_mask)
        commit, n_symbols = _masked_mean_sq(x_soft - x_hard, symbol_mask)
        w_recon, w_commit = self._weights()

        g_y_hat = w_recon * 2.0 * (y_hat - batch.y) * sample_mask / n_samples
        g_x_enc = self.encoder.backward(enc_cache, g_y_hat)
        g_soft = st_backward(g_x_enc)[0] if st_backward is not None else g_x_enc
        g_soft = g_soft + w_commit * 2.0 * (x_soft - x_hard) * symbol_mask / n_symbols
        self.decoder.backward(dec_cache, g_soft)

        penalty = l2_penalty(self.params, self.decoder.penalty_names, self.l2_weight)
        return VqVaeLoss(recon, commit, w_recon, w_commit, penalty)

    def train_step(self, batch: Minibatch) -> StepResult:
        loss = self.loss_and_grads(batch)
        total = loss.total
        if not np.isfinite(total) or not self.params.grads_finite():
            raise DivergenceError(self.name, self.steps_taken, total)
        adam_step(self.params, self.adam, self.lr)
        self.steps_taken += 1
        if self.dynamic:
            self.psi = psi_update(loss.recon, loss.commit, self.psi)
        return StepResult(
            loss=total,
            parts={"recon": loss.recon, "commit": loss.commit, "psi": self.psi, "l2": loss.penalty},
        )

    def equalize(self, y: np.ndarray) -> np.ndarray:
        return self.decoder.equalize(y)


def vqvae_train_step(trainer: VqVaeTrainer, batch: Minibatch) -> tuple[float, VqVaeTrainer]:
    result = trainer.train_step(batch)
    return result.loss, trainer
