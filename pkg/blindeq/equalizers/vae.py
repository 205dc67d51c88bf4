"""VAE baseline with a closed-form ELBO for linear and memory-polynomial channels.

The encoder maps the zero-stuffed symbol sequence u (2 SPS) through
y_hat[n] = sum_{p,l} C[p, l] u[n-l] |u[n-l]|^(p-1). Symbols are independent
under the soft demapper output Q, so every symbol k adds an independent
contribution v_l(x_k) = sum_p C[p, l] x_k |x_k|^(p-1) to sample 2k + l.
With V[l, j] = v_l(X_j) the expected distortion is

    A = sum_n w_n |y_n - E y_hat_n|^2 + sum_{k,l} w_{2k+l} Var_Q(v_l(x_k)),

and the ELBO is -W ln(sigma_w2) - A / sigma_w2 + H(Q) with the additive
constant (prior and Gaussian normalizers) dropped. W is the number of
weighted samples.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, xlogy

from blindeq.autodiff.adam import adam_step
from blindeq.autodiff.params import ParamSet, ParamTensor
from blindeq.channels.gmp import GmpIndexSets, GmpModel, mp_term
from blindeq.core.exceptions import DivergenceError, InvalidParameterError
from blindeq.dsp.constellation import Constellation
from blindeq.equalizers.base import BaseEqualizer, BlockDecoder, Minibatch, StepResult
from blindeq.equalizers.components import complex_to_pair_array
from blindeq.equalizers.fir import FirEqualizer, equalize_fir

DEFAULT_SIGMA_D2 = 0.1
DEFAULT_SIGMA_W2 = 0.1


def soft_demap(
    x_soft: np.ndarray,
    constellation: Constellation,
    sigma_d2: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Q, ln Q and squared distances for Q[k, m] ~ exp(-|x_k - X_m|^2 / sigma_d2)."""
    if sigma_d2 <= 0:
        raise InvalidParameterError(f"sigma_d2 must be > 0, got {sigma_d2}")
    dist = np.abs(np.asarray(x_soft)[:, None] - constellation.points[None, :]) ** 2
    log_q = log_softmax(-dist / sigma_d2, axis=1)
    return np.exp(log_q), log_q, dist


def vae_decoder_soft(
    y: np.ndarray,
    eq: FirEqualizer,
    sigma_d2: float,
    constellation: Constellation,
) -> np.ndarray:
    return soft_demap(equalize_fir(y, eq), constellation, sigma_d2)[0]


@dataclass(frozen=True)
class MpLayout:
    """Dense (order, lag) table view of a memory polynomial's a-terms."""

    orders: tuple[int, ...]
    lags: np.ndarray
    slots: tuple[tuple[int, int], ...]

    @classmethod
    def from_index_sets(cls, index_sets: GmpIndexSets) -> "MpLayout":
        if not index_sets.is_memory_polynomial:
            raise InvalidParameterError("closed-form ELBO supports memory-polynomial terms only")
        orders = tuple(index_sets.a_lags)
        lags = sorted({l for ls in index_sets.a_lags.values() for l in ls})
        col = {l: i for i, l in enumerate(lags)}
        row = {p: i for i, p in enumerate(orders)}
        slots = tuple((row[p], col[l]) for _, p, l, _ in index_sets.terms())
        return cls(orders=orders, lags=np.asarray(lags, dtype=np.int64), slots=slots)

    def table(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros((len(self.orders), self.lags.size), dtype=np.complex128)
        for c, (i, j) in zip(coeffs, self.slots):
            out[i, j] = c
        return out

    def gather(self, table: np.ndarray) -> np.ndarray:
        return np.array([table[i, j] for i, j in self.slots], dtype=np.complex128)

    def basis(self, points: np.ndarray) -> np.ndarray:
        return np.stack([mp_term(points, p) for p in self.orders])


@dataclass
class ElboTerms:
    """ELBO value plus the intermediates its gradients reuse."""

    value: float
    distortion: float
    entropy: float
    weight: float
    sigma_w2: float
    q: np.ndarray
    log_q: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    mean: np.ndarray
    resid: np.ndarray
    omega: np.ndarray
    symbol_w: np.ndarray

    def grad_q(self) -> np.ndarray:
        """dELBO/dQ treating every entry of Q as free."""
        rv = self.omega * np.conj(self.resid + self.mean)
        d_distortion = -2.0 * np.real(rv @ self.v) + self.omega @ (np.abs(self.v) ** 2)
        return -d_distortion / self.sigma_w2 - self.symbol_w[:, None] * (self.log_q + 1.0)

    def grad_table(self) -> np.ndarray:
        """Complex gradient of the ELBO wrt the (order, lag) coefficient table."""
        g_v = -2.0 * (self.omega * (self.resid + self.mean)).T @ self.q
        g_v += 2.0 * self.v * (self.omega.T @ self.q)
        return -(g_v @ np.conj(self.phi).T).T / self.sigma_w2

    def grad_log_sigma_w2(self) -> float:
        return -self.weight + self.distortion / self.sigma_w2


def _symbol_weights(mask: np.ndarray | None, n_symbols: int) -> np.ndarray:
    if mask is None:
        return np.ones(n_symbols)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (n_symbols,):
        raise InvalidParameterError(f"mask shape {mask.shape} does not match {n_symbols} symbols")
    return mask


def elbo_terms(
    y: np.ndarray,
    q: np.ndarray,
    layout: MpLayout,
    table: np.ndarray,
    sigma_w2: float,
    constellation: Constellation,
    sps: int = 2,
    mask: np.ndarray | None = None,
    log_q: np.ndarray | None = None,
) -> ElboTerms:
    if sigma_w2 <= 0 or not np.isfinite(sigma_w2):
        raise InvalidParameterError(f"sigma_w2 must be > 0, got {sigma_w2}")
    y = np.asarray(y, dtype=np.complex128)
    q = np.asarray(q, dtype=np.float64)
    n_symbols = q.shape[0]
    if y.size != sps * n_symbols:
        raise InvalidParameterError(f"{y.size} samples do not match {n_symbols} symbols at {sps} SPS")
    if log_q is None:
        with np.errstate(divide="ignore"):
            log_q = np.log(q)
        log_q = np.where(q > 0, log_q, 0.0)

    symbol_w = _symbol_weights(mask, n_symbols)
    sample_w = np.repeat(symbol_w, sps)

    phi = layout.basis(constellation.points)
    v = table.T @ phi
    mean = q @ v.T
    second = q @ (np.abs(v) ** 2).T

    idx = sps * np.arange(n_symbols)[:, None] + layout.lags[None, :]
    valid = (idx >= 0) & (idx < y.size)
    clipped = np.clip(idx, 0, y.size - 1)
    omega = np.where(valid, sample_w[clipped], 0.0)

    predicted = np.zeros(y.size, dtype=np.complex128)
    np.add.at(predicted, idx[valid], mean[valid])
    r = y - predicted
    resid = np.where(valid, r[clipped], 0.0)

    distortion = float(np.sum(sample_w * np.abs(r) ** 2) + np.sum(omega * (second - np.abs(mean) ** 2)))
    entropy = float(-np.sum(symbol_w[:, None] * xlogy(q, q)))
    weight = float(sample_w.sum())
    value = -weight * np.log(sigma_w2) - distortion / sigma_w2 + entropy
    return ElboTerms(
        value=float(value),
        distortion=distortion,
        entropy=entropy,
        weight=weight,
        sigma_w2=sigma_w2,
        q=q,
        log_q=log_q,
        v=v,
        phi=phi,
        mean=mean,
        resid=resid,
        omega=omega,
        symbol_w=symbol_w,
    )


def linear_index_sets(n_taps: int) -> GmpIndexSets:
    """Order-1 memory polynomial equivalent to a centered FIR of ``n_taps`` taps."""
    if n_taps < 1 or n_taps % 2 == 0:
        raise InvalidParameterError(f"tap count must be odd and positive, got {n_taps}")
    c = n_taps // 2
    return GmpIndexSets(a_lags={1: range(-c, c + 1)})


def elbo_linear(
    y: np.ndarray,
    q: np.ndarray,
    h: np.ndarray,
    sigma_w2: float,
    constellation: Constellation,
    sps: int = 2,
    mask: np.ndarray | None = None,
) -> float:
    """Closed-form ELBO for y = h * u + w with centered taps h (FIR encoder convention)."""
    h = np.asarray(h, dtype=np.complex128)
    if h.size == 0:
        raise InvalidParameterError("channel taps must be nonempty")
    layout = MpLayout.from_index_sets(linear_index_sets(h.size))
    return elbo_terms(y, q, layout, layout.table(h), sigma_w2, constellation, sps, mask).value


def elbo_mp(
    y: np.ndarray,
    q: np.ndarray,
    mp: GmpModel,
    sigma_w2: float,
    constellation: Constellation,
    sps: int = 2,
    mask: np.ndarray | None = None,
) -> float:
    """Closed-form ELBO for a memory-polynomial channel over the zero-stuffed symbols."""
    layout = MpLayout.from_index_sets(mp.index_sets)
    return elbo_terms(y, q, layout, layout.table(mp.coeffs), sigma_w2, constellation, sps, mask).value


class VaeTrainer(BaseEqualizer):
    """Minimizes -ELBO per weighted sample over decoder, sigma_d2, encoder coefficients and sigma_w2."""

    name = "vae"

    def __init__(
        self,
        constellation: Constellation,
        decoder: BlockDecoder,
        encoder_sets: GmpIndexSets,
        params: ParamSet,
        lr: float = 1e-3,
        sigma_d2: float | None = None,
        sigma_w2: float = DEFAULT_SIGMA_W2,
    ) -> None:
        super().__init__(constellation, lr, params)
        self.decoder = decoder
        self.encoder_sets = encoder_sets
        self.layout = MpLayout.from_index_sets(encoder_sets)
        init = np.zeros(encoder_sets.size, dtype=np.complex128)
        init[encoder_sets.index_of(("a", 1, 0, 0))] = 1.0
        self.coeffs = params.add(ParamTensor.from_complex("enc.coeffs", init))
        sd2 = DEFAULT_SIGMA_D2 if sigma_d2 is None else sigma_d2
        if sd2 <= 0 or sigma_w2 <= 0:
            raise InvalidParameterError("noise variances must be > 0")
        self.log_sigma_d2 = params.add(ParamTensor("vae.log_sigma_d2", np.array([np.log(sd2)])))
        self.log_sigma_w2 = params.add(ParamTensor("vae.log_sigma_w2", np.array([np.log(sigma_w2)])))

    @property
    def sigma_d2(self) -> float:
        return float(np.exp(self.log_sigma_d2.values[0]))

    @property
    def sigma_w2(self) -> float:
        return float(np.exp(self.log_sigma_w2.values[0]))

    @property
    def guard_symbols(self) -> int:
        return max(self.decoder.guard_symbols, -(-(2 * int(np.abs(self.layout.lags).max()) + 1) // 2))

    def encoder_model(self) -> GmpModel:
        """Current channel estimate, exportable as a GMP text table."""
        return GmpModel(index_sets=self.encoder_sets, coeffs=self.coeffs.as_complex())

    def loss_and_grads(self, batch: Minibatch) -> ElboTerms:
        """Forward and backward pass of -ELBO / W; gradients land in ``self.params``."""
        self.params.zero_grad()
        x_soft, cache = self.decoder.forward(batch.y)
        sigma_d2 = self.sigma_d2
        q, log_q, dist = soft_demap(x_soft, self.constellation, sigma_d2)
        table = self.layout.table(self.coeffs.as_complex())
        terms = elbo_terms(
            batch.y, q, self.layout, table, self.sigma_w2, self.constellation,
            sps=batch.sps, mask=batch.mask, log_q=log_q,
        )
        scale = -1.0 / terms.weight

        g_q = scale * terms.grad_q()
        g_logits = q * (g_q - np.sum(q * g_q, axis=1, keepdims=True))
        diff = x_soft[:, None] - self.constellation.points[None, :]
        g_x = np.sum(g_logits * (-2.0 * diff / sigma_d2), axis=1)
        self.decoder.backward(cache, g_x)
        self.log_sigma_d2.grad += np.sum(g_logits * dist / sigma_d2)

        self.coeffs.grad += complex_to_pair_array(scale * self.layout.gather(terms.grad_table()))
        self.log_sigma_w2.grad += scale * terms.grad_log_sigma_w2()
        return terms

    def train_step(self, batch: Minibatch) -> StepResult:
        terms = self.loss_and_grads(batch)
        loss = -terms.value / terms.weight
        if not np.isfinite(loss) or not self.params.grads_finite():
            raise DivergenceError(self.name, self.steps_taken, loss)
        adam_step(self.params, self.adam, self.lr)
        self.steps_taken += 1
        return StepResult(
            loss=loss,
            parts={"distortion": terms.distortion, "entropy": terms.entropy, "sigma_w2": self.sigma_w2},
        )

    def equalize(self, y: np.ndarray) -> np.ndarray:
        return self.decoder.equalize(y)


def vae_train_step(trainer: VaeTrainer, batch: Minibatch) -> tuple[float, VaeTrainer]:
    result = trainer.train_step(batch)
    return result.loss, trainer
