"""Decoders (observation -> soft symbols) and encoders (symbols -> reconstructed observation)."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from blindeq.autodiff.mlp import (
    MlpSpec,
    MlpTape,
    complex_to_pairs,
    init_mlp,
    mlp_backward,
    mlp_forward,
    pairs_to_complex,
    penalized_weights,
)
from blindeq.autodiff.params import ParamSet, ParamTensor
from blindeq.channels.gmp import GmpIndexSets, gmp_basis, mp_term_wirtinger
from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.rng import SeededRng
from blindeq.equalizers.base import BlockDecoder, BlockEncoder
from blindeq.equalizers.features import (
    FeatureExtractorConfig,
    center_feature_index,
    feature_guard_symbols,
    feature_matrix,
)
from blindeq.equalizers.fir import correlate_grad, dirac_taps, same_convolve, tap_windows


def complex_to_pair_array(z: np.ndarray) -> np.ndarray:
    """Complex gradient dL/dRe + j dL/dIm as the (re, im) layout of a parameter grad."""
    return np.stack([z.real, z.imag], axis=-1)


def zero_stuff(symbols: np.ndarray, sps: int = 2) -> np.ndarray:
    u = np.zeros(symbols.size * sps, dtype=np.complex128)
    u[::sps] = symbols
    return u


class FirDecoder(BlockDecoder):
    """Dirac-initialized T/2-spaced FIR."""

    def __init__(self, params: ParamSet, n_taps: int = 25, prefix: str = "dec.") -> None:
        self.tensor = params.add(ParamTensor.from_complex(f"{prefix}taps", dirac_taps(n_taps)))

    @property
    def taps(self) -> np.ndarray:
        return self.tensor.as_complex()

    @property
    def guard_symbols(self) -> int:
        return -(-self.taps.size // 2)

    def forward(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        windows = tap_windows(y, self.taps.size, stride=self.sps)
        return windows @ self.taps, windows

    def backward(self, cache: object, g: np.ndarray) -> None:
        windows = cache
        assert isinstance(windows, np.ndarray)
        self.tensor.grad += complex_to_pair_array(np.conj(windows).T @ g)

    def equalize(self, y: np.ndarray, chunk_symbols: int = 1 << 16) -> np.ndarray:
        return same_convolve(y, self.taps)[::self.sps]


class MpDecoder(BlockDecoder):
    """Soft symbol linear in the GMP feature vector; starts as the raw center sample."""

    def __init__(self, params: ParamSet, cfg: FeatureExtractorConfig, prefix: str = "dec.") -> None:
        self.cfg = cfg
        init = np.zeros(cfg.size, dtype=np.complex128)
        init[center_feature_index(cfg)] = 1.0
        self.tensor = params.add(ParamTensor.from_complex(f"{prefix}coeffs", init))

    @property
    def guard_symbols(self) -> int:
        return feature_guard_symbols(self.cfg)

    def forward(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        features = feature_matrix(y, self.cfg, self.sps)
        return features @ self.tensor.as_complex(), features

    def backward(self, cache: object, g: np.ndarray) -> None:
        features = cache
        assert isinstance(features, np.ndarray)
        self.tensor.grad += complex_to_pair_array(np.conj(features).T @ g)


@dataclass
class _NnCache:
    tape: MlpTape


class NnDecoder(BlockDecoder):
    """MLP on GMP features with a residual path from the raw center sample.

    The output layer starts at zero so the network starts as the identity on y[2k].
    """

    def __init__(
        self,
        params: ParamSet,
        cfg: FeatureExtractorConfig,
        hidden: tuple[int, ...],
        rng: SeededRng,
        prefix: str = "dec.",
    ) -> None:
        self.cfg = cfg
        self.params = params
        self.prefix = prefix
        self.spec = MlpSpec(
            layer_widths=(2 * cfg.size, *hidden, 2),
            residual_input_to_output=True,
            residual_index=2 * center_feature_index(cfg),
        )
        for tensor in init_mlp(self.spec, rng, prefix=prefix, zero_output=True):
            params.add(tensor)

    @property
    def guard_symbols(self) -> int:
        return feature_guard_symbols(self.cfg)

    @property
    def penalty_names(self) -> list[str]:
        return penalized_weights(self.spec, self.prefix)

    def forward(self, y: np.ndarray) -> tuple[np.ndarray, _NnCache]:
        inputs = complex_to_pairs(feature_matrix(y, self.cfg, self.sps))
        out, tape = mlp_forward(self.spec, self.params, inputs, prefix=self.prefix)
        return pairs_to_complex(out)[:, 0], _NnCache(tape)

    def backward(self, cache: object, g: np.ndarray) -> None:
        assert isinstance(cache, _NnCache)
        mlp_backward(cache.tape, self.params, complex_to_pair_array(g))


def equalize_nn(y: np.ndarray, decoder: NnDecoder) -> np.ndarray:
    """Per-symbol network output on s^k plus the residual center sample."""
    return decoder.equalize(y)


class FirEncoder(BlockEncoder):
    """Zero-stuffed symbols through a Dirac-initialized FIR."""

    def __init__(self, params: ParamSet, n_taps: int = 25, prefix: str = "enc.") -> None:
        self.tensor = params.add(ParamTensor.from_complex(f"{prefix}taps", dirac_taps(n_taps)))

    @property
    def taps(self) -> np.ndarray:
        return self.tensor.as_complex()

    @property
    def guard_symbols(self) -> int:
        return -(-self.taps.size // 2)

    def forward(self, symbols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = zero_stuff(symbols, self.sps)
        return same_convolve(u, self.taps), u

    def backward(self, cache: object, g: np.ndarray) -> np.ndarray:
        u = cache
        assert isinstance(u, np.ndarray)
        windows = tap_windows(u, self.taps.size)
        self.tensor.grad += complex_to_pair_array(np.conj(windows).T @ g)
        return correlate_grad(g, self.taps)[::self.sps]


@dataclass
class _MpEncoderCache:
    u: np.ndarray
    basis: np.ndarray


class MpEncoder(BlockEncoder):
    """Memory polynomial over the zero-stuffed symbols; starts as the identity."""

    def __init__(self, params: ParamSet, index_sets: GmpIndexSets, prefix: str = "enc.") -> None:
        if not index_sets.is_memory_polynomial:
            raise InvalidParameterError("MP encoder takes a-terms only")
        self.index_sets = index_sets
        init = np.zeros(index_sets.size, dtype=np.complex128)
        init[index_sets.index_of(("a", 1, 0, 0))] = 1.0
        self.tensor = params.add(ParamTensor.from_complex(f"{prefix}coeffs", init))

    @property
    def guard_symbols(self) -> int:
        return -(-(2 * self.index_sets.max_shift() + 1) // 2)

    def forward(self, symbols: np.ndarray) -> tuple[np.ndarray, _MpEncoderCache]:
        u = zero_stuff(symbols, self.sps)
        basis = gmp_basis(u, self.index_sets)
        return basis @ self.tensor.as_complex(), _MpEncoderCache(u, basis)

    def backward(self, cache: object, g: np.ndarray) -> np.ndarray:
        assert isinstance(cache, _MpEncoderCache)
        u = cache.u
        coeffs = self.tensor.as_complex()
        self.tensor.grad += complex_to_pair_array(np.conj(cache.basis).T @ g)

        n = u.size
        derivs = {p: mp_term_wirtinger(u, p) for p in self.index_sets.a_lags}
        g_u = np.zeros(n, dtype=np.complex128)
        for c, (_, p, l, _) in zip(coeffs, self.index_sets.terms()):
            # y[m + l] depends on u[m] through this term.
            shifted = np.zeros(n, dtype=np.complex128)
            lo, hi = max(0, -l), min(n, n - l)
            shifted[lo:hi] = g[lo + l:hi + l]
            d_u, d_conj = derivs[p]
            g_u += np.conj(shifted) * c * d_conj + shifted * np.conj(c * d_u)
        return g_u[::self.sps]


@dataclass
class _NnEncoderCache:
    tape: MlpTape
    n_samples: int


class NnEncoder(BlockEncoder):
    """MLP on a window of zero-stuffed symbols centered at each output sample."""

    def __init__(
        self,
        params: ParamSet,
        window: int,
        hidden: tuple[int, ...],
        rng: SeededRng,
        prefix: str = "enc.",
    ) -> None:
        if window % 2 == 0:
            raise InvalidParameterError(f"encoder window must be odd, got {window}")
        self.window = window
        self.params = params
        self.prefix = prefix
        self.spec = MlpSpec(layer_widths=(2 * window, *hidden, 2))
        for tensor in init_mlp(self.spec, rng, prefix=prefix):
            params.add(tensor)

    @property
    def guard_symbols(self) -> int:
        return -(-self.window // 2)

    def _windows(self, u: np.ndarray) -> np.ndarray:
        c = self.window // 2
        padded = np.concatenate([np.zeros(c, dtype=u.dtype), u, np.zeros(c, dtype=u.dtype)])
        return sliding_window_view(padded, self.window)

    def forward(self, symbols: np.ndarray) -> tuple[np.ndarray, _NnEncoderCache]:
        u = zero_stuff(symbols, self.sps)
        out, tape = mlp_forward(self.spec, self.params, complex_to_pairs(self._windows(u)), prefix=self.prefix)
        return pairs_to_complex(out)[:, 0], _NnEncoderCache(tape, u.size)

    def backward(self, cache: object, g: np.ndarray) -> np.ndarray:
        assert isinstance(cache, _NnEncoderCache)
        _, input_grad = mlp_backward(cache.tape, self.params, complex_to_pair_array(g))
        g_windows = pairs_to_complex(input_grad)
        n, c = cache.n_samples, self.window // 2
        # Window row n, column j holds u[n - c + j].
        g_padded = np.zeros(n + 2 * c, dtype=np.complex128)
        for j in range(self.window):
            g_padded[j:j + n] += g_windows[:, j]
        return g_padded[c:c + n][::self.sps]
