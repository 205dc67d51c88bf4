"""GMP feature vectors s^k built from the received 2-SPS signal around sample 2k."""

import numpy as np

from blindeq.autodiff.mlp import complex_to_pairs
from blindeq.channels.gmp import GmpIndexSets, gmp_basis
from blindeq.dsp.signal import ComplexSignal

FeatureExtractorConfig = GmpIndexSets

# Fiber receiver: 43 + 11 + 7 linear/self terms, 33 lagging and 33 leading cross terms.
FIBER_FEATURES = FeatureExtractorConfig(
    a_lags={1: range(-21, 22), 3: range(-5, 6), 5: range(-3, 4)},
    b_lags={3: range(-5, 6)},
    b_shifts=(1, 2, 3),
    c_lags={3: range(-5, 6)},
    c_shifts=(1, 2, 3),
)

# PA receiver: orders 1..7 with a wide linear window, order-3 cross terms.
PA_FEATURES = FeatureExtractorConfig(
    a_lags={1: range(-15, 16), **{p: range(-3, 4) for p in range(2, 8)}},
    b_lags={3: range(-3, 4)},
    b_shifts=(1, 2, 3),
    c_lags={3: range(-3, 4)},
    c_shifts=(1, 2, 3),
)


def center_feature_index(cfg: FeatureExtractorConfig) -> int:
    """Position of the raw center sample (p=1, l=0) in the feature vector."""
    return cfg.index_of(("a", 1, 0, 0))


def feature_guard_symbols(cfg: FeatureExtractorConfig) -> int:
    """Half the feature window, rounded up, counted in symbols like an FIR of equal span."""
    return -(-(2 * cfg.max_shift() + 1) // 2)


def feature_matrix(
    y: ComplexSignal | np.ndarray,
    cfg: FeatureExtractorConfig,
    sps: int = 2,
) -> np.ndarray:
    """Complex feature rows for every symbol, shape (n_symbols, n_features)."""
    samples = y.samples if isinstance(y, ComplexSignal) else np.asarray(y, dtype=np.complex128)
    rows = np.arange(0, samples.size - sps + 1, sps)
    return gmp_basis(samples, cfg, rows=rows)


def extract_gmp_features(
    y: ComplexSignal | np.ndarray,
    cfg: FeatureExtractorConfig,
    k: int,
    sps: int = 2,
) -> np.ndarray:
    samples = y.samples if isinstance(y, ComplexSignal) else np.asarray(y, dtype=np.complex128)
    return gmp_basis(samples, cfg, rows=np.array([sps * k]))[0]


def feature_pairs(features: np.ndarray) -> np.ndarray:
    """Complex features as interleaved real pairs, the network input layout."""
    return complex_to_pairs(features)
