import itertools

import numpy as np

from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import Constellation, SymbolFrame

_CHUNK = 1 << 16


def nearest_indices(x: np.ndarray, c: Constellation) -> np.ndarray:
    """Per-symbol Euclidean nearest neighbour; ties go to the lowest index."""
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    out = np.empty(x.size, dtype=np.int64)
    for start in range(0, x.size, _CHUNK):
        block = x[start:start + _CHUNK]
        dist = np.abs(block[:, None] - c.points[None, :]) ** 2
        out[start:start + block.size] = np.argmin(dist, axis=1)
    return out


def demap_hard(x_soft: np.ndarray, c: Constellation) -> SymbolFrame:
    return SymbolFrame(indices=nearest_indices(x_soft, c), constellation=c)


def demap_joint(x_soft: np.ndarray, c: Constellation) -> SymbolFrame:
    """Brute-force argmin of ||x~ - x||^2 over all of X^N, first minimizer in lexicographic order."""
    x_soft = np.asarray(x_soft, dtype=np.complex128).reshape(-1)
    if x_soft.size > 6:
        raise InvalidParameterError("joint demapping is exhaustive; keep N <= 6")
    best_cost, best = np.inf, None
    for combo in itertools.product(range(c.order), repeat=x_soft.size):
        cost = float(np.sum(np.abs(x_soft - c.points[list(combo)]) ** 2))
        if cost < best_cost:
            best_cost, best = cost, combo
    return SymbolFrame(indices=list(best or ()), constellation=c)
