from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from blindeq.autodiff.adam import AdamState
from blindeq.autodiff.params import ParamSet
from blindeq.core.exceptions import InvalidParameterError
from blindeq.core.logging import get_logger
from blindeq.dsp.constellation import Constellation
from blindeq.equalizers.metrics import AmbiguitySearch


@dataclass(frozen=True)
class Minibatch:
    """2-SPS observation chunk with its aligned symbols.

    ``mask`` marks the symbols that count in losses; the unmasked ones at both
    ends are context for filters and feature windows.
    """

    y: np.ndarray
    symbols: np.ndarray
    mask: np.ndarray
    sps: int = 2

    @property
    def n_symbols(self) -> int:
        return int(self.symbols.size)

    @property
    def sample_mask(self) -> np.ndarray:
        return np.repeat(self.mask, self.sps)


@dataclass
class StepResult:
    loss: float
    parts: dict[str, float] = field(default_factory=dict)


class BaseEqualizer(ABC):
    """Base class for all trainable equalizers."""

    name: str = "equalizer"
    # Ambiguity set searched when scoring the decided symbols
    search: AmbiguitySearch = "none"

    def __init__(self, constellation: Constellation, lr: float, params: ParamSet | None = None) -> None:
        self.logger = get_logger(self.__class__.__name__)
        self.constellation = constellation
        self.lr = lr
        self.params = params if params is not None else ParamSet()
        self.adam = AdamState()
        self.steps_taken = 0

    @abstractmethod
    def train_step(self, batch: Minibatch) -> StepResult:
        """Run one gradient update on ``batch``."""
        pass

    @abstractmethod
    def equalize(self, y: np.ndarray) -> np.ndarray:
        """Equalized soft symbols for a full 2-SPS observation."""
        pass

    @property
    @abstractmethod
    def guard_symbols(self) -> int:
        """Symbols at each edge whose outputs lack full filter context."""
        pass

    def checksum(self) -> str:
        return self.params.checksum()


class BlockDecoder(ABC):
    """Trainable map from a 2-SPS observation block to soft symbols."""

    sps: int = 2

    @abstractmethod
    def forward(self, y: np.ndarray) -> tuple[np.ndarray, object]:
        pass

    @abstractmethod
    def backward(self, cache: object, g: np.ndarray) -> None:
        """Accumulate parameter gradients given dL/dRe + j dL/dIm of the soft symbols."""
        pass

    @property
    @abstractmethod
    def guard_symbols(self) -> int:
        pass

    @property
    def penalty_names(self) -> list[str]:
        return []

    def equalize(self, y: np.ndarray, chunk_symbols: int = 1 << 16) -> np.ndarray:
        """Blockwise forward pass with enough context for identical results."""
        n_sym = y.size // self.sps
        if n_sym <= chunk_symbols:
            return self.forward(y)[0]
        g = self.guard_symbols
        out = np.empty(n_sym, dtype=np.complex128)
        for start in range(0, n_sym, chunk_symbols):
            stop = min(start + chunk_symbols, n_sym)
            lo, hi = max(start - g, 0), min(stop + g, n_sym)
            block = self.forward(y[lo * self.sps:hi * self.sps])[0]
            out[start:stop] = block[start - lo:stop - lo]
        return out


class BlockEncoder(ABC):
    """Trainable map from (straight-through) hard symbols to a reconstructed 2-SPS observation."""

    sps: int = 2

    @abstractmethod
    def forward(self, symbols: np.ndarray) -> tuple[np.ndarray, object]:
        pass

    @abstractmethod
    def backward(self, cache: object, g: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients; return the gradient wrt the input symbols."""
        pass

    @property
    @abstractmethod
    def guard_symbols(self) -> int:
        pass


def make_minibatch(
    y: np.ndarray,
    symbols: np.ndarray,
    start: int,
    n_symbols: int,
    guard: int,
    sps: int = 2,
) -> Minibatch:
    """Symbols [start, start + n_symbols) with up to ``guard`` context symbols on each side."""
    total = symbols.size
    if y.size != sps * total:
        raise InvalidParameterError(f"{y.size} samples do not match {total} symbols at {sps} SPS")
    if not 0 <= start < start + n_symbols <= total:
        raise InvalidParameterError(f"batch [{start}, {start + n_symbols}) outside {total} symbols")
    lo, hi = max(start - guard, 0), min(start + n_symbols + guard, total)
    mask = np.zeros(hi - lo, dtype=bool)
    mask[start - lo:start - lo + n_symbols] = True
    return Minibatch(y=y[lo * sps:hi * sps], symbols=symbols[lo:hi], mask=mask, sps=sps)
