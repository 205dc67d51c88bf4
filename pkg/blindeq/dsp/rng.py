from typing import ClassVar

import numpy as np


class SeededRng:
    """Counter-based random stream (Philox4x64-10 keyed by a SeedSequence).

    Child streams are derived from (seed, stream path) so that every sweep point
    and every dataset draws from its own disjoint, reproducible stream.
    """

    ALGORITHM: ClassVar[str] = "philox4x64-10/seedsequence"

    def __init__(self, seed: int, stream: tuple[int, ...] = ()) -> None:
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def child(self, *keys: int) -> "SeededRng":
        """Derive an independent stream addressed by ``keys`` below this one."""
        return SeededRng(self.seed, self.stream + tuple(keys))

    def integers(self, low: int, high: int, size: int | tuple[int, ...]) -> np.ndarray:
        return self.generator.integers(low, high, size=size)

    def normal(self, size: int | tuple[int, ...]) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low: float, high: float, size: int | tuple[int, ...]) -> np.ndarray:
        return self.generator.uniform(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"
