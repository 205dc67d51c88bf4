from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ComplexSignal(BaseModel):
    """Complex baseband samples with their samples-per-symbol rate.

    ``delay`` is the accumulated group delay in samples introduced by
    filtering ops, so frames can be aligned by bookkeeping instead of search.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    samples: Any
    sps: int = Field(default=1, ge=1)
    delay: int = 0

    @field_validator("samples", mode="before")
    @classmethod
    def validate_samples(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {arr.shape}")
        return arr

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n_symbols(self) -> int:
        return len(self) // self.sps

    def power(self) -> float:
        """Mean |sample|^2."""
        if len(self) == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def replace(self, samples: np.ndarray, sps: int | None = None, delay: int | None = None) -> "ComplexSignal":
        return ComplexSignal(
            samples=samples,
            sps=self.sps if sps is None else sps,
            delay=self.delay if delay is None else delay,
        )
