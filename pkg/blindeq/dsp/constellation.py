from functools import lru_cache
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from blindeq.core.exceptions import InvalidParameterError, UnsupportedOrderError
from blindeq.dsp.rng import SeededRng

SUPPORTED_ORDERS = (4, 16, 64, 256)


class Constellation(BaseModel):
    """Finite codebook of unit-average-energy complex points."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    points: Any
    name: str = "custom"

    @field_validator("points", mode="before")
    @classmethod
    def validate_points(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.complex128)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a constellation needs at least two points")
        return arr

    @model_validator(mode="after")
    def validate_geometry(self) -> "Constellation":
        energy = float(np.mean(np.abs(self.points) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"constellation energy must be 1, got {energy}")
        if np.unique(self.points).size != self.points.size:
            raise ValueError("constellation points must be distinct")
        return self

    @property
    def order(self) -> int:
        return int(self.points.size)

    @property
    def energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def r2(self) -> float:
        """Constant-modulus dispersion constant E|x|^4 / E|x|^2."""
        return float(np.mean(np.abs(self.points) ** 4) / self.energy)

    @property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())


class SymbolFrame(BaseModel):
    """Sequence of symbols drawn from a constellation, with their codebook indices."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    indices: Any
    constellation: Constellation

    @field_validator("indices", mode="before")
    @classmethod
    def validate_indices(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.int64).reshape(-1)

    @model_validator(mode="after")
    def validate_membership(self) -> "SymbolFrame":
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.constellation.order):
            raise ValueError("symbol indices outside the constellation")
        return self

    @property
    def symbols(self) -> np.ndarray:
        return self.constellation.points[self.indices]

    def __len__(self) -> int:
        return int(self.indices.size)

    def slice(self, start: int, stop: int) -> "SymbolFrame":
        return SymbolFrame(indices=self.indices[start:stop], constellation=self.constellation)


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


@lru_cache
def make_qam(order: int) -> Constellation:
    """Square Gray-indexed QAM normalized to unit average energy.

    The high half of the index bits selects the in-phase level and the low half
    the quadrature level; each half is Gray coded along its axis.
    """
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrderError(order)
    side = int(round(np.sqrt(order)))
    half_bits = int(np.log2(side))
    idx = np.arange(order)
    i_pos = _gray_to_binary(idx >> half_bits)
    q_pos = _gray_to_binary(idx & (side - 1))
    levels_i = 2 * i_pos - (side - 1)
    levels_q = 2 * q_pos - (side - 1)
    scale = np.sqrt(2.0 * (order - 1) / 3.0)
    points = (levels_i + 1j * levels_q) / scale
    return Constellation(points=points, name=f"{order}-QAM")


def draw_symbols(c: Constellation, n: int, rng: SeededRng) -> SymbolFrame:
    """Draw ``n`` iid uniform symbols from ``c``."""
    if n <= 0:
        raise InvalidParameterError(f"symbol count must be positive, got {n}", {"n": n})
    return SymbolFrame(indices=rng.integers(0, c.order, n), constellation=c)
