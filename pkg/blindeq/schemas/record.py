from datetime import datetime, timezone
from typing import Annotated

from pydantic import BaseModel, Field

from blindeq import __version__
from blindeq.schemas.experiment import ExperimentConfig


class TracePoint(BaseModel):
    """Loss and held-out SER after one gradient update."""
    step: int
    loss: float
    ser: Annotated[float, Field(ge=0, le=1)]


class PointResult(BaseModel):
    """Outcome of one equalizer at one sweep point (or grid cell)."""

    axis_value: float | None = None
    equalizer: str
    ser: Annotated[float, Field(ge=0, le=1)]
    errors: int = 0
    compared: int = 0
    censored: Annotated[bool, Field(description="Fewer errors than the target within the symbol cap")] = False
    diverged: bool = False
    unstable: bool = False
    loss_final: float | None = None
    steps: int = 0
    wall_ms: float = 0.0
    seed: int
    lr: float | None = None
    batch_size: int | None = None
    delay: int = 0
    rotation: str = "1"
    checksum: str | None = None
    trace: list[TracePoint] = Field(default_factory=list)


class ExperimentRecord(BaseModel):
    """Persisted result of an experiment run: config echo plus per-point metrics."""

    config: ExperimentConfig
    version: str = __version__
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    wall_ms: float = 0.0
    points: list[PointResult] = Field(default_factory=list)

    @property
    def all_diverged(self) -> bool:
        trained = [p for p in self.points if p.steps > 0 or p.diverged]
        return bool(trained) and all(p.diverged for p in trained)
