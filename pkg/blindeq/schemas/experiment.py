from enum import Enum
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from blindeq.channels.fiber import NZDSF, SSMF, FiberLink
from blindeq.channels.linear import REFERENCE_TAPS
from blindeq.dsp.constellation import SUPPORTED_ORDERS


class ChannelKind(str, Enum):
    """Channel families."""
    LINEAR = "linear"
    FIBER = "fiber"
    PA = "pa"


class EqualizerKind(str, Enum):
    """Trainable equalizers and reference receivers."""
    VQVAE = "vqvae"
    VAE = "vae"
    CMA = "cma"
    CMA_BATCH = "cma-batch"
    FFE = "ffe"
    NN_SL = "nn-sl"
    DDLMS = "ddlms"
    DBP = "dbp"


class BlockKind(str, Enum):
    """Decoder/encoder realizations."""
    FIR = "fir"
    MP = "mp"
    NN = "nn"


class SweepAxis(str, Enum):
    """Quantity varied across sweep points."""
    SNR = "snr_db"
    LAUNCH_POWER = "launch_power_dbm"
    PA_POWER = "pa_power_dbm"


AXIS_CHANNEL = {
    SweepAxis.SNR: ChannelKind.LINEAR,
    SweepAxis.LAUNCH_POWER: ChannelKind.FIBER,
    SweepAxis.PA_POWER: ChannelKind.PA,
}

Rolloff = Annotated[float, Field(gt=0, le=1, description="Pulse-shaping roll-off")]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LinearChannelSpec(_Strict):
    """T/2-spaced ISI channel plus AWGN."""

    kind: Literal["linear"] = "linear"
    taps: Annotated[
        list[tuple[float, float]] | None,
        Field(description="Channel taps as (re, im) pairs; reference channel when omitted"),
    ] = None
    snr_db: Annotated[float, Field(description="SNR of single-point runs")] = 21.0
    ps_rolloff: Rolloff = 0.1
    edge_symbols: Annotated[int, Field(ge=0, description="Symbols simulated and dropped at each frame edge")] = 32

    def taps_complex(self) -> np.ndarray:
        if self.taps is None:
            return REFERENCE_TAPS.copy()
        return np.array([complex(re, im) for re, im in self.taps])


class FiberChannelSpec(_Strict):
    """Single-span fiber link; ``overrides`` patch any FiberLink field of the preset."""

    kind: Literal["fiber"] = "fiber"
    preset: Literal["ssmf", "nzdsf"] = "ssmf"
    overrides: Annotated[dict[str, float | int | None], Field(default_factory=dict)]
    ps_rolloff: Rolloff = 0.1
    edge_symbols: Annotated[int, Field(ge=0, description="Wrap-around guard of the FFT block")] = 256

    @model_validator(mode="after")
    def validate_link(self) -> "FiberChannelSpec":
        unknown = set(self.overrides) - set(FiberLink.model_fields)
        if unknown:
            raise ValueError(f"unknown fiber parameters: {sorted(unknown)}")
        self.link()
        return self

    def link(self) -> FiberLink:
        base = SSMF if self.preset == "ssmf" else NZDSF
        return FiberLink(**{**base.model_dump(), **self.overrides})


class PaChannelSpec(_Strict):
    """GMP power amplifier followed by AWGN of fixed voltage spread."""

    kind: Literal["pa"] = "pa"
    model: Literal["surrogate", "linear"] = "surrogate"
    avg_output_power_dbm: float = 24.0
    noise_std_volts: Annotated[float, Field(ge=0)] = 0.4
    noise_convention: Literal["complex", "per_dimension"] = "complex"
    ps_rolloff: Rolloff = 0.2
    edge_symbols: Annotated[int, Field(ge=0)] = 32


ChannelSpec = Annotated[
    Union[LinearChannelSpec, FiberChannelSpec, PaChannelSpec],
    Field(discriminator="kind"),
]


class EqualizerSpec(_Strict):
    """One equalizer curve: kind, realization and hyperparameters.

    Unset realization details take per-channel defaults when the equalizer is built.
    """

    kind: EqualizerKind
    label: Annotated[str | None, Field(description="Curve name in results; derived when omitted")] = None
    decoder: BlockKind = BlockKind.FIR
    encoder: BlockKind = BlockKind.FIR
    decoder_taps: Annotated[int, Field(ge=1)] = 31
    encoder_taps: Annotated[int, Field(ge=1)] = 25
    decoder_hidden: tuple[int, ...] | None = None
    encoder_hidden: tuple[int, ...] = (64, 32)
    encoder_window: Annotated[int | None, Field(ge=1)] = None
    encoder_mp_lags: Annotated[
        dict[int, tuple[int, int]] | None,
        Field(description="MP encoder lag range (first, last) per order"),
    ] = None
    lr: Annotated[float, Field(ge=0)] = 1e-3
    lr_grid: Annotated[list[float] | None, Field(min_length=1)] = None
    rho: Annotated[float, Field(gt=0)] = 1.0
    dynamic_weighting: bool = False
    l2_weight: Annotated[
        float | None,
        Field(ge=0, description="L2 weight on decoder input and hidden layers; unset means the NN default or none"),
    ] = None
    switch_ser: Annotated[float, Field(gt=0, lt=1)] = 1e-2
    pretrain_budget: Annotated[int, Field(ge=1)] = 2000
    dbp_steps: Annotated[int, Field(ge=1)] = 100

    @field_validator("decoder_taps", "encoder_taps")
    @classmethod
    def validate_odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError(f"tap count must be odd, got {v}")
        return v

    @field_validator("lr_grid")
    @classmethod
    def validate_grid(cls, v: list[float] | None) -> list[float] | None:
        if v is not None and any(lr < 0 for lr in v):
            raise ValueError("learning rates must be >= 0")
        return v

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind in (EqualizerKind.VQVAE, EqualizerKind.VAE) and self.decoder != BlockKind.FIR:
            return f"{self.decoder.value}-{self.kind.value}"
        return self.kind.value


class TrainingSpec(_Strict):
    """Dataset size, minibatching and optimizer schedule."""

    dataset_symbols: Annotated[int, Field(gt=0)] = 1 << 16
    batch_size: Annotated[int, Field(gt=0)] = 1024
    epochs: Annotated[int, Field(ge=1)] = 10
    on_the_fly: Annotated[bool, Field(description="Fresh channel data for every update")] = False
    steps: Annotated[int | None, Field(ge=0, description="Update count for on-the-fly training")] = None
    trace: bool = False
    trace_every: Annotated[int, Field(ge=1)] = 1

    @model_validator(mode="after")
    def validate_schedule(self) -> "TrainingSpec":
        if self.on_the_fly:
            if self.steps is None:
                raise ValueError("on-the-fly training needs a step count")
        elif self.batch_size > self.dataset_symbols:
            raise ValueError(
                f"batch size {self.batch_size} exceeds dataset size {self.dataset_symbols}"
            )
        return self


class SweepSpec(_Strict):
    """The single varied quantity; no axis means one point at the channel's own setting."""

    axis: SweepAxis | None = None
    values: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_values(self) -> "SweepSpec":
        if self.axis is None and self.values:
            raise ValueError("sweep values given without an axis")
        if self.axis is not None and not self.values:
            raise ValueError(f"sweep axis {self.axis.value} has no values")
        return self


class EvaluationSpec(_Strict):
    """Held-out frame sizing; ``None`` falls back to process settings."""

    target_errors: Annotated[int | None, Field(ge=1)] = None
    max_symbols: Annotated[int | None, Field(ge=256)] = None
    min_symbols: Annotated[int, Field(ge=256)] = 1 << 14


class ExperimentConfig(_Strict):
    """A complete, reproducible experiment description."""

    name: Annotated[str, Field(min_length=1)] = "experiment"
    channel: ChannelSpec
    modulation_order: int = 16
    equalizers: Annotated[list[EqualizerSpec], Field(min_length=1)]
    training: TrainingSpec = Field(default_factory=TrainingSpec)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    evaluation: EvaluationSpec = Field(default_factory=EvaluationSpec)
    seed: Annotated[int, Field(ge=0, lt=2**63)] = 0

    @field_validator("modulation_order")
    @classmethod
    def validate_order(cls, v: int) -> int:
        if v not in SUPPORTED_ORDERS:
            raise ValueError(f"modulation order must be one of {SUPPORTED_ORDERS}")
        return v

    @model_validator(mode="after")
    def validate_experiment(self) -> "ExperimentConfig":
        if self.sweep.axis is not None and AXIS_CHANNEL[self.sweep.axis].value != self.channel.kind:
            raise ValueError(
                f"sweep axis {self.sweep.axis.value} does not apply to a {self.channel.kind} channel"
            )
        for eq in self.equalizers:
            if eq.kind == EqualizerKind.DBP and self.channel.kind != ChannelKind.FIBER.value:
                raise ValueError("dbp is only defined for fiber channels")
            feature_based = eq.kind == EqualizerKind.NN_SL or eq.decoder != BlockKind.FIR
            if feature_based and self.channel.kind == ChannelKind.LINEAR.value:
                raise ValueError(f"{eq.name} needs GMP features, which exist for fiber and pa channels only")
        names = [eq.name for eq in self.equalizers]
        if len(set(names)) != len(names):
            raise ValueError(f"equalizer names must be unique, got {names}")
        return self

    def sweep_points(self) -> list[float | None]:
        return list(self.sweep.values) if self.sweep.axis is not None else [None]
