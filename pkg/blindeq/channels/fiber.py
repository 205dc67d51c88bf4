"""Single-span fiber link: split-step propagation, receiver front end and backpropagation."""

from typing import Literal

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, Field, model_validator

from blindeq.core.config import settings
from blindeq.core.exceptions import NonFiniteSignalError
from blindeq.core.logging import get_logger
from blindeq.dsp.constellation import SymbolFrame
from blindeq.dsp.filters import (
    angular_frequency_grid,
    brickwall_lowpass,
    decimate,
    fir_filter,
    rrc_taps,
    upsample,
)
from blindeq.dsp.noise import add_awgn
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal
from blindeq.dsp.units import dbm_to_watts

logger = get_logger(__name__)


class FiberLink(BaseModel):
    """Fiber and receiver parameters. Units: dB/km, ps^2/km, 1/(W km), km, dBm, GHz, GBaud."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha_db_per_km: float = Field(default=0.2, ge=0)
    beta2_ps2_per_km: float = -21.683
    gamma_per_w_km: float = Field(default=1.3, ge=0)
    length_km: float = Field(default=110.0, gt=0)
    ssfm_steps: int = Field(default=100, ge=1)
    launch_power_dbm: float = 8.0
    rx_noise_dbm: float | None = -33.5
    lpf_bandwidth_ghz: float | None = Field(default=45.0, gt=0)
    rx_sample_rate_ghz: float = Field(default=50.0, gt=0)
    cd_precomp_fraction: float = Field(default=0.9, ge=0, le=1)
    symbol_rate_gbaud: float = Field(default=25.0, gt=0)
    sim_sps: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def validate_rates(self) -> "FiberLink":
        ratio = self.sim_rate_ghz / self.rx_sample_rate_ghz
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("simulation rate must be an integer multiple of the receiver rate")
        rx_sps = self.rx_sample_rate_ghz / self.symbol_rate_gbaud
        if abs(rx_sps - round(rx_sps)) > 1e-9:
            raise ValueError("receiver rate must be an integer multiple of the symbol rate")
        return self

    @property
    def sim_rate_ghz(self) -> float:
        return self.symbol_rate_gbaud * self.sim_sps

    @property
    def rx_sps(self) -> int:
        return int(round(self.rx_sample_rate_ghz / self.symbol_rate_gbaud))

    @property
    def alpha_per_km(self) -> float:
        """Power attenuation in 1/km."""
        return self.alpha_db_per_km * np.log(10.0) / 10.0

    def with_overrides(self, **changes: float | int | None) -> "FiberLink":
        return self.model_copy(update=changes)


# Presets for standard single-mode and non-zero dispersion-shifted fiber
SSMF = FiberLink(alpha_db_per_km=0.2, beta2_ps2_per_km=-21.683, gamma_per_w_km=1.3)
NZDSF = FiberLink(alpha_db_per_km=0.21, beta2_ps2_per_km=-4.0, gamma_per_w_km=1.6)


def _check_finite(samples: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSignalError(f"non-finite samples during {where}", {"where": where})


def ssfm_propagate(
    waveform: ComplexSignal,
    fiber: FiberLink,
    direction: Literal["forward", "backward"] = "forward",
    steps: int | None = None,
    sample_rate_ghz: float | None = None,
) -> ComplexSignal:
    """Symmetric split-step Fourier integration of the scalar NLSE.

    Each step is half linear (loss and dispersion), full Kerr phase rotation,
    half linear. The backward direction negates alpha, beta2 and gamma, which
    inverts every step exactly because Strang steps are palindromic.
    """
    n_steps = steps or fiber.ssfm_steps
    rate = sample_rate_ghz or fiber.sim_rate_ghz
    sign = 1.0 if direction == "forward" else -1.0

    dz = fiber.length_km / n_steps
    omega = angular_frequency_grid(len(waveform), rate)
    alpha = sign * fiber.alpha_per_km
    beta2 = sign * fiber.beta2_ps2_per_km
    gamma = sign * fiber.gamma_per_w_km

    half_linear = np.exp((-alpha / 2.0 - 1j * beta2 / 2.0 * omega**2) * dz / 2.0)
    workers = settings.FFT_WORKERS

    field = waveform.samples.copy()
    for _ in range(n_steps):
        field = scipy.fft.ifft(half_linear * scipy.fft.fft(field, workers=workers), workers=workers)
        if gamma != 0.0:
            field = field * np.exp(1j * gamma * np.abs(field) ** 2 * dz)
        field = scipy.fft.ifft(half_linear * scipy.fft.fft(field, workers=workers), workers=workers)
    _check_finite(field, f"ssfm {direction}")
    return waveform.replace(field)


def cd_compensate(
    signal: ComplexSignal,
    beta2_ps2_per_km: float,
    distance_km: float,
    sample_rate_ghz: float,
) -> ComplexSignal:
    """All-pass exp(+j beta2/2 w^2 distance); inverts the dispersion of ``distance_km`` of fiber."""
    if distance_km == 0:
        return signal
    omega = angular_frequency_grid(len(signal), sample_rate_ghz)
    response = np.exp(1j * beta2_ps2_per_km / 2.0 * omega**2 * distance_km)
    workers = settings.FFT_WORKERS
    spectrum = scipy.fft.fft(signal.samples, workers=workers)
    return signal.replace(scipy.fft.ifft(response * spectrum, workers=workers))


def transmit_waveform(symbols: SymbolFrame, fiber: FiberLink, ps_rolloff: float) -> ComplexSignal:
    """Pulse-shaped optical field in sqrt(W) at the simulation rate."""
    shaped = fir_filter(upsample(symbols, fiber.sim_sps), rrc_taps(ps_rolloff, sps=fiber.sim_sps))
    # Unit-energy symbols through a unit-energy pulse carry Es/sps per sample.
    scale = np.sqrt(dbm_to_watts(fiber.launch_power_dbm) * fiber.sim_sps / symbols.constellation.energy)
    return shaped.replace(shaped.samples * scale)


def fiber_link_apply(
    tx_symbols: SymbolFrame,
    fiber: FiberLink,
    ps_rolloff: float,
    rng: SeededRng,
) -> ComplexSignal:
    """Transmitter, fiber, receiver noise, brick-wall LPF, sampling and static CD compensation.

    The receiver noise power is spread over the full simulation bandwidth before
    the low-pass filter. The output stays in physical units (sqrt(W)).
    """
    logger.debug(
        f"Fiber link: L={fiber.length_km} km, P={fiber.launch_power_dbm} dBm, "
        f"steps={fiber.ssfm_steps}, gamma={fiber.gamma_per_w_km}"
    )
    field = ssfm_propagate(transmit_waveform(tx_symbols, fiber, ps_rolloff), fiber, "forward")
    if fiber.rx_noise_dbm is not None:
        field = add_awgn(field, dbm_to_watts(fiber.rx_noise_dbm), rng)
    if fiber.lpf_bandwidth_ghz is not None:
        field = brickwall_lowpass(field, fiber.lpf_bandwidth_ghz, fiber.sim_rate_ghz)
    factor = int(round(fiber.sim_rate_ghz / fiber.rx_sample_rate_ghz))
    rx = decimate(field, factor, 0)
    rx = ComplexSignal(samples=rx.samples, sps=fiber.rx_sps)
    return cd_compensate(
        rx,
        fiber.beta2_ps2_per_km,
        fiber.cd_precomp_fraction * fiber.length_km,
        fiber.rx_sample_rate_ghz,
    )


def dbp(
    rx: ComplexSignal,
    fiber: FiberLink,
    steps: int,
    ps_rolloff: float = 0.1,
) -> ComplexSignal:
    """Digital backpropagation of a receiver-rate signal down to 1 sample per symbol.

    Undoes the static CD compensation, propagates backward through the full
    link, rescales to the launch amplitude, matched-filters and samples.
    The result has unit mean symbol energy.
    """
    undone = cd_compensate(
        rx,
        -fiber.beta2_ps2_per_km,
        fiber.cd_precomp_fraction * fiber.length_km,
        fiber.rx_sample_rate_ghz,
    )
    back = ssfm_propagate(undone, fiber, "backward", steps=steps, sample_rate_ghz=fiber.rx_sample_rate_ghz)
    launch_scale = np.sqrt(dbm_to_watts(fiber.launch_power_dbm) * fiber.rx_sps)
    matched = fir_filter(back.replace(back.samples / launch_scale), rrc_taps(ps_rolloff, sps=fiber.rx_sps))
    return decimate(matched, fiber.rx_sps, 0)
