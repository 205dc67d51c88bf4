"""GMP power-amplifier channel and the synthetic surrogate PA model."""

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from blindeq.channels.gmp import GmpIndexSets, GmpModel, gmp_basis, gmp_fit
from blindeq.core.exceptions import InvalidParameterError
from blindeq.core.logging import get_logger
from blindeq.dsp.constellation import SymbolFrame, draw_symbols, make_qam
from blindeq.dsp.filters import fir_filter, rrc_taps, upsample
from blindeq.dsp.noise import add_awgn
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal
from blindeq.dsp.units import dbm_to_watts

logger = get_logger(__name__)

PA_SPS = 2
# Seed of the fixed frame used for operating-point calibration and surrogate fitting.
CALIBRATION_SEED = 20_231_117
CALIBRATION_SYMBOLS = 8192


def pa_index_sets() -> GmpIndexSets:
    """Orders 1..7, lags 0..2 and cross-term shift 1.

    Cross terms start at order 2: for p = 1 they coincide with a-terms and
    would make the regressor matrix rank deficient.
    """
    return GmpIndexSets.uniform(
        orders_a=list(range(1, 8)), lags_a=[0, 1, 2],
        orders_b=list(range(2, 8)), lags_b=[0, 1, 2], shifts_b=[1],
        orders_c=list(range(2, 8)), lags_c=[0, 1, 2], shifts_c=[1],
    )


def rapp_reference(u: np.ndarray, smoothness: float = 2.0, am_pm_rad: float = 0.15) -> np.ndarray:
    """Soft limiter with short memory and mild AM/PM in normalized units (saturation at 1)."""
    v = u.copy()
    v[1:] += 0.12 * u[:-1]
    v[2:] -= 0.04 * u[:-2]
    mag2 = np.abs(v) ** 2
    gain = (1.0 + mag2**smoothness) ** (-1.0 / (2.0 * smoothness))
    return v * gain * np.exp(1j * am_pm_rad * mag2 / (1.0 + mag2))


@lru_cache
def surrogate_pa_model() -> GmpModel:
    """GMP fitted to the soft-limiter reference over normalized input rms levels 0.1..0.9."""
    rng = SeededRng(CALIBRATION_SEED)
    qam = make_qam(64)
    taps = rrc_taps(0.2, sps=PA_SPS)
    segments = []
    for i, rms in enumerate(np.linspace(0.1, 0.9, 9)):
        frame = draw_symbols(qam, 4096, rng.child(i))
        shaped = fir_filter(upsample(frame, PA_SPS), taps).samples
        segments.append(shaped * rms / np.sqrt(np.mean(np.abs(shaped) ** 2)))
    u = np.concatenate(segments)
    model = gmp_fit(ComplexSignal(samples=u), ComplexSignal(samples=rapp_reference(u)), pa_index_sets())
    logger.debug(f"Surrogate PA fitted with {model.coeffs.size} coefficients")
    return model


def linear_pa_model(gain: complex = 1.0) -> GmpModel:
    index_sets = GmpIndexSets(a_lags={1: (0,)})
    return GmpModel(index_sets=index_sets, coeffs=[gain])


@dataclass(frozen=True)
class PaChannel:
    """GMP PA followed by AWGN of fixed voltage standard deviation.

    The GMP works in units of ``v_ref`` volts; power is referred to ``impedance_ohm``.
    ``noise_convention`` selects whether ``noise_std_volts`` is the standard
    deviation of the complex sample or of each real dimension.
    """

    pa: GmpModel
    avg_output_power_dbm: float
    noise_std_volts: float = 0.4
    v_ref: float = 12.0
    impedance_ohm: float = 50.0
    noise_convention: Literal["complex", "per_dimension"] = "complex"

    def __post_init__(self) -> None:
        if self.noise_std_volts < 0:
            raise InvalidParameterError(f"noise std must be >= 0, got {self.noise_std_volts}")
        if self.v_ref <= 0 or self.impedance_ohm <= 0:
            raise InvalidParameterError("v_ref and impedance must be positive")

    @property
    def noise_variance_v2(self) -> float:
        var = self.noise_std_volts**2
        return var if self.noise_convention == "complex" else 2.0 * var

    @property
    def target_power_v2(self) -> float:
        """Mean |v|^2 of the PA output at the operating point."""
        return dbm_to_watts(self.avg_output_power_dbm) * self.impedance_ohm


def operating_snr_db(ch: PaChannel) -> float:
    """Symbol-level SNR after a unit-energy matched filter."""
    if ch.noise_variance_v2 == 0:
        return float("inf")
    return float(10.0 * np.log10(PA_SPS * ch.target_power_v2 / ch.noise_variance_v2))


def _order_partials(u: np.ndarray, model: GmpModel) -> dict[int, np.ndarray]:
    # Every GMP term is homogeneous of degree p: term(s*u) = s^p * term(u).
    basis = gmp_basis(u, model.index_sets)
    partials: dict[int, np.ndarray] = {}
    for j, (_, p, _, _) in enumerate(model.index_sets.terms()):
        partials[p] = partials.get(p, 0) + basis[:, j] * model.coeffs[j]
    return partials


def _apply_scaled(partials: dict[int, np.ndarray], scale: float) -> np.ndarray:
    return sum(scale**p * part for p, part in partials.items())  # type: ignore[return-value]


def input_scale(ch: PaChannel, ps_rolloff: float, max_input_rms: float = 0.9) -> float:
    """Scale of a unit-energy shaped waveform that yields the target output power."""
    rng = SeededRng(CALIBRATION_SEED)
    frame = draw_symbols(make_qam(64), CALIBRATION_SYMBOLS, rng)
    shaped = fir_filter(upsample(frame, PA_SPS), rrc_taps(ps_rolloff, sps=PA_SPS)).samples
    partials = _order_partials(shaped, ch.pa)
    target = ch.target_power_v2 / ch.v_ref**2

    def excess(s: float) -> float:
        return float(np.mean(np.abs(_apply_scaled(partials, s)) ** 2)) - target

    shaped_rms = float(np.sqrt(np.mean(np.abs(shaped) ** 2)))
    hi = max_input_rms / shaped_rms
    if excess(hi) < 0:
        raise InvalidParameterError(
            f"output power {ch.avg_output_power_dbm} dBm is beyond the PA operating range",
            {"avg_output_power_dbm": ch.avg_output_power_dbm},
        )
    return float(brentq(excess, 1e-9, hi, xtol=1e-12))


def pa_channel_apply(
    tx_symbols: SymbolFrame,
    ch: PaChannel,
    ps_rolloff: float,
    rng: SeededRng,
) -> ComplexSignal:
    """Upsample, RRC, drive the PA at its operating point, add AWGN. Output in volts at 2 SPS."""
    shaped = fir_filter(upsample(tx_symbols, PA_SPS), rrc_taps(ps_rolloff, sps=PA_SPS))
    scale = input_scale(ch, ps_rolloff)
    out = gmp_basis(shaped.samples * scale, ch.pa.index_sets) @ ch.pa.coeffs
    rx = shaped.replace(out * ch.v_ref)
    return add_awgn(rx, ch.noise_variance_v2, rng)
