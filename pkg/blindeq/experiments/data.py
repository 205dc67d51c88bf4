"""Channel data for training and evaluation, drawn from disjoint random streams.

Stream layout below a point's RNG: TRAIN for the training set (or one child per
on-the-fly step), EVAL for held-out chunks, TRACE for the fixed frame scored
during convergence runs, SHUFFLE for minibatch order and INIT per equalizer.
Fixed datasets and evaluation chunks do not depend on the equalizer, so every
curve at a point sees the same channel realizations.
"""

from collections.abc import Iterator
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from blindeq.channels.fiber import fiber_link_apply
from blindeq.channels.linear import LinearIsiChannel, linear_channel_apply
from blindeq.channels.pa import PaChannel, linear_pa_model, pa_channel_apply, surrogate_pa_model
from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import Constellation, SymbolFrame, draw_symbols
from blindeq.dsp.filters import decimate, fir_filter, rrc_taps, upsample
from blindeq.dsp.noise import snr_to_noise_variance
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal
from blindeq.dsp.units import normalize_power
from blindeq.equalizers.base import Minibatch, make_minibatch
from blindeq.schemas.experiment import ChannelSpec, FiberChannelSpec, LinearChannelSpec, PaChannelSpec

EQ_SPS = 2


class Stream(IntEnum):
    TRAIN = 0
    EVAL = 1
    TRACE = 2
    SHUFFLE = 3
    INIT = 4


@dataclass(frozen=True)
class Observation:
    """Equalizer input at 2 SPS aligned with its symbols.

    ``raw`` is the receiver-rate signal in physical units including the
    ``edge`` symbols dropped from ``y`` (fiber links only, for DBP).
    """

    y: np.ndarray
    symbols: SymbolFrame
    raw: ComplexSignal | None = None
    edge: int = 0
    noise_variance: float | None = None

    @property
    def n_symbols(self) -> int:
        return len(self.symbols)


def channel_at(spec: ChannelSpec, axis_value: float | None) -> ChannelSpec:
    """The channel spec with the sweep quantity set to ``axis_value``."""
    if axis_value is None:
        return spec
    if isinstance(spec, LinearChannelSpec):
        return spec.model_copy(update={"snr_db": axis_value})
    if isinstance(spec, FiberChannelSpec):
        return spec.model_copy(update={"overrides": {**spec.overrides, "launch_power_dbm": axis_value}})
    return spec.model_copy(update={"avg_output_power_dbm": axis_value})


def pa_channel(spec: PaChannelSpec) -> PaChannel:
    model = surrogate_pa_model() if spec.model == "surrogate" else linear_pa_model()
    return PaChannel(
        pa=model,
        avg_output_power_dbm=spec.avg_output_power_dbm,
        noise_std_volts=spec.noise_std_volts,
        noise_convention=spec.noise_convention,
    )


def simulate(spec: ChannelSpec, constellation: Constellation, n_symbols: int, rng: SeededRng) -> Observation:
    """Transmit ``n_symbols`` fresh symbols (plus edge guards) through the channel."""
    edge = spec.edge_symbols
    frame = draw_symbols(constellation, n_symbols + 2 * edge, rng.child(0))
    noise_rng = rng.child(1)
    raw: ComplexSignal | None = None
    noise_variance: float | None = None

    if isinstance(spec, LinearChannelSpec):
        tx = fir_filter(upsample(frame, EQ_SPS), rrc_taps(spec.ps_rolloff, sps=EQ_SPS))
        noise_variance = snr_to_noise_variance(constellation, spec.snr_db)
        channel = LinearIsiChannel(taps_h=spec.taps_complex(), noise_variance=noise_variance)
        y = linear_channel_apply(tx, channel, noise_rng).samples
    elif isinstance(spec, FiberChannelSpec):
        link = spec.link()
        raw = fiber_link_apply(frame, link, spec.ps_rolloff, noise_rng)
        if link.rx_sps % EQ_SPS:
            raise InvalidParameterError(f"receiver at {link.rx_sps} SPS cannot feed a 2-SPS equalizer")
        rx = decimate(raw, link.rx_sps // EQ_SPS, 0) if link.rx_sps != EQ_SPS else raw
        y = normalize_power(rx, 1.0 / EQ_SPS).samples
    else:
        rx = pa_channel_apply(frame, pa_channel(spec), spec.ps_rolloff, noise_rng)
        y = normalize_power(rx, 1.0 / EQ_SPS).samples

    return Observation(
        y=y[EQ_SPS * edge:EQ_SPS * (edge + n_symbols)],
        symbols=frame.slice(edge, edge + n_symbols),
        raw=raw,
        edge=edge,
        noise_variance=noise_variance,
    )


def epoch_batches(obs: Observation, batch_size: int, guard: int, rng: SeededRng) -> Iterator[Minibatch]:
    """One pass over the dataset in shuffled, non-overlapping minibatches."""
    starts = np.arange(0, obs.n_symbols - batch_size + 1, batch_size)
    for i in rng.permutation(starts.size):
        yield make_minibatch(obs.y, obs.symbols.symbols, int(starts[i]), batch_size, guard, EQ_SPS)


def fresh_batch(
    spec: ChannelSpec,
    constellation: Constellation,
    batch_size: int,
    guard: int,
    rng: SeededRng,
) -> Minibatch:
    """Newly simulated minibatch whose context symbols are simulated too."""
    obs = simulate(spec, constellation, batch_size + 2 * guard, rng)
    return make_minibatch(obs.y, obs.symbols.symbols, guard, batch_size, guard, EQ_SPS)
