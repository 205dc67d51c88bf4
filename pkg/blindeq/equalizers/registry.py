"""Builds trainers from equalizer specs, filling per-channel realization defaults."""

from dataclasses import dataclass

from blindeq.autodiff.params import ParamSet
from blindeq.channels.gmp import GmpIndexSets
from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import Constellation
from blindeq.dsp.rng import SeededRng
from blindeq.equalizers.base import BaseEqualizer, BlockDecoder, BlockEncoder
from blindeq.equalizers.cma import CmaBatchTrainer, CmaEqualizer
from blindeq.equalizers.components import (
    FirDecoder,
    FirEncoder,
    MpDecoder,
    MpEncoder,
    NnDecoder,
    NnEncoder,
)
from blindeq.equalizers.ddlms import DdLmsTrainer
from blindeq.equalizers.features import FIBER_FEATURES, PA_FEATURES, FeatureExtractorConfig
from blindeq.equalizers.ffe import SupervisedTrainer
from blindeq.equalizers.vae import VaeTrainer, linear_index_sets
from blindeq.equalizers.vqvae import VqVaeTrainer
from blindeq.schemas.experiment import BlockKind, EqualizerKind, EqualizerSpec

MP_ENCODER_LAGS = {1: (-12, 12), 3: (-4, 4), 5: (-2, 2)}
# L2 weight on NN decoder input and hidden layers when a spec leaves it unset
NN_L2_WEIGHT = 1e-4


@dataclass(frozen=True)
class ChannelDefaults:
    features: FeatureExtractorConfig | None
    decoder_hidden: tuple[int, ...]
    encoder_window: int


CHANNEL_DEFAULTS = {
    "linear": ChannelDefaults(features=None, decoder_hidden=(32, 8), encoder_window=31),
    "fiber": ChannelDefaults(features=FIBER_FEATURES, decoder_hidden=(32, 8), encoder_window=31),
    "pa": ChannelDefaults(features=PA_FEATURES, decoder_hidden=(64, 16), encoder_window=23),
}


def _defaults(channel_kind: str) -> ChannelDefaults:
    try:
        return CHANNEL_DEFAULTS[channel_kind]
    except KeyError:
        raise InvalidParameterError(f"unknown channel kind {channel_kind}") from None


def _features(channel_kind: str) -> FeatureExtractorConfig:
    features = _defaults(channel_kind).features
    if features is None:
        raise InvalidParameterError(f"no GMP feature configuration for {channel_kind} channels")
    return features


def mp_encoder_sets(spec: EqualizerSpec) -> GmpIndexSets:
    lags = spec.encoder_mp_lags or MP_ENCODER_LAGS
    return GmpIndexSets(a_lags={p: range(lo, hi + 1) for p, (lo, hi) in lags.items()})


def l2_weight(spec: EqualizerSpec, block: BlockKind) -> float:
    """Explicit weight, else NN_L2_WEIGHT for NN decoders and no penalty otherwise."""
    if spec.l2_weight is not None:
        return spec.l2_weight
    return NN_L2_WEIGHT if block == BlockKind.NN else 0.0


def build_decoder(
    spec: EqualizerSpec,
    channel_kind: str,
    params: ParamSet,
    rng: SeededRng,
    block: BlockKind | None = None,
) -> BlockDecoder:
    kind = block or spec.decoder
    if kind == BlockKind.FIR:
        return FirDecoder(params, spec.decoder_taps)
    if kind == BlockKind.MP:
        return MpDecoder(params, _features(channel_kind))
    hidden = spec.decoder_hidden or _defaults(channel_kind).decoder_hidden
    return NnDecoder(params, _features(channel_kind), hidden, rng.child(0))


def build_encoder(spec: EqualizerSpec, channel_kind: str, params: ParamSet, rng: SeededRng) -> BlockEncoder:
    if spec.encoder == BlockKind.FIR:
        return FirEncoder(params, spec.encoder_taps)
    if spec.encoder == BlockKind.MP:
        return MpEncoder(params, mp_encoder_sets(spec))
    window = spec.encoder_window or _defaults(channel_kind).encoder_window
    return NnEncoder(params, window, spec.encoder_hidden, rng.child(1))


def build_equalizer(
    spec: EqualizerSpec,
    channel_kind: str,
    constellation: Constellation,
    rng: SeededRng,
    lr: float | None = None,
    noise_variance: float | None = None,
) -> BaseEqualizer:
    """Fresh, untrained equalizer for one sweep point. ``lr`` overrides the spec's rate."""
    lr = spec.lr if lr is None else lr
    params = ParamSet()

    if spec.kind == EqualizerKind.VQVAE:
        return VqVaeTrainer(
            constellation,
            build_decoder(spec, channel_kind, params, rng),
            build_encoder(spec, channel_kind, params, rng),
            params,
            lr=lr,
            rho=None if spec.dynamic_weighting else spec.rho,
            l2_weight=l2_weight(spec, spec.decoder),
        )
    if spec.kind == EqualizerKind.VAE:
        if spec.encoder == BlockKind.NN:
            raise InvalidParameterError("the closed-form ELBO needs an FIR or MP encoder")
        sets = linear_index_sets(spec.encoder_taps) if spec.encoder == BlockKind.FIR else mp_encoder_sets(spec)
        return VaeTrainer(
            constellation,
            build_decoder(spec, channel_kind, params, rng),
            sets,
            params,
            lr=lr,
            sigma_d2=noise_variance,
        )
    if spec.kind == EqualizerKind.CMA:
        return CmaEqualizer(constellation, spec.decoder_taps, mu0=lr)
    if spec.kind == EqualizerKind.CMA_BATCH:
        return CmaBatchTrainer(constellation, lr, spec.decoder_taps)
    if spec.kind == EqualizerKind.FFE:
        decoder = build_decoder(spec, channel_kind, params, rng)
        return SupervisedTrainer(constellation, decoder, params, lr=lr, l2_weight=l2_weight(spec, spec.decoder))
    if spec.kind == EqualizerKind.NN_SL:
        decoder = build_decoder(spec, channel_kind, params, rng, block=BlockKind.NN)
        return SupervisedTrainer(
            constellation, decoder, params, lr=lr, l2_weight=l2_weight(spec, BlockKind.NN), name="nn-sl"
        )
    if spec.kind == EqualizerKind.DDLMS:
        return DdLmsTrainer(constellation, lr, spec.decoder_taps, spec.switch_ser, spec.pretrain_budget)
    raise InvalidParameterError(f"{spec.kind.value} is not a trainable equalizer")
