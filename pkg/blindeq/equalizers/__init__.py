from blindeq.equalizers.base import BaseEqualizer, BlockDecoder, BlockEncoder, Minibatch, StepResult, make_minibatch
from blindeq.equalizers.cma import CmaBatchTrainer, CmaEqualizer, CmaState, cma_batch_step, cma_step
from blindeq.equalizers.components import (
    FirDecoder,
    FirEncoder,
    MpDecoder,
    MpEncoder,
    NnDecoder,
    NnEncoder,
    equalize_nn,
)
from blindeq.equalizers.dbp import DbpReceiver, genie_gain
from blindeq.equalizers.ddlms import DdLmsTrainer, ddlms_run
from blindeq.equalizers.demapper import demap_hard, demap_joint, nearest_indices
from blindeq.equalizers.features import (
    FIBER_FEATURES,
    PA_FEATURES,
    FeatureExtractorConfig,
    extract_gmp_features,
    feature_matrix,
)
from blindeq.equalizers.ffe import SupervisedTrainer, ffe_mmse_train_step
from blindeq.equalizers.fir import FirEqualizer, equalize_fir
from blindeq.equalizers.metrics import AlignResult, align_and_ser, aligned_errors, evm, qam_ser_awgn
from blindeq.equalizers.registry import build_equalizer
from blindeq.equalizers.vae import VaeTrainer, elbo_linear, elbo_mp, vae_decoder_soft, vae_train_step
from blindeq.equalizers.vqvae import VqVaeTrainer, psi_update, vqvae_loss, vqvae_train_step

__all__ = [
    "FIBER_FEATURES",
    "PA_FEATURES",
    "AlignResult",
    "BaseEqualizer",
    "BlockDecoder",
    "BlockEncoder",
    "CmaBatchTrainer",
    "CmaEqualizer",
    "CmaState",
    "DbpReceiver",
    "DdLmsTrainer",
    "FeatureExtractorConfig",
    "FirDecoder",
    "FirEncoder",
    "FirEqualizer",
    "Minibatch",
    "MpDecoder",
    "MpEncoder",
    "NnDecoder",
    "NnEncoder",
    "StepResult",
    "SupervisedTrainer",
    "VaeTrainer",
    "VqVaeTrainer",
    "align_and_ser",
    "aligned_errors",
    "build_equalizer",
    "cma_batch_step",
    "cma_step",
    "ddlms_run",
    "demap_hard",
    "demap_joint",
    "elbo_linear",
    "elbo_mp",
    "equalize_fir",
    "equalize_nn",
    "evm",
    "extract_gmp_features",
    "feature_matrix",
    "ffe_mmse_train_step",
    "genie_gain",
    "make_minibatch",
    "nearest_indices",
    "psi_update",
    "qam_ser_awgn",
    "vae_decoder_soft",
    "vae_train_step",
    "vqvae_loss",
    "vqvae_train_step",
]
