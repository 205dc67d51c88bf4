"""Small reverse-mode differentiation toolkit for FIR taps and fully-connected networks."""

from blindeq.autodiff.adam import AdamState, adam_step
from blindeq.autodiff.checkpoint import load_checkpoint, save_checkpoint
from blindeq.autodiff.gradcheck import GradCheckReport, finite_diff_check
from blindeq.autodiff.mlp import MlpSpec, MlpTape, init_mlp, mlp_backward, mlp_forward
from blindeq.autodiff.params import ParamSet, ParamTensor
from blindeq.autodiff.penalties import l2_penalty
from blindeq.autodiff.straight_through import straight_through

__all__ = [
    "AdamState",
    "GradCheckReport",
    "MlpSpec",
    "MlpTape",
    "ParamSet",
    "ParamTensor",
    "adam_step",
    "finite_diff_check",
    "init_mlp",
    "l2_penalty",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "save_checkpoint",
    "straight_through",
]
