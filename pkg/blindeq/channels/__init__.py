"""Forward channel simulators."""

from blindeq.channels.fiber import NZDSF, SSMF, FiberLink, cd_compensate, dbp, fiber_link_apply, ssfm_propagate
from blindeq.channels.gmp import (
    GmpIndexSets,
    GmpModel,
    gmp_apply,
    gmp_basis,
    gmp_fit,
    load_gmp_text,
    save_gmp_text,
)
from blindeq.channels.linear import REFERENCE_TAPS, LinearIsiChannel, linear_channel_apply
from blindeq.channels.pa import PaChannel, operating_snr_db, pa_channel_apply, surrogate_pa_model

__all__ = [
    "NZDSF",
    "REFERENCE_TAPS",
    "SSMF",
    "FiberLink",
    "GmpIndexSets",
    "GmpModel",
    "LinearIsiChannel",
    "PaChannel",
    "cd_compensate",
    "dbp",
    "fiber_link_apply",
    "gmp_apply",
    "gmp_basis",
    "gmp_fit",
    "linear_channel_apply",
    "load_gmp_text",
    "operating_snr_db",
    "pa_channel_apply",
    "save_gmp_text",
    "ssfm_propagate",
    "surrogate_pa_model",
]
