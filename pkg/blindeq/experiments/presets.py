"""Named experiment documents with desk-scale and full-scale profiles.

Desk profiles keep every curve of a figure but shrink training sets, SSFM step
counts and sweep grids so a run fits on a workstation.
"""

import copy
from typing import Any, Literal

from blindeq.core.exceptions import ConfigurationError

Profile = Literal["desk", "paper"]

# Candidate rates tried for the reference equalizers at full scale
REFERENCE_LR_GRID = [1e-2, 2e-2, 5e-2, 1e-3, 2e-3, 5e-3, 1e-4, 2e-4, 5e-4]


def _linear_16qam(profile: Profile) -> dict[str, Any]:
    paper = profile == "paper"
    grid = {"lr_grid": REFERENCE_LR_GRID} if paper else {}
    return {
        "name": "paper-linear-16qam",
        "channel": {"kind": "linear"},
        "modulation_order": 16,
        "equalizers": [
            {"kind": "vqvae"},
            {"kind": "ffe", **grid},
            {"kind": "vae", **grid},
            {"kind": "cma-batch", **grid},
            {"kind": "cma"},
        ],
        "training": {"dataset_symbols": 1 << 16, "batch_size": 1024, "epochs": 30 if paper else 10},
        "sweep": {
            "axis": "snr_db",
            "values": [15.0, 16.0, 17.0, 18.0, 19.0, 20.0, 21.0, 22.0, 23.0, 24.0] if paper else [18.0, 21.0, 24.0],
        },
    }


def _linear_convergence(profile: Profile) -> dict[str, Any]:
    return {
        "name": "paper-linear-convergence",
        "channel": {"kind": "linear", "snr_db": 21.0},
        "modulation_order": 16,
        "equalizers": [{"kind": "vqvae"}, {"kind": "vae"}, {"kind": "ffe"}, {"kind": "cma-batch"}],
        "training": {
            "on_the_fly": True,
            "steps": 10_000 if profile == "paper" else 2000,
            "batch_size": 1024,
            "trace": True,
            "trace_every": 1 if profile == "paper" else 10,
        },
    }


def _linear_ddlms(profile: Profile) -> dict[str, Any]:
    """Small-batch, large-rate runs: VQ-VAE weightings against DD-LMS and standard CMA."""
    lr = 1e-2
    return {
        "name": "paper-linear-ddlms",
        "channel": {"kind": "linear", "snr_db": 21.0},
        "modulation_order": 16,
        "equalizers": [
            {"kind": "vqvae", "lr": lr, "rho": 0.2, "label": "vqvae-rho0.2"},
            {"kind": "vqvae", "lr": lr, "rho": 1.0, "label": "vqvae-rho1"},
            {"kind": "vqvae", "lr": lr, "rho": 10.0, "label": "vqvae-rho10"},
            {"kind": "vqvae", "lr": lr, "dynamic_weighting": True, "label": "vqvae-dynamic"},
            {"kind": "ddlms", "lr": lr, "switch_ser": 1e-2},
            {"kind": "cma"},
        ],
        "training": {
            "on_the_fly": True,
            "steps": 10_000 if profile == "paper" else 2000,
            "batch_size": 64,
            "trace": True,
            "trace_every": 1 if profile == "paper" else 10,
        },
    }


def _fiber(preset: Literal["ssmf", "nzdsf"], profile: Profile) -> dict[str, Any]:
    paper = profile == "paper"
    steps = 100 if paper else 20
    return {
        "name": f"paper-{preset}",
        "channel": {"kind": "fiber", "preset": preset, "overrides": {"ssfm_steps": steps}},
        "modulation_order": 16,
        "equalizers": [
            {"kind": "ffe", "label": "linear-ffe"},
            {"kind": "vqvae", "decoder": "nn", "encoder": "nn"},
            {"kind": "vqvae", "decoder": "mp", "encoder": "mp"},
            {"kind": "vae", "decoder": "mp", "encoder": "mp"},
            {"kind": "nn-sl"},
            {"kind": "dbp", "dbp_steps": steps},
        ],
        "training": {"dataset_symbols": 65536 if paper else 1 << 15, "batch_size": 2048, "epochs": 50 if paper else 20},
        "sweep": {
            "axis": "launch_power_dbm",
            "values": [4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0] if paper else [4.0, 6.0, 8.0, 10.0],
        },
    }


def _pa_surrogate(profile: Profile) -> dict[str, Any]:
    paper = profile == "paper"
    return {
        "name": "paper-pa-surrogate",
        "channel": {"kind": "pa", "model": "surrogate"},
        "modulation_order": 64,
        "equalizers": [
            {"kind": "ffe", "label": "linear-ffe"},
            {"kind": "vqvae", "decoder": "nn", "encoder": "nn"},
            {"kind": "vqvae", "decoder": "mp", "encoder": "mp"},
        ],
        "training": {
            "dataset_symbols": 1 << 18 if paper else 1 << 16,
            "batch_size": 1 << 14 if paper else 1 << 12,
            "epochs": 50 if paper else 20,
        },
        "sweep": {
            "axis": "pa_power_dbm",
            "values": [20.0, 22.0, 24.0, 26.0, 27.0, 28.0, 29.0, 30.0] if paper else [22.0, 26.0, 28.0, 30.0],
        },
    }


PRESETS = {
    "paper-linear-16qam": _linear_16qam,
    "paper-linear-convergence": _linear_convergence,
    "paper-linear-ddlms": _linear_ddlms,
    "paper-ssmf": lambda profile: _fiber("ssmf", profile),
    "paper-nzdsf": lambda profile: _fiber("nzdsf", profile),
    "paper-pa-surrogate": _pa_surrogate,
}


def preset_document(name: str, profile: Profile = "desk") -> dict[str, Any]:
    """Raw experiment document of a named preset."""
    try:
        build = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}",
        ) from None
    return build(profile)


def merge_documents(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Recursive merge: mappings merge key by key, everything else is replaced."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_documents(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_preset(document: dict[str, Any], profile: Profile = "desk") -> dict[str, Any]:
    """Expand a ``preset`` key: the preset is the base and the document's other keys override it.

    Overrides may not move a preset to another channel family.
    """
    if "preset" not in document:
        return document
    overrides = {k: v for k, v in document.items() if k != "preset"}
    base = preset_document(str(document["preset"]), profile)
    kind = overrides.get("channel", {}).get("kind") if isinstance(overrides.get("channel"), dict) else None
    if kind is not None and kind != base["channel"]["kind"]:
        raise ConfigurationError(
            f"Preset {document['preset']} is a {base['channel']['kind']} preset, cannot use a {kind} channel",
        )
    return merge_documents(base, overrides)
