import os
from pathlib import Path

import pytest

# Set test environment before importing the package
os.environ["BLINDEQ_ENVIRONMENT"] = "ci"
os.environ["BLINDEQ_DEBUG"] = "false"
os.environ["BLINDEQ_LOG_LEVEL"] = "WARNING"
os.environ["BLINDEQ_THREADS"] = "1"
os.environ["BLINDEQ_FFT_WORKERS"] = "1"
os.environ["BLINDEQ_PLOTS"] = "false"
os.environ["BLINDEQ_EVAL_CHUNK_SYMBOLS"] = "2048"
os.environ["BLINDEQ_EVAL_MAX_SYMBOLS"] = "8192"
os.environ["BLINDEQ_TRACE_EVAL_SYMBOLS"] = "1024"

from blindeq.dsp.constellation import Constellation, make_qam
from blindeq.dsp.rng import SeededRng
from blindeq.schemas.experiment import ExperimentConfig


@pytest.fixture
def qam4() -> Constellation:
    """Return the unit-energy 4-QAM constellation."""
    return make_qam(4)


@pytest.fixture
def qam16() -> Constellation:
    """Return the unit-energy 16-QAM constellation."""
    return make_qam(16)


@pytest.fixture
def rng() -> SeededRng:
    """Return a fixed-seed random stream."""
    return SeededRng(1234)


@pytest.fixture
def tiny_linear_document() -> dict:
    """Return a small linear-channel experiment document."""
    return {
        "name": "tiny-linear",
        "channel": {"kind": "linear", "snr_db": 21.0, "edge_symbols": 16},
        "modulation_order": 4,
        "equalizers": [
            {"kind": "ffe", "decoder_taps": 15},
            {"kind": "vqvae", "decoder_taps": 15, "encoder_taps": 9},
        ],
        "training": {"dataset_symbols": 2048, "batch_size": 256, "epochs": 2},
        "sweep": {"axis": "snr_db", "values": [18.0, 24.0]},
        "evaluation": {"target_errors": 20, "max_symbols": 2048, "min_symbols": 1024},
        "seed": 7,
    }


@pytest.fixture
def tiny_linear_config(tiny_linear_document: dict) -> ExperimentConfig:
    """Return the small linear-channel experiment, validated."""
    return ExperimentConfig.model_validate(tiny_linear_document)


@pytest.fixture
def out_dir(tmp_path: Path) -> Path:
    """Return an empty artifact directory."""
    path = tmp_path / "results"
    path.mkdir()
    return path
