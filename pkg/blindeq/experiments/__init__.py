from blindeq.experiments.data import Observation, Stream, channel_at, simulate
from blindeq.experiments.export import (
    export_constellation,
    plot_sweep,
    plot_traces,
    write_results,
    write_traces,
)
from blindeq.experiments.presets import PRESETS, apply_preset, preset_document
from blindeq.experiments.runner import run_jobs
from blindeq.experiments.sweeps import (
    constellation_snapshot,
    evaluate,
    run_convergence,
    run_experiment,
    run_launch_power_sweep,
    run_pa_power_sweep,
    run_snr_sweep,
    train,
)

__all__ = [
    "PRESETS",
    "Observation",
    "Stream",
    "apply_preset",
    "channel_at",
    "constellation_snapshot",
    "evaluate",
    "export_constellation",
    "plot_sweep",
    "plot_traces",
    "preset_document",
    "run_convergence",
    "run_experiment",
    "run_jobs",
    "run_launch_power_sweep",
    "run_pa_power_sweep",
    "run_snr_sweep",
    "simulate",
    "train",
    "write_results",
    "write_traces",
]
