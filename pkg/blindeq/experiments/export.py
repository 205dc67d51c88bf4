"""Result artifacts: CSV tables, the JSON record and optional SVG plots."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from blindeq.core.exceptions import InvalidParameterError  # noqa: E402
from blindeq.core.logging import get_logger  # noqa: E402
from blindeq.schemas.record import ExperimentRecord, PointResult  # noqa: E402

logger = get_logger(__name__)

RESULT_COLUMNS = ("axis_value", "equalizer", "ser", "loss_final", "steps", "wall_ms", "seed")
TRACE_COLUMNS = ("step", "loss", "ser")
CONSTELLATION_COLUMNS = ("re", "im")


def results_frame(record: ExperimentRecord) -> pd.DataFrame:
    rows = [{column: getattr(point, column) for column in RESULT_COLUMNS} for point in record.points]
    return pd.DataFrame(rows, columns=list(RESULT_COLUMNS))


def trace_frame(point: PointResult) -> pd.DataFrame:
    rows = [(p.step, p.loss, p.ser) for p in point.trace]
    return pd.DataFrame(rows, columns=list(TRACE_COLUMNS))


def trace_filename(point: PointResult) -> str:
    parts = [point.equalizer]
    if point.axis_value is not None:
        parts.append(f"{point.axis_value:g}")
    if point.batch_size is not None:
        parts.append(f"N{point.batch_size}")
    if point.lr is not None:
        parts.append(f"lr{point.lr:g}")
    return "trace_" + "_".join(parts) + ".csv"


def write_results(record: ExperimentRecord, out_dir: Path) -> Path:
    """results.csv plus record.json; returns the CSV path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "results.csv"
    results_frame(record).to_csv(path, index=False)
    (out_dir / "record.json").write_text(record.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote {len(record.points)} result rows to {path}")
    return path


def write_traces(record: ExperimentRecord, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for point in record.points:
        if not point.trace:
            continue
        path = out_dir / trace_filename(point)
        trace_frame(point).to_csv(path, index=False)
        paths.append(path)
    return paths


def export_constellation(x_soft: np.ndarray, path: Path) -> Path:
    """Scatter table of equalized soft symbols, one (re, im) row per symbol."""
    x_soft = np.asarray(x_soft, dtype=np.complex128).reshape(-1)
    if x_soft.size == 0:
        raise InvalidParameterError("no symbols to export")
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"re": x_soft.real, "im": x_soft.imag}, columns=list(CONSTELLATION_COLUMNS)).to_csv(
        path, index=False
    )
    return path


def plot_sweep(record: ExperimentRecord, path: Path) -> Path:
    """SER per equalizer against the sweep quantity on a log scale."""
    frame = results_frame(record)
    axis = record.config.sweep.axis
    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        for name, group in frame.groupby("equalizer", sort=False):
            group = group.sort_values("axis_value")
            ser = group["ser"].clip(lower=1e-7)
            style = "k--" if name == "awgn-theory" else "o-"
            ax.semilogy(group["axis_value"], ser, style, label=name)
        ax.set_xlabel(axis.value if axis is not None else "point")
        ax.set_ylabel("SER")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    return path


def _trace_label(point: PointResult) -> str:
    parts = [point.equalizer]
    if point.batch_size is not None:
        parts.append(f"N={point.batch_size}")
    if point.lr is not None:
        parts.append(f"lr={point.lr:g}")
    return " ".join(parts)


def plot_traces(record: ExperimentRecord, path: Path) -> Path:
    """All SER traces of a convergence run against the update count."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        for point in record.points:
            if not point.trace:
                continue
            steps = [p.step for p in point.trace]
            ser = np.clip([p.ser for p in point.trace], 1e-7, None)
            ax.semilogy(steps, ser, label=_trace_label(point))
        ax.set_xlabel("update")
        ax.set_ylabel("SER")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
    return path
