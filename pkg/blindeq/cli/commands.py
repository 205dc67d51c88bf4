"""Subcommands: sweep, convergence, gradcheck and constellation."""

import argparse
import re
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from blindeq.autodiff.checkpoint import save_checkpoint
from blindeq.cli.error_handler import EXIT_FAILURE, EXIT_NUMERICAL, EXIT_OK
from blindeq.cli.gradcheck_suites import GRADCHECK_TOL, resolve_modules, run_suites
from blindeq.core.config import settings
from blindeq.core.exceptions import ConfigurationError
from blindeq.core.logging import get_logger
from blindeq.experiments.export import (
    export_constellation,
    plot_sweep,
    plot_traces,
    write_results,
    write_traces,
)
from blindeq.experiments.presets import PRESETS, apply_preset
from blindeq.experiments.sweeps import constellation_snapshot, run_convergence, run_experiment
from blindeq.schemas.experiment import EqualizerKind, ExperimentConfig
from blindeq.schemas.record import ExperimentRecord, PointResult

logger = get_logger(__name__)

GRID_CELL = re.compile(r"^\s*(\d+)\s*[x×]\s*([0-9.eE+-]+)\s*$")


def _yaml_line(text: str, loc: tuple[int | str, ...]) -> int | None:
    """Line of the deepest document node on the error path (1-based).

    Path entries with no node (union tags, keys filled from a preset) are skipped.
    """
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    if node is None:
        return None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if k.value == str(key)), None)
            if match is not None:
                node = match
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
    return node.start_mark.line + 1


def read_document(source: str) -> tuple[dict[str, Any], str]:
    """YAML mapping from a file, or a bare preset name; also returns the source text."""
    path = Path(source)
    if not path.exists():
        if source in PRESETS:
            return {"preset": source}, f"preset: {source}\n"
        raise ConfigurationError(f"Config file {source} not found and not a preset name")
    text = path.read_text(encoding="utf-8")
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigurationError(
            f"Malformed YAML in {source}: {getattr(e, 'problem', e)}",
            line=mark.line + 1 if mark is not None else None,
        ) from e
    if not isinstance(document, dict):
        raise ConfigurationError(f"{source} must hold a mapping at the top level", line=1)
    return document, text


def load_config(source: str, profile: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Parse, expand presets and validate; schema errors carry the YAML line number."""
    document, text = read_document(source)
    document = apply_preset(document, profile or settings.PROFILE)  # type: ignore[arg-type]
    if seed is not None:
        document = {**document, "seed": seed}
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or "<root>"
        raise ConfigurationError(
            f"{field}: {error['msg']}",
            line=_yaml_line(text, tuple(error["loc"])),
            details={"errors": len(e.errors())},
        ) from e


def parse_grid(spec: str) -> list[tuple[int, float]]:
    """``"1024x1e-3,64x1e-2"`` into (batch size, learning rate) cells."""
    cells = []
    for part in (p for p in spec.split(",") if p.strip()):
        match = GRID_CELL.match(part)
        if match is None:
            raise ConfigurationError(f"Grid cell {part.strip()!r} is not of the form <batch>x<lr>")
        try:
            cells.append((int(match.group(1)), float(match.group(2))))
        except ValueError as e:
            raise ConfigurationError(f"Grid cell {part.strip()!r}: {e}") from e
    if not cells:
        raise ConfigurationError("Convergence grid is empty")
    return cells


def summary_line(point: PointResult) -> str:
    """One tab-separated key=value line per point for stdout consumers."""
    fields = {
        "axis_value": "" if point.axis_value is None else f"{point.axis_value:g}",
        "equalizer": point.equalizer,
        "ser": f"{point.ser:.6e}",
        "errors": point.errors,
        "compared": point.compared,
        "censored": int(point.censored),
        "diverged": int(point.diverged),
        "unstable": int(point.unstable),
        "steps": point.steps,
        "batch_size": "" if point.batch_size is None else point.batch_size,
        "lr": "" if point.lr is None else f"{point.lr:g}",
        "checksum": point.checksum or "",
    }
    return "\t".join(f"{k}={v}" for k, v in fields.items())


def _output_dir(args: argparse.Namespace, cfg: ExperimentConfig) -> Path:
    return Path(args.out or settings.OUTPUT_DIR) / cfg.name


def _finish(record: ExperimentRecord) -> int:
    for point in record.points:
        print(summary_line(point), flush=True)
    if record.all_diverged:
        logger.error("Every trained point diverged")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.profile, args.seed)
    out = _output_dir(args, cfg)
    record = run_experiment(cfg, args.threads)
    write_results(record, out)
    write_traces(record, out)
    if settings.PLOTS and not args.no_plot:
        plot_sweep(record, out / "ser.svg")
    return _finish(record)


def cmd_convergence(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.profile, args.seed)
    if not cfg.training.on_the_fly:
        raise ConfigurationError("Convergence runs need training.on_the_fly: true")
    grid = parse_grid(args.grid)
    out = _output_dir(args, cfg)
    record = run_convergence(cfg, grid, args.threads)
    write_results(record, out)
    write_traces(record, out)
    if settings.PLOTS and not args.no_plot:
        plot_traces(record, out / "convergence.svg")
    return _finish(record)


def cmd_gradcheck(args: argparse.Namespace) -> int:
    modules = resolve_modules(args.module)
    paths = run_suites(modules, fault=args.inject_fault)
    for path in paths:
        status = "ok" if path.passed else "FAIL"
        print(
            f"path={path.name}\tmax_rel_error={path.report.max_rel_error:.3e}"
            f"\tcoords={path.report.n_checked}\tstatus={status}",
            flush=True,
        )
    failed = [p.name for p in paths if not p.passed]
    if failed:
        logger.error(f"Gradient mismatch above {GRADCHECK_TOL:g} in {', '.join(failed)}")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_constellation(args: argparse.Namespace) -> int:
    """Train every curve at one sweep point, export its scatter table and parameter checkpoint."""
    cfg = load_config(args.config, args.profile, args.seed)
    out = _output_dir(args, cfg)
    for j, spec in enumerate(cfg.equalizers):
        if spec.kind == EqualizerKind.DBP:
            logger.info("Skipping dbp: nothing trained")
            continue
        eq, x_soft = constellation_snapshot(cfg, j, args.point, args.symbols)
        path = export_constellation(x_soft, out / f"constellation_{spec.name}.csv")
        if len(eq.params):
            save_checkpoint(eq.params, out / f"params_{spec.name}.bin")
        print(f"equalizer={spec.name}\tsymbols={x_soft.size}\tchecksum={eq.checksum()}\tpath={path}", flush=True)
    return EXIT_OK
