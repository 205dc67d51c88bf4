"""Sweeps and convergence runs: a freshly trained equalizer per sweep point and curve."""

import time
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from blindeq.channels.pa import operating_snr_db
from blindeq.core.config import settings
from blindeq.core.exceptions import ConvergenceError, DivergenceError, InvalidParameterError
from blindeq.core.logging import get_logger, log_point
from blindeq.dsp.constellation import Constellation, SymbolFrame, make_qam
from blindeq.dsp.noise import snr_to_noise_variance
from blindeq.dsp.rng import SeededRng
from blindeq.equalizers.base import BaseEqualizer, Minibatch
from blindeq.equalizers.dbp import DbpReceiver
from blindeq.equalizers.demapper import nearest_indices
from blindeq.equalizers.metrics import AlignResult, align_and_ser, aligned_errors, qam_ser_awgn
from blindeq.equalizers.registry import build_equalizer
from blindeq.experiments.data import (
    Observation,
    Stream,
    channel_at,
    epoch_batches,
    fresh_batch,
    pa_channel,
    simulate,
)
from blindeq.experiments.runner import run_jobs
from blindeq.schemas.experiment import (
    ChannelKind,
    ChannelSpec,
    EqualizerKind,
    EqualizerSpec,
    EvaluationSpec,
    ExperimentConfig,
    FiberChannelSpec,
    LinearChannelSpec,
    PaChannelSpec,
    SweepAxis,
    TrainingSpec,
)
from blindeq.schemas.record import ExperimentRecord, PointResult, TracePoint

logger = get_logger(__name__)

UNSTABLE_RATIO = 2.0
UNSTABLE_MIN_ERRORS = 10
THEORY_CURVE = "awgn-theory"
ROTATION_LABELS = {1 + 0j: "1", 1j: "j", -1 + 0j: "-1", -1j: "-j"}

Receiver = BaseEqualizer | DbpReceiver


def point_rng(cfg: ExperimentConfig, point_index: int) -> SeededRng:
    """Stream owned by one sweep point, shared by all curves at that point."""
    return SeededRng(cfg.seed, (point_index,))


def score(receiver: Receiver, obs: Observation, alignment: AlignResult | None = None) -> AlignResult:
    """Hard-decision SER on ``obs`` without the receiver's edge symbols.

    With ``alignment`` the delay and rotation found earlier are reused instead
    of searched again.
    """
    c = obs.symbols.constellation
    if isinstance(receiver, DbpReceiver):
        if obs.raw is None:
            raise InvalidParameterError("dbp needs the receiver-rate fiber signal")
        x_soft = receiver.equalize(obs.raw, truth=obs.symbols.symbols, edge=obs.edge)
        truth = obs.symbols
    else:
        g, n = receiver.guard_symbols, obs.n_symbols
        if n <= 2 * g:
            raise InvalidParameterError(f"{n} symbols leave nothing to score after a guard of {g}")
        x_soft = receiver.equalize(obs.y)[g:n - g]
        truth = obs.symbols.slice(g, n - g)
    decided = SymbolFrame(indices=nearest_indices(x_soft, c), constellation=c)
    if alignment is not None:
        return aligned_errors(decided, truth, alignment.delay, alignment.rotation)
    max_delay = receiver.guard_symbols if receiver.search == "phase4+delay" else 0
    return align_and_ser(decided, truth, receiver.search, max_delay)


@dataclass(frozen=True)
class EvalOutcome:
    errors: int
    compared: int
    censored: bool
    alignment: AlignResult

    @property
    def ser(self) -> float:
        return self.errors / self.compared


def evaluate(
    receiver: Receiver,
    channel: ChannelSpec,
    constellation: Constellation,
    spec: EvaluationSpec,
    rng: SeededRng,
) -> EvalOutcome:
    """Score fresh held-out chunks until the target error count or the symbol cap is reached."""
    target = spec.target_errors or settings.EVAL_TARGET_ERRORS
    cap = spec.max_symbols or settings.EVAL_MAX_SYMBOLS
    chunk = min(max(settings.EVAL_CHUNK_SYMBOLS, spec.min_symbols), cap)

    errors = compared = 0
    alignment: AlignResult | None = None
    index = 0
    while True:
        obs = simulate(channel, constellation, chunk, rng.child(index))
        result = score(receiver, obs, alignment)
        alignment = alignment or result
        errors += result.errors
        compared += result.compared
        index += 1
        if errors >= target and compared >= spec.min_symbols:
            break
        # Stop before a further chunk would pass the cap
        if compared + chunk > cap:
            break
    assert alignment is not None
    censored = errors < target
    if censored:
        logger.debug(f"{receiver.name}: only {errors} errors in {compared} symbols")
    return EvalOutcome(errors=errors, compared=compared, censored=censored, alignment=alignment)


@dataclass
class TrainOutcome:
    loss_final: float | None = None
    steps: int = 0
    diverged: bool = False
    trace: list[TracePoint] = field(default_factory=list)


def training_batches(
    training: TrainingSpec,
    channel: ChannelSpec,
    constellation: Constellation,
    guard: int,
    rng: SeededRng,
) -> Iterator[Minibatch]:
    """Minibatches from a reshuffled fixed dataset, or a fresh realization per update."""
    if training.on_the_fly:
        for step in range(training.steps or 0):
            yield fresh_batch(channel, constellation, training.batch_size, guard, rng.child(Stream.TRAIN, step))
        return
    dataset = simulate(channel, constellation, training.dataset_symbols, rng.child(Stream.TRAIN))
    for epoch in range(training.epochs):
        yield from epoch_batches(dataset, training.batch_size, guard, rng.child(Stream.SHUFFLE, epoch))


def train(
    eq: BaseEqualizer,
    training: TrainingSpec,
    channel: ChannelSpec,
    constellation: Constellation,
    rng: SeededRng,
) -> TrainOutcome:
    """Run the whole training schedule; divergence ends it early and is reported, not raised."""
    outcome = TrainOutcome()
    trace_obs = None
    if training.trace:
        trace_obs = simulate(
            channel,
            constellation,
            settings.TRACE_EVAL_SYMBOLS + 2 * eq.guard_symbols,
            rng.child(Stream.TRACE),
        )
    try:
        for batch in training_batches(training, channel, constellation, eq.guard_symbols, rng):
            result = eq.train_step(batch)
            outcome.steps = eq.steps_taken
            outcome.loss_final = result.loss
            if trace_obs is not None and eq.steps_taken % training.trace_every == 0:
                outcome.trace.append(
                    TracePoint(step=eq.steps_taken, loss=result.loss, ser=score(eq, trace_obs).ser)
                )
    except (DivergenceError, ConvergenceError) as e:
        logger.warning(f"{eq.name} stopped after {eq.steps_taken} steps: {e.message}")
        outcome.diverged = True
    return outcome


def is_unstable(trace: Sequence[TracePoint], ratio: float = UNSTABLE_RATIO, n_symbols: int | None = None) -> bool:
    """True when the SER climbs back above ``ratio`` times the best SER reached before.

    Rises smaller than a few errors on the trace frame are ignored.
    """
    if len(trace) < 2:
        return False
    n = n_symbols or settings.TRACE_EVAL_SYMBOLS
    ser = np.array([p.ser for p in trace])
    best = np.minimum.accumulate(ser)[:-1]
    later = ser[1:]
    return bool(np.any((later > ratio * best) & (later - best >= UNSTABLE_MIN_ERRORS / n)))


def noise_variance_hint(channel: ChannelSpec, constellation: Constellation) -> float | None:
    if isinstance(channel, LinearChannelSpec):
        return snr_to_noise_variance(constellation, channel.snr_db)
    return None


def train_and_evaluate(
    cfg: ExperimentConfig,
    spec: EqualizerSpec,
    channel: ChannelSpec,
    rng: SeededRng,
    lr: float,
    training: TrainingSpec,
    axis_value: float | None = None,
) -> PointResult:
    constellation = make_qam(cfg.modulation_order)
    start = time.perf_counter()
    eq = build_equalizer(
        spec,
        channel.kind,
        constellation,
        rng.child(Stream.INIT),
        lr=lr,
        noise_variance=noise_variance_hint(channel, constellation),
    )
    trained = train(eq, training, channel, constellation, rng)
    common = {
        "axis_value": axis_value,
        "equalizer": spec.name,
        "loss_final": trained.loss_final,
        "steps": trained.steps,
        "seed": cfg.seed,
        "lr": lr,
        "batch_size": training.batch_size,
        "trace": trained.trace,
        "unstable": trained.diverged or is_unstable(trained.trace),
    }
    if trained.diverged:
        return PointResult(
            ser=1.0,
            diverged=True,
            wall_ms=(time.perf_counter() - start) * 1000,
            **common,
        )
    ev = evaluate(eq, channel, constellation, cfg.evaluation, rng.child(Stream.EVAL))
    return PointResult(
        ser=ev.ser,
        errors=ev.errors,
        compared=ev.compared,
        censored=ev.censored,
        delay=ev.alignment.delay,
        rotation=ROTATION_LABELS.get(complex(ev.alignment.rotation), str(ev.alignment.rotation)),
        checksum=eq.checksum(),
        wall_ms=(time.perf_counter() - start) * 1000,
        **common,
    )


def run_dbp_point(
    cfg: ExperimentConfig,
    spec: EqualizerSpec,
    channel: FiberChannelSpec,
    rng: SeededRng,
    axis_value: float | None,
) -> PointResult:
    start = time.perf_counter()
    receiver = DbpReceiver(channel.link(), spec.dbp_steps, channel.ps_rolloff)
    ev = evaluate(receiver, channel, make_qam(cfg.modulation_order), cfg.evaluation, rng.child(Stream.EVAL))
    return PointResult(
        axis_value=axis_value,
        equalizer=spec.name,
        ser=ev.ser,
        errors=ev.errors,
        compared=ev.compared,
        censored=ev.censored,
        seed=cfg.seed,
        wall_ms=(time.perf_counter() - start) * 1000,
    )


def _point_label(cfg: ExperimentConfig, spec: EqualizerSpec, axis_value: float | None) -> str:
    if cfg.sweep.axis is None:
        return spec.name
    return f"{spec.name} {cfg.sweep.axis.value}={axis_value:g}"


def run_point(cfg: ExperimentConfig, point_index: int, axis_value: float | None, eq_index: int) -> PointResult:
    """Train and score one curve at one sweep point; a learning-rate grid keeps its best candidate."""
    spec = cfg.equalizers[eq_index]
    channel = channel_at(cfg.channel, axis_value)
    rng = point_rng(cfg, point_index)
    with log_point(logger, _point_label(cfg, spec, axis_value)):
        if spec.kind == EqualizerKind.DBP:
            assert isinstance(channel, FiberChannelSpec)
            return run_dbp_point(cfg, spec, channel, rng, axis_value)
        candidates = [
            train_and_evaluate(cfg, spec, channel, rng, lr, cfg.training, axis_value)
            for lr in (spec.lr_grid or [spec.lr])
        ]
        return min(candidates, key=lambda p: (p.diverged, p.ser))


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentRecord:
    """Every (sweep point, equalizer) pair as an independent job."""
    start = time.perf_counter()
    jobs = [
        partial(run_point, cfg, i, value, j)
        for i, value in enumerate(cfg.sweep_points())
        for j in range(len(cfg.equalizers))
    ]
    points = run_jobs(jobs, threads)
    return ExperimentRecord(config=cfg, wall_ms=(time.perf_counter() - start) * 1000, points=points)


def _require(cfg: ExperimentConfig, kind: ChannelKind, axis: SweepAxis) -> None:
    if cfg.channel.kind != kind.value:
        raise InvalidParameterError(f"expected a {kind.value} channel, got {cfg.channel.kind}")
    if cfg.sweep.axis != axis:
        raise InvalidParameterError(f"expected a sweep over {axis.value}")


def run_snr_sweep(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentRecord:
    _require(cfg, ChannelKind.LINEAR, SweepAxis.SNR)
    return run_sweep(cfg, threads)


def run_launch_power_sweep(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentRecord:
    _require(cfg, ChannelKind.FIBER, SweepAxis.LAUNCH_POWER)
    return run_sweep(cfg, threads)


def awgn_theory_points(cfg: ExperimentConfig) -> list[PointResult]:
    """Square-QAM AWGN SER at each point's operating SNR."""
    assert isinstance(cfg.channel, PaChannelSpec)
    points = []
    for value in cfg.sweep_points():
        channel = channel_at(cfg.channel, value)
        assert isinstance(channel, PaChannelSpec)
        snr_db = operating_snr_db(pa_channel(channel))
        points.append(
            PointResult(
                axis_value=value,
                equalizer=THEORY_CURVE,
                ser=float(qam_ser_awgn(cfg.modulation_order, snr_db)),
                seed=cfg.seed,
            )
        )
    return points


def run_pa_power_sweep(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentRecord:
    _require(cfg, ChannelKind.PA, SweepAxis.PA_POWER)
    record = run_sweep(cfg, threads)
    record.points.extend(awgn_theory_points(cfg))
    return record


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentRecord:
    """Sweep dispatch by channel family; a config without an axis runs a single point."""
    if cfg.sweep.axis is None:
        return run_sweep(cfg, threads)
    if cfg.sweep.axis == SweepAxis.SNR:
        return run_snr_sweep(cfg, threads)
    if cfg.sweep.axis == SweepAxis.LAUNCH_POWER:
        return run_launch_power_sweep(cfg, threads)
    return run_pa_power_sweep(cfg, threads)


def run_cell(
    cfg: ExperimentConfig,
    point_index: int,
    axis_value: float | None,
    eq_index: int,
    batch_size: int,
    lr: float,
) -> PointResult:
    spec = cfg.equalizers[eq_index]
    channel = channel_at(cfg.channel, axis_value)
    training = cfg.training.model_copy(update={"batch_size": batch_size, "trace": True})
    label = f"{_point_label(cfg, spec, axis_value)} N={batch_size} lr={lr:g}"
    with log_point(logger, label):
        return train_and_evaluate(cfg, spec, channel, point_rng(cfg, point_index), lr, training, axis_value)


def run_convergence(
    cfg: ExperimentConfig,
    grid: Sequence[tuple[int, float]],
    threads: int | None = None,
) -> ExperimentRecord:
    """On-the-fly training per (batch size, learning rate) cell with a SER trace per update."""
    if not cfg.training.on_the_fly:
        raise InvalidParameterError("convergence runs need on-the-fly training data")
    if not grid:
        raise InvalidParameterError("convergence grid is empty")
    for batch_size, lr in grid:
        if batch_size <= 0 or lr < 0:
            raise InvalidParameterError(f"invalid grid cell (N={batch_size}, lr={lr})")
    if any(eq.kind == EqualizerKind.DBP for eq in cfg.equalizers):
        raise InvalidParameterError("dbp has no training to trace")

    start = time.perf_counter()
    jobs = [
        partial(run_cell, cfg, i, value, j, batch_size, lr)
        for i, value in enumerate(cfg.sweep_points())
        for j in range(len(cfg.equalizers))
        for batch_size, lr in grid
    ]
    points = run_jobs(jobs, threads)
    return ExperimentRecord(config=cfg, wall_ms=(time.perf_counter() - start) * 1000, points=points)


def constellation_snapshot(
    cfg: ExperimentConfig,
    eq_index: int,
    point_index: int = 0,
    n_symbols: int = 4096,
) -> tuple[BaseEqualizer, np.ndarray]:
    """Train one curve at one sweep point and equalize a held-out frame for a scatter plot."""
    spec = cfg.equalizers[eq_index]
    if spec.kind == EqualizerKind.DBP:
        raise InvalidParameterError("dbp has no trained parameters to snapshot")
    values = cfg.sweep_points()
    if not 0 <= point_index < len(values):
        raise InvalidParameterError(f"point index {point_index} outside {len(values)} sweep points")
    channel = channel_at(cfg.channel, values[point_index])
    constellation = make_qam(cfg.modulation_order)
    rng = point_rng(cfg, point_index)
    with log_point(logger, f"constellation {_point_label(cfg, spec, values[point_index])}"):
        eq = build_equalizer(
            spec,
            channel.kind,
            constellation,
            rng.child(Stream.INIT),
            noise_variance=noise_variance_hint(channel, constellation),
        )
        trained = train(eq, cfg.training, channel, constellation, rng)
        if trained.diverged:
            raise DivergenceError(eq.name, trained.steps, float("nan"))
        g = eq.guard_symbols
        obs = simulate(channel, constellation, n_symbols + 2 * g, rng.child(Stream.EVAL).child(0))
        return eq, eq.equalize(obs.y)[g:g + n_symbols]
