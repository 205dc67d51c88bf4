from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from blindeq.autodiff.params import ParamSet
from blindeq.channels.pa import operating_snr_db
from blindeq.core.exceptions import ConfigurationError, DivergenceError, InvalidParameterError
from blindeq.dsp.constellation import Constellation
from blindeq.dsp.rng import SeededRng
from blindeq.equalizers.base import BaseEqualizer, Minibatch, StepResult
from blindeq.equalizers.components import FirDecoder
from blindeq.equalizers.ffe import SupervisedTrainer
from blindeq.equalizers.metrics import qam_ser_awgn
from blindeq.experiments.data import channel_at, epoch_batches, fresh_batch, pa_channel, simulate
from blindeq.experiments.export import (
    RESULT_COLUMNS,
    export_constellation,
    plot_sweep,
    plot_traces,
    trace_filename,
    write_results,
    write_traces,
)
from blindeq.experiments.presets import PRESETS, apply_preset, merge_documents, preset_document
from blindeq.experiments.runner import run_jobs, run_jobs_async
from blindeq.experiments.sweeps import (
    THEORY_CURVE,
    awgn_theory_points,
    evaluate,
    is_unstable,
    run_convergence,
    run_experiment,
    train,
)
from blindeq.schemas.experiment import (
    EvaluationSpec,
    ExperimentConfig,
    FiberChannelSpec,
    LinearChannelSpec,
    PaChannelSpec,
    TrainingSpec,
)
from blindeq.schemas.record import ExperimentRecord, PointResult, TracePoint


def _trace(*sers: float) -> list[TracePoint]:
    return [TracePoint(step=i + 1, loss=0.0, ser=s) for i, s in enumerate(sers)]


class ExplodingEqualizer(BaseEqualizer):
    """Equalizer whose second update diverges."""

    name = "exploding"

    def train_step(self, batch: Minibatch) -> StepResult:
        if self.steps_taken == 1:
            raise DivergenceError(self.name, self.steps_taken, float("inf"))
        self.steps_taken += 1
        return StepResult(loss=1.0)

    def equalize(self, y: np.ndarray) -> np.ndarray:
        return y[::2]

    @property
    def guard_symbols(self) -> int:
        return 2


class TestChannelData:
    """Test channel simulation for training and evaluation."""

    def test_channel_at(self) -> None:
        """Test the sweep quantity lands in the right field."""
        assert channel_at(LinearChannelSpec(), 18.0).snr_db == 18.0
        fiber = channel_at(FiberChannelSpec(overrides={"ssfm_steps": 10}), 6.0)
        assert fiber.overrides == {"ssfm_steps": 10, "launch_power_dbm": 6.0}
        assert channel_at(PaChannelSpec(), 28.0).avg_output_power_dbm == 28.0
        spec = LinearChannelSpec()
        assert channel_at(spec, None) is spec

    def test_simulate_shapes(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test the observation is 2 SPS, edge-trimmed and carries the noise variance."""
        obs = simulate(LinearChannelSpec(snr_db=20.0), qam16, 300, rng)
        assert obs.y.size == 600
        assert obs.n_symbols == 300
        assert obs.noise_variance == pytest.approx(0.01)
        assert obs.raw is None

    def test_simulate_deterministic(self, qam16: Constellation) -> None:
        """Test equal streams reproduce the observation and other streams do not."""
        spec = LinearChannelSpec()
        a = simulate(spec, qam16, 128, SeededRng(9, (1,)))
        b = simulate(spec, qam16, 128, SeededRng(9, (1,)))
        c = simulate(spec, qam16, 128, SeededRng(9, (2,)))
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.symbols.indices, b.symbols.indices)
        assert not np.array_equal(a.y, c.y)

    def test_epoch_batches(self, qam4: Constellation, rng: SeededRng) -> None:
        """Test one epoch covers the dataset in disjoint masked batches."""
        obs = simulate(LinearChannelSpec(), qam4, 2048, rng.child(0))
        batches = list(epoch_batches(obs, 256, 8, rng.child(1)))
        assert len(batches) == 8
        assert all(int(b.mask.sum()) == 256 for b in batches)
        assert all(b.y.size == 2 * b.n_symbols for b in batches)

    def test_fresh_batch(self, qam4: Constellation, rng: SeededRng) -> None:
        """Test on-the-fly batches carry simulated context on both sides."""
        batch = fresh_batch(LinearChannelSpec(), qam4, 64, 5, rng)
        assert batch.n_symbols == 74
        assert int(batch.mask.sum()) == 64
        assert not batch.mask[:5].any()
        assert not batch.mask[-5:].any()


class TestRunner:
    """Test the job pool."""

    def test_order_kept(self) -> None:
        """Test results come back in job order on several threads."""
        jobs = [lambda i=i: i * i for i in range(6)]
        assert run_jobs(jobs, threads=2) == [0, 1, 4, 9, 16, 25]
        assert run_jobs(jobs, threads=1) == [0, 1, 4, 9, 16, 25]

    def test_error_surfaces(self) -> None:
        """Test a failing job raises its own exception type."""

        def fail() -> int:
            raise InvalidParameterError("bad job")

        with pytest.raises(InvalidParameterError):
            run_jobs([lambda: 1, fail, lambda: 3], threads=2)

    def test_invalid_threads(self) -> None:
        """Test zero threads is rejected."""
        with pytest.raises(InvalidParameterError):
            run_jobs([lambda: 1], threads=0)

    async def test_async(self) -> None:
        """Test the async pool inside a running event loop."""
        assert await run_jobs_async([lambda i=i: i + 1 for i in range(4)], 2) == [1, 2, 3, 4]


class TestEvaluate:
    """Test held-out SER estimation."""

    @pytest.fixture
    def receiver(self, qam4: Constellation) -> SupervisedTrainer:
        """Create an untrained Dirac FIR receiver."""
        params = ParamSet()
        return SupervisedTrainer(qam4, FirDecoder(params, 7), params)

    def test_censored(self, receiver: SupervisedTrainer, qam4: Constellation, rng: SeededRng) -> None:
        """Test an error-free channel stops at the symbol cap and reports censoring."""
        channel = LinearChannelSpec(taps=[(1.0, 0.0)], snr_db=40.0)
        spec = EvaluationSpec(target_errors=20, max_symbols=4096, min_symbols=1024)
        outcome = evaluate(receiver, channel, qam4, spec, rng)
        assert outcome.errors == 0
        assert outcome.censored
        assert outcome.ser == 0.0
        assert outcome.compared == 2 * (2048 - 2 * receiver.guard_symbols)

    def test_stops_at_target(self, receiver: SupervisedTrainer, qam4: Constellation, rng: SeededRng) -> None:
        """Test a noisy channel stops after the first chunk once the target is met."""
        channel = LinearChannelSpec(taps=[(1.0, 0.0)], snr_db=0.0)
        spec = EvaluationSpec(target_errors=20, max_symbols=8192, min_symbols=1024)
        outcome = evaluate(receiver, channel, qam4, spec, rng)
        assert not outcome.censored
        assert outcome.errors >= 20
        assert outcome.compared == 2048 - 2 * receiver.guard_symbols


class TestTraining:
    """Test the training loop and instability detection."""

    def test_divergence_reported(self, qam4: Constellation, rng: SeededRng) -> None:
        """Test divergence ends training and is reported instead of raised."""
        eq = ExplodingEqualizer(qam4, lr=1e-3)
        training = TrainingSpec(dataset_symbols=1024, batch_size=256, epochs=1)
        outcome = train(eq, training, LinearChannelSpec(), qam4, rng)
        assert outcome.diverged
        assert outcome.steps == 1
        assert outcome.loss_final == 1.0

    @pytest.mark.parametrize(
        ("sers", "expected"),
        [
            ((0.1, 0.01, 0.05), True),
            ((0.1, 0.05, 0.04), False),
            ((0.001, 0.0, 0.002), False),
            ((0.3,), False),
        ],
    )
    def test_is_unstable(self, sers: tuple[float, ...], expected: bool) -> None:
        """Test SER rebounds against the running best."""
        assert is_unstable(_trace(*sers), n_symbols=1024) is expected


class TestSweeps:
    """Test whole experiment runs on tiny configurations."""

    def test_snr_sweep(self, tiny_linear_config: ExperimentConfig) -> None:
        """Test one point per (SNR, equalizer) and thread-count independence."""
        serial = run_experiment(tiny_linear_config, threads=1)
        parallel = run_experiment(tiny_linear_config, threads=2)
        assert [(p.axis_value, p.equalizer) for p in serial.points] == [
            (18.0, "ffe"), (18.0, "vqvae"), (24.0, "ffe"), (24.0, "vqvae"),
        ]
        for a, b in zip(serial.points, parallel.points):
            assert a.ser == b.ser
            assert a.checksum == b.checksum
        for p in serial.points:
            assert p.steps == 16
            assert 0 < p.compared <= 2048
            assert p.batch_size == 256
        assert not serial.all_diverged

    def test_convergence_flat_at_zero_rate(self, tiny_linear_document: dict) -> None:
        """Test a zero learning rate leaves the traced SER constant."""
        document = {
            **tiny_linear_document,
            "equalizers": [{"kind": "vqvae", "decoder_taps": 15, "encoder_taps": 9}],
            "training": {"on_the_fly": True, "steps": 5, "batch_size": 64, "trace": True},
        }
        del document["sweep"]
        cfg = ExperimentConfig.model_validate(document)
        record = run_convergence(cfg, [(64, 0.0)], threads=1)
        (point,) = record.points
        assert [p.step for p in point.trace] == [1, 2, 3, 4, 5]
        assert len({p.ser for p in point.trace}) == 1
        assert point.lr == 0.0

    def test_convergence_rejections(self, tiny_linear_config: ExperimentConfig) -> None:
        """Test convergence runs need on-the-fly data and a valid grid."""
        with pytest.raises(InvalidParameterError):
            run_convergence(tiny_linear_config, [(64, 1e-3)])
        cfg = tiny_linear_config.model_copy(
            update={"training": TrainingSpec(on_the_fly=True, steps=2, batch_size=64)}
        )
        with pytest.raises(InvalidParameterError):
            run_convergence(cfg, [])
        with pytest.raises(InvalidParameterError):
            run_convergence(cfg, [(0, 1e-3)])

    def test_awgn_theory(self) -> None:
        """Test the theory curve uses each point's operating SNR."""
        cfg = ExperimentConfig.model_validate(
            {
                "channel": {"kind": "pa"},
                "modulation_order": 64,
                "equalizers": [{"kind": "ffe"}],
                "sweep": {"axis": "pa_power_dbm", "values": [24.0]},
            }
        )
        (point,) = awgn_theory_points(cfg)
        snr_db = operating_snr_db(pa_channel(channel_at(cfg.channel, 24.0)))
        assert point.equalizer == THEORY_CURVE
        assert point.axis_value == 24.0
        assert point.ser == pytest.approx(qam_ser_awgn(64, snr_db))
        assert point.steps == 0


class TestExport:
    """Test result artifacts."""

    @pytest.fixture
    def record(self, tiny_linear_config: ExperimentConfig) -> ExperimentRecord:
        """Create a record with one traced point."""
        return ExperimentRecord(
            config=tiny_linear_config,
            points=[
                PointResult(axis_value=18.0, equalizer="ffe", ser=0.02, steps=16, seed=7),
                PointResult(
                    axis_value=18.0, equalizer="vqvae", ser=0.01, steps=16, seed=7,
                    batch_size=64, lr=1e-3, trace=_trace(0.5, 0.1),
                ),
            ],
        )

    def test_write_results(self, record: ExperimentRecord, out_dir: Path) -> None:
        """Test results.csv columns and the JSON record."""
        path = write_results(record, out_dir)
        frame = pd.read_csv(path)
        assert tuple(frame.columns) == RESULT_COLUMNS
        assert list(frame["equalizer"]) == ["ffe", "vqvae"]
        restored = ExperimentRecord.model_validate_json((out_dir / "record.json").read_text())
        assert len(restored.points) == 2

    def test_write_traces(self, record: ExperimentRecord, out_dir: Path) -> None:
        """Test only traced points get a trace table."""
        (path,) = write_traces(record, out_dir)
        assert path.name == "trace_vqvae_18_N64_lr0.001.csv"
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["step", "loss", "ser"]
        assert list(frame["ser"]) == [0.5, 0.1]

    def test_trace_filename_without_grid(self) -> None:
        """Test optional parts are left out."""
        assert trace_filename(PointResult(equalizer="cma", ser=0.0, seed=0)) == "trace_cma.csv"

    def test_plots(self, record: ExperimentRecord, out_dir: Path) -> None:
        """Test both plots are written as SVG."""
        for path in (plot_sweep(record, out_dir / "sweep.svg"), plot_traces(record, out_dir / "traces.svg")):
            assert "<svg" in path.read_text()

    def test_plot_traces_without_grid(self, record: ExperimentRecord, out_dir: Path) -> None:
        """Test traced points without batch size or learning rate still plot."""
        record.points.append(PointResult(equalizer="cma", ser=0.3, steps=2, seed=7, trace=_trace(0.6, 0.3)))
        text = plot_traces(record, out_dir / "traces.svg").read_text()
        assert "<svg" in text
        assert "vqvae N=64 lr=0.001" in text

    def test_export_constellation(self, out_dir: Path) -> None:
        """Test one (re, im) row per symbol and rejection of an empty frame."""
        path = export_constellation(np.array([1 + 2j, -0.5j]), out_dir / "scatter.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["re", "im"]
        np.testing.assert_allclose(frame.to_numpy(), [[1.0, 2.0], [0.0, -0.5]])
        with pytest.raises(InvalidParameterError):
            export_constellation(np.array([]), out_dir / "empty.csv")


class TestPresets:
    """Test named experiment documents."""

    @pytest.mark.parametrize("name", sorted(PRESETS))
    @pytest.mark.parametrize("profile", ["desk", "paper"])
    def test_presets_validate(self, name: str, profile: str) -> None:
        """Test every preset is a valid experiment in both profiles."""
        cfg = ExperimentConfig.model_validate(preset_document(name, profile))
        assert cfg.name == name

    def test_ddlms_preset(self) -> None:
        """Test the small-batch comparison carries DD-LMS, standard CMA and every VQ-VAE weighting."""
        cfg = ExperimentConfig.model_validate(preset_document("paper-linear-ddlms"))
        kinds = {eq.kind.value for eq in cfg.equalizers}
        assert {"vqvae", "ddlms", "cma"} <= kinds
        assert cfg.training.on_the_fly
        assert cfg.training.batch_size == 64
        ddlms = next(eq for eq in cfg.equalizers if eq.kind.value == "ddlms")
        assert ddlms.lr == 1e-2
        rhos = sorted(eq.rho for eq in cfg.equalizers if eq.kind.value == "vqvae" and not eq.dynamic_weighting)
        assert rhos == [0.2, 1.0, 10.0]
        assert any(eq.dynamic_weighting for eq in cfg.equalizers)

    def test_unknown_preset(self) -> None:
        """Test unknown names are a configuration error."""
        with pytest.raises(ConfigurationError):
            preset_document("paper-dsl")

    def test_apply_preset_overrides(self) -> None:
        """Test document keys override the preset recursively."""
        merged = apply_preset({"preset": "paper-linear-16qam", "training": {"epochs": 1}, "seed": 3})
        assert merged["training"] == {"dataset_symbols": 1 << 16, "batch_size": 1024, "epochs": 1}
        assert merged["seed"] == 3
        assert "preset" not in merged

    def test_apply_preset_passthrough(self, tiny_linear_document: dict) -> None:
        """Test documents without a preset are returned as they are."""
        assert apply_preset(tiny_linear_document) is tiny_linear_document

    def test_apply_preset_family_change(self) -> None:
        """Test a preset cannot be moved to another channel family."""
        with pytest.raises(ConfigurationError):
            apply_preset({"preset": "paper-ssmf", "channel": {"kind": "linear"}})

    def test_merge_documents(self) -> None:
        """Test mappings merge and lists are replaced."""
        base = {"a": {"b": 1, "c": [1, 2]}, "d": 1}
        merged = merge_documents(base, {"a": {"c": [3]}, "e": 2})
        assert merged == {"a": {"b": 1, "c": [3]}, "d": 1, "e": 2}
        assert base["a"]["c"] == [1, 2]


@pytest.mark.slow
class TestLinearChannelOutcomes:
    """Test trained equalizers on the reference linear channel."""

    @staticmethod
    def _config(equalizers: list[dict], snr_values: list[float], epochs: int, target_errors: int) -> ExperimentConfig:
        return ExperimentConfig.model_validate(
            {
                "name": "reference-linear",
                "channel": {"kind": "linear"},
                "modulation_order": 16,
                "equalizers": equalizers,
                "training": {"dataset_symbols": 1 << 16, "batch_size": 1024, "epochs": epochs},
                "sweep": {"axis": "snr_db", "values": snr_values},
                "evaluation": {"target_errors": target_errors, "max_symbols": 1 << 22},
                "seed": 3,
            }
        )

    def test_vqvae_matches_ffe(self) -> None:
        """Test blind VQ-VAE training reaches the data-aided FFE error rate at 21 dB."""
        cfg = self._config([{"kind": "ffe"}, {"kind": "vqvae"}], [21.0], epochs=30, target_errors=1000)
        ffe, vqvae = run_experiment(cfg, threads=1).points
        assert not ffe.diverged and not vqvae.diverged
        assert ffe.errors >= 100 and vqvae.errors >= 100
        assert vqvae.ser <= 1.1 * ffe.ser

    def test_ffe_ser_falls_with_snr(self) -> None:
        """Test the FFE error rate never rises as the SNR grows."""
        cfg = self._config([{"kind": "ffe"}], [15.0, 18.0, 21.0, 24.0], epochs=20, target_errors=300)
        points = run_experiment(cfg, threads=1).points
        assert [p.axis_value for p in points] == [15.0, 18.0, 21.0, 24.0]
        sers = [p.ser for p in points]
        assert all(later <= earlier for earlier, later in zip(sers, sers[1:]))
        assert sers[0] > sers[-1]
