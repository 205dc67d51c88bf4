from pathlib import Path

import numpy as np
import pytest

from blindeq.channels.fiber import (
    NZDSF,
    SSMF,
    FiberLink,
    cd_compensate,
    dbp,
    fiber_link_apply,
    ssfm_propagate,
    transmit_waveform,
)
from blindeq.channels.gmp import (
    GmpIndexSets,
    GmpModel,
    gmp_apply,
    gmp_fit,
    load_gmp_text,
    save_gmp_text,
)
from blindeq.channels.linear import REFERENCE_TAPS, LinearIsiChannel, linear_channel_apply
from blindeq.channels.pa import (
    PaChannel,
    linear_pa_model,
    operating_snr_db,
    pa_channel_apply,
    pa_index_sets,
    surrogate_pa_model,
)
from blindeq.core.exceptions import (
    ConfigurationError,
    InvalidParameterError,
    RankDeficientError,
)
from blindeq.dsp.constellation import Constellation, draw_symbols
from blindeq.dsp.filters import decimate, fir_filter, rrc_taps
from blindeq.dsp.rng import SeededRng
from blindeq.dsp.signal import ComplexSignal
from blindeq.equalizers.dbp import genie_gain
from blindeq.equalizers.demapper import nearest_indices
from blindeq.equalizers.metrics import evm


def _matched_symbols(rx: ComplexSignal, rolloff: float) -> np.ndarray:
    return decimate(fir_filter(rx, rrc_taps(rolloff, sps=2)), 2, 0).samples


class TestLinearChannel:
    """Test the T/2-spaced ISI channel."""

    def test_impulse_response(self, rng: SeededRng) -> None:
        """Test a noiseless impulse returns the channel taps around its position."""
        x = np.zeros(22, dtype=np.complex128)
        x[10] = 1.0
        y = linear_channel_apply(ComplexSignal(samples=x, sps=2), LinearIsiChannel(), rng).samples
        np.testing.assert_allclose(y[8:13], REFERENCE_TAPS)
        assert np.count_nonzero(np.abs(y) > 0) == 5

    def test_identity_taps(self, rng: SeededRng) -> None:
        """Test a single unit tap without noise is the identity."""
        x = rng.normal(64) + 1j * rng.normal(64)
        ch = LinearIsiChannel(taps_h=np.array([1.0]))
        y = linear_channel_apply(ComplexSignal(samples=x, sps=2), ch, rng)
        np.testing.assert_allclose(y.samples, x)

    def test_noise_power(self, rng: SeededRng) -> None:
        """Test the added noise has the configured power."""
        ch = LinearIsiChannel(noise_variance=0.01)
        y = linear_channel_apply(ComplexSignal(samples=np.zeros(1_000_000), sps=2), ch, rng)
        assert y.power() == pytest.approx(0.01, rel=0.01)

    def test_rejects_wrong_rate(self, rng: SeededRng) -> None:
        """Test inputs not at 2 samples per symbol are rejected."""
        with pytest.raises(InvalidParameterError):
            linear_channel_apply(ComplexSignal(samples=np.zeros(8), sps=1), LinearIsiChannel(), rng)

    def test_rejects_bad_parameters(self) -> None:
        """Test empty taps and negative noise are rejected."""
        with pytest.raises(InvalidParameterError):
            LinearIsiChannel(taps_h=np.array([]))
        with pytest.raises(InvalidParameterError):
            LinearIsiChannel(noise_variance=-1.0)


class TestSsfm:
    """Test split-step propagation and dispersion compensation."""

    @pytest.fixture
    def waveform(self, qam16: Constellation, rng: SeededRng) -> ComplexSignal:
        """Create an 8 SPS launch waveform at 8 dBm."""
        return transmit_waveform(draw_symbols(qam16, 512, rng), SSMF, 0.1)

    def test_launch_power(self, waveform: ComplexSignal) -> None:
        """Test the launch waveform carries about 8 dBm."""
        assert waveform.power() == pytest.approx(6.31e-3, rel=0.15)

    def test_lossless_conserves_power(self, waveform: ComplexSignal) -> None:
        """Test alpha = 0 keeps the power at 1e-9 relative."""
        fiber = SSMF.with_overrides(alpha_db_per_km=0.0)
        out = ssfm_propagate(waveform, fiber, "forward")
        assert out.power() == pytest.approx(waveform.power(), rel=1e-9)

    def test_linear_lossless_all_pass(self, waveform: ComplexSignal) -> None:
        """Test gamma = alpha = 0 is an all-pass to 1e-12 relative."""
        fiber = SSMF.with_overrides(alpha_db_per_km=0.0, gamma_per_w_km=0.0)
        out = ssfm_propagate(waveform, fiber, "forward")
        assert out.power() == pytest.approx(waveform.power(), rel=1e-12)

    def test_loss_scaling(self, waveform: ComplexSignal) -> None:
        """Test gamma = 0 attenuates by 10^(-alpha L / 10)."""
        fiber = SSMF.with_overrides(gamma_per_w_km=0.0)
        out = ssfm_propagate(waveform, fiber, "forward")
        expected = waveform.power() * 10 ** (-0.2 * 110 / 10)
        assert out.power() == pytest.approx(expected, rel=1e-9)

    def test_round_trip(self, waveform: ComplexSignal) -> None:
        """Test backward propagation inverts forward propagation."""
        there = ssfm_propagate(waveform, SSMF, "forward")
        back = ssfm_propagate(there, SSMF, "backward")
        assert np.max(np.abs(back.samples - waveform.samples)) < 1e-9

    def test_cd_compensation_inverts_dispersion(self, waveform: ComplexSignal) -> None:
        """Test CD compensation undoes linear lossless propagation."""
        fiber = SSMF.with_overrides(alpha_db_per_km=0.0, gamma_per_w_km=0.0)
        out = ssfm_propagate(waveform, fiber, "forward")
        restored = cd_compensate(out, fiber.beta2_ps2_per_km, fiber.length_km, fiber.sim_rate_ghz)
        assert np.max(np.abs(restored.samples - waveform.samples)) < 1e-9
        assert restored.power() == pytest.approx(out.power(), rel=1e-12)

    def test_cd_zero_distance(self, waveform: ComplexSignal) -> None:
        """Test zero distance returns the input."""
        assert cd_compensate(waveform, -21.683, 0.0, 200.0) is waveform

    def test_presets(self) -> None:
        """Test the fiber presets."""
        assert SSMF.beta2_ps2_per_km == pytest.approx(-21.683)
        assert NZDSF.beta2_ps2_per_km == pytest.approx(-4.0)
        assert NZDSF.gamma_per_w_km == pytest.approx(1.6)
        assert SSMF.rx_sps == 2
        assert SSMF.sim_rate_ghz == pytest.approx(200.0)

    def test_rate_mismatch_rejected(self) -> None:
        """Test a receiver rate that does not divide the simulation rate."""
        with pytest.raises(ValueError):
            FiberLink(rx_sample_rate_ghz=75.0)


class TestFiberLink:
    """Test the full fiber link front end."""

    @pytest.fixture
    def quiet_linear_link(self) -> FiberLink:
        """Create a noise-free linear link with full CD compensation."""
        return SSMF.with_overrides(
            gamma_per_w_km=0.0,
            rx_noise_dbm=None,
            cd_precomp_fraction=1.0,
            ssfm_steps=10,
        )

    def test_linear_link_recovers_symbols(
        self,
        quiet_linear_link: FiberLink,
        qam16: Constellation,
        rng: SeededRng,
    ) -> None:
        """Test gamma = 0 with full CD compensation gives EVM below 1%."""
        frame = draw_symbols(qam16, 1024, rng.child(0))
        rx = fiber_link_apply(frame, quiet_linear_link, 0.1, rng.child(1))
        assert rx.sps == 2
        assert len(rx) == 2 * 1024
        x = _matched_symbols(rx, 0.1)[64:-64]
        truth = frame.symbols[64:-64]
        assert evm(genie_gain(x, truth) * x, truth) < 0.01

    def test_dbp_linear_step_invariance(
        self,
        quiet_linear_link: FiberLink,
        qam16: Constellation,
        rng: SeededRng,
    ) -> None:
        """Test backpropagation of a linear link does not depend on the step count."""
        frame = draw_symbols(qam16, 512, rng.child(0))
        rx = fiber_link_apply(frame, quiet_linear_link, 0.1, rng.child(1))
        one = dbp(rx, quiet_linear_link, 1).samples
        many = dbp(rx, quiet_linear_link, 7).samples
        assert np.max(np.abs(one - many)) < 1e-9 * np.max(np.abs(one))

    @pytest.mark.slow
    def test_dbp_noise_free_error_free(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test noise-free DBP with matched steps decides every symbol correctly at 8 dBm."""
        fiber = SSMF.with_overrides(rx_noise_dbm=None, lpf_bandwidth_ghz=None, ssfm_steps=20)
        frame = draw_symbols(qam16, 4096, rng.child(0))
        rx = fiber_link_apply(frame, fiber, 0.1, rng.child(1))
        x = dbp(rx, fiber, 20).samples[64:-64]
        truth = frame.symbols[64:-64]
        decided = nearest_indices(genie_gain(x, truth) * x, qam16)
        np.testing.assert_array_equal(decided, frame.indices[64:-64])


class TestGmp:
    """Test the generalized memory polynomial."""

    def test_pure_gain(self) -> None:
        """Test a single linear term is a complex gain."""
        sets = GmpIndexSets(a_lags={1: (0,)})
        model = GmpModel.from_terms(sets, {("a", 1, 0, 0): 2 - 1j})
        x = np.array([1.0, 1j, -0.5])
        np.testing.assert_allclose(gmp_apply(ComplexSignal(samples=x), model).samples, (2 - 1j) * x)

    def test_cubic_term(self) -> None:
        """Test a10 = 1, a30 = 0.1 on an impulse."""
        sets = GmpIndexSets(a_lags={1: (0,), 3: (0,)})
        model = GmpModel.from_terms(sets, {("a", 1, 0, 0): 1.0, ("a", 3, 0, 0): 0.1})
        out = gmp_apply(ComplexSignal(samples=[0, 0, 1, 0, 0]), model).samples
        np.testing.assert_allclose(out, [0, 0, 1.1, 0, 0])

    def test_one_sample_delay(self) -> None:
        """Test a lag-1 linear term delays by one sample."""
        sets = GmpIndexSets(a_lags={1: (1,)})
        model = GmpModel.from_terms(sets, {("a", 1, 1, 0): 1.0})
        out = gmp_apply(ComplexSignal(samples=[1, 2, 3, 4]), model).samples
        np.testing.assert_allclose(out, [0, 1, 2, 3])

    def test_memory_polynomial_matches_convolution(self, rng: SeededRng) -> None:
        """Test linear a-terms equal causal FIR filtering."""
        taps = rng.normal(3) + 1j * rng.normal(3)
        model = GmpModel(index_sets=GmpIndexSets(a_lags={1: (0, 1, 2)}), coeffs=taps)
        x = rng.normal(50) + 1j * rng.normal(50)
        out = gmp_apply(ComplexSignal(samples=x), model).samples
        np.testing.assert_allclose(out, np.convolve(x, taps)[:50], atol=1e-12)

    def test_fit_recovers_coefficients(self, rng: SeededRng) -> None:
        """Test noise-free least squares recovers a known model."""
        sets = GmpIndexSets(a_lags={1: (0, 1), 3: (0, 1)}, b_lags={3: (0,)}, b_shifts=(1,))
        truth = rng.child(0).normal(sets.size) + 1j * rng.child(1).normal(sets.size)
        noise = rng.child(2).normal((2, 2000))
        x = ComplexSignal(samples=0.5 * (noise[0] + 1j * noise[1]) / np.sqrt(2))
        y = gmp_apply(x, GmpModel(index_sets=sets, coeffs=truth))
        fitted = gmp_fit(x, y, sets)
        assert np.max(np.abs(fitted.coeffs - truth)) / np.max(np.abs(truth)) < 1e-8

    def test_fit_linear_data(self, rng: SeededRng) -> None:
        """Test purely linear data gives vanishing nonlinear coefficients."""
        sets = GmpIndexSets(a_lags={1: (0, 1, 2), 3: (0, 1, 2)})
        taps = np.array([1.0, 0.3 - 0.2j, 0.05j])
        noise = rng.normal((2, 1000))
        x = 0.5 * (noise[0] + 1j * noise[1])
        y = np.convolve(x, taps)[:1000]
        model = gmp_fit(ComplexSignal(samples=x), ComplexSignal(samples=y), sets)
        np.testing.assert_allclose(model.coeffs[:3], taps, atol=1e-10)
        assert np.max(np.abs(model.coeffs[3:])) <= 1e-10

    def test_fit_too_few_samples(self) -> None:
        """Test fewer samples than coefficients is rejected."""
        sets = GmpIndexSets(a_lags={1: (0, 1, 2, 3)})
        with pytest.raises(InvalidParameterError):
            gmp_fit(ComplexSignal(samples=[1, 2, 3]), ComplexSignal(samples=[1, 2, 3]), sets)

    def test_fit_rank_deficient(self) -> None:
        """Test an all-zero input cannot determine any coefficient."""
        sets = GmpIndexSets(a_lags={1: (0,)})
        zeros = ComplexSignal(samples=np.zeros(100))
        with pytest.raises(RankDeficientError):
            gmp_fit(zeros, zeros, sets)

    def test_index_set_size(self) -> None:
        """Test the closed-form size matches the enumerated terms."""
        sets = pa_index_sets()
        assert sets.size == len(sets.terms()) == 57
        assert sets.max_shift() == 3
        assert not sets.is_memory_polynomial

    def test_shifts_required(self) -> None:
        """Test b-terms without shifts are rejected."""
        with pytest.raises(ValueError):
            GmpIndexSets(a_lags={1: (0,)}, b_lags={3: (0,)})

    def test_text_io(self, tmp_path: Path, rng: SeededRng) -> None:
        """Test the coefficient text file restores the same model."""
        sets = GmpIndexSets(
            a_lags={1: (0, 1), 3: (0,)},
            b_lags={3: (0,)},
            b_shifts=(1,),
            c_lags={3: (1,)},
            c_shifts=(1, 2),
        )
        model = GmpModel(index_sets=sets, coeffs=rng.normal(sets.size) + 1j * rng.normal(sets.size))
        path = tmp_path / "model.gmp"
        save_gmp_text(model, path)
        loaded = load_gmp_text(path)
        assert loaded.index_sets == sets
        np.testing.assert_array_equal(loaded.coeffs, model.coeffs)

    def test_text_malformed_line(self, tmp_path: Path) -> None:
        """Test a short line is reported with its line number."""
        path = tmp_path / "bad.gmp"
        path.write_text("# header\na 1 0\n", encoding="utf-8")
        with pytest.raises(ConfigurationError) as exc_info:
            load_gmp_text(path)
        assert exc_info.value.line == 2


class TestPaChannel:
    """Test the power-amplifier channel."""

    def test_surrogate_is_cached(self) -> None:
        """Test the surrogate model is fitted once."""
        model = surrogate_pa_model()
        assert model is surrogate_pa_model()
        assert model.coeffs.size == 57

    def test_operating_snr(self) -> None:
        """Test SNR at 24 dBm output with 0.4 V noise."""
        ch = PaChannel(pa=linear_pa_model(), avg_output_power_dbm=24.0)
        assert operating_snr_db(ch) == pytest.approx(21.96, abs=0.01)

    def test_per_dimension_noise(self) -> None:
        """Test per-dimension noise doubles the complex variance."""
        ch = PaChannel(pa=linear_pa_model(), avg_output_power_dbm=24.0, noise_convention="per_dimension")
        assert ch.noise_variance_v2 == pytest.approx(0.32)
        assert operating_snr_db(PaChannel(pa=linear_pa_model(), avg_output_power_dbm=20.0, noise_std_volts=0.0)) == float("inf")

    def test_linear_pa_noise_free(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test a linear PA without noise passes the symbols through the matched filter."""
        ch = PaChannel(pa=linear_pa_model(), avg_output_power_dbm=24.0, noise_std_volts=0.0)
        frame = draw_symbols(qam16, 1024, rng)
        rx = pa_channel_apply(frame, ch, 0.2, rng)
        assert rx.power() == pytest.approx(ch.target_power_v2, rel=0.1)
        x = _matched_symbols(rx, 0.2)[32:-32]
        truth = frame.symbols[32:-32]
        assert evm(genie_gain(x, truth) * x, truth) < 1e-3

    def test_power_beyond_range(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test an unreachable output power is rejected."""
        ch = PaChannel(pa=surrogate_pa_model(), avg_output_power_dbm=40.0)
        with pytest.raises(InvalidParameterError):
            pa_channel_apply(draw_symbols(qam16, 64, rng), ch, 0.2, rng)
