import itertools

import numpy as np
import pytest
from scipy.special import softmax

from blindeq.autodiff.params import ParamSet
from blindeq.channels.gmp import GmpIndexSets, GmpModel, gmp_basis
from blindeq.core.exceptions import InvalidParameterError
from blindeq.dsp.constellation import Constellation, draw_symbols
from blindeq.dsp.rng import SeededRng
from blindeq.equalizers.base import make_minibatch
from blindeq.equalizers.components import FirDecoder, zero_stuff
from blindeq.equalizers.fir import same_convolve
from blindeq.equalizers.vae import (
    DEFAULT_SIGMA_D2,
    MpLayout,
    VaeTrainer,
    elbo_linear,
    elbo_mp,
    elbo_terms,
    linear_index_sets,
    soft_demap,
)

CHANNEL = np.array([0.3 + 0.1j, 1.0, -0.2j])
MP_SETS = GmpIndexSets(a_lags={1: range(-1, 2), 3: range(0, 2)})
MP_COEFFS = np.array([0.3 + 0.1j, 1.0, -0.2j, 0.05 - 0.02j, 0.03j])


def _random_q(rng: SeededRng, n: int, m: int) -> np.ndarray:
    return softmax(2.0 * rng.normal((n, m)), axis=1)


def _expected_log_likelihood(y, q, c, sigma_w2, predict) -> float:
    """Exact E_Q[ln p(y|x)] + H(Q) by enumerating every symbol sequence."""
    n = q.shape[0]
    total = 0.0
    for combo in itertools.product(range(c.order), repeat=n):
        prob = float(np.prod(q[np.arange(n), list(combo)]))
        y_hat = predict(c.points[list(combo)])
        total += prob * (-y.size * np.log(sigma_w2) - np.sum(np.abs(y - y_hat) ** 2) / sigma_w2)
    return total - float(np.sum(q * np.log(q)))


class TestSoftDemap:
    """Test the Gaussian soft demapper."""

    def test_origin_is_uniform(self, qam4: Constellation) -> None:
        """Test a soft symbol at the origin is equally likely to be any 4-QAM point."""
        q, log_q, _ = soft_demap(np.array([0j]), qam4, 0.5)
        np.testing.assert_allclose(q, 0.25)
        np.testing.assert_allclose(log_q, np.log(0.25))

    def test_rows_normalized(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test every row is a distribution."""
        x = rng.normal(50) + 1j * rng.child(0).normal(50)
        q, _, _ = soft_demap(x, qam16, 0.1)
        np.testing.assert_allclose(q.sum(axis=1), 1.0)
        assert np.all(q >= 0)

    def test_sharp_on_point(self, qam16: Constellation) -> None:
        """Test a small variance concentrates the mass on the nearest point."""
        q, _, _ = soft_demap(qam16.points, qam16, 1e-3)
        assert np.all(np.diag(q) > 0.999)

    def test_nonpositive_variance(self, qam4: Constellation) -> None:
        """Test sigma_d2 must be positive."""
        with pytest.raises(InvalidParameterError):
            soft_demap(np.zeros(2), qam4, 0.0)


class TestElbo:
    """Test the closed-form ELBO."""

    def test_one_hot_is_log_likelihood(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test a one-hot Q gives -W ln sigma^2 - ||y - h * u||^2 / sigma^2."""
        frame = draw_symbols(qam16, 12, rng)
        y = rng.child(1).normal(24) + 1j * rng.child(2).normal(24)
        q = np.eye(16)[frame.indices]
        expected = -24 * np.log(0.2) - np.sum(
            np.abs(y - same_convolve(zero_stuff(frame.symbols), CHANNEL)) ** 2
        ) / 0.2
        assert elbo_linear(y, q, CHANNEL, 0.2, qam16) == pytest.approx(expected, rel=1e-12)

    def test_linear_matches_enumeration(self, qam4: Constellation, rng: SeededRng) -> None:
        """Test the linear closed form against exact enumeration over 4^4 sequences."""
        q = _random_q(rng.child(0), 4, 4)
        y = rng.child(1).normal(8) + 1j * rng.child(2).normal(8)
        expected = _expected_log_likelihood(
            y, q, qam4, 0.3, lambda x: same_convolve(zero_stuff(x), CHANNEL)
        )
        assert elbo_linear(y, q, CHANNEL, 0.3, qam4) == pytest.approx(expected, rel=1e-10)

    def test_mp_matches_enumeration(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test the memory-polynomial closed form against exact enumeration over 16^3 sequences."""
        model = GmpModel(index_sets=MP_SETS, coeffs=MP_COEFFS)
        q = _random_q(rng.child(0), 3, 16)
        y = rng.child(1).normal(6) + 1j * rng.child(2).normal(6)
        expected = _expected_log_likelihood(
            y, q, qam16, 0.5, lambda x: gmp_basis(zero_stuff(x), MP_SETS) @ MP_COEFFS
        )
        assert elbo_mp(y, q, model, 0.5, qam16) == pytest.approx(expected, rel=1e-10)

    def test_first_order_mp_is_linear(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test an order-1 memory polynomial reproduces the linear ELBO."""
        q = _random_q(rng.child(0), 10, 16)
        y = rng.child(1).normal(20) + 1j * rng.child(2).normal(20)
        model = GmpModel(index_sets=linear_index_sets(3), coeffs=CHANNEL)
        assert elbo_mp(y, q, model, 0.1, qam16) == pytest.approx(elbo_linear(y, q, CHANNEL, 0.1, qam16))

    def test_uniform_entropy(self, qam4: Constellation) -> None:
        """Test a uniform Q has entropy N ln M."""
        layout = MpLayout.from_index_sets(linear_index_sets(3))
        terms = elbo_terms(np.zeros(10), np.full((5, 4), 0.25), layout, layout.table(CHANNEL), 1.0, qam4)
        assert terms.entropy == pytest.approx(5 * np.log(4))
        assert terms.weight == 10.0

    def test_mask_weights(self, qam4: Constellation, rng: SeededRng) -> None:
        """Test masked symbols drop out of the sample count and the entropy."""
        layout = MpLayout.from_index_sets(linear_index_sets(3))
        q = _random_q(rng, 6, 4)
        mask = np.array([0, 1, 1, 1, 1, 0], dtype=bool)
        terms = elbo_terms(np.zeros(12), q, layout, layout.table(CHANNEL), 1.0, qam4, mask=mask)
        assert terms.weight == 8.0
        assert terms.entropy == pytest.approx(-float(np.sum(q[1:5] * np.log(q[1:5]))))

    def test_rejections(self, qam4: Constellation) -> None:
        """Test invalid noise variance, sizes and cross terms."""
        layout = MpLayout.from_index_sets(linear_index_sets(3))
        q = np.full((2, 4), 0.25)
        with pytest.raises(InvalidParameterError):
            elbo_terms(np.zeros(4), q, layout, layout.table(CHANNEL), 0.0, qam4)
        with pytest.raises(InvalidParameterError):
            elbo_terms(np.zeros(5), q, layout, layout.table(CHANNEL), 1.0, qam4)
        with pytest.raises(InvalidParameterError):
            MpLayout.from_index_sets(
                GmpIndexSets(a_lags={1: (0,)}, b_lags={3: (0,)}, b_shifts=(1,))
            )
        with pytest.raises(InvalidParameterError):
            linear_index_sets(4)


class TestVaeTrainer:
    """Test the VAE trainer wiring."""

    def test_parameters(self, qam16: Constellation) -> None:
        """Test the trainable tensors and their starting values."""
        params = ParamSet()
        trainer = VaeTrainer(qam16, FirDecoder(params, 7), linear_index_sets(5), params)
        assert {"dec.taps", "enc.coeffs", "vae.log_sigma_d2", "vae.log_sigma_w2"} <= set(params.names())
        assert trainer.sigma_d2 == pytest.approx(DEFAULT_SIGMA_D2)
        np.testing.assert_allclose(trainer.encoder_model().coeffs, [0, 0, 1, 0, 0])

    def test_rejects_nonpositive_variance(self, qam16: Constellation) -> None:
        """Test noise variances must be positive."""
        params = ParamSet()
        with pytest.raises(InvalidParameterError):
            VaeTrainer(qam16, FirDecoder(params, 7), linear_index_sets(5), params, sigma_w2=0.0)

    def test_step(self, qam16: Constellation, rng: SeededRng) -> None:
        """Test one update reports a finite per-sample loss and moves the encoder."""
        params = ParamSet()
        trainer = VaeTrainer(qam16, FirDecoder(params, 7), linear_index_sets(5), params, lr=1e-2)
        frame = draw_symbols(qam16, 80, rng.child(0))
        noise = rng.child(1).normal((2, 160))
        y = same_convolve(zero_stuff(frame.symbols), CHANNEL) + 0.1 * (noise[0] + 1j * noise[1])
        batch = make_minibatch(y, frame.symbols, 8, 64, 8)
        before = trainer.encoder_model().coeffs.copy()
        result = trainer.train_step(batch)
        assert np.isfinite(result.loss)
        assert set(result.parts) == {"distortion", "entropy", "sigma_w2"}
        assert not np.allclose(trainer.encoder_model().coeffs, before)
        assert trainer.steps_taken == 1

    def test_learns_channel_and_noise(self, qam4: Constellation, rng: SeededRng) -> None:
        """Test training recovers the channel taps and the noise variance."""
        noise_variance = 0.02
        params = ParamSet()
        trainer = VaeTrainer(qam4, FirDecoder(params, 7), linear_index_sets(5), params, lr=1e-2)
        n, g = 256, trainer.guard_symbols

        def batch(step: int):
            stream = rng.child(step)
            frame = draw_symbols(qam4, n + 2 * g, stream.child(0))
            noise = stream.child(1).normal((2, 2 * frame.indices.size))
            y = same_convolve(zero_stuff(frame.symbols), CHANNEL)
            y = y + np.sqrt(noise_variance / 2) * (noise[0] + 1j * noise[1])
            return make_minibatch(y, frame.symbols, g, n, g)

        for step in range(600):
            trainer.train_step(batch(step))
        trainer.lr = 1e-3
        for step in range(600, 900):
            trainer.train_step(batch(step))

        expected = np.concatenate([[0], CHANNEL, [0]])
        np.testing.assert_allclose(trainer.encoder_model().coeffs, expected, atol=0.05)
        assert trainer.sigma_w2 == pytest.approx(noise_variance, rel=0.2)
