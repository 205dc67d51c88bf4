"""Central-difference checks of every analytic gradient path on small random instances."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from blindeq.autodiff.gradcheck import GradCheckReport, LossFn, finite_diff_check
from blindeq.autodiff.mlp import MlpSpec, init_mlp, mlp_backward, mlp_forward
from blindeq.autodiff.params import ParamSet
from blindeq.channels.gmp import GmpIndexSets
from blindeq.core.exceptions import InvalidParameterError
from blindeq.core.logging import get_logger
from blindeq.dsp.constellation import Constellation, draw_symbols, make_qam
from blindeq.dsp.rng import SeededRng
from blindeq.equalizers.base import Minibatch, make_minibatch
from blindeq.equalizers.cma import CmaBatchTrainer
from blindeq.equalizers.components import (
    FirDecoder,
    FirEncoder,
    MpDecoder,
    MpEncoder,
    NnDecoder,
    NnEncoder,
)
from blindeq.equalizers.ffe import SupervisedTrainer
from blindeq.equalizers.vae import VaeTrainer, linear_index_sets
from blindeq.equalizers.vqvae import FrozenQuantization, VqVaeTrainer

logger = get_logger(__name__)

GRADCHECK_TOL = 1e-4
SUITES = ("fir", "mlp", "elbo")
NN_MAX_COORDS = 160

Fault = Literal["sign-flip"]

# Small feature set: linear window, one cubic self term and one cross term each way.
SMALL_FEATURES = GmpIndexSets(
    a_lags={1: range(-3, 4), 3: range(-1, 2)},
    b_lags={3: (0,)},
    b_shifts=(1,),
    c_lags={3: (0,)},
    c_shifts=(1,),
)
SMALL_MP_ENCODER = GmpIndexSets(a_lags={1: range(-2, 3), 3: range(-1, 2)})


@dataclass(frozen=True)
class GradPath:
    name: str
    report: GradCheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed(GRADCHECK_TOL)


def _perturb(params: ParamSet, rng: SeededRng, scale: float = 0.05, skip: tuple[str, ...] = ()) -> None:
    for i, tensor in enumerate(params):
        if tensor.name in skip:
            continue
        tensor.values += scale * rng.child(i).normal(tensor.values.shape)


def _batch(constellation: Constellation, n_symbols: int, guard: int, rng: SeededRng) -> Minibatch:
    total = n_symbols + 2 * guard
    frame = draw_symbols(constellation, total, rng.child(0))
    noise = rng.child(1).normal((2, 2 * total))
    y = np.repeat(frame.symbols, 2) * 0.8 + 0.3 * (noise[0] + 1j * noise[1])
    return make_minibatch(y, frame.symbols, guard, n_symbols, guard)


def _grads(params: ParamSet) -> dict[str, np.ndarray]:
    return {t.name: t.grad.copy() for t in params}


def _vqvae_case(trainer: VqVaeTrainer, batch: Minibatch) -> LossFn:
    x_soft, _ = trainer.decoder.forward(batch.y)
    x_hard = trainer.quantize(x_soft)
    frozen = FrozenQuantization(x_hard=x_hard, offset=x_hard - x_soft)

    def loss_fn(params: ParamSet) -> tuple[float, dict[str, np.ndarray]]:
        loss = trainer.loss_and_grads(batch, frozen)
        return loss.total, _grads(params)

    return loss_fn


def _supervised_case(trainer: SupervisedTrainer | CmaBatchTrainer, batch: Minibatch) -> LossFn:
    def loss_fn(params: ParamSet) -> tuple[float, dict[str, np.ndarray]]:
        return trainer.loss_and_grads(batch), _grads(params)

    return loss_fn


def _vae_case(trainer: VaeTrainer, batch: Minibatch) -> LossFn:
    def loss_fn(params: ParamSet) -> tuple[float, dict[str, np.ndarray]]:
        terms = trainer.loss_and_grads(batch)
        return -terms.value / terms.weight, _grads(params)

    return loss_fn


Case = tuple[LossFn, ParamSet, int | None]


def fir_cases(rng: SeededRng) -> dict[str, Case]:
    """FIR and memory-polynomial blocks, linear in their parameters."""
    c = make_qam(16)
    cases: dict[str, Case] = {}

    for name, rho in (("fir/vqvae", 0.7), ("fir/vqvae-dynamic", None)):
        params = ParamSet()
        trainer = VqVaeTrainer(c, FirDecoder(params, 7), FirEncoder(params, 5), params, rho=rho)
        trainer.psi = 0.3
        _perturb(params, rng.child(1))
        cases[name] = (_vqvae_case(trainer, _batch(c, 24, trainer.guard_symbols, rng.child(2))), params, None)

    params = ParamSet()
    trainer = VqVaeTrainer(c, MpDecoder(params, SMALL_FEATURES), MpEncoder(params, SMALL_MP_ENCODER), params)
    _perturb(params, rng.child(3))
    cases["mp/vqvae"] = (_vqvae_case(trainer, _batch(c, 24, trainer.guard_symbols, rng.child(4))), params, None)

    params = ParamSet()
    ffe = SupervisedTrainer(c, FirDecoder(params, 7), params)
    _perturb(params, rng.child(5))
    cases["fir/ffe"] = (_supervised_case(ffe, _batch(c, 24, ffe.guard_symbols, rng.child(6))), params, None)

    cma = CmaBatchTrainer(c, n_taps=7)
    _perturb(cma.params, rng.child(7))
    cases["fir/cma-batch"] = (_supervised_case(cma, _batch(c, 24, cma.guard_symbols, rng.child(8))), cma.params, None)
    return cases


def mlp_cases(rng: SeededRng) -> dict[str, Case]:
    """Networks: the bare tape, the VQ-VAE pair and the supervised network."""
    c = make_qam(16)
    cases: dict[str, Case] = {}

    spec = MlpSpec(layer_widths=(6, 5, 4, 2), residual_input_to_output=True, residual_index=2)
    params = init_mlp(spec, rng.child(0))
    _perturb(params, rng.child(1))
    x = rng.child(2).normal((5, 6))
    weights = rng.child(3).normal((5, 2))

    def tape_loss(p: ParamSet) -> tuple[float, dict[str, np.ndarray]]:
        out, tape = mlp_forward(spec, p, x)
        grads, _ = mlp_backward(tape, p, weights, accumulate=False)
        return float(np.sum(out * weights)), grads

    cases["mlp/tape"] = (tape_loss, params, None)

    params = ParamSet()
    trainer = VqVaeTrainer(
        c,
        NnDecoder(params, SMALL_FEATURES, (8, 4), rng.child(4)),
        NnEncoder(params, 7, (8, 4), rng.child(5)),
        params,
        rho=0.5,
        l2_weight=1e-3,
    )
    _perturb(params, rng.child(6))
    cases["mlp/vqvae"] = (
        _vqvae_case(trainer, _batch(c, 16, trainer.guard_symbols, rng.child(7))),
        params,
        NN_MAX_COORDS,
    )

    params = ParamSet()
    decoder = NnDecoder(params, SMALL_FEATURES, (8, 4), rng.child(8))
    supervised = SupervisedTrainer(c, decoder, params, l2_weight=1e-3, name="nn-sl")
    _perturb(params, rng.child(9))
    cases["mlp/nn-sl"] = (
        _supervised_case(supervised, _batch(c, 16, supervised.guard_symbols, rng.child(10))),
        params,
        NN_MAX_COORDS,
    )
    return cases


def elbo_cases(rng: SeededRng) -> dict[str, Case]:
    """Closed-form ELBO through the soft demapper, the channel estimate and both noise variances."""
    c = make_qam(4)
    cases: dict[str, Case] = {}
    for i, (name, sets) in enumerate((("elbo/linear", linear_index_sets(3)), ("elbo/mp", SMALL_MP_ENCODER))):
        params = ParamSet()
        trainer = VaeTrainer(c, FirDecoder(params, 5), sets, params, sigma_d2=0.5, sigma_w2=0.2)
        _perturb(params, rng.child(i, 0), skip=("vae.log_sigma_d2", "vae.log_sigma_w2"))
        batch = _batch(c, 12, trainer.guard_symbols, rng.child(i, 1))
        cases[name] = (_vae_case(trainer, batch), params, None)
    return cases


SUITE_BUILDERS: dict[str, Callable[[SeededRng], dict[str, Case]]] = {
    "fir": fir_cases,
    "mlp": mlp_cases,
    "elbo": elbo_cases,
}


def flip_sign(loss_fn: LossFn) -> LossFn:
    """Wrap ``loss_fn`` so every analytic gradient comes back negated."""

    def wrapped(params: ParamSet) -> tuple[float, dict[str, np.ndarray]]:
        loss, grads = loss_fn(params)
        return loss, {name: -g for name, g in grads.items()}

    return wrapped


def resolve_modules(module: str) -> list[str]:
    """``all`` or a comma-separated subset of the suites."""
    if module == "all":
        return list(SUITES)
    selected = [m.strip() for m in module.split(",") if m.strip()]
    if not selected:
        raise InvalidParameterError("empty gradcheck selection")
    unknown = [m for m in selected if m not in SUITES]
    if unknown:
        raise InvalidParameterError(f"unknown gradcheck modules {unknown}; choose from {', '.join(SUITES)}")
    return selected


def run_suites(modules: Sequence[str], fault: Fault | None = None, seed: int = 0) -> list[GradPath]:
    if not modules:
        raise InvalidParameterError("empty gradcheck selection")
    rng = SeededRng(seed)
    paths: list[GradPath] = []
    for k, module in enumerate(modules):
        for name, (loss_fn, params, max_coords) in SUITE_BUILDERS[module](rng.child(k)).items():
            if fault == "sign-flip":
                loss_fn = flip_sign(loss_fn)
            report = finite_diff_check(loss_fn, params, max_coords=max_coords, rng=rng.child(k, 99))
            logger.debug(f"{name}: {report.n_checked} coordinates, worst {report.worst_param}{report.worst_index}")
            paths.append(GradPath(name=name, report=report))
    return paths
