"""Fully-connected networks on real vectors with an explicit reverse-mode tape."""

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from blindeq.autodiff.params import ParamSet, ParamTensor
from blindeq.core.exceptions import InvalidParameterError, StaleTapeError
from blindeq.dsp.rng import SeededRng

Activation = Literal["relu", "linear"]


class MlpSpec(BaseModel):
    """Layer widths (input, hidden..., output) and per-layer activations.

    With ``residual_input_to_output`` the input pair starting at
    ``residual_index`` is added to the output pair.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    layer_widths: tuple[int, ...] = Field(min_length=2)
    activations: tuple[Activation, ...] = ()
    residual_input_to_output: bool = False
    residual_index: int = 0

    @model_validator(mode="before")
    @classmethod
    def default_activations(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("activations") and data.get("layer_widths"):
            n_layers = len(data["layer_widths"]) - 1
            data = {**data, "activations": ("relu",) * (n_layers - 1) + ("linear",)}
        return data

    @model_validator(mode="after")
    def validate_layers(self) -> "MlpSpec":
        n_layers = len(self.layer_widths) - 1
        if any(w < 1 for w in self.layer_widths):
            raise ValueError("layer widths must be positive")
        if len(self.activations) != n_layers:
            raise ValueError(f"expected {n_layers} activations, got {len(self.activations)}")
        if self.activations[-1] != "linear":
            raise ValueError("output activation must be linear")
        if self.residual_input_to_output:
            if self.layer_widths[-1] != 2:
                raise ValueError("residual connection needs a two-wide output")
            if not 0 <= self.residual_index <= self.layer_widths[0] - 2:
                raise ValueError("residual_index outside the input vector")
        return self

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


def weight_name(prefix: str, layer: int) -> str:
    return f"{prefix}w{layer}"


def bias_name(prefix: str, layer: int) -> str:
    return f"{prefix}b{layer}"


def init_mlp(spec: MlpSpec, rng: SeededRng, prefix: str = "", zero_output: bool = False) -> ParamSet:
    """Uniform He-style init scaled by fan-in; biases zero.

    ``zero_output`` zeroes the last layer so a residual network starts as the identity.
    """
    params = ParamSet()
    for i in range(spec.n_layers):
        fan_in, fan_out = spec.layer_widths[i], spec.layer_widths[i + 1]
        limit = np.sqrt(6.0 / fan_in) if spec.activations[i] == "relu" else np.sqrt(3.0 / fan_in)
        w = rng.uniform(-limit, limit, (fan_out, fan_in))
        if zero_output and i == spec.n_layers - 1:
            w = np.zeros((fan_out, fan_in))
        params.add(ParamTensor(weight_name(prefix, i), w))
        params.add(ParamTensor(bias_name(prefix, i), np.zeros(fan_out)))
    return params


@dataclass
class MlpTape:
    """Activations recorded by a forward pass, bound to one parameter version."""

    spec: MlpSpec
    prefix: str
    version: int
    inputs: list[np.ndarray] = field(default_factory=list)
    pre_activations: list[np.ndarray] = field(default_factory=list)


def mlp_forward(
    spec: MlpSpec,
    params: ParamSet,
    x: np.ndarray,
    prefix: str = "",
) -> tuple[np.ndarray, MlpTape]:
    """Evaluate on a batch of row vectors (or a single vector)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != spec.layer_widths[0]:
        raise InvalidParameterError(
            f"input width {h.shape[1]} does not match spec width {spec.layer_widths[0]}",
        )
    tape = MlpTape(spec=spec, prefix=prefix, version=params.version)
    out = h
    for i in range(spec.n_layers):
        tape.inputs.append(out)
        w = params[weight_name(prefix, i)].values
        b = params[bias_name(prefix, i)].values
        z = out @ w.T + b
        tape.pre_activations.append(z)
        out = np.maximum(z, 0.0) if spec.activations[i] == "relu" else z
    if spec.residual_input_to_output:
        out = out + h[:, spec.residual_index:spec.residual_index + 2]
    return (out[0] if single else out), tape


def mlp_backward(
    tape: MlpTape,
    params: ParamSet,
    output_grad: np.ndarray,
    accumulate: bool = True,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Reverse pass. Returns parameter gradients and the input gradient.

    With ``accumulate`` the parameter gradients are also added into ``params``.
    """
    if tape.version != params.version:
        raise StaleTapeError(tape.version, params.version)
    spec = tape.spec
    g = np.asarray(output_grad, dtype=np.float64)
    single = g.ndim == 1
    g = g[None, :] if single else g

    grads: dict[str, np.ndarray] = {}
    upstream = g
    for i in reversed(range(spec.n_layers)):
        if spec.activations[i] == "relu":
            upstream = upstream * (tape.pre_activations[i] > 0)
        w_name, b_name = weight_name(tape.prefix, i), bias_name(tape.prefix, i)
        grads[w_name] = upstream.T @ tape.inputs[i]
        grads[b_name] = upstream.sum(axis=0)
        upstream = upstream @ params[w_name].values
    input_grad = upstream
    if spec.residual_input_to_output:
        input_grad = input_grad.copy()
        input_grad[:, spec.residual_index:spec.residual_index + 2] += g

    if accumulate:
        for name, value in grads.items():
            params[name].grad += value
    return grads, (input_grad[0] if single else input_grad)


def penalized_weights(spec: MlpSpec, prefix: str = "") -> list[str]:
    """Names of input and hidden layer weights (everything but the output layer)."""
    return [weight_name(prefix, i) for i in range(spec.n_layers - 1)]


def pairs_to_complex(v: np.ndarray) -> np.ndarray:
    return v[..., 0::2] + 1j * v[..., 1::2]


def complex_to_pairs(z: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],), dtype=np.float64)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out
