import hashlib
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from blindeq.core.exceptions import InvalidParameterError


@dataclass
class ParamTensor:
    """Trainable real array. Complex parameters are stored as trailing (re, im) pairs.

    For a complex parameter w the gradient pair holds (dL/dRe w, dL/dIm w),
    i.e. the complex number dL/dRe + j dL/dIm.
    """

    name: str
    values: np.ndarray
    grad: np.ndarray = field(init=False)
    is_complex: bool = False

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.is_complex and self.values.shape[-1:] != (2,):
            raise InvalidParameterError(f"complex tensor {self.name} must end in a pair axis")
        self.grad = np.zeros_like(self.values)

    @classmethod
    def from_complex(cls, name: str, values: np.ndarray) -> "ParamTensor":
        v = np.asarray(values, dtype=np.complex128)
        return cls(name=name, values=np.stack([v.real, v.imag], axis=-1), is_complex=True)

    def as_complex(self) -> np.ndarray:
        if not self.is_complex:
            raise InvalidParameterError(f"{self.name} is a real tensor")
        return self.values[..., 0] + 1j * self.values[..., 1]

    def set_complex_grad(self, g: np.ndarray) -> None:
        self.grad[..., 0] = np.real(g)
        self.grad[..., 1] = np.imag(g)

    def complex_grad(self) -> np.ndarray:
        return self.grad[..., 0] + 1j * self.grad[..., 1]

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    @property
    def size(self) -> int:
        return int(self.values.size)


class ParamSet:
    """Ordered collection of tensors with a version that bumps on every update."""

    def __init__(self, tensors: list[ParamTensor] | None = None) -> None:
        self._tensors: dict[str, ParamTensor] = {}
        self.version = 0
        for t in tensors or []:
            self.add(t)

    def add(self, tensor: ParamTensor) -> ParamTensor:
        if tensor.name in self._tensors:
            raise InvalidParameterError(f"duplicate parameter name {tensor.name}")
        self._tensors[tensor.name] = tensor
        return tensor

    def __getitem__(self, name: str) -> ParamTensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[ParamTensor]:
        return iter(self._tensors.values())

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def zero_grad(self) -> None:
        for t in self:
            t.zero_grad()

    def bump(self) -> None:
        self.version += 1

    def grads_finite(self) -> bool:
        return all(np.all(np.isfinite(t.grad)) for t in self)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {t.name: t.values.copy() for t in self}

    def restore(self, values: dict[str, np.ndarray]) -> None:
        for name, v in values.items():
            self._tensors[name].values[...] = v
        self.bump()

    def checksum(self) -> str:
        """Stable hex digest of all parameter values."""
        h = hashlib.sha256()
        for t in self:
            h.update(t.name.encode())
            h.update(np.ascontiguousarray(t.values, dtype="<f8").tobytes())
        return h.hexdigest()[:16]
