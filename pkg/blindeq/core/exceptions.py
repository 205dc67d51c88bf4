from typing import Any


class BlindEqError(Exception):
    """Base exception for the package."""

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ConfigurationError(BlindEqError):
    """Raised when an experiment document or setting is invalid."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        details: dict[str, Any] | None = None,
    ) -> None:
        self.line = line
        merged = dict(details or {})
        if line is not None:
            merged["line"] = line
        super().__init__(message, merged)


class InvalidParameterError(BlindEqError, ValueError):
    """Raised when an operation precondition is violated."""
    pass


class UnsupportedOrderError(InvalidParameterError):
    """Raised for constellation orders that are not square QAM."""

    def __init__(self, order: int) -> None:
        self.order = order
        super().__init__(
            f"Unsupported QAM order {order}; expected one of 4, 16, 64, 256",
            {"order": order},
        )


class MisalignedPilotsError(InvalidParameterError):
    """Raised when pilot symbols do not line up with the observation."""

    def __init__(self, n_pilots: int, n_symbols: int) -> None:
        super().__init__(
            f"Got {n_pilots} pilots for {n_symbols} equalized symbols",
            {"n_pilots": n_pilots, "n_symbols": n_symbols},
        )


class NumericalError(BlindEqError):
    """Raised when a computation leaves the finite domain."""
    pass


class DivergenceError(NumericalError):
    """Raised when a training loss becomes non-finite."""

    def __init__(self, trainer: str, step: int, loss: float) -> None:
        self.step = step
        super().__init__(
            f"{trainer} diverged at step {step} (loss={loss})",
            {"trainer": trainer, "step": step, "loss": loss},
        )


class NonFiniteSignalError(NumericalError):
    """Raised when propagation produces non-finite samples."""
    pass


class RankDeficientError(NumericalError):
    """Raised when a least-squares regressor matrix is rank deficient."""

    def __init__(self, rank: int, n_coeffs: int) -> None:
        super().__init__(
            f"Regressor matrix has rank {rank} < {n_coeffs} coefficients",
            {"rank": rank, "n_coeffs": n_coeffs},
        )


class StaleTapeError(NumericalError):
    """Raised when a backward pass uses a tape recorded for older parameters."""

    def __init__(self, tape_version: int, params_version: int) -> None:
        super().__init__(
            f"Tape recorded at parameter version {tape_version}, parameters are at {params_version}",
            {"tape_version": tape_version, "params_version": params_version},
        )


class ConvergenceError(NumericalError):
    """Raised when a pre-training phase exhausts its step budget."""
    pass
