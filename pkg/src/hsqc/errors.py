"""Shared exceptions and the global qubit cap."""
from __future__ import annotations

import os

DEFAULT_MAX_QUBITS = 24
MAX_QUBITS_ENV = "HSQC_MAX_QUBITS"


class ValidationError(ValueError):
    """An argument violates a documented contract."""


class InstanceFormatError(ValidationError):
    """An instance file does not match the documented JSON schema."""


class QubitCapError(ValidationError):
    """An exhaustive or statevector operation was asked for too many qubits."""


class UndefinedGapError(ValidationError):
    """Optimality gap requested against a zero ground-state energy."""


class DegenerateScheduleError(ValueError):
    """The commutator norm vanishes, so no gauge coefficient exists."""


def max_qubits() -> int:
    """Hard cap for 2^N work, overridable via HSQC_MAX_QUBITS (at the user's risk)."""
    raw = os.environ.get(MAX_QUBITS_ENV)
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{MAX_QUBITS_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValidationError(f"{MAX_QUBITS_ENV} must be positive, got {value}")
    return value


def check_qubit_cap(n: int, what: str, cap: int | None = None) -> None:
    limit = max_qubits() if cap is None else cap
    if n > limit:
        raise QubitCapError(
            f"{what} needs {n} qubits but the cap is {limit}; "
            f"set {MAX_QUBITS_ENV} to raise it at your own risk"
        )
