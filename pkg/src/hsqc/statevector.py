"""Exact dense statevector backend for the quantum stage.

Amplitude index convention: qubit 0 is the least significant bit of the
basis index.  Rotations use the full-angle convention exp(-i * theta * P)
for a Pauli string P; all angle bookkeeping (factors of two, schedules)
belongs to the caller.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError, check_qubit_cap

_PAULI_LETTERS = ("X", "Y", "Z")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis on a sparse support.

    ``ops`` maps qubit id to one of "X", "Y", "Z" (stored sorted by qubit).
    """

    ops: tuple[tuple[int, str], ...]
    coefficient: float = 1.0

    def __post_init__(self):
        entries = tuple(sorted((int(q), str(p)) for q, p in dict(self.ops).items()))
        if not entries:
            raise ValidationError("a Pauli string needs non-empty support")
        for q, p in entries:
            if q < 0:
                raise ValidationError(f"negative qubit id {q}")
            if p not in _PAULI_LETTERS:
                raise ValidationError(f"unknown Pauli letter {p!r} on qubit {q}")
        if not np.isfinite(self.coefficient):
            raise ValidationError(f"coefficient must be finite, got {self.coefficient}")
        object.__setattr__(self, "ops", entries)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)

    def masks(self) -> tuple[int, int, int]:
        """(X-flip mask, phase-parity mask, number of Y letters)."""
        mask_x = 0
        mask_zy = 0
        n_y = 0
        for q, p in self.ops:
            if p in ("X", "Y"):
                mask_x |= 1 << q
            if p in ("Z", "Y"):
                mask_zy |= 1 << q
            if p == "Y":
                n_y += 1
        return mask_x, mask_zy, n_y


def _bit_parity(indices: np.ndarray, mask: int) -> np.ndarray:
    return np.bitwise_count(indices & np.uint64(mask)).astype(np.uint8) & 1


class StateVector:
    """2^N complex amplitudes with unit norm."""

    def __init__(self, num_qubits: int, amplitudes: np.ndarray | None = None,
                 max_qubits: int | None = None):
        check_qubit_cap(num_qubits, "statevector simulation", max_qubits)
        self.num_qubits = num_qubits
        if amplitudes is None:
            amps = np.zeros(1 << num_qubits, dtype=np.complex128)
            amps[0] = 1.0
        else:
            amps = np.asarray(amplitudes, dtype=np.complex128)
            if amps.shape != (1 << num_qubits,):
                raise ValidationError(
                    f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, got {amps.shape}"
                )
        self.amplitudes = amps

    @cached_property
    def _indices(self) -> np.ndarray:
        return np.arange(1 << self.num_qubits, dtype=np.uint64)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        dup = StateVector.__new__(StateVector)
        dup.num_qubits = self.num_qubits
        dup.amplitudes = self.amplitudes.copy()
        return dup


def prepare_product(angles, *, max_qubits: int | None = None) -> StateVector:
    """Product state with qubit i in cos(angle_i)|0> + sin(angle_i)|1>."""
    theta = np.asarray(angles, dtype=np.float64)
    if theta.ndim != 1 or theta.size < 1:
        raise ValidationError(f"angles must be a non-empty 1-D array, got shape {theta.shape}")
    n = theta.size
    check_qubit_cap(n, "statevector simulation", max_qubits)
    amps = np.array([1.0 + 0.0j])
    for i in range(n):
        qubit = np.array([np.cos(theta[i]), np.sin(theta[i])], dtype=np.complex128)
        amps = np.kron(qubit, amps)  # qubit i lands at bit weight 2^i
    state = StateVector.__new__(StateVector)
    state.num_qubits = n
    state.amplitudes = amps
    return state


def apply_pauli_rotation(state: StateVector, pauli: PauliString, theta: float) -> StateVector:
    """Apply exp(-i * theta * P) in place: a := cos(theta) a - i sin(theta) (P a)."""
    support = pauli.support
    if support and support[-1] >= state.num_qubits:
        raise ValidationError(
            f"Pauli support {support} exceeds the {state.num_qubits}-qubit register"
        )
    mask_x, mask_zy, n_y = pauli.masks()
    src = state._indices ^ np.uint64(mask_x)
    phase = (1j) ** (n_y % 4) * (-1.0) ** _bit_parity(src, mask_zy)
    p_amps = phase * state.amplitudes[src]
    state.amplitudes = np.cos(theta) * state.amplitudes - 1j * np.sin(theta) * p_amps
    return state


def expectation_z(state: StateVector, qubit: int) -> float:
    """<Z_qubit>: +1 weight for bit 0, -1 for bit 1."""
    if not 0 <= qubit < state.num_qubits:
        raise ValidationError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    probs = np.abs(state.amplitudes) ** 2
    bit = (state._indices >> np.uint64(qubit)) & np.uint64(1)
    return float(probs @ (1.0 - 2.0 * bit.astype(np.float64)))


def sample(state: StateVector, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    """``n_shots`` i.i.d. basis-index draws from |a|^2 (deterministic per rng)."""
    if n_shots < 1:
        raise ValidationError(f"n_shots must be >= 1, got {n_shots}")
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    return rng.choice(probs.size, size=n_shots, p=probs).astype(np.int64)


def index_to_bits(index: int, num_qubits: int) -> np.ndarray:
    """Bit vector (qubit 0 first) of a basis index."""
    idx = np.uint64(index)
    return ((idx >> np.arange(num_qubits, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)


def indices_to_bit_rows(indices: np.ndarray, num_qubits: int) -> np.ndarray:
    """(k, N) bit matrix (qubit 0 first) for an array of basis indices."""
    idx = np.asarray(indices, dtype=np.uint64)[:, None]
    shifts = np.arange(num_qubits, dtype=np.uint64)[None, :]
    return ((idx >> shifts) & np.uint64(1)).astype(np.uint8)
