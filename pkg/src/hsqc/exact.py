"""Exhaustive ground-state oracle for desk-scale instances.

Walks all 2^N configurations along a Gray code so each step is a single
flip with an O(degree) energy update.  Serves as ground truth for every
stochastic solver in the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import check_qubit_cap
from .hubo import ENERGY_ATOL, HuboInstance, energy, spins_to_bitstring


@dataclass(frozen=True)
class GroundState:
    spins: np.ndarray
    energy: float
    degeneracy: int

    @property
    def bitstring(self) -> str:
        return spins_to_bitstring(self.spins)


def brute_force_ground_state(
    inst: HuboInstance, *, max_qubits: int | None = None, tie_atol: float = ENERGY_ATOL
) -> GroundState:
    """Global minimizer, its energy, and the number of optimal configurations.

    Ties within ``tie_atol`` count toward the degeneracy; the reported
    minimizer is the first one found along the Gray-code walk, so callers
    should rely on the energy and degeneracy rather than which optimum comes
    back.
    """
    check_qubit_cap(inst.num_vars, "exhaustive enumeration", max_qubits)
    weights, tvars, adj_off, adj_terms = inst.packed
    spins, _, degeneracy = _kernels.gray_code_minimum(
        weights, tvars, adj_off, adj_terms, inst.num_vars, tie_atol
    )
    return GroundState(spins=spins, energy=energy(inst, spins), degeneracy=int(degeneracy))
