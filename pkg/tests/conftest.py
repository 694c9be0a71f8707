"""Shared helpers: independent brute-force oracles and random instances."""
from __future__ import annotations

import math

import numpy as np
import pytest

from hsqc import HuboInstance, PauliString
from hsqc.instances import CouplingDistribution, sample_couplings

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(pauli: PauliString, n: int) -> np.ndarray:
    """Dense matrix with qubit 0 as the least significant index bit."""
    letters = dict(pauli.ops)
    out = np.array([[1.0 + 0j]])
    for q in range(n):
        out = np.kron(PAULI_MATS[letters.get(q, "I")], out)
    return out


def naive_energy(terms, spins) -> float:
    """Direct polynomial evaluation, independent of the packed-array path."""
    total = 0.0
    for idx, w in terms:
        prod = w
        for q in idx:
            prod *= spins[q]
        total += prod
    return total


def naive_ground_state(inst: HuboInstance):
    """Plain enumeration over all 2^N configurations (no incremental deltas)."""
    n = inst.num_vars
    best_energy = math.inf
    best_spins = None
    count = 0
    for code in range(1 << n):
        spins = [1 - 2 * ((code >> q) & 1) for q in range(n)]
        e = naive_energy(inst.terms, spins)
        if e < best_energy - 1e-9:
            best_energy = e
            best_spins = spins
            count = 1
        elif e <= best_energy + 1e-9:
            count += 1
    return np.array(best_spins, dtype=np.int8), best_energy, count


def random_instance(n: int, seed: int, *, n_pairs: int | None = None,
                    n_triples: int | None = None) -> HuboInstance:
    """Dense random instance with clipped Cauchy couplings on random tuples."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))
    if n_pairs is None:
        n_pairs = 2 * n
    if n_triples is None:
        n_triples = 2 * n
    pairs = set()
    while len(pairs) < n_pairs:
        u, v = rng.choice(n, size=2, replace=False)
        pairs.add((min(u, v), max(u, v)))
    triples = set()
    while len(triples) < n_triples:
        t = tuple(sorted(rng.choice(n, size=3, replace=False)))
        triples.add(t)
    tuples = [(q,) for q in range(n)] + sorted(pairs) + sorted(triples)
    weights = sample_couplings(CouplingDistribution(), len(tuples), rng)
    return HuboInstance(n, tuple((t, float(w)) for t, w in zip(tuples, weights)))


def random_spins(n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.integers(0, 2, n) * 2 - 1).astype(np.int8)


@pytest.fixture
def tiny_instance() -> HuboInstance:
    """h_0 = 1, J_01 = 2: worked single-flip example."""
    return HuboInstance(2, (((0,), 1.0), ((0, 1), 2.0)))
