import numpy as np
import pytest

from hsqc import HuboInstance, QubitCapError, brute_force_ground_state, energy
from hsqc.errors import MAX_QUBITS_ENV

from conftest import naive_ground_state, random_instance, random_spins


def test_single_field_minimizer():
    inst = HuboInstance(1, (((0,), 1.0),))
    result = brute_force_ground_state(inst)
    assert list(result.spins) == [-1]
    assert result.energy == -1.0
    assert result.degeneracy == 1


def test_ferromagnetic_pair_degeneracy():
    inst = HuboInstance(2, (((0, 1), -1.0),))
    result = brute_force_ground_state(inst)
    assert result.energy == -1.0
    assert result.degeneracy == 2  # both aligned configurations


@pytest.mark.parametrize("seed", range(6))
def test_matches_naive_enumeration(seed):
    inst = random_instance(10, seed, n_pairs=14, n_triples=10)
    result = brute_force_ground_state(inst)
    naive_spins, naive_e, naive_count = naive_ground_state(inst)
    assert result.energy == pytest.approx(naive_e, abs=1e-9)
    assert result.degeneracy == naive_count
    assert energy(inst, result.spins) == pytest.approx(naive_e, abs=1e-9)


def test_twelve_variable_instance_matches_naive():
    inst = random_instance(12, 99)
    result = brute_force_ground_state(inst)
    _, naive_e, _ = naive_ground_state(inst)
    assert result.energy == pytest.approx(naive_e, abs=1e-9)


def test_never_beaten_by_random_configurations():
    inst = random_instance(12, 4)
    result = brute_force_ground_state(inst)
    rng = np.random.default_rng(0)
    rows = np.stack([random_spins(12, rng) for _ in range(10_000)])
    from hsqc import energy_batch

    assert result.energy <= energy_batch(inst, rows).min() + 1e-9


def test_cap_refusal_names_the_limit():
    inst = HuboInstance(30, tuple(((q,), 1.0) for q in range(30)))
    with pytest.raises(QubitCapError, match="cap is 24"):
        brute_force_ground_state(inst)


def test_cap_env_override(monkeypatch):
    inst = HuboInstance(25, tuple(((q,), 1.0) for q in range(25)))
    monkeypatch.setenv(MAX_QUBITS_ENV, "25")
    result = brute_force_ground_state(inst)
    assert result.energy == -25.0


def test_explicit_cap_argument():
    inst = random_instance(8, 0)
    with pytest.raises(QubitCapError):
        brute_force_ground_state(inst, max_qubits=6)
