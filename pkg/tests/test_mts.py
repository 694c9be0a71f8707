import math

import numpy as np
import pytest

from hsqc import (
    HuboInstance,
    ValidationError,
    brute_force_ground_state,
    delta_energy,
    energy,
    memetic_search,
    mts_model_time,
    mutation_rate,
    tabu_search,
)
from hsqc.mts import BITFLIP_SECONDS, MtsParams

from conftest import random_instance, random_spins


class TestMutationRate:
    def test_start_endpoint_exact(self):
        assert mutation_rate(0, 100, 0.1, 0.001) == 0.1

    def test_end_endpoint_exact(self):
        assert mutation_rate(100, 100, 0.1, 0.001) == 0.001

    def test_mid_value(self):
        # ln(51)/ln(101) corresponds to (g_max, g) = (100, 50)
        expected = 0.001 + 0.099 * math.log(51) / math.log(101)
        assert mutation_rate(50, 100, 0.1, 0.001) == pytest.approx(expected, abs=1e-12)
        assert mutation_rate(50, 100, 0.1, 0.001) == pytest.approx(0.08534, abs=1e-5)
        # direct evaluation at (99, 49): denominator is ln(100)
        expected_99 = 0.001 + 0.099 * math.log(51) / math.log(100)
        assert mutation_rate(49, 99, 0.1, 0.001) == pytest.approx(expected_99, abs=1e-12)

    def test_strictly_decreasing(self):
        values = [mutation_rate(g, 200, 0.1, 0.001) for g in range(201)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            mutation_rate(-1, 10, 0.1, 0.01)
        with pytest.raises(ValidationError):
            mutation_rate(11, 10, 0.1, 0.01)


def reference_tabu(inst, spins, tabu_length, max_iterations, target_energy=None):
    """Line-for-line reimplementation with exact configuration comparisons.

    Independent of the compiled path: the tabu list stores full
    configurations as tuples and energies are evaluated from scratch.
    """
    current = list(int(v) for v in spins)
    current_energy = energy(inst, current)
    best, best_energy = list(current), current_energy
    flips = 0
    if target_energy is not None and best_energy <= target_energy:
        return best, best_energy, flips
    fifo: list[tuple] = []
    for _ in range(max_iterations):
        chosen, chosen_energy = None, math.inf
        for i in range(inst.num_vars):
            neighbor = list(current)
            neighbor[i] = -neighbor[i]
            if tuple(neighbor) in fifo:
                continue
            e = current_energy + delta_energy(inst, current, i)
            flips += 1
            if e < chosen_energy:
                chosen, chosen_energy = i, e
        if chosen is None:
            break
        fifo.append(tuple(current))
        if len(fifo) > tabu_length:
            fifo.pop(0)
        current[chosen] = -current[chosen]
        current_energy = chosen_energy
        if current_energy < best_energy:
            best, best_energy = list(current), current_energy
            if target_energy is not None and best_energy <= target_energy:
                break
    return best, best_energy, flips


class TestTabuSearch:
    def test_input_at_target_returned_unchanged(self):
        inst = HuboInstance(2, (((0,), 1.0), ((1,), 1.0)))
        result = tabu_search(inst, [-1, -1], 10, 10, target_energy=-2.0)
        assert list(result.spins) == [-1, -1]
        assert result.iterations == 0
        assert result.n_flips == 0

    def test_single_improving_neighbor(self):
        inst = HuboInstance(1, (((0,), 1.0),))
        result = tabu_search(inst, [1], 10, 10)
        assert list(result.spins) == [-1]
        assert result.energy == -1.0

    def test_never_worse_than_input(self):
        rng = np.random.default_rng(3)
        for seed in range(10):
            inst = random_instance(10, seed)
            start = random_spins(10, rng)
            result = tabu_search(inst, start, 10, 10)
            assert result.energy <= energy(inst, start) + 1e-12

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_reference_replay(self, seed):
        """The compiled search must replay the reference trace exactly:
        same best energy, same best configuration, same flip count."""
        inst = random_instance(10, seed)
        rng = np.random.default_rng(seed)
        start = random_spins(10, rng)
        got = tabu_search(inst, start, 5, 12)
        want_spins, want_energy, want_flips = reference_tabu(inst, start, 5, 12)
        assert got.energy == pytest.approx(want_energy, abs=1e-9)
        assert list(got.spins) == want_spins
        assert got.n_flips == want_flips

    def test_flip_count_with_target_matches_reference(self):
        inst = random_instance(9, 77)
        gs = brute_force_ground_state(inst)
        start = np.ones(9, dtype=np.int8)
        got = tabu_search(inst, start, 10, 50, target_energy=gs.energy)
        _, want_energy, want_flips = reference_tabu(inst, start, 10, 50, target_energy=gs.energy)
        assert got.energy == pytest.approx(want_energy, abs=1e-9)
        assert got.n_flips == want_flips


class TestModelTime:
    def test_zero(self):
        assert mts_model_time(0) == 0.0

    def test_million_flips(self):
        assert mts_model_time(1_000_000) == pytest.approx(0.0574)

    def test_inversion_of_reported_time(self):
        flips = 0.475 / BITFLIP_SECONDS
        assert flips == pytest.approx(8.28e6, rel=1e-2)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            mts_model_time(-1)


class TestMemeticSearch:
    def test_ground_state_warm_start_returns_at_init(self):
        inst = random_instance(10, 1)
        gs = brute_force_ground_state(inst)
        params = MtsParams(
            population=4, generations=50, seed=0,
            warm_start=tuple(int(v) for v in gs.spins),
            target_energy=gs.energy,
        )
        report = memetic_search(inst, params)
        assert report.best_energy == pytest.approx(gs.energy, abs=1e-9)
        assert report.counters["generations"] == 0

    def test_generation_best_non_increasing(self):
        inst = random_instance(12, 5)
        params = MtsParams(population=6, generations=40, seed=2, stagnation_stop=False)
        report = memetic_search(inst, params)
        hist = report.series["generation_best"]
        assert len(hist) == 40
        assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))

    def test_elitism_keeps_best(self):
        inst = random_instance(10, 9)
        report = memetic_search(inst, MtsParams(population=4, generations=30, seed=4))
        hist = report.series["generation_best"]
        assert report.best_energy == min(hist) if hist else True

    def test_deterministic_across_worker_counts(self):
        inst = random_instance(10, 6)
        params = MtsParams(population=6, generations=15, seed=8, stagnation_stop=False)
        a = memetic_search(inst, params, jobs=1)
        b = memetic_search(inst, params, jobs=6)
        assert a.best_energy == b.best_energy
        assert a.best_bitstring == b.best_bitstring
        assert a.counters == b.counters

    def test_flip_counter_audited_against_reference(self):
        """Total flips must equal the sum of reference-replayed refinements."""
        inst = random_instance(8, 13)
        params = MtsParams(population=3, generations=2, seed=5, stagnation_stop=False)
        report = memetic_search(inst, params)

        from hsqc.mts import _offspring_rng

        total = 0
        candidates = [
            _offspring_rng(5, 0, i).integers(0, 2, 8).astype(np.int8) * 2 - 1
            for i in range(3)
        ]
        population = []
        energies = []
        for c in candidates:
            spins, e, flips = reference_tabu(inst, c, 10, 10)
            total += flips
            population.append(np.array(spins, dtype=np.int8))
            energies.append(e)
        for g in range(2):
            mu = mutation_rate(g, 2, 0.1, 0.001)
            offspring = []
            for i in range(3):
                rng = _offspring_rng(5, g + 1, i)
                a = int(rng.integers(0, 3))
                b = int(rng.integers(0, 2))
                if b >= a:
                    b += 1
                point = int(rng.integers(1, 8))
                child = np.concatenate([population[a][:point], population[b][point:]])
                mask = rng.random(8) < mu
                child[mask] = -child[mask]
                offspring.append(child)
            refined = []
            for c in offspring:
                spins, e, flips = reference_tabu(inst, c, 10, 10)
                total += flips
                refined.append((np.array(spins, dtype=np.int8), e))
            merged = list(zip(population, energies)) + refined
            merged.sort(key=lambda pair: pair[1])
            population = [p for p, _ in merged[:3]]
            energies = [e for _, e in merged[:3]]
        assert report.counters["n_bitflip"] == total

    def test_population_validation(self):
        with pytest.raises(ValidationError):
            MtsParams(population=1, generations=10)
        with pytest.raises(ValidationError):
            MtsParams(population=4, generations=0)
        with pytest.raises(ValidationError):
            MtsParams(population=4, generations=10, mu_start=0.001, mu_end=0.1)

    def test_reaches_ground_state_on_small_instance(self):
        inst = random_instance(10, 17)
        gs = brute_force_ground_state(inst)
        report = memetic_search(
            inst,
            MtsParams(population=8, generations=100, seed=3, target_energy=gs.energy),
        )
        assert report.best_energy == pytest.approx(gs.energy, abs=1e-9)
