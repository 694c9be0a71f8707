"""Memetic tabu search.

A population of candidate configurations evolves through parent selection,
single-point crossover, bit-wise mutation with a logarithmically decaying
rate, and local refinement by a tabu-guided best-neighbor descent.  Elitist
replacement keeps the best P of parents plus offspring, so the incumbent
never regresses.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import ValidationError
from .hubo import HuboInstance, as_spins, energy, spins_to_bitstring
from .report import StageReport

# Model seconds per neighbor evaluation (bit flip), from the reference CPU's
# fitted per-flip cost.
BITFLIP_SECONDS = 5.740e-8

_ZOBRIST_SEED = 0x51AB7A6B


@lru_cache(maxsize=None)
def _zobrist_table(num_vars: int) -> np.ndarray:
    gen = np.random.default_rng(np.random.SeedSequence(_ZOBRIST_SEED, spawn_key=(num_vars,)))
    return gen.integers(0, 2**64, size=num_vars, dtype=np.uint64)


@dataclass(frozen=True)
class MtsParams:
    population: int
    generations: int
    tabu_iterations: int = 10
    tabu_length: int = 10
    mu_start: float = 0.1
    mu_end: float = 0.001
    seed: int = 0
    warm_start: tuple[int, ...] | None = None
    target_energy: float | None = None
    stagnation_stop: bool = True

    def __post_init__(self):
        if self.population < 2:
            raise ValidationError(f"population must be >= 2, got {self.population}")
        if self.generations < 1:
            raise ValidationError(f"generations must be >= 1, got {self.generations}")
        if self.tabu_iterations < 1:
            raise ValidationError(f"tabu_iterations must be >= 1, got {self.tabu_iterations}")
        if self.tabu_length < 1:
            raise ValidationError(f"tabu_length must be >= 1, got {self.tabu_length}")
        if not (0.0 < self.mu_end <= self.mu_start <= 1.0):
            raise ValidationError(
                f"need 0 < mu_end <= mu_start <= 1, got ({self.mu_start}, {self.mu_end})"
            )
        if self.warm_start is not None:
            object.__setattr__(self, "warm_start", tuple(int(v) for v in self.warm_start))


@dataclass(frozen=True)
class TabuResult:
    spins: np.ndarray
    energy: float
    n_flips: int
    iterations: int


def mutation_rate(g: int, g_max: int, mu_start: float, mu_end: float) -> float:
    """Logarithmic decay from mu_start at g=0 to mu_end at g=g_max."""
    if not 0 <= g <= g_max:
        raise ValidationError(f"generation {g} outside 0..{g_max}")
    x = math.log(g_max + 1 - g) / math.log(g_max + 1)
    return mu_start * x + mu_end * (1.0 - x)


def tabu_search(
    inst: HuboInstance,
    spins,
    tabu_length: int,
    max_iterations: int,
    target_energy: float | None = None,
) -> TabuResult:
    """Deterministic local refinement by best admissible single flips.

    Keeps a FIFO list of the last ``tabu_length`` visited configurations
    (stored as 64-bit hashes; a colliding neighbor is conservatively treated
    as tabu).  Uphill moves happen when every admissible neighbor is uphill.
    Returns the best configuration ever seen and the number of neighbor
    energy evaluations for the runtime model.
    """
    if tabu_length < 1 or max_iterations < 1:
        raise ValidationError("tabu_length and max_iterations must be >= 1")
    n = inst.num_vars
    ext = np.ones(n + 1, dtype=np.int8)
    ext[:n] = as_spins(spins, n)
    weights, tvars, adj_off, adj_terms = inst.packed
    has_target = target_energy is not None
    target = target_energy if has_target else 0.0
    best, _, flips, iterations = _kernels.tabu_search_run(
        weights, tvars, adj_off, adj_terms, ext, _zobrist_table(n),
        tabu_length, max_iterations, target, has_target,
    )
    return TabuResult(best, energy(inst, best), int(flips), int(iterations))


def mts_model_time(n_bitflip: int) -> float:
    """Runtime model: seconds for ``n_bitflip`` neighbor evaluations."""
    if n_bitflip < 0:
        raise ValidationError(f"n_bitflip must be nonnegative, got {n_bitflip}")
    return n_bitflip * BITFLIP_SECONDS


def _offspring_rng(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, generation, index)))


def memetic_search(inst: HuboInstance, params: MtsParams, *, jobs: int = 1) -> StageReport:
    """Evolve a refined population until the target, the generation budget, or
    stagnation (a full generation whose refinements never beat the population
    minimum seen at its start; disable with ``stagnation_stop=False``).

    The population starts as clones of ``warm_start`` when supplied, else as
    uniform random strings.  Offspring are refined concurrently when
    ``jobs > 1``; every random draw comes from a stream keyed by (seed,
    generation, offspring), so results are identical for any worker count.
    """
    n = inst.num_vars
    started = time.perf_counter()
    total_flips = 0
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None

    def run_refinements(candidates):
        nonlocal total_flips
        refine = lambda c: tabu_search(
            inst, c, params.tabu_length, params.tabu_iterations, params.target_energy
        )
        if pool is not None:
            results = list(pool.map(refine, candidates))
        else:
            results = [refine(c) for c in candidates]
        for r in results:
            total_flips += r.n_flips
        return results

    def finish(spins, best_e, generations_done, history, stop_reason):
        if pool is not None:
            pool.shutdown()
        return StageReport(
            stage="mts",
            best_bitstring=spins_to_bitstring(spins),
            best_energy=best_e,
            model_time_s=mts_model_time(total_flips),
            wall_time_s=time.perf_counter() - started,
            seed=params.seed,
            counters={
                "n_bitflip": total_flips,
                "generations": generations_done,
                "population": params.population,
            },
            series={"generation_best": history},
            artifacts={"stop_reason": stop_reason},
        )

    if params.warm_start is not None:
        seed_spins = as_spins(params.warm_start, n)
        candidates = [seed_spins.copy() for _ in range(params.population)]
    else:
        candidates = [
            _offspring_rng(params.seed, 0, i).integers(0, 2, n).astype(np.int8) * 2 - 1
            for i in range(params.population)
        ]
    refined = run_refinements(candidates)
    population = [r.spins for r in refined]
    energies = [r.energy for r in refined]
    best_idx = min(range(len(energies)), key=lambda i: (energies[i], i))
    best_spins, best_energy = population[best_idx].copy(), energies[best_idx]
    if params.target_energy is not None and best_energy <= params.target_energy:
        return finish(best_spins, best_energy, 0, [], "target")

    history: list[float] = []
    for g in range(params.generations):
        mu = mutation_rate(g, params.generations, params.mu_start, params.mu_end)
        pre_generation_min = min(energies)
        offspring = []
        for i in range(params.population):
            rng = _offspring_rng(params.seed, g + 1, i)
            a = int(rng.integers(0, params.population))
            b = int(rng.integers(0, params.population - 1))
            if b >= a:
                b += 1
            point = int(rng.integers(1, n)) if n > 1 else 1
            child = np.concatenate([population[a][:point], population[b][point:]])
            mask = rng.random(n) < mu
            child[mask] = -child[mask]
            offspring.append(child)
        refined = run_refinements(offspring)

        improved = any(r.energy < pre_generation_min for r in refined)
        merged = population + [r.spins for r in refined]
        merged_energies = energies + [r.energy for r in refined]
        order = sorted(range(len(merged)), key=lambda i: (merged_energies[i], i))
        keep = order[: params.population]
        population = [merged[i] for i in keep]
        energies = [merged_energies[i] for i in keep]
        if energies[0] < best_energy:
            best_spins, best_energy = population[0].copy(), energies[0]
        history.append(best_energy)
        if params.target_energy is not None and best_energy <= params.target_energy:
            return finish(best_spins, best_energy, g + 1, history, "target")
        if params.stagnation_stop and not improved:
            return finish(best_spins, best_energy, g + 1, history, "stagnation")
    return finish(best_spins, best_energy, params.generations, history, "generations")
