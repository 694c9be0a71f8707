"""Simulated annealing on the spin form.

Each run initializes spins at random (or from a supplied configuration),
visits variables in a fresh random permutation every sweep, and applies the
Metropolis rule under a geometric cooling schedule with one temperature per
sweep.  The lowest energy seen during the run is recorded, not the final
state.  Runs are independent; their streams derive from (seed, run index),
so results do not depend on execution order or worker count.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .hubo import HuboInstance, as_spins, energy, spins_to_bitstring
from .report import StageReport

# Model seconds per (sweep x run); fixed by the reference CPU of the runtime
# model, not measured on this machine.
SWEEP_SECONDS = 0.6e-5


@dataclass(frozen=True)
class SaParams:
    n_sweep: int
    n_runs: int
    seed: int = 0
    t_init_override: float | None = None
    t_final_override: float | None = None

    def __post_init__(self):
        if self.n_sweep < 1:
            raise ValidationError(f"n_sweep must be >= 1, got {self.n_sweep}")
        if self.n_runs < 1:
            raise ValidationError(f"n_runs must be >= 1, got {self.n_runs}")
        has_init = self.t_init_override is not None
        has_final = self.t_final_override is not None
        if has_init != has_final:
            raise ValidationError("temperature overrides must be given together")
        if has_init:
            if self.t_init_override <= 0 or self.t_final_override <= 0:
                raise ValidationError("temperature overrides must be positive")
            if self.t_final_override >= self.t_init_override:
                raise ValidationError("t_final_override must be below t_init_override")


def acceptance_probability(delta_e: float, temperature: float) -> float:
    """Metropolis rule: 1 for downhill or level moves, exp(-dE/T) uphill."""
    if delta_e <= 0.0:
        return 1.0
    return float(np.exp(-delta_e / temperature))


def initial_temperature(inst: HuboInstance) -> tuple[float, float]:
    """Upper bound on any single-flip |dE| and the matching final temperature.

    t_init = max_i 2 * sum of |w_T| over terms containing i; t_final is one
    hundredth of that.
    """
    if inst.num_terms == 0:
        raise ValidationError("instance has no terms; temperatures are undefined")
    weights, tvars, _, _ = inst.packed
    bounds = np.zeros(inst.num_vars + 1)  # sentinel slot absorbs padded entries
    np.add.at(bounds, tvars, 2.0 * np.abs(weights)[:, None])
    t_init = float(bounds[: inst.num_vars].max())
    if t_init == 0.0:
        raise ValidationError("all flip bounds are zero; temperatures are undefined")
    return t_init, 0.01 * t_init


def temperature_schedule(t_init: float, t_final: float, n_sweep: int) -> np.ndarray:
    """Geometric ladder from t_init to t_final, one temperature per sweep."""
    if n_sweep == 1:
        return np.array([t_init])
    return np.geomspace(t_init, t_final, n_sweep)


def anneal_run(
    inst: HuboInstance,
    n_sweep: int,
    rng: np.random.Generator,
    *,
    initial=None,
    temps: np.ndarray | None = None,
    collect_trace: bool = False,
):
    """One annealing run.  Returns (best spins, best energy[, trace]).

    ``rng`` drives the random initialization (when ``initial`` is None), the
    per-sweep permutations, and the acceptance draws.  The returned energy is
    recomputed exactly from the best configuration.
    """
    if temps is None:
        t_init, t_final = initial_temperature(inst)
        temps = temperature_schedule(t_init, t_final, n_sweep)
    n = inst.num_vars
    ext = np.ones(n + 1, dtype=np.int8)
    if initial is None:
        ext[:n] = rng.integers(0, 2, n).astype(np.int8) * 2 - 1
    else:
        ext[:n] = as_spins(initial, n)
    trace_cur = np.empty(len(temps) if collect_trace else 0)
    trace_best = np.empty(len(temps) if collect_trace else 0)
    weights, tvars, adj_off, adj_terms = inst.packed
    best, _ = _kernels.sa_run(weights, tvars, adj_off, adj_terms, ext, temps, rng,
                              trace_cur, trace_best)
    best_energy = energy(inst, best)
    if collect_trace:
        return best, best_energy, (trace_cur, trace_best)
    return best, best_energy


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Independent per-run stream derived from (seed, run index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index,)))


def anneal(
    inst: HuboInstance,
    params: SaParams,
    *,
    jobs: int = 1,
    initials=None,
    trace_path=None,
) -> StageReport:
    """Best over ``n_runs`` independent runs.

    ``initials`` optionally supplies starting configurations; run ``r`` uses
    ``initials[r % len(initials)]``.  With ``trace_path`` set, a CSV with
    columns run, sweep, temperature, current_energy, best_energy is written.
    """
    if params.t_init_override is not None:
        t_init, t_final = params.t_init_override, params.t_final_override
    else:
        t_init, t_final = initial_temperature(inst)
    temps = temperature_schedule(t_init, t_final, params.n_sweep)
    if initials is not None:
        if len(initials) == 0:
            raise ValidationError("initials must be non-empty when given")
        initials = [as_spins(s, inst.num_vars) for s in initials]

    collect = trace_path is not None
    started = time.perf_counter()

    def one_run(r: int):
        rng = run_rng(params.seed, r)
        initial = initials[r % len(initials)] if initials is not None else None
        return anneal_run(inst, params.n_sweep, rng, initial=initial, temps=temps,
                          collect_trace=collect)

    if jobs > 1 and params.n_runs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one_run, range(params.n_runs)))
    else:
        results = [one_run(r) for r in range(params.n_runs)]

    best_run = min(range(params.n_runs), key=lambda r: (results[r][1], r))
    best_spins, best_energy = results[best_run][0], results[best_run][1]
    wall = time.perf_counter() - started

    if collect:
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "sweep", "temperature", "current_energy", "best_energy"])
            for r, res in enumerate(results):
                cur, bst = res[2]
                for k in range(params.n_sweep):
                    writer.writerow([r, k, repr(float(temps[k])),
                                     repr(float(cur[k])), repr(float(bst[k]))])

    return StageReport(
        stage="sa",
        best_bitstring=spins_to_bitstring(best_spins),
        best_energy=best_energy,
        model_time_s=params.n_sweep * params.n_runs * SWEEP_SECONDS,
        wall_time_s=wall,
        seed=params.seed,
        counters={"n_sweep": params.n_sweep, "n_runs": params.n_runs},
        artifacts={"run_energies": tuple(float(res[1]) for res in results)},
    )
