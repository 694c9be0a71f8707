"""Stage sequencing, the fixed-constant runtime model, and convergence stats.

A full run chains three stages: annealing explores from random starts, the
quantum stage refines from a bias seeded with the annealer's best
configuration, and a final classical stage (memetic tabu search seeded with
the quantum best, or annealing seeded with the lowest-energy measurement
outcomes) polishes the result.  All cross-method comparisons use the model
times; wall times are recorded separately.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import dcqo, mts, sa
from .errors import ValidationError
from .hubo import HuboInstance, bitstring_to_spins, optimality_gap
from .report import StageReport

GROUND_STATE_KEY = "ground_state_energy"
DEFAULT_CONFIDENCE = 0.99
# Relative tolerance for "reached the ground state" in success statistics.
GS_REL_TOL = 1e-6


# ---------------------------------------------------------------------------
# runtime model
# ---------------------------------------------------------------------------

def hsqc_total_time(
    n_sweep_sa: int,
    n_runs_sa: int,
    n_shots: int,
    n_sweep_loc: int,
    *,
    n_bitflip: int | None = None,
    n_sweep_final: int | None = None,
    n_runs_final: int | None = None,
) -> float:
    """Total model seconds of a full run.

    The final-stage contribution is ``n_bitflip`` flips (tabu variant) or a
    second sweep budget (annealing variant); exactly one must be given.
    """
    for value, name in ((n_sweep_sa, "n_sweep_sa"), (n_runs_sa, "n_runs_sa"),
                        (n_shots, "n_shots"), (n_sweep_loc, "n_sweep_loc")):
        if value < 0:
            raise ValidationError(f"{name} must be nonnegative, got {value}")
    total = n_sweep_sa * n_runs_sa * sa.SWEEP_SECONDS
    total += n_shots * dcqo.SHOT_SECONDS + n_sweep_loc * sa.SWEEP_SECONDS
    if (n_bitflip is None) == (n_sweep_final is None):
        raise ValidationError("give exactly one of n_bitflip or n_sweep_final")
    if n_bitflip is not None:
        if n_bitflip < 0:
            raise ValidationError(f"n_bitflip must be nonnegative, got {n_bitflip}")
        total += mts.mts_model_time(n_bitflip)
    else:
        if n_runs_final is None:
            raise ValidationError("n_runs_final is required with n_sweep_final")
        if n_sweep_final < 0 or n_runs_final < 0:
            raise ValidationError("final stage counters must be nonnegative")
        total += n_sweep_final * n_runs_final * sa.SWEEP_SECONDS
    return total


@dataclass(frozen=True)
class TauEstimate:
    """Runtime scaled to reach the target with the requested confidence."""

    p_gs: float
    t_f: float
    confidence: float
    tau: float


def convergence_time(p_gs: float, t_f: float, confidence: float = DEFAULT_CONFIDENCE) -> TauEstimate:
    """tau = t_f * log(1 - confidence) / log(1 - p_gs).

    The boundary success rates are flagged by IEEE values rather than
    numbers: p_gs = 0 yields tau = inf and p_gs = 1 yields tau = 0.
    """
    if not 0.0 <= p_gs <= 1.0:
        raise ValidationError(f"p_gs must lie in [0, 1], got {p_gs}")
    if t_f <= 0:
        raise ValidationError(f"t_f must be positive, got {t_f}")
    if not 0.0 < confidence < 1.0:
        raise ValidationError(f"confidence must lie in (0, 1), got {confidence}")
    if p_gs == 0.0:
        return TauEstimate(p_gs, t_f, confidence, math.inf)
    if p_gs == 1.0:
        return TauEstimate(p_gs, t_f, confidence, 0.0)
    tau = t_f * math.log(1.0 - confidence) / math.log(1.0 - p_gs)
    return TauEstimate(p_gs, t_f, confidence, tau)


def estimate_pgs(trial_energies, e_gs: float, tolerance: float | None = None) -> float:
    """Fraction of trials whose best energy matches the ground state."""
    energies = list(trial_energies)
    if not energies:
        raise ValidationError("need at least one trial energy")
    if tolerance is None:
        tolerance = GS_REL_TOL * abs(e_gs)
    hits = sum(1 for e in energies if abs(e - e_gs) <= tolerance)
    return hits / len(energies)


# ---------------------------------------------------------------------------
# stage chaining
# ---------------------------------------------------------------------------

def derived_seed(seed: int, *key: int) -> int:
    """Stable child seed for a stage or trial."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


@dataclass
class HsqcSummary:
    stages: list[StageReport]
    best_bitstring: str
    best_energy: float
    total_model_time_s: float
    total_wall_time_s: float
    seed: int
    gap_percent: float | None = None

    def summary_dict(self) -> dict:
        doc = {
            "seed": self.seed,
            "best_bitstring": self.best_bitstring,
            "best_energy": self.best_energy,
            "total_model_time_s": self.total_model_time_s,
            "stages": [s.summary_dict() for s in self.stages],
            "measured": {"total_wall_time_s": self.total_wall_time_s},
        }
        if self.gap_percent is not None:
            doc["gap_percent"] = self.gap_percent
        return doc


def run_hsqc(
    inst: HuboInstance,
    sa_params: sa.SaParams,
    dcqo_params: dcqo.DcqoParams,
    final,
    *,
    seed: int,
    jobs: int = 1,
    pool_limit: int = dcqo.DEFAULT_POOL_LIMIT,
) -> HsqcSummary:
    """Run the three-stage sequence with per-stage seeds derived from ``seed``.

    ``final`` is an ``mts.MtsParams`` (tabu variant), a ``sa.SaParams``
    (annealing variant), or None to stop after the quantum stage (zero-budget
    final stages on the command line map to None).  The summary's best is
    the minimum over stage bests, and the total model time is the exact sum
    of the stage model times.
    """
    started = time.perf_counter()
    stages: list[StageReport] = []

    stage1 = sa.anneal(inst, replace(sa_params, seed=derived_seed(seed, 0)), jobs=jobs)
    stages.append(stage1)

    stage2 = dcqo.run(
        inst,
        bitstring_to_spins(stage1.best_bitstring),
        replace(dcqo_params, seed=derived_seed(seed, 1)),
        pool_limit=pool_limit,
    )
    stages.append(stage2)

    if isinstance(final, mts.MtsParams):
        warm = tuple(int(v) for v in bitstring_to_spins(stage2.best_bitstring))
        stage3 = mts.memetic_search(
            inst,
            replace(final, seed=derived_seed(seed, 2), warm_start=warm),
            jobs=jobs,
        )
        stages.append(stage3)
    elif isinstance(final, sa.SaParams):
        pool = stage2.artifacts.get("sample_pool", ())
        if pool:
            initials = [bitstring_to_spins(b) for b, _ in pool]
        else:
            initials = [bitstring_to_spins(stage2.best_bitstring)]
        stage3 = sa.anneal(
            inst,
            replace(final, seed=derived_seed(seed, 2)),
            jobs=jobs,
            initials=initials,
        )
        stages.append(stage3)
    elif final is not None:
        raise ValidationError(f"unsupported final stage parameters: {final!r}")

    best = min(stages, key=lambda s: s.best_energy)
    gap = None
    e_gs = inst.metadata.get(GROUND_STATE_KEY)
    if isinstance(e_gs, (int, float)) and e_gs != 0:
        gap = optimality_gap(best.best_energy, float(e_gs))
    return HsqcSummary(
        stages=stages,
        best_bitstring=best.best_bitstring,
        best_energy=best.best_energy,
        total_model_time_s=sum(s.model_time_s for s in stages),
        total_wall_time_s=time.perf_counter() - started,
        seed=seed,
        gap_percent=gap,
    )


def run_trials(
    inst: HuboInstance,
    sa_params: sa.SaParams,
    dcqo_params: dcqo.DcqoParams,
    final,
    *,
    trials: int,
    seed: int,
    jobs: int = 1,
) -> dict:
    """Independent full runs with per-trial derived seeds.

    Returns per-trial summaries plus aggregate statistics (and an empirical
    ground-state success rate when the instance records its ground energy).
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")

    def one(trial: int) -> HsqcSummary:
        return run_hsqc(inst, sa_params, dcqo_params, final,
                        seed=derived_seed(seed, 10, trial), jobs=1)

    if jobs > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(one, range(trials)))
    else:
        summaries = [one(t) for t in range(trials)]

    energies = [s.best_energy for s in summaries]
    best_idx = min(range(trials), key=lambda t: (energies[t], t))
    doc = {
        "trials": trials,
        "seed": seed,
        "best_energy": energies[best_idx],
        "best_bitstring": summaries[best_idx].best_bitstring,
        "mean_best_energy": float(np.mean(energies)),
        "per_trial": [s.summary_dict() for s in summaries],
    }
    e_gs = inst.metadata.get(GROUND_STATE_KEY)
    if isinstance(e_gs, (int, float)) and e_gs != 0:
        p_gs = estimate_pgs(energies, float(e_gs))
        t_f = summaries[0].total_model_time_s
        doc["p_gs"] = p_gs
        doc["gap_percent"] = optimality_gap(energies[best_idx], float(e_gs))
        if 0.0 < p_gs < 1.0:
            doc["tau_s"] = convergence_time(p_gs, t_f).tau
    return doc
