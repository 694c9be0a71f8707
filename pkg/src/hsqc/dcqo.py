"""Emulated bias-field counterdiabatic optimization.

Each iteration prepares a product state aligned with per-qubit mixer
fields, evolves it under the first-order counterdiabatic term set in the
impulse regime (only the gauge rotations are applied), samples the result,
locally refines the best sample, selects the lowest-energy fraction of the
shots, and feeds their average orientation back into the bias fields.

The gauge scaling function is obtained variationally: beta_1 minimizes the
Hilbert-Schmidt norm of d_lambda(H) + beta_1 [H, [H, d_lambda(H)]] for the
interpolation H(lambda) = (1 - lambda) H_m + lambda H_problem.  All operator
algebra runs on Pauli-string coefficient maps, never on 2^N matrices, so the
coefficient is available far beyond the statevector cap.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateScheduleError, ValidationError
from .hubo import (
    HuboInstance,
    as_spins,
    bits_to_spins,
    energy,
    energy_batch,
    spins_to_bitstring,
)
from .report import StageReport
from .sa import SWEEP_SECONDS, anneal_run, initial_temperature, temperature_schedule
from .statevector import (
    PauliString,
    StateVector,
    apply_pauli_rotation,
    indices_to_bit_rows,
    prepare_product,
    sample,
)

# Model seconds per measurement shot.
SHOT_SECONDS = 1e-4

# The local refinement anneals from this fraction of the instance's
# single-flip temperature bound down to the usual final temperature, so it
# polishes the sampled configuration instead of re-randomizing it.
LOCAL_REFINE_T_FRACTION = 0.1

DEFAULT_POOL_LIMIT = 100


# ---------------------------------------------------------------------------
# mixer fields and initial states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixerFields:
    """Per-qubit transverse fields h_x (all nonzero) and bias fields h_b."""

    h_x: tuple[float, ...]
    h_b: tuple[float, ...]

    def __post_init__(self):
        hx = tuple(float(v) for v in self.h_x)
        hb = tuple(float(v) for v in self.h_b)
        if len(hx) != len(hb) or not hx:
            raise ValidationError("h_x and h_b must be non-empty and of equal length")
        if any(not math.isfinite(v) or v == 0.0 for v in hx):
            raise ValidationError("transverse fields must be finite and nonzero")
        if any(not math.isfinite(v) for v in hb):
            raise ValidationError("bias fields must be finite")
        object.__setattr__(self, "h_x", hx)
        object.__setattr__(self, "h_b", hb)

    @property
    def num_qubits(self) -> int:
        return len(self.h_x)

    def hx_array(self) -> np.ndarray:
        return np.asarray(self.h_x)

    def hb_array(self) -> np.ndarray:
        return np.asarray(self.h_b)


def uniform_fields(num_qubits: int, h_x: float = 1.0) -> MixerFields:
    """Transverse field of the given magnitude everywhere, zero bias."""
    return MixerFields((h_x,) * num_qubits, (0.0,) * num_qubits)


def seed_bias_from_bitstring(spins, magnitude: float, h_x: float = 1.0) -> MixerFields:
    """Bias fields magnitude * s_i aligned with a seed configuration."""
    if magnitude <= 0:
        raise ValidationError(f"bias magnitude must be positive, got {magnitude}")
    s = as_spins(spins)
    return MixerFields((h_x,) * s.size, tuple(magnitude * float(v) for v in s))


def initial_angles(fields: MixerFields) -> np.ndarray:
    """Rotation angles aligning each qubit with its mixer field.

    theta_i = atan(h_x / (h_b + sqrt(h_b^2 + h_x^2))).  Combined with the
    simulator's full-angle product preparation this yields the single-qubit
    eigenstate of h_x sigma_x + h_b sigma_z with <sigma_z> = h_b / r, so a
    strongly biased qubit reproduces its seed orientation when measured.
    """
    hx = fields.hx_array()
    hb = fields.hb_array()
    return np.arctan(hx / (hb + np.hypot(hb, hx)))


# ---------------------------------------------------------------------------
# counterdiabatic term set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CdTerm:
    """One gauge rotation: a Pauli string with exactly one Y, plus the
    coupling-dependent base coefficient (global schedule factors excluded)."""

    pauli: PauliString
    base_coefficient: float

    def __post_init__(self):
        letters = [p for _, p in self.pauli.ops]
        if letters.count("Y") != 1:
            raise ValidationError("a counterdiabatic term carries exactly one Y")
        if any(p not in ("Y", "Z") for p in letters):
            raise ValidationError("counterdiabatic terms contain only Y and Z letters")
        if not math.isfinite(self.base_coefficient):
            raise ValidationError("base coefficient must be finite")


def build_cd_terms(
    inst: HuboInstance, fields: MixerFields, *, include_bias: bool = True
) -> list[CdTerm]:
    """One Y-rotation per (term, member qubit).

    Linear terms contribute h_x_i * h_z_i on Y_i where h_z_i is the problem
    field plus, by default, the bias field (set ``include_bias=False`` for
    the problem field alone).  A pair weight J contributes J * h_x of the
    Y-site on YZ and ZY; a triple weight K contributes K * h_x of the Y-site
    on YZZ, ZYZ, ZZY.
    """
    if fields.num_qubits != inst.num_vars:
        raise ValidationError(
            f"fields cover {fields.num_qubits} qubits but the instance has {inst.num_vars}"
        )
    hx = fields.h_x
    hb = fields.h_b
    out: list[CdTerm] = []
    for idx, w in inst.terms:
        if len(idx) == 1:
            (i,) = idx
            hz = w + hb[i] if include_bias else w
            out.append(CdTerm(PauliString(((i, "Y"),)), hx[i] * hz))
        else:
            for y_site in idx:
                ops = tuple((q, "Y" if q == y_site else "Z") for q in idx)
                out.append(CdTerm(PauliString(ops), w * hx[y_site]))
    return out


# ---------------------------------------------------------------------------
# Pauli-string coefficient algebra for the gauge coefficient
# ---------------------------------------------------------------------------

_X, _Y, _Z = 1, 2, 3
# (a, b) -> (phase, product code); identity handled separately
_SINGLE_PRODUCTS = {
    (_X, _Y): (1j, _Z), (_Y, _X): (-1j, _Z),
    (_Y, _Z): (1j, _X), (_Z, _Y): (-1j, _X),
    (_Z, _X): (1j, _Y), (_X, _Z): (-1j, _Y),
}


def _string_product(key_a, key_b):
    """Product of two Pauli keys (tuples of (qubit, code)): (phase, key)."""
    phase = 1 + 0j
    out = []
    ia, ib = 0, 0
    while ia < len(key_a) and ib < len(key_b):
        qa, ca = key_a[ia]
        qb, cb = key_b[ib]
        if qa < qb:
            out.append((qa, ca))
            ia += 1
        elif qb < qa:
            out.append((qb, cb))
            ib += 1
        else:
            if ca != cb:
                ph, code = _SINGLE_PRODUCTS[(ca, cb)]
                phase *= ph
                out.append((qa, code))
            ia += 1
            ib += 1
    out.extend(key_a[ia:])
    out.extend(key_b[ib:])
    return phase, tuple(out)


def _commutator(op_a: dict, op_b: dict) -> dict:
    """[A, B] for coefficient maps, visiting only support-sharing pairs."""
    by_qubit: dict[int, list] = {}
    for key in op_b:
        for q, _ in key:
            by_qubit.setdefault(q, []).append(key)
    out: dict[tuple, complex] = {}
    for key_a, coeff_a in op_a.items():
        candidates = []
        seen = set()
        for q, _ in key_a:
            for key_b in by_qubit.get(q, ()):
                if key_b not in seen:
                    seen.add(key_b)
                    candidates.append(key_b)
        for key_b in candidates:
            phase, key = _string_product(key_a, key_b)
            if phase.imag == 0.0:
                continue  # strings commute
            value = coeff_a * op_b[key_b] * 2j * phase.imag
            if key in out:
                out[key] += value
            else:
                out[key] = value
    return {k: v for k, v in out.items() if v != 0}


def _inner(op_a: dict, op_b: dict) -> complex:
    """Normalized Hilbert-Schmidt inner product Tr[A B] / 2^N."""
    if len(op_b) < len(op_a):
        op_a, op_b = op_b, op_a
    return sum(coeff * op_b[key] for key, coeff in op_a.items() if key in op_b)


def _problem_operator(inst: HuboInstance) -> dict:
    return {tuple((q, _Z) for q in idx): complex(w) for idx, w in inst.terms}


def _mixer_operator(fields: MixerFields) -> dict:
    op: dict[tuple, complex] = {}
    for q, hx in enumerate(fields.h_x):
        op[((q, _X),)] = complex(hx)
    for q, hb in enumerate(fields.h_b):
        if hb != 0.0:
            op[((q, _Z),)] = complex(hb)
    return op


class AgpSchedule:
    """Variational first-order gauge coefficient for H(lambda).

    Precomputes the lambda-independent commutators once; beta1(lambda) is
    then closed-form.  Raises DegenerateScheduleError when the double
    commutator vanishes identically (e.g. an empty problem).
    """

    def __init__(self, inst: HuboInstance, fields: MixerFields):
        h_m = _mixer_operator(fields)
        h_p = _problem_operator(inst)
        d_h = dict(h_p)
        for key, coeff in h_m.items():
            d_h[key] = d_h.get(key, 0j) - coeff
        inner_comm = _commutator(h_m, h_p)  # [H, dH] is lambda-independent
        c_mixer = _commutator(h_m, inner_comm)
        c_problem = _commutator(h_p, inner_comm)
        self._a1 = _inner(d_h, c_mixer).real
        self._a2 = _inner(d_h, c_problem).real
        self._c11 = _inner(c_mixer, c_mixer).real
        self._c12 = _inner(c_mixer, c_problem).real
        self._c22 = _inner(c_problem, c_problem).real

    def gram_norm(self, lam: float) -> float:
        mu = 1.0 - lam
        return mu * mu * self._c11 + 2.0 * mu * lam * self._c12 + lam * lam * self._c22

    def beta1(self, lam: float) -> float:
        if not 0.0 <= lam <= 1.0:
            raise ValidationError(f"lambda must lie in [0, 1], got {lam}")
        denom = self.gram_norm(lam)
        if denom <= 0.0:
            raise DegenerateScheduleError(
                "double commutator vanishes; no first-order gauge coefficient exists"
            )
        return -((1.0 - lam) * self._a1 + lam * self._a2) / denom


def agp_schedule(inst: HuboInstance, fields: MixerFields) -> AgpSchedule:
    return AgpSchedule(inst, fields)


def agp_coefficient(inst: HuboInstance, fields: MixerFields, lam: float) -> float:
    """beta_1 at a single interpolation point."""
    return AgpSchedule(inst, fields).beta1(lam)


# ---------------------------------------------------------------------------
# digitized impulse evolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DcqoParams:
    n_shots: int
    n_iter: int
    n_cvar: int
    n_trot: int = 1
    total_time: float = 1.0
    seed: int = 0
    h_x: float = 1.0
    bias_magnitude: float = 1.0
    n_sweep_loc: int = 0
    cd_bias_in_field: bool = True

    def __post_init__(self):
        if self.n_shots < 1:
            raise ValidationError(f"n_shots must be >= 1, got {self.n_shots}")
        if self.n_iter < 0:
            raise ValidationError(f"n_iter must be >= 0, got {self.n_iter}")
        if not 1 <= self.n_cvar <= self.n_shots:
            raise ValidationError(
                f"need 1 <= n_cvar <= n_shots, got n_cvar={self.n_cvar}, n_shots={self.n_shots}"
            )
        if self.n_trot < 1:
            raise ValidationError(f"n_trot must be >= 1, got {self.n_trot}")
        if self.total_time <= 0:
            raise ValidationError(f"total_time must be positive, got {self.total_time}")
        if self.h_x == 0:
            raise ValidationError("h_x must be nonzero")
        if self.bias_magnitude <= 0:
            raise ValidationError(f"bias_magnitude must be positive, got {self.bias_magnitude}")
        if self.n_sweep_loc < 0:
            raise ValidationError(f"n_sweep_loc must be >= 0, got {self.n_sweep_loc}")


def schedule_lambda(t: float, total_time: float) -> float:
    return math.sin(math.pi * t / (2.0 * total_time)) ** 2


def schedule_lambda_dot(t: float, total_time: float) -> float:
    return math.pi / (2.0 * total_time) * math.sin(math.pi * t / total_time)


def _layered(cd_terms) -> list[CdTerm]:
    """Circuit layer order: one-body Y rotations, then triples, then pairs."""
    rank = {1: 0, 3: 1, 2: 2}
    return sorted(cd_terms, key=lambda term: rank[len(term.pauli.ops)])


def evolve_impulse(
    state: StateVector,
    cd_terms,
    params: DcqoParams,
    beta1: Callable[[float], float],
) -> StateVector:
    """Digitized impulse-regime evolution: only gauge rotations are applied.

    Per step at midpoint times t_k, every term T gets the rotation angle
    dt * (-2 beta1(lambda(t_k))) * lambda_dot(t_k) * base_coefficient(T).
    """
    ordered = _layered(cd_terms)
    dt = params.total_time / params.n_trot
    for k in range(params.n_trot):
        t_k = (k + 0.5) * dt
        lam = schedule_lambda(t_k, params.total_time)
        scale = dt * (-2.0 * beta1(lam)) * schedule_lambda_dot(t_k, params.total_time)
        for term in ordered:
            theta = scale * term.base_coefficient
            if theta != 0.0:
                apply_pauli_rotation(state, term.pauli, theta)
    return state


# ---------------------------------------------------------------------------
# measurement feedback
# ---------------------------------------------------------------------------

def _bitstring_keys(indices: np.ndarray, num_qubits: int) -> np.ndarray:
    rows = indices_to_bit_rows(indices, num_qubits) + ord("0")
    return rows.astype(np.uint8).view(f"S{num_qubits}").ravel().astype(str)


def cvar_select(
    samples: np.ndarray, energies: np.ndarray, n_cvar: int, num_qubits: int | None = None
) -> np.ndarray:
    """Positions of the n_cvar lowest-energy shots (ties by bitstring)."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValidationError("cannot select from an empty sample set")
    if not 1 <= n_cvar <= samples.size:
        raise ValidationError(f"need 1 <= n_cvar <= {samples.size}, got {n_cvar}")
    if num_qubits is None:
        num_qubits = max(int(samples.max()).bit_length(), 1)
    keys = _bitstring_keys(samples, num_qubits)
    order = np.lexsort((keys, np.asarray(energies)))
    return order[:n_cvar]


def update_bias(selected_spins: np.ndarray) -> np.ndarray:
    """Per-qubit average orientation of the selected shots, in [-1, 1]."""
    rows = np.asarray(selected_spins, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValidationError("selection must be a non-empty (k, N) spin matrix")
    return rows.mean(axis=0)


# ---------------------------------------------------------------------------
# full loop
# ---------------------------------------------------------------------------

def run(
    inst: HuboInstance,
    seed_spins,
    params: DcqoParams,
    *,
    beta1_provider: Callable[[MixerFields], Callable[[float], float]] | None = None,
    pool_limit: int = DEFAULT_POOL_LIMIT,
) -> StageReport:
    """Iterated prepare / evolve / sample / refine / reselect loop.

    ``seed_spins`` initializes the bias fields (None starts bias-free, which
    requires at least one iteration).  The report's artifacts carry the
    ``pool_limit`` lowest-energy distinct measurement outcomes for warm
    starting a later stage.
    """
    n = inst.num_vars
    started = time.perf_counter()
    if seed_spins is not None:
        seed_arr = as_spins(seed_spins, n)
        fields = seed_bias_from_bitstring(seed_arr, params.bias_magnitude, params.h_x)
        best_spins = seed_arr.copy()
        best_energy = energy(inst, seed_arr)
    else:
        if params.n_iter == 0:
            raise ValidationError("need a seed bitstring or at least one iteration")
        fields = uniform_fields(n, params.h_x)
        best_spins = None
        best_energy = math.inf

    if params.n_sweep_loc > 0:
        t_init, t_final = initial_temperature(inst)
        loc_temps = temperature_schedule(
            max(LOCAL_REFINE_T_FRACTION * t_init, t_final), t_final, params.n_sweep_loc
        )
    pool: dict[str, float] = {}
    iteration_best: list[float] = []

    for it in range(params.n_iter):
        sample_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(2, it)))
        refine_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(3, it)))

        cd_terms = build_cd_terms(inst, fields, include_bias=params.cd_bias_in_field)
        schedule = beta1_provider(fields) if beta1_provider else AgpSchedule(inst, fields).beta1
        state = prepare_product(initial_angles(fields))
        evolve_impulse(state, cd_terms, params, schedule)
        shots = sample(state, params.n_shots, sample_rng)

        unique, inverse = np.unique(shots, return_inverse=True)
        spin_rows = 1 - 2 * indices_to_bit_rows(unique, n).astype(np.int8)
        unique_energies = energy_batch(inst, spin_rows)
        shot_energies = unique_energies[inverse]

        unique_keys = _bitstring_keys(unique, n)
        for key, value in zip(unique_keys, unique_energies):
            pool.setdefault(key, float(value))

        top = int(np.lexsort((unique_keys, unique_energies))[0])
        if unique_energies[top] < best_energy:
            best_energy = float(unique_energies[top])
            best_spins = spin_rows[top].copy()
        if params.n_sweep_loc > 0:
            refined, refined_energy = anneal_run(
                inst, params.n_sweep_loc, refine_rng,
                initial=spin_rows[top], temps=loc_temps,
            )
            if refined_energy < best_energy:
                best_energy = refined_energy
                best_spins = refined
        iteration_best.append(best_energy)

        chosen = cvar_select(shots, shot_energies, params.n_cvar, num_qubits=n)
        selected_spins = 1 - 2 * indices_to_bit_rows(shots[chosen], n).astype(np.int8)
        fields = MixerFields(fields.h_x, tuple(update_bias(selected_spins)))

    ranked_pool = sorted(pool.items(), key=lambda kv: (kv[1], kv[0]))[:pool_limit]
    best_energy = energy(inst, best_spins)  # canonical accumulation order
    shots_total = params.n_iter * params.n_shots
    loc_total = params.n_iter * params.n_sweep_loc
    return StageReport(
        stage="dcqo",
        best_bitstring=spins_to_bitstring(best_spins),
        best_energy=best_energy,
        model_time_s=shots_total * SHOT_SECONDS + loc_total * SWEEP_SECONDS,
        wall_time_s=time.perf_counter() - started,
        seed=params.seed,
        counters={
            "n_iter": params.n_iter,
            "n_shots_total": shots_total,
            "n_sweep_loc_total": loc_total,
        },
        series={"iteration_best": iteration_best},
        artifacts={"sample_pool": tuple(ranked_pool)},
    )
