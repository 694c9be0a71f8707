"""Hybrid sequential optimization of spin-form polynomial instances.

Pipeline stages: simulated annealing, an exactly emulated bias-field
counterdiabatic quantum stage, and memetic tabu search (or a second
annealing pass), plus instance generation, an exhaustive oracle, and the
fixed-constant runtime model used for all comparisons.
"""

from .errors import (
    DegenerateScheduleError,
    InstanceFormatError,
    QubitCapError,
    UndefinedGapError,
    ValidationError,
)
from .hubo import (
    HuboInstance,
    bits_to_spins,
    bitstring_to_spins,
    delta_energy,
    energy,
    energy_batch,
    load_instance,
    optimality_gap,
    save_instance,
    spins_to_bits,
    spins_to_bitstring,
)
from .instances import (
    ConnectivityMap,
    CouplingDistribution,
    InteractionLayer,
    generate_instance,
    graph_coloring,
    heavy_hex_map,
    path_map,
    ring_map,
    sample_couplings,
    swap_register,
)
from .exact import GroundState, brute_force_ground_state
from .sa import SaParams, anneal, anneal_run, initial_temperature, temperature_schedule
from .mts import MtsParams, memetic_search, mts_model_time, mutation_rate, tabu_search
from .statevector import (
    PauliString,
    StateVector,
    apply_pauli_rotation,
    expectation_z,
    prepare_product,
    sample,
)
from .dcqo import (
    CdTerm,
    DcqoParams,
    MixerFields,
    agp_coefficient,
    agp_schedule,
    build_cd_terms,
    cvar_select,
    evolve_impulse,
    initial_angles,
    seed_bias_from_bitstring,
    update_bias,
)
from .pipeline import (
    HsqcSummary,
    TauEstimate,
    convergence_time,
    estimate_pgs,
    hsqc_total_time,
    run_hsqc,
    run_trials,
)
from .report import StageReport

__all__ = [name for name in dir() if not name.startswith("_")]
