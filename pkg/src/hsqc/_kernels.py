"""Compiled inner loops shared by the annealer, tabu search, and exact solver.

All kernels work on the flat array form of an instance (see
``hubo.PackedTerms``): ``weights`` (m), ``tvars`` (m, 3) with sentinel
index N for unused slots, and an adjacency CSR ``adj_offsets`` /
``adj_terms``.  Spin vectors carry one extra sentinel entry fixed at +1.

The kernels keep a per-term signed product cache ``w_T * prod(s_T)``;
a flip only toggles signs in that cache, so the cache itself is exact.
Running energies are resynced from the cache periodically to bound
floating-point drift.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

RESYNC_INTERVAL = 65536


@njit(cache=True, nogil=True)
def signed_products(weights, tvars, ext_spins):
    m = weights.shape[0]
    out = np.empty(m, dtype=np.float64)
    for t in range(m):
        out[t] = weights[t] * ext_spins[tvars[t, 0]] * ext_spins[tvars[t, 1]] * ext_spins[tvars[t, 2]]
    return out


@njit(cache=True, nogil=True)
def _delta(wprod, adj_offsets, adj_terms, i):
    acc = 0.0
    for a in range(adj_offsets[i], adj_offsets[i + 1]):
        acc += wprod[adj_terms[a]]
    return -2.0 * acc


@njit(cache=True, nogil=True)
def _apply_flip(wprod, adj_offsets, adj_terms, ext_spins, i):
    ext_spins[i] = -ext_spins[i]
    for a in range(adj_offsets[i], adj_offsets[i + 1]):
        t = adj_terms[a]
        wprod[t] = -wprod[t]


@njit(cache=True, nogil=True)
def sa_run(weights, tvars, adj_offsets, adj_terms, ext_spins, temps, gen,
           trace_current, trace_best):
    """One annealing run over ``ext_spins`` (modified in place).

    Visits variables in a fresh random permutation each sweep and applies
    the Metropolis rule at the sweep temperature.  Returns the best spins
    seen (tracked after every accepted flip) and the running best energy.
    ``trace_current`` / ``trace_best`` are filled per sweep when sized to
    the number of sweeps (pass length-0 arrays to skip tracing).
    """
    n = ext_spins.shape[0] - 1
    wprod = signed_products(weights, tvars, ext_spins)
    energy = wprod.sum()
    best_energy = energy
    best = ext_spins[:n].copy()
    do_trace = trace_current.shape[0] == temps.shape[0]
    perm = np.arange(n)
    steps = 0
    for k in range(temps.shape[0]):
        temperature = temps[k]
        for j in range(n - 1, 0, -1):
            r = gen.integers(0, j + 1)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp
        for pos in range(n):
            i = perm[pos]
            d = _delta(wprod, adj_offsets, adj_terms, i)
            if d <= 0.0 or gen.random() < math.exp(-d / temperature):
                _apply_flip(wprod, adj_offsets, adj_terms, ext_spins, i)
                energy += d
                steps += 1
                if steps >= RESYNC_INTERVAL:
                    energy = wprod.sum()
                    steps = 0
                if energy < best_energy:
                    best_energy = energy
                    for q in range(n):
                        best[q] = ext_spins[q]
        if do_trace:
            trace_current[k] = energy
            trace_best[k] = best_energy
    return best, best_energy


@njit(cache=True, nogil=True)
def tabu_search_run(weights, tvars, adj_offsets, adj_terms, ext_spins, zobrist,
                    tabu_length, max_iterations, target_energy, has_target):
    """Best-admissible-neighbor descent with a FIFO list of visited configurations.

    Returns (best spins, best energy, neighbor evaluations, iterations done).
    Membership in the list is tested through 64-bit incremental hashes of the
    full configuration; a colliding neighbor is treated as tabu.
    """
    n = ext_spins.shape[0] - 1
    wprod = signed_products(weights, tvars, ext_spins)
    energy = wprod.sum()
    best = ext_spins[:n].copy()
    best_energy = energy
    flips = 0
    iterations = 0
    if has_target and best_energy <= target_energy:
        return best, best_energy, flips, iterations

    key = np.uint64(0)
    for q in range(n):
        if ext_spins[q] < 0:
            key ^= zobrist[q]
    ring = np.zeros(tabu_length, dtype=np.uint64)
    ring_size = 0
    ring_head = 0

    for _ in range(max_iterations):
        chosen = -1
        chosen_energy = np.inf
        for i in range(n):
            neighbor_key = key ^ zobrist[i]
            tabu = False
            for r in range(ring_size):
                if ring[r] == neighbor_key:
                    tabu = True
                    break
            if tabu:
                continue
            candidate = energy + _delta(wprod, adj_offsets, adj_terms, i)
            flips += 1
            if candidate < chosen_energy:
                chosen_energy = candidate
                chosen = i
        if chosen < 0:
            break
        iterations += 1
        # incumbent becomes tabu before moving
        if ring_size < tabu_length:
            ring[ring_size] = key
            ring_size += 1
        else:
            ring[ring_head] = key
            ring_head = (ring_head + 1) % tabu_length
        _apply_flip(wprod, adj_offsets, adj_terms, ext_spins, chosen)
        energy = chosen_energy
        key ^= zobrist[chosen]
        if energy < best_energy:
            best_energy = energy
            for q in range(n):
                best[q] = ext_spins[q]
            if has_target and best_energy <= target_energy:
                break
    return best, best_energy, flips, iterations


@njit(cache=True, nogil=True)
def gray_code_minimum(weights, tvars, adj_offsets, adj_terms, n, tie_atol):
    """Exhaustive minimum over all 2^n configurations via single-flip steps.

    Returns (minimizing spins, energy, count of configurations within
    ``tie_atol`` of the minimum).  The reported minimizer is the first one
    reached along the Gray-code walk.
    """
    ext_spins = np.ones(n + 1, dtype=np.int8)
    wprod = signed_products(weights, tvars, ext_spins)
    energy = wprod.sum()
    best_energy = energy
    best = ext_spins[:n].copy()
    degeneracy = 1
    total = np.uint64(1) << np.uint64(n)
    steps = 0
    for k in range(np.uint64(1), total):
        i = 0
        while (k >> np.uint64(i)) & np.uint64(1) == np.uint64(0):
            i += 1
        d = _delta(wprod, adj_offsets, adj_terms, i)
        _apply_flip(wprod, adj_offsets, adj_terms, ext_spins, i)
        energy += d
        steps += 1
        if steps >= RESYNC_INTERVAL:
            energy = wprod.sum()
            steps = 0
        if energy < best_energy - tie_atol:
            best_energy = energy
            degeneracy = 1
            for q in range(n):
                best[q] = ext_spins[q]
        elif energy <= best_energy + tie_atol:
            degeneracy += 1
    return best, best_energy, degeneracy
