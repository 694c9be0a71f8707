"""Spin-form polynomial cost functions of order up to three.

The canonical representation is a weighted list of index tuples over
spins s_i in {+1, -1}; the energy of a configuration is
``sum_T w_T * prod_{j in T} s_j``.  A 0/1 bit form exists only at I/O
boundaries (bit 0 maps to spin +1, bit 1 to spin -1).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InstanceFormatError, UndefinedGapError, ValidationError

MAX_ORDER = 3

# Energies are double-precision sums over up to ~10^3 terms; tests and
# degeneracy counting compare with this absolute tolerance.
ENERGY_ATOL = 1e-9


# ---------------------------------------------------------------------------
# spin / bit configurations
# ---------------------------------------------------------------------------

def as_spins(values, num_vars: int | None = None) -> np.ndarray:
    """Validate and return a length-N int8 vector over {+1, -1}."""
    spins = np.asarray(values)
    if spins.ndim != 1:
        raise ValidationError(f"spin configuration must be 1-D, got shape {spins.shape}")
    spins = spins.astype(np.int8, copy=False)
    if spins.size and not np.all((spins == 1) | (spins == -1)):
        bad = spins[(spins != 1) & (spins != -1)][0]
        raise ValidationError(f"spin entries must be +1 or -1, found {bad}")
    if num_vars is not None and spins.shape[0] != num_vars:
        raise ValidationError(
            f"configuration has {spins.shape[0]} spins but the instance has {num_vars} variables"
        )
    return spins


def bits_to_spins(bits) -> np.ndarray:
    """Map bits to spins: 0 -> +1, 1 -> -1."""
    b = np.asarray(bits)
    if b.ndim != 1:
        raise ValidationError(f"bit vector must be 1-D, got shape {b.shape}")
    if b.size and not np.all((b == 0) | (b == 1)):
        bad = b[(b != 0) & (b != 1)][0]
        raise ValidationError(f"bit entries must be 0 or 1, found {bad}")
    return (1 - 2 * b.astype(np.int8)).astype(np.int8)


def spins_to_bits(spins) -> np.ndarray:
    """Map spins to bits: +1 -> 0, -1 -> 1."""
    s = as_spins(spins)
    return ((1 - s) // 2).astype(np.uint8)


def spins_to_bitstring(spins) -> str:
    """Render spins as a 0/1 string with variable 0 first."""
    return "".join("0" if v == 1 else "1" for v in as_spins(spins))


def bitstring_to_spins(text: str) -> np.ndarray:
    """Parse a 0/1 string (variable 0 first) into spins."""
    stripped = text.strip()
    bad = set(stripped) - {"0", "1"}
    if bad:
        raise ValidationError(f"bitstring may only contain 0/1, found {sorted(bad)!r}")
    return bits_to_spins(np.frombuffer(stripped.encode(), dtype=np.uint8) - ord("0"))


def flip(spins: np.ndarray, i: int) -> np.ndarray:
    """Return a copy of ``spins`` with variable ``i`` flipped."""
    out = np.array(spins, dtype=np.int8, copy=True)
    out[i] = -out[i]
    return out


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

class PackedTerms(NamedTuple):
    """Flat array form used by the compiled kernels.

    ``tvars`` is (m, 3) with unused slots set to the sentinel value
    ``num_vars``; evaluation appends a +1 spin at that index.
    """

    weights: np.ndarray   # float64[m]
    tvars: np.ndarray     # int32[m, 3]
    adj_offsets: np.ndarray  # int64[N + 1]
    adj_terms: np.ndarray    # int32[total memberships]


@dataclass(frozen=True)
class HuboInstance:
    """Immutable spin polynomial: ``num_vars`` variables, weighted index tuples."""

    num_vars: int
    terms: tuple[tuple[tuple[int, ...], float], ...]
    metadata: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.num_vars, int) or self.num_vars < 1:
            raise ValidationError(f"num_vars must be a positive integer, got {self.num_vars!r}")
        normalized = []
        seen: set[tuple[int, ...]] = set()
        for entry in self.terms:
            try:
                idx, w = entry
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"term must be (indices, weight), got {entry!r}") from exc
            idx = tuple(int(q) for q in idx)
            w = float(w)
            if not 1 <= len(idx) <= MAX_ORDER:
                raise ValidationError(f"term order must be 1..{MAX_ORDER}, got indices {idx}")
            if any(q < 0 or q >= self.num_vars for q in idx):
                raise ValidationError(f"term indices {idx} out of range for {self.num_vars} variables")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValidationError(f"term indices must be strictly increasing, got {idx}")
            if idx in seen:
                raise ValidationError(f"duplicate term indices {idx}; merge upstream instead")
            if not math.isfinite(w) or w == 0.0:
                raise ValidationError(f"term weight for {idx} must be finite and nonzero, got {w}")
            seen.add(idx)
            normalized.append((idx, w))
        object.__setattr__(self, "terms", tuple(normalized))

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """For each variable, the ids of the terms containing it."""
        adj: list[list[int]] = [[] for _ in range(self.num_vars)]
        for t, (idx, _) in enumerate(self.terms):
            for q in idx:
                adj[q].append(t)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def packed(self) -> PackedTerms:
        m = len(self.terms)
        weights = np.empty(m, dtype=np.float64)
        tvars = np.full((m, 3), self.num_vars, dtype=np.int32)
        for t, (idx, w) in enumerate(self.terms):
            weights[t] = w
            tvars[t, : len(idx)] = idx
        adj_offsets = np.zeros(self.num_vars + 1, dtype=np.int64)
        for idx, _ in self.terms:
            for q in idx:
                adj_offsets[q + 1] += 1
        np.cumsum(adj_offsets, out=adj_offsets)
        adj_terms = np.empty(int(adj_offsets[-1]), dtype=np.int32)
        cursor = adj_offsets[:-1].copy()
        for t, (idx, _) in enumerate(self.terms):
            for q in idx:
                adj_terms[cursor[q]] = t
                cursor[q] += 1
        return PackedTerms(weights, tvars, adj_offsets, adj_terms)

    def term_counts(self) -> dict[int, int]:
        """Number of terms of each order present."""
        counts = {1: 0, 2: 0, 3: 0}
        for idx, _ in self.terms:
            counts[len(idx)] += 1
        return counts

    def max_abs_weight(self) -> float:
        return max((abs(w) for _, w in self.terms), default=0.0)


def energy(inst: HuboInstance, spins) -> float:
    """Exact energy ``sum_T w_T * prod_{j in T} s_j``."""
    s = as_spins(spins, inst.num_vars)
    weights, tvars, _, _ = inst.packed
    if weights.size == 0:
        return 0.0
    ext = np.append(s, np.int8(1))
    prod = ext[tvars[:, 0]].astype(np.float64)
    prod *= ext[tvars[:, 1]]
    prod *= ext[tvars[:, 2]]
    return float(weights @ prod)


def energy_batch(inst: HuboInstance, spin_rows: np.ndarray) -> np.ndarray:
    """Energies of a (k, N) matrix of spin rows."""
    rows = np.asarray(spin_rows, dtype=np.int8)
    if rows.ndim != 2 or rows.shape[1] != inst.num_vars:
        raise ValidationError(f"expected shape (k, {inst.num_vars}), got {rows.shape}")
    weights, tvars, _, _ = inst.packed
    if weights.size == 0:
        return np.zeros(rows.shape[0])
    ext = np.concatenate([rows, np.ones((rows.shape[0], 1), dtype=np.int8)], axis=1)
    prod = ext[:, tvars[:, 0]].astype(np.float64)
    prod *= ext[:, tvars[:, 1]]
    prod *= ext[:, tvars[:, 2]]
    return prod @ weights


def delta_energy(inst: HuboInstance, spins, i: int) -> float:
    """Energy change from flipping variable ``i``: ``-2 * sum of w_T prod_T over terms containing i``."""
    s = as_spins(spins, inst.num_vars)
    if not 0 <= i < inst.num_vars:
        raise ValidationError(f"variable index {i} out of range for {inst.num_vars} variables")
    weights, tvars, adj_off, adj_terms = inst.packed
    ids = adj_terms[adj_off[i]: adj_off[i + 1]]
    if ids.size == 0:
        return 0.0
    ext = np.append(s, np.int8(1))
    rows = tvars[ids]
    prod = ext[rows[:, 0]].astype(np.float64)
    prod *= ext[rows[:, 1]]
    prod *= ext[rows[:, 2]]
    return float(-2.0 * (weights[ids] @ prod))


def optimality_gap(e_min: float, e_gs: float, *, tolerance: float = 1e-6) -> float:
    """Percentage above the ground-state energy: ``100 (e_min - e_gs) / |e_gs|``.

    ``tolerance`` is relative and only guards the precondition that
    ``e_min`` does not undercut the ground state.
    """
    if e_gs == 0.0:
        raise UndefinedGapError("gap is undefined for ground-state energy 0")
    slack = tolerance * max(1.0, abs(e_gs))
    if e_min < e_gs - slack:
        raise ValidationError(
            f"e_min={e_min} is below the claimed ground state {e_gs}; not a valid gap"
        )
    return 100.0 * (e_min - e_gs) / abs(e_gs)


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

def to_dict(inst: HuboInstance) -> dict:
    """Canonical dictionary form: terms sorted lexicographically by indices."""
    doc = {
        "n": inst.num_vars,
        "terms": [
            {"idx": list(idx), "w": w}
            for idx, w in sorted(inst.terms, key=lambda item: item[0])
        ],
    }
    if inst.metadata:
        doc["metadata"] = inst.metadata
    return doc


def from_dict(doc) -> HuboInstance:
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"instance document must be an object, got {type(doc).__name__}")
    if "n" not in doc:
        raise InstanceFormatError('instance document is missing the variable count field "n"')
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InstanceFormatError(f'"n" must be a positive integer, got {n!r}')
    raw_terms = doc.get("terms")
    if not isinstance(raw_terms, list):
        raise InstanceFormatError('"terms" must be an array of {"idx": [...], "w": ...} objects')
    terms = []
    for k, entry in enumerate(raw_terms):
        if not isinstance(entry, dict) or "idx" not in entry or "w" not in entry:
            raise InstanceFormatError(f'term {k} must be an object with "idx" and "w" fields')
        idx = entry["idx"]
        w = entry["w"]
        if not isinstance(idx, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in idx):
            raise InstanceFormatError(f'term {k}: "idx" must be an array of integers, got {idx!r}')
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise InstanceFormatError(f'term {k}: "w" must be a number, got {w!r}')
        terms.append((tuple(idx), float(w)))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InstanceFormatError('"metadata" must be an object when present')
    try:
        return HuboInstance(n, tuple(terms), metadata=metadata)
    except ValidationError as exc:
        raise InstanceFormatError(str(exc)) from exc


def dumps_instance(inst: HuboInstance) -> str:
    """Byte-stable canonical serialization."""
    return json.dumps(to_dict(inst), sort_keys=True, indent=2) + "\n"


def save_instance(inst: HuboInstance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path) -> HuboInstance:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read instance file {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"instance file {p} is not valid JSON: {exc}") from exc
    return from_dict(doc)
