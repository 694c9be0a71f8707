"""Topology-aware instance generation.

Connectivity maps model degree-limited qubit hardware.  Instances are
built by repeatedly coloring the map into parallel layers of disjoint
pair and triple interactions, keeping the first few layers of each
round, and relabeling qubits through the leading pair layer between
rounds so later rounds reach pairs that are non-adjacent on the device.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InstanceFormatError, ValidationError
from .hubo import HuboInstance

CANONICAL_HEAVY_HEX = (8, 16)  # 8 rows of 16 plus 28 connectors = 156 qubits
DEFAULT_COUPLING_CLIP = 6.0


# ---------------------------------------------------------------------------
# connectivity maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectivityMap:
    """Undirected qubit graph with a label permutation bookkeeping field.

    ``labeling[q]`` is the current label of original qubit ``q``; it starts
    as the identity and composes under swap relabelings.
    """

    num_qubits: int
    edges: frozenset
    labeling: tuple[int, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValidationError(f"num_qubits must be positive, got {self.num_qubits}")
        normalized = set()
        for e in self.edges:
            u, v = e
            u, v = int(u), int(v)
            if u == v:
                raise ValidationError(f"self-loop on qubit {u}")
            if not (0 <= u < self.num_qubits and 0 <= v < self.num_qubits):
                raise ValidationError(f"edge {(u, v)} references an invalid qubit id")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))
        labeling = self.labeling or tuple(range(self.num_qubits))
        if sorted(labeling) != list(range(self.num_qubits)):
            raise ValidationError("labeling must be a permutation of qubit ids")
        object.__setattr__(self, "labeling", tuple(labeling))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for lst in adj:
            lst.sort()
        return adj

    def degrees(self) -> list[int]:
        return [len(lst) for lst in self.neighbors()]

    def is_connected(self) -> bool:
        if self.num_qubits == 1:
            return True
        adj = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.num_qubits


def heavy_hex_map(rows: int, cols: int) -> ConnectivityMap:
    """Heavy-hexagonal patch: ``rows`` qubit rows of length ``cols`` joined by
    connector qubits every fourth column, alternating offsets 0 and 2 between
    row gaps.  ``heavy_hex_map(8, 16)`` is the canonical 156-qubit device map;
    ``heavy_hex_map(2, 5)`` is a single 12-qubit hexagonal cell.
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f"rows and cols must be >= 1, got ({rows}, {cols})")
    if rows >= 3 and cols < 3:
        raise ValidationError("patches with rows >= 3 need cols >= 3 to stay connected")
    edges = set()
    for r in range(rows):
        base = r * cols
        for c in range(cols - 1):
            edges.add((base + c, base + c + 1))
    next_id = rows * cols
    for gap in range(rows - 1):
        offset = 0 if gap % 2 == 0 else 2
        for c in range(offset, cols, 4):
            connector = next_id
            next_id += 1
            edges.add((gap * cols + c, connector))
            edges.add((connector, (gap + 1) * cols + c))
    return ConnectivityMap(next_id, frozenset(edges))


def ring_map(n: int) -> ConnectivityMap:
    if n < 3:
        raise ValidationError(f"a ring needs at least 3 qubits, got {n}")
    edges = {(i, (i + 1) % n) for i in range(n)}
    return ConnectivityMap(n, frozenset(edges))


def path_map(n: int) -> ConnectivityMap:
    if n < 2:
        raise ValidationError(f"a path needs at least 2 qubits, got {n}")
    edges = {(i, i + 1) for i in range(n - 1)}
    return ConnectivityMap(n, frozenset(edges))


def load_map(path) -> ConnectivityMap:
    """Read a map from JSON: {"num_qubits": int, "edges": [[u, v], ...]}."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise InstanceFormatError(f"cannot read connectivity file {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"connectivity file {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "num_qubits" not in doc or "edges" not in doc:
        raise InstanceFormatError('connectivity file must contain "num_qubits" and "edges"')
    try:
        return ConnectivityMap(int(doc["num_qubits"]), frozenset(tuple(e) for e in doc["edges"]))
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad connectivity file {p}: {exc}") from exc


# ---------------------------------------------------------------------------
# interaction layers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InteractionLayer:
    """A set of same-order index tuples that touch pairwise-disjoint qubits."""

    order: int
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.order not in (2, 3):
            raise ValidationError(f"layer order must be 2 or 3, got {self.order}")
        groups = tuple(tuple(int(q) for q in g) for g in self.groups)
        used: set[int] = set()
        for g in groups:
            if len(g) != self.order:
                raise ValidationError(f"group {g} does not match layer order {self.order}")
            if len(set(g)) != len(g):
                raise ValidationError(f"group {g} repeats a qubit")
            overlap = used.intersection(g)
            if overlap:
                raise ValidationError(f"layer groups overlap on qubits {sorted(overlap)}")
            used.update(g)
        object.__setattr__(self, "groups", groups)

    def qubits(self) -> set[int]:
        return {q for g in self.groups for q in g}


def audit_layer_connectivity(layer: InteractionLayer, cmap: ConnectivityMap) -> None:
    """Check every group is realizable on the map: pairs are edges, triples
    are paths u-v-w with edges (u, v) and (v, w) for a middle qubit v."""
    edges = cmap.edges
    for g in layer.groups:
        if layer.order == 2:
            if (min(g), max(g)) not in edges:
                raise ValidationError(f"pair {g} is not an edge of the map")
        else:
            u, v, w = g
            ok = any(
                (min(a, b), max(a, b)) in edges and (min(b, c), max(b, c)) in edges
                for a, b, c in ((u, v, w), (u, w, v), (v, u, w))
            )
            if not ok:
                raise ValidationError(f"triple {g} is not a connected path on the map")


def graph_coloring(cmap: ConnectivityMap, seed: int | None = None):
    """Partition all edges, and all length-2 paths, into disjoint parallel layers.

    First-fit greedy over a deterministic ordering (optionally shuffled with
    ``seed``).  Every edge appears in exactly one pair layer and every
    distinct triple {u, v, w} realizable as a path appears in exactly one
    triple layer.
    """
    edges = cmap.sorted_edges()
    adj = cmap.neighbors()
    triples = []
    seen = set()
    for center in range(cmap.num_qubits):
        nbrs = adj[center]
        for a in range(len(nbrs)):
            for b in range(a + 1, len(nbrs)):
                key = tuple(sorted((nbrs[a], center, nbrs[b])))
                if key not in seen:
                    seen.add(key)
                    triples.append(key)
    if seed is not None:
        rng = np.random.default_rng(seed)
        edges = [edges[i] for i in rng.permutation(len(edges))]
        triples = [triples[i] for i in rng.permutation(len(triples))]

    def first_fit(groups, order):
        layers: list[list[tuple[int, ...]]] = []
        used: list[set[int]] = []
        for g in groups:
            placed = False
            for k, taken in enumerate(used):
                if not taken.intersection(g):
                    layers[k].append(g)
                    taken.update(g)
                    placed = True
                    break
            if not placed:
                layers.append([g])
                used.append(set(g))
        return [InteractionLayer(order, tuple(layer)) for layer in layers]

    return first_fit(edges, 2), first_fit(triples, 3)


def swap_register(cmap: ConnectivityMap, pairs: InteractionLayer) -> ConnectivityMap:
    """Relabel qubits by the disjoint transpositions in ``pairs``.

    Each pair must be an edge of the map; the edge multiset is preserved
    under the relabeling.
    """
    if pairs.order != 2:
        raise ValidationError("swap layers must have order 2")
    for u, v in pairs.groups:
        if (min(u, v), max(u, v)) not in cmap.edges:
            raise ValidationError(f"swap pair {(u, v)} is not an edge of the map")
    perm = list(range(cmap.num_qubits))
    for u, v in pairs.groups:
        perm[u], perm[v] = perm[v], perm[u]
    new_edges = frozenset((min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in cmap.edges)
    new_labeling = tuple(perm[lbl] for lbl in cmap.labeling)
    return ConnectivityMap(cmap.num_qubits, new_edges, new_labeling)


# ---------------------------------------------------------------------------
# couplings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingDistribution:
    """Cauchy couplings, resampled until finite, nonzero, and |w| <= clip."""

    location: float = 0.0
    scale: float = 1.0
    clip: float = DEFAULT_COUPLING_CLIP

    def __post_init__(self):
        if self.scale <= 0 or not math.isfinite(self.scale):
            raise ValidationError(f"scale must be positive and finite, got {self.scale}")
        if self.clip <= 0 or not math.isfinite(self.clip):
            raise ValidationError(f"clip must be positive and finite, got {self.clip}")


def sample_couplings(dist: CouplingDistribution, count: int, rng) -> np.ndarray:
    """Draw ``count`` clipped Cauchy weights; ``rng`` is a seed or Generator."""
    if count < 0:
        raise ValidationError(f"count must be nonnegative, got {count}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    out = np.empty(count, dtype=np.float64)
    filled = 0
    while filled < count:
        draw = dist.location + dist.scale * gen.standard_cauchy(count - filled)
        keep = draw[np.isfinite(draw) & (draw != 0.0) & (np.abs(draw) <= dist.clip)]
        out[filled: filled + keep.size] = keep
        filled += keep.size
    return out


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def layer_rounds(
    cmap: ConnectivityMap, n_swap: int, rho2: int, rho3: int, seed: int
) -> list[tuple[ConnectivityMap, list[InteractionLayer]]]:
    """Replay the round structure: (active map, selected layers) per round.

    Per round: recolor the current map, keep the first ``rho2`` pair layers
    and ``rho3`` triple layers, and (except after the last round) relabel via
    the leading pair layer.  The coloring order is shuffled with a per-round
    seed derived from ``seed``; without this, the leading layer's pairs,
    which are fixed points of their own transpositions, would be re-selected
    every round.
    """
    if n_swap < 1:
        raise ValidationError(f"n_swap must be >= 1, got {n_swap}")
    if rho2 < 0 or rho3 < 0:
        raise ValidationError("rho2 and rho3 must be nonnegative")
    work = cmap
    rounds = []
    for r in range(n_swap):
        round_seed = int(np.random.SeedSequence(seed, spawn_key=(7, r)).generate_state(1)[0])
        two_layers, three_layers = graph_coloring(work, seed=round_seed)
        if rho2 > len(two_layers):
            raise ValidationError(
                f"round {r}: requested {rho2} pair layers, map only supports {len(two_layers)}"
            )
        if rho3 > len(three_layers):
            raise ValidationError(
                f"round {r}: requested {rho3} triple layers, map only supports {len(three_layers)}"
            )
        rounds.append((work, two_layers[:rho2] + three_layers[:rho3]))
        if r < n_swap - 1:
            if not two_layers:
                raise ValidationError(f"round {r}: no pair layers available for the swap step")
            work = swap_register(work, two_layers[0])
    return rounds


def generate_instance(
    cmap: ConnectivityMap,
    n_swap: int,
    rho2: int,
    rho3: int,
    dist: CouplingDistribution,
    seed: int,
    *,
    metadata: dict | None = None,
) -> HuboInstance:
    """Layered generation with swap relabeling between rounds.

    See ``layer_rounds`` for the round structure.  One-body terms are
    attached to every qubit.  Index tuples repeated across rounds are kept
    once.  Weights are drawn in a fixed order (one-body by qubit id, then
    pairs, then triples in collection order), so output is a pure function
    of the arguments.
    """
    pair_tuples: list[tuple[int, int]] = []
    triple_tuples: list[tuple[int, int, int]] = []
    seen: set[tuple[int, ...]] = set()
    for _, layers in layer_rounds(cmap, n_swap, rho2, rho3, seed):
        for layer in layers:
            bucket = pair_tuples if layer.order == 2 else triple_tuples
            for g in layer.groups:
                key = tuple(sorted(g))
                if key not in seen:
                    seen.add(key)
                    bucket.append(key)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = cmap.num_qubits
    count = n + len(pair_tuples) + len(triple_tuples)
    weights = sample_couplings(dist, count, rng)
    terms = [((q,), weights[q]) for q in range(n)]
    terms += [(t, weights[n + k]) for k, t in enumerate(pair_tuples)]
    base = n + len(pair_tuples)
    terms += [(t, weights[base + k]) for k, t in enumerate(triple_tuples)]

    meta = {
        "seed": seed,
        "n_swap": n_swap,
        "rho2": rho2,
        "rho3": rho3,
        "distribution": {"name": "cauchy", "location": dist.location,
                         "scale": dist.scale, "clip": dist.clip},
    }
    if metadata:
        meta.update(metadata)
    return HuboInstance(n, tuple(terms), metadata=meta)
