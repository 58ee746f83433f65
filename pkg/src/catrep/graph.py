"""Detector graphs for decoding repetition-code syndrome records.

Detectors compare syndrome outcomes from subsequent rounds,
D = (S_t1 + S_t2) mod 2, plus an initial layer (first round against the
prepared stabilizer values) and a final layer (last round against the
transversal data measurement).  Allowed edges are restricted to those a
simple Pauli error model generates: SPACE (end-of-cycle data flip),
TIME (syndrome measurement error), DIAGONAL (mid-cycle data flip seen
by the two adjacent ancillas in consecutive rounds) and BOUNDARY.
Every edge carries a probability p and the weight w = ln((1−p)/p).

Erasures are handled structurally rather than by reweighting: a run of
erased syndromes on one ancilla removes the detectors touching it and
inserts a single detector comparing the last good round before the run
with the first good round after it; parallel edges that this rewriting
creates merge into one edge carrying the probability that an odd
number of the underlying mechanisms fired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

SPACE = "SPACE"
TIME = "TIME"
DIAGONAL = "DIAGONAL"
BOUNDARY = "BOUNDARY"
BOUNDARY_NODE = "B"

_ERASED = 2
P_FLOOR = 1e-6


class ErasurePresentError(ValueError):
    """Record contains erasures; use the erasure-aware reconstruction path."""


def weight_from_prob(p: float) -> float:
    """Edge weight w = ln((1−p)/p), the log odds against the mechanism."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return math.log((1.0 - p) / p)


def prob_from_weight(w: float) -> float:
    """Inverse of :func:`weight_from_prob`: p = 1/(1 + e^w)."""
    return 1.0 / (1.0 + math.exp(w))


def p_odd(probs, max_edges: int = 20) -> float:
    """Probability that an odd number of independent events fire.

    Uses the parity identity p_odd = ½(1 − Π(1 − 2pᵢ)), which makes the
    combination associative and order-independent.  Lists longer than
    `max_edges` are assigned probability 0.5 outright (weight 0) — the
    product is numerically indistinguishable from 0 there anyway.
    """
    ps = list(probs)
    if len(ps) > max_edges:
        return 0.5
    prod = 1.0
    for p in ps:
        if not 0.0 <= p <= 0.5:
            raise ValueError(f"constituent probabilities must lie in [0, 0.5], got {p}")
        prod *= 1.0 - 2.0 * p
    return 0.5 * (1.0 - prod)


def _nkey(node):
    """Total order on nodes; the boundary sentinel sorts last."""
    if node == BOUNDARY_NODE:
        return (1, 0, 0, 0)
    if len(node) == 2:
        return (0, node[0], node[1], node[1])
    return (0, node[0], node[1], node[2])


def _canon(u, v):
    return (u, v) if _nkey(u) <= _nkey(v) else (v, u)


@dataclass(frozen=True)
class Edge:
    """Weighted matching-graph edge.

    endpoints u, v are detector ids (space, time) — or (space, t_lo, t_hi)
    for an erasure-cluster detector — with v possibly the boundary
    sentinel "B".  qubit is the data qubit whose flip this edge
    represents (None for TIME edges); it determines what a correction
    path crossing the edge does to the logical observable.
    """

    u: object
    v: object
    p: float
    kind: str
    qubit: object = None
    w: float = None

    def __post_init__(self):
        if self.kind not in (SPACE, TIME, DIAGONAL, BOUNDARY):
            raise ValueError(f"unknown edge kind {self.kind!r}")
        if not 0.0 < self.p <= 0.5:
            raise ValueError(f"edge probability must lie in (0, 0.5], got {self.p}")
        object.__setattr__(self, "p", float(self.p))  # numpy scalars break !r export
        u, v = _canon(self.u, self.v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", weight_from_prob(self.p))

    @property
    def is_boundary(self) -> bool:
        return self.v == BOUNDARY_NODE


class MatchingGraph:
    """Detector graph with weighted edges and cached shortest paths.

    Nodes are detector ids; one implicit boundary node is shared by all
    BOUNDARY edges.  Static (per-batch) graphs cache all-pairs shortest
    paths so per-shot decoding reduces to a small matching; per-shot
    rewritten graphs skip the cache.
    """

    def __init__(self, d: int, cycles: int, edges, diagnostics: dict | None = None):
        self.d = d
        self.cycles = cycles
        self.edges = list(edges)
        self.diagnostics = dict(diagnostics or {})
        nodes = set()
        self.edge_map = {}
        for e in self.edges:
            key = (e.u, e.v)
            if key in self.edge_map:
                raise ValueError(f"parallel unmerged edges at {key}")
            self.edge_map[key] = e
            if e.u != BOUNDARY_NODE:
                nodes.add(e.u)
            if e.v != BOUNDARY_NODE:
                nodes.add(e.v)
        self.nodes = sorted(nodes, key=_nkey)
        self.node_index = {n: i for i, n in enumerate(self.nodes)}
        self._csr = None
        self._apsp = None

    # ── structure ────────────────────────────────────────────────────

    def __contains__(self, node):
        return node in self.node_index

    def edge_between(self, u, v) -> Edge | None:
        return self.edge_map.get(_canon(u, v))

    def _full_csr(self):
        """Adjacency over detectors plus the boundary node at index n."""
        if self._csr is None:
            n = len(self.nodes)
            rows, cols, data = [], [], []
            for e in self.edges:
                i = self.node_index[e.u]
                j = n if e.v == BOUNDARY_NODE else self.node_index[e.v]
                rows += [i, j]
                cols += [j, i]
                data += [e.w, e.w]
            self._csr = csr_matrix((data, (rows, cols)), shape=(n + 1, n + 1))
        return self._csr

    def ensure_apsp(self):
        """Cache all-pairs shortest paths (detector block) and boundary paths.

        Defect–defect paths are not allowed to transit the boundary node
        (matching to the boundary is its own pairing option), so the
        detector block is solved separately from the boundary source.
        """
        if self._apsp is None:
            full = self._full_csr()
            n = len(self.nodes)
            det = full[:n, :n]
            dist, pred = dijkstra(det, directed=False, return_predecessors=True)
            bdist, bpred = dijkstra(full, directed=False, indices=n, return_predecessors=True)
            self._apsp = (dist, pred, bdist[:n], bpred)
        return self._apsp

    def shortest_paths(self, defect_idx):
        """Distances/predecessors for the given defect node indices.

        Returns (D, pred_rows, bd, bpred) where D[a, b] is the
        defect–defect distance (boundary transit excluded), pred_rows[a]
        the predecessor row for walking paths back to defect a, bd[a] the
        defect–boundary distance and bpred the predecessor row from the
        boundary source.
        """
        defect_idx = list(defect_idx)
        n = len(self.nodes)
        if self._apsp is not None:
            dist, pred, bdist, bpred = self._apsp
            D = dist[np.ix_(defect_idx, defect_idx)]
            return D, pred[defect_idx], bdist[defect_idx], bpred
        full = self._full_csr()
        det = full[:n, :n]
        if defect_idx:
            rows, pred = dijkstra(det, directed=False, indices=defect_idx,
                                  return_predecessors=True)
            D = rows[:, defect_idx]
        else:
            D = np.zeros((0, 0))
            pred = np.zeros((0, n), dtype=np.int32)
        bdist, bpred = dijkstra(full, directed=False, indices=n, return_predecessors=True)
        return D, pred, bdist[defect_idx], bpred

    # ── text format ──────────────────────────────────────────────────

    def to_text(self) -> str:
        """Line-oriented export: `kind i1 t1 i2 t2 p`, boundary as `B B`.

        Stable ordering and shortest round-trip float formatting make the
        output usable for golden tests.  Graphs containing erasure-cluster
        detectors (3-coordinate nodes) are per-shot objects and are not
        exportable.
        """
        lines = [f"# d={self.d} cycles={self.cycles}"]
        for e in sorted(self.edges, key=lambda e: (_nkey(e.u), _nkey(e.v), e.kind)):
            if e.u != BOUNDARY_NODE and len(e.u) == 3 or (
                    e.v != BOUNDARY_NODE and len(e.v) == 3):
                raise ValueError("per-shot cluster graphs are not text-exportable")
            i1, t1 = e.u
            i2, t2 = (BOUNDARY_NODE, BOUNDARY_NODE) if e.v == BOUNDARY_NODE else e.v
            lines.append(f"{e.kind} {i1} {t1} {i2} {t2} {e.p!r}")
        return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> MatchingGraph:
    """Parse the text format written by :meth:`MatchingGraph.to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing graph header line")
    head = dict(part.split("=") for part in lines[0][1:].split())
    d, cycles = int(head["d"]), int(head["cycles"])
    edges = []
    for ln in lines[1:]:
        kind, i1, t1, i2, t2, p = ln.split()
        u = (int(i1), int(t1))
        v = BOUNDARY_NODE if i2 == BOUNDARY_NODE else (int(i2), int(t2))
        edges.append(Edge(u=u, v=v, p=float(p), kind=kind,
                          qubit=_geometric_qubit(kind, u, v, d)))
    return MatchingGraph(d, cycles, edges)


def _geometric_qubit(kind, u, v, d):
    """Data-qubit attribution implied by edge geometry alone."""
    if kind == TIME:
        return None
    if kind == BOUNDARY:
        j = u[0]
        return 0 if j < (d - 1) / 2 else d - 1
    # SPACE and DIAGONAL connect columns j, j+1 and cross data qubit j+1
    return min(u[0], v[0]) + 1


# ── Detector extraction ──────────────────────────────────────────────


def _final_stabilizers(record):
    return record.finals[:-1] ^ record.finals[1:]


def detectors_from_record(record) -> np.ndarray:
    """Detector values for an erasure-free record.

    Shape [layers][d−1] with layers = cycles+1 in the X basis (initial
    comparison, bulk comparisons, final transversal layer) and cycles in
    the Z basis (which has no X-type final layer).  Raises
    ErasurePresentError when the record contains erasures; those records
    go through :func:`reconstruct_detectors` instead.
    """
    syn = record.syndromes
    if np.any(syn == _ERASED):
        raise ErasurePresentError(
            "record contains erased syndromes; use reconstruct_detectors()")
    d = record.d
    layers = record.cycles + 1 if record.basis == "X" else record.cycles
    out = np.empty((layers, d - 1), dtype=np.uint8)
    out[0] = syn[0] ^ record.initial_stabilizers
    out[1:record.cycles] = syn[1:] ^ syn[:-1]
    if record.basis == "X":
        out[record.cycles] = _final_stabilizers(record) ^ syn[-1]
    return out


def detector_values_with_mask(record):
    """Detector values plus a validity mask tolerant of erasures.

    A detector is valid when neither syndrome it compares is erased;
    invalid entries hold 0 and are excluded by the mask.  Used for
    detection-probability tables; decoding uses the reconstruction path.
    """
    syn = record.syndromes
    d = record.d
    layers = record.cycles + 1 if record.basis == "X" else record.cycles
    good = syn != _ERASED
    safe = np.where(good, syn, 0).astype(np.uint8)
    vals = np.zeros((layers, d - 1), dtype=np.uint8)
    valid = np.zeros((layers, d - 1), dtype=bool)
    vals[0] = safe[0] ^ record.initial_stabilizers
    valid[0] = good[0]
    vals[1:record.cycles] = safe[1:] ^ safe[:-1]
    valid[1:record.cycles] = good[1:] & good[:-1]
    if record.basis == "X":
        vals[record.cycles] = _final_stabilizers(record) ^ safe[-1]
        valid[record.cycles] = good[-1]
    vals[~valid] = 0
    return vals, valid


# ── Graph construction: analytic ─────────────────────────────────────


def analytic_graph(model, cycles: int, p_floor: float = P_FLOOR) -> MatchingGraph:
    """Exact no-erasure matching graph implied by the sampling model.

    Edge probabilities are the per-mechanism Bernoulli weights the
    sampler actually uses, with syndrome flips conditioned on the
    syndrome not being erased (the erased case is rewritten away before
    decoding).  Mechanisms sharing a detector signature combine via
    p_odd.  Zero-probability edges are omitted.  X basis only: in the Z
    basis corrections act trivially on the logical observable, so Z
    records are never decoded.
    """
    d, T = model.d, cycles
    f = model.mid_cycle_fraction
    edges = []

    def add(u, v, kind, qubit, p):
        if p > 0.0:
            edges.append(Edge(u=u, v=v, p=min(p, 0.5), kind=kind, qubit=qubit))

    with np.errstate(divide="ignore", invalid="ignore"):
        p_meas_eff = np.where(model.p_erase < 1.0,
                              model.p_meas / (1.0 - model.p_erase), 0.0)
    for j in range(d - 1):
        for t in range(T):
            add((j, t), (j, t + 1), TIME, None, float(p_meas_eff[j]))

    for i in range(1, d - 1):  # interior data qubits
        p_mid = model.p_z[i] * f
        p_end = model.p_z[i] * (1.0 - f)
        p_fin = model.final_meas_error[i]
        for t in range(T):
            add((i - 1, t), (i, t + 1), DIAGONAL, i, p_mid)
        for t in range(1, T):
            add((i - 1, t), (i, t), SPACE, i, p_end)
        add((i - 1, T), (i, T), SPACE, i, p_odd([p_end, p_fin]))

    # left boundary: both halves of qubit 0's flip share one signature
    p0 = p_odd([model.p_z[0] * f, model.p_z[0] * (1.0 - f)])
    for t in range(1, T):
        add((0, t), BOUNDARY_NODE, BOUNDARY, 0, p0)
    add((0, T), BOUNDARY_NODE, BOUNDARY, 0, p_odd([model.p_z[0] * f,
                                                   model.p_z[0] * (1.0 - f),
                                                   model.final_meas_error[0]]))

    # right boundary: mid-cycle flips surface one layer earlier than
    # end-of-cycle ones (the ancilla meets qubit d-1 in its second CX layer)
    q = d - 1
    p_mid = model.p_z[q] * f
    p_end = model.p_z[q] * (1.0 - f)
    add((d - 2, 0), BOUNDARY_NODE, BOUNDARY, q, p_mid)
    for t in range(1, T):
        add((d - 2, t), BOUNDARY_NODE, BOUNDARY, q, p_odd([p_mid, p_end]))
    add((d - 2, T), BOUNDARY_NODE, BOUNDARY, q, p_odd([p_end, model.final_meas_error[q]]))

    return MatchingGraph(d, T, edges)


# ── Graph construction: estimated from data ──────────────────────────


def _template(d: int, layers: int):
    """All allowed edges (kind, u, v, qubit) for a d, layers grid."""
    out = []
    for j in range(d - 1):
        for t in range(layers):
            if t + 1 < layers:
                out.append((TIME, (j, t), (j, t + 1), None))
            if j + 1 < d - 1:
                out.append((SPACE, (j, t), (j + 1, t), j + 1))
                if t + 1 < layers:
                    out.append((DIAGONAL, (j, t), (j + 1, t + 1), j + 1))
    return out


_NBR_OFFSETS = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1))


def _neighborhood_valid(valid):
    """Shrink a validity mask to shots valid on a node's full edge neighborhood.

    valid has shape [shots][layers][d−1] (time axis 1, space axis 2); the
    output is True only where the node itself and every template neighbor
    (one edge away, boundary excluded) are valid.
    """
    nv = valid.copy()
    for dj, dt in _NBR_OFFSETS:
        shifted = np.ones_like(valid)
        src = valid
        if dt > 0:
            shifted[:, :-dt, :] = src[:, dt:, :]
            src = shifted
        elif dt < 0:
            shifted[:, -dt:, :] = src[:, :dt, :]
            src = shifted
        if dj or dt:
            tmp = np.ones_like(valid)
            if dj > 0:
                tmp[:, :, :-dj] = src[:, :, dj:]
            elif dj < 0:
                tmp[:, :, -dj:] = src[:, :, :dj]
            else:
                tmp = src
            nv &= tmp
    return nv


def _pair_probability(x, y, xy):
    """Invert pairwise detector statistics to an edge probability.

    For two detectors flipped jointly by their shared edge (probability
    p) and independently by everything else, the XOR structure gives
    ⟨x⟩ = p(1−q) + q(1−p) form marginals; eliminating the nuisance rates
    yields  p = ½ − ½√(1 − 4(⟨xy⟩ − ⟨x⟩⟨y⟩)/(1 − 2⟨x⟩ − 2⟨y⟩ + 4⟨xy⟩)).
    Returns None when the discriminant is negative (pure sampling noise
    around p ≈ 0) so the caller can clamp and count the event.
    """
    den = 1.0 - 2.0 * x - 2.0 * y + 4.0 * xy
    if den <= 0.0:
        return None
    arg = 1.0 - 4.0 * (xy - x * y) / den
    if arg < 0.0:
        return None
    return 0.5 - 0.5 * math.sqrt(arg)


def _records_of(batch):
    return batch.records if hasattr(batch, "records") else list(batch)


def _estimate(records, conditioned: bool, p_floor: float):
    recs = _records_of(records)
    if not recs:
        raise ValueError("need a nonempty calibration batch")
    first = recs[0]
    d = first.d
    layers = first.cycles + 1 if first.basis == "X" else first.cycles
    vals = np.empty((len(recs), layers, d - 1), dtype=np.uint8)
    valid = np.empty((len(recs), layers, d - 1), dtype=bool)
    for s, rec in enumerate(recs):
        if conditioned:
            vals[s], valid[s] = detector_values_with_mask(rec)
        else:
            vals[s] = detectors_from_record(rec)
            valid[s] = True
    mask = _neighborhood_valid(valid) if conditioned else valid

    diagnostics = {"negative_discriminant": 0, "empty_conditioning": 0}
    edges = []
    incident = {}

    def estimate_pair(u, v, m):
        n = int(m.sum())
        if n == 0:
            return None
        xu = vals[:, u[1], u[0]][m]
        xv = vals[:, v[1], v[0]][m]
        x, y = float(xu.mean()), float(xv.mean())
        xy = float((xu & xv).mean())
        p = _pair_probability(x, y, xy)
        if p is None:
            diagnostics["negative_discriminant"] += 1
            p = p_floor
        return min(max(p, p_floor), 0.5)

    for kind, u, v, qubit in _template(d, layers):
        m = mask[:, u[1], u[0]] & mask[:, v[1], v[0]]
        p = estimate_pair(u, v, m)
        if p is None:
            diagnostics["empty_conditioning"] += 1
            m = valid[:, u[1], u[0]] & valid[:, v[1], v[0]]
            p = estimate_pair(u, v, m)
            if p is None:
                p = p_floor
        edges.append(Edge(u=u, v=v, p=p, kind=kind, qubit=qubit))
        incident.setdefault(u, []).append(p)
        incident.setdefault(v, []).append(p)

    # boundary edges: the residual marginal not explained by incident edges
    for j in range(d - 1):
        for t in range(layers):
            node = (j, t)
            m = mask[:, t, j]
            if not m.any():
                diagnostics["empty_conditioning"] += 1
                m = valid[:, t, j]
            mean = float(vals[:, t, j][m].mean()) if m.any() else 0.0
            prod = math.prod(1.0 - 2.0 * p for p in incident.get(node, []))
            if prod <= 0.0:
                p_b = 0.5
            else:
                p_b = 0.5 * (1.0 - (1.0 - 2.0 * mean) / prod)
            p_b = min(max(p_b, p_floor), 0.5)
            edges.append(Edge(u=node, v=BOUNDARY_NODE, p=p_b, kind=BOUNDARY,
                              qubit=_geometric_qubit(BOUNDARY, node, BOUNDARY_NODE, d)))

    cycles = first.cycles
    return MatchingGraph(d, cycles, edges, diagnostics=diagnostics)


def correlation_weights(batch, fraction: float = 0.25, p_floor: float = P_FLOOR) -> MatchingGraph:
    """Estimate the matching graph from detector correlations.

    Uses the first `fraction` of the batch (default the first quarter;
    callers score the remainder so weighting and scoring shots never
    mix).  Records must be erasure-free — either sampled that way or
    explicitly filled; the erasure-aware estimate lives in
    :func:`no_erasure_baseline`.
    """
    recs = _records_of(batch)
    n_cal = max(1, math.ceil(len(recs) * fraction))
    return _estimate(recs[:n_cal], conditioned=False, p_floor=p_floor)


def no_erasure_baseline(batch, fraction: float = 1.0, p_floor: float = P_FLOOR) -> MatchingGraph:
    """Correlation weights conditioned on erasure-free neighborhoods.

    Each edge is estimated only from shots where every detector within
    one edge of either endpoint is free of erased syndromes, removing
    the contamination erasures would otherwise add to the apparent
    syndrome error.  Where conditioning empties the sample the estimate
    falls back to the unconditioned one and the event is counted in the
    graph diagnostics.
    """
    recs = _records_of(batch)
    n_cal = max(1, math.ceil(len(recs) * fraction))
    return _estimate(recs[:n_cal], conditioned=True, p_floor=p_floor)


# ── Erasure rewriting ─────────────────────────────────────────────────


def reconstruct_detectors(record):
    """Detector values with erased runs bypassed.

    Returns (detectors, clusters): detectors maps node id → value for
    every surviving detector, where maximal runs of erased syndromes on
    one ancilla are replaced by a single spanning detector
    (space, first_layer, last_layer) comparing the last good syndrome
    before the run with the first good one after it; clusters lists the
    spanning ids.  With no erasures this reduces exactly to
    :func:`detectors_from_record`.
    """
    if record.basis == "Z":
        raise ValueError("Z-basis records are not decoded; no reconstruction needed")
    syn = record.syndromes
    d, T = record.d, record.cycles
    final_stab = _final_stabilizers(record)
    dets = {}
    clusters = []
    for j in range(d - 1):
        col = syn[:, j]
        erased = col == _ERASED
        # syndrome layer values with the references at both ends
        seq = np.empty(T + 2, dtype=np.uint8)
        seq[0] = record.initial_stabilizers[j]
        seq[1:T + 1] = np.where(erased, 0, col)
        seq[T + 1] = final_stab[j]
        removed = np.zeros(T + 1, dtype=bool)
        t = 0
        while t < T:
            if not erased[t]:
                t += 1
                continue
            t1 = t
            while t + 1 < T and erased[t + 1]:
                t += 1
            t2 = t
            # erased rounds t1..t2 remove detector layers t1..t2+1
            node = (j, t1, t2 + 1)
            dets[node] = int(seq[t1] ^ seq[t2 + 2])
            clusters.append(node)
            removed[t1:t2 + 2] = True
            t += 1
        for lay in range(T + 1):
            if not removed[lay]:
                dets[(j, lay)] = int(seq[lay] ^ seq[lay + 1])
    return dets, clusters


def merge_edges_for_erasure(baseline: MatchingGraph, clusters) -> MatchingGraph:
    """Per-shot graph with erasure clusters spliced in.

    Every detector a cluster absorbs is remapped onto the cluster's
    spanning detector; edges that become internal disappear, and edges
    that become parallel (several mechanisms now connecting the same
    pair) merge into a single edge with the odd-parity combination of
    their probabilities.  A merged edge inherits kind and data-qubit
    attribution from its most probable constituent (for single-column
    clusters all constituents agree).  After the rewrite no detector in
    the graph touches an erased syndrome.
    """
    if not clusters:
        return baseline
    remap = {}
    for (j, lo, hi) in clusters:
        for lay in range(lo, hi + 1):
            remap[(j, lay)] = (j, lo, hi)

    grouped = {}
    order = []
    for e in baseline.edges:
        u = remap.get(e.u, e.u)
        v = e.v if e.v == BOUNDARY_NODE else remap.get(e.v, e.v)
        if u == v:
            continue  # became internal to a cluster
        key = _canon(u, v)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(e)

    edges = []
    for key in order:
        group = grouped[key]
        u, v = key
        if len(group) == 1:
            e = group[0]
            if (e.u, e.v) == key:
                edges.append(e)
            else:
                edges.append(Edge(u=u, v=v, p=e.p, kind=e.kind, qubit=e.qubit))
        else:
            rep = max(group, key=lambda e: e.p)
            p = p_odd([e.p for e in group])
            edges.append(Edge(u=u, v=v, p=p, kind=rep.kind, qubit=rep.qubit))
    return MatchingGraph(baseline.d, baseline.cycles, edges,
                         diagnostics={"merged_clusters": len(clusters)})


def naive_erasure_graph(baseline: MatchingGraph, record) -> MatchingGraph:
    """Comparison decoder: zero out vertical edges at erased syndromes.

    No detector rewriting — the erased syndrome keeps a (meaningless)
    value and the TIME edge linking the two detectors it feeds gets
    weight 0 (p = 0.5), letting the matching toggle it for free.  The
    result is invariant under the fill value chosen for the erased bit.
    """
    erased = np.argwhere(record.syndromes == _ERASED)
    if erased.size == 0:
        return baseline
    patched = {}
    for t, j in erased:
        u, v = (int(j), int(t)), (int(j), int(t) + 1)
        patched[_canon(u, v)] = Edge(u=u, v=v, p=0.5, kind=TIME, qubit=None)
    n_zeroed = len(patched)
    edges = []
    for e in baseline.edges:
        key = (e.u, e.v)
        edges.append(patched.pop(key, e))
    edges.extend(patched.values())  # vertical edges absent from the baseline
    return MatchingGraph(baseline.d, baseline.cycles, edges,
                         diagnostics={"zeroed_edges": n_zeroed})
