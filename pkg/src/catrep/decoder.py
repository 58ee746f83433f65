"""Minimum-weight perfect matching on detector graphs.

The decoder reduces matching on the full detector graph to matching on
the complete graph over the defects (detectors that fired): pairwise
costs are shortest-path distances, matching a defect to the boundary
costs its shortest distance to the boundary node, and the usual
boundary-twin construction (one zero-cost clique of twins) lets any
number of defects terminate there.  Small instances are solved exactly
with a bitmask dynamic program over defect subsets; larger ones go
through blossom matching with a rank perturbation that prefers the
lexicographically smallest pairing among weight ties.

Reported totals are recomputed as math.fsum over the sorted pair
distances, so two optimal matchings that realize the same distance
multiset report bitwise-identical weights regardless of which one the
search returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graph import BOUNDARY_NODE, MatchingGraph, _canon, _nkey

_SMALL_K = 10
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class Matching:
    """Decoder output: canonical pair list and its total weight.

    pairs is a sorted tuple of (u, v) with v either a detector id or the
    boundary sentinel; total_weight is the fsum of the sorted pair
    distances.  paths, when present, carries the realized shortest-path
    edge lists so corrections need no second graph search.
    """

    pairs: tuple
    total_weight: float
    paths: dict | None = field(default=None, compare=False, repr=False)


def _pair_key(pair):
    return (_nkey(pair[0]), _nkey(pair[1]))


def _defect_setup(graph: MatchingGraph, defects):
    defects = sorted(defects, key=_nkey)
    if len(set(defects)) != len(defects):
        raise ValueError("defect list contains duplicates")
    try:
        idx = [graph.node_index[v] for v in defects]
    except KeyError as exc:
        raise ValueError(f"defect {exc.args[0]!r} is not a node of the graph") from None
    D, pred, bd, bpred = graph.shortest_paths(idx)
    if len(idx) and not np.all(np.isfinite(bd)):
        raise ValueError("a defect cannot reach the boundary; graph is malformed")
    return defects, idx, D, pred, bd, bpred


def _match_small(D, bd):
    """Exact minimum-weight matching by subset dynamic programming.

    dp[mask] is the optimal cost of resolving the defect subset `mask`;
    the lowest set bit either pairs with another member or exits to the
    boundary.  Reconstruction walks greedily, preferring the partner
    that comes first in canonical order among options within a relative
    tolerance of optimal, which yields the lexicographically smallest
    pair list among exact ties.
    """
    k = len(bd)
    dp = np.full(1 << k, math.inf)
    dp[0] = 0.0
    for mask in range(1, 1 << k):
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        best = bd[i] + dp[rest]
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            cand = D[i, j] + dp[rest ^ (1 << j)]
            if cand < best:
                best = cand
        dp[mask] = best
    if not math.isfinite(dp[-1]):
        raise ValueError("no feasible matching exists")

    pairs = []
    mask = (1 << k) - 1
    while mask:
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        tol = _TIE_RTOL * (1.0 + abs(dp[mask]))
        chosen = None
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            if D[i, j] + dp[rest ^ (1 << j)] <= dp[mask] + tol:
                chosen = j
                break
        if chosen is None:
            pairs.append((i, None))
            mask = rest
        else:
            pairs.append((i, chosen))
            mask = rest ^ (1 << chosen)
    return pairs


def _match_blossom(D, bd):
    """Blossom matching on the defect graph with boundary twins.

    Weights are negated for networkx's maximizer; a perturbation of
    eps·2^(−rank) per pair, with pairs ranked in canonical order, makes
    the optimizer prefer the lexicographically smallest pairing among
    weight ties (the perturbation is far below any genuine weight
    difference, and underflows harmlessly past the first ~50 ranks).
    """
    k = len(bd)
    finite = D[np.isfinite(D)]
    scale = max(1.0, float(bd.max()), float(finite.max()) if finite.size else 0.0)
    eps = 1e-9 * scale
    G = nx.Graph()
    rank = 0
    for i in range(k):
        for j in range(i + 1, k):
            if math.isfinite(D[i, j]):
                G.add_edge(("d", i), ("d", j), weight=-D[i, j] + eps * 2.0 ** -rank)
            rank += 1
        G.add_edge(("d", i), ("t", i), weight=-bd[i] + eps * 2.0 ** -rank)
        rank += 1
    for i in range(k):
        for j in range(i + 1, k):
            G.add_edge(("t", i), ("t", j), weight=0.0)
    mate = nx.max_weight_matching(G, maxcardinality=True)
    if len(mate) != k:
        raise ValueError("no feasible matching exists")
    pairs = []
    for a, b in mate:
        if a[0] == "t" and b[0] == "t":
            continue
        if a[0] == "t":
            a, b = b, a
        if b[0] == "t":
            pairs.append((a[1], None))
        else:
            pairs.append((min(a[1], b[1]), max(a[1], b[1])))
    return pairs


def _walk_defect_path(graph, pred_row, src_idx, dst_idx):
    """Edge list of the shortest path dst → src along a predecessor row."""
    nodes = graph.nodes
    edges = []
    x = dst_idx
    while x != src_idx:
        px = int(pred_row[x])
        if px < 0:
            raise ValueError("path reconstruction failed; disconnected pair")
        edges.append((nodes[px], nodes[x]))
        x = px
    return edges


def _walk_boundary_path(graph, bpred, defect_idx):
    """Edge list from a defect to the boundary along the boundary tree."""
    nodes = graph.nodes
    n = len(nodes)
    edges = []
    x = defect_idx
    while x != n:
        px = int(bpred[x])
        if px < 0:
            raise ValueError("path reconstruction failed; boundary unreachable")
        u = BOUNDARY_NODE if px == n else nodes[px]
        edges.append((u, nodes[x]))
        x = px
    return edges


def decode(graph: MatchingGraph, defects) -> Matching:
    """Minimum-weight matching of the fired detectors.

    Returns the canonical pair list (defect–defect and defect–boundary
    pairs), its fsum total weight, and the realized shortest paths for
    correction.  Instances with at most 10 defects are solved exactly by
    dynamic programming; larger ones by blossom matching.
    """
    defects, idx, D, pred, bd, bpred = _defect_setup(graph, defects)
    k = len(defects)
    if k == 0:
        return Matching(pairs=(), total_weight=0.0, paths={})
    raw = _match_small(D, bd) if k <= _SMALL_K else _match_blossom(D, bd)

    pairs, dists, paths = [], [], {}
    for i, j in raw:
        if j is None:
            pair = (defects[i], BOUNDARY_NODE)
            dists.append(float(bd[i]))
            paths[pair] = _walk_boundary_path(graph, bpred, idx[i])
        else:
            pair = _canon(defects[i], defects[j])
            dists.append(float(D[i, j]))
            paths[pair] = _walk_defect_path(graph, pred[i], idx[i], idx[j])
        pairs.append(pair)
    pairs.sort(key=_pair_key)
    return Matching(pairs=tuple(pairs), total_weight=math.fsum(sorted(dists)),
                    paths=paths)


def brute_force(graph: MatchingGraph, defects, limit: int = 12) -> Matching:
    """Reference decoder: exhaustive enumeration of all pairings.

    Enumerates every way to resolve the defects (each pairs with a later
    defect or exits to the boundary), computes each candidate's fsum
    total, and keeps the first optimum in depth-first order — which,
    because partners are tried in canonical order with the boundary
    last, is the lexicographically smallest optimal pair list.  Distinct
    from the production search path on purpose; limited to `limit`
    defects by the (k−1)!! growth of the enumeration.
    """
    defects, idx, D, pred, bd, bpred = _defect_setup(graph, defects)
    k = len(defects)
    if k > limit:
        raise ValueError(f"brute force limited to {limit} defects, got {k}")
    if k == 0:
        return Matching(pairs=(), total_weight=0.0, paths={})

    best = {"total": math.inf, "pairs": None}

    def recurse(remaining, acc_pairs, acc_dists):
        if not remaining:
            total = math.fsum(sorted(acc_dists))
            if total < best["total"]:
                best["total"] = total
                best["pairs"] = list(acc_pairs)
            return
        i = remaining[0]
        rest = remaining[1:]
        for pos, j in enumerate(rest):
            if math.isfinite(D[i, j]):
                recurse(rest[:pos] + rest[pos + 1:],
                        acc_pairs + [(i, j)], acc_dists + [float(D[i, j])])
        if math.isfinite(bd[i]):
            recurse(rest, acc_pairs + [(i, None)], acc_dists + [float(bd[i])])

    recurse(list(range(k)), [], [])
    if best["pairs"] is None:
        raise ValueError("no feasible matching exists")

    pairs = []
    for i, j in best["pairs"]:
        if j is None:
            pairs.append((defects[i], BOUNDARY_NODE))
        else:
            pairs.append(_canon(defects[i], defects[j]))
    pairs.sort(key=_pair_key)
    return Matching(pairs=tuple(pairs), total_weight=best["total"])


def _paths_for(graph: MatchingGraph, matching: Matching) -> dict:
    if matching.paths is not None:
        return matching.paths
    defects = sorted({u for pair in matching.pairs for u in pair
                      if u != BOUNDARY_NODE}, key=_nkey)
    defects, idx, D, pred, bd, bpred = _defect_setup(graph, defects)
    pos = {v: a for a, v in enumerate(defects)}
    paths = {}
    for u, v in matching.pairs:
        if v == BOUNDARY_NODE:
            paths[(u, v)] = _walk_boundary_path(graph, bpred, idx[pos[u]])
        else:
            paths[(u, v)] = _walk_defect_path(graph, pred[pos[u]], idx[pos[u]],
                                              idx[pos[v]])
    return paths


def correction(graph: MatchingGraph, matching: Matching) -> np.ndarray:
    """Data-qubit correction implied by the matched paths.

    XORs, per data qubit, the attribution of every SPACE/DIAGONAL/
    BOUNDARY edge crossed by the matched paths (TIME edges touch no
    data).  Returns a length-d parity vector.
    """
    corr = np.zeros(graph.d, dtype=np.uint8)
    for edges in _paths_for(graph, matching).values():
        for u, v in edges:
            e = graph.edge_map.get(_canon(u, v))
            if e is None:
                raise ValueError(f"matched path uses unknown edge {(u, v)!r}")
            if e.qubit is not None:
                corr[e.qubit] ^= 1
    return corr


def _node_token(node) -> str:
    if node == BOUNDARY_NODE:
        return "B B"
    if len(node) == 2:
        return f"{node[0]} {node[1]}"
    return f"{node[0]} {node[1]}-{node[2]}"


def matching_to_text(matching: Matching) -> str:
    """Debug export in the graph text style: one `PAIR` line per pairing."""
    lines = [f"PAIR {_node_token(u)} {_node_token(v)}" for u, v in matching.pairs]
    lines.append(f"TOTAL {matching.total_weight!r}")
    return "\n".join(lines) + "\n"


def score(record, matching: Matching | None, graph: MatchingGraph | None) -> int:
    """Residual logical flip (0/1) after applying the decoder's correction.

    X basis: the prepared-vs-measured flip of the edge data qubit, XORed
    with the correction's parity on that qubit (any single qubit
    represents the logical, up to stabilizers; the correction is
    expressed in the same gauge).  Z basis: corrections act trivially on
    the bit-flip observable, so the raw observed flip is returned and no
    matching is required.
    """
    obs = record.observed_logical_flip()
    if record.basis == "Z":
        return int(obs)
    if matching is None or graph is None:
        raise ValueError("X-basis scoring requires a matching and its graph")
    corr = correction(graph, matching)
    return int(obs ^ int(corr[0]))
