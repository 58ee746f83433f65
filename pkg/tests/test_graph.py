"""Matching-graph construction: weights, detectors, erasure rewrites, estimation.

Weight conversions and parity combinations are pinned to independently
evaluated closed forms; detector extraction and erasure reconstruction are
checked against hand-enumerated records; graph structure is cross-checked
against the single-error signatures the sampler actually produces.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catrep import graph, sampler
from catrep.graph import (BOUNDARY, BOUNDARY_NODE, DIAGONAL, SPACE, TIME,
                          Edge, ErasurePresentError, MatchingGraph)
from catrep.noise import RepCodeNoiseModel
from catrep.sampler import ERASED, SyndromeRecord

# Independently evaluated anchors: w = ln((1−p)/p).
W_011 = 2.0907410969337694
W_019 = 1.4500101755059539

probs = st.floats(min_value=1e-6, max_value=0.5, allow_nan=False,
                  exclude_max=False)


def make_model(d=3, p_z=0.0, p_meas=0.0, p_erase=0.0, **kw):
    kw.setdefault("t_cycle", 1e-6)
    return RepCodeNoiseModel(d=d, p_z=p_z, p_meas=p_meas, p_erase=p_erase, **kw)


def make_record(initial_stabilizers, syndromes, finals, basis="X", d=None):
    syn = np.asarray(syndromes, dtype=np.uint8)
    fin = np.asarray(finals, dtype=np.uint8)
    return SyndromeRecord(
        basis=basis,
        initial_state=np.zeros(fin.size, dtype=np.uint8),
        initial_stabilizers=np.asarray(initial_stabilizers, dtype=np.uint8),
        syndromes=syn,
        finals=fin,
        shot_seed=0,
    )


# ── Weight conversions ───────────────────────────────────────────────

def test_weight_from_prob_values():
    assert graph.weight_from_prob(0.5) == 0.0
    assert graph.weight_from_prob(0.11) == pytest.approx(W_011, rel=1e-12)
    assert graph.weight_from_prob(0.19) == pytest.approx(W_019, rel=1e-12)


def test_weight_from_prob_domain():
    for p in (0.0, 1.0, -0.1, 1.3):
        with pytest.raises(ValueError):
            graph.weight_from_prob(p)


@given(p=st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_weight_prob_round_trip(p):
    assert graph.prob_from_weight(graph.weight_from_prob(p)) == pytest.approx(p, rel=1e-9)


def test_weight_monotone_decreasing():
    ps = np.linspace(0.01, 0.99, 25)
    ws = [graph.weight_from_prob(p) for p in ps]
    assert all(a > b for a, b in zip(ws, ws[1:]))


# ── Odd-parity combination ───────────────────────────────────────────

def test_p_odd_values():
    assert graph.p_odd([]) == 0.0
    assert graph.p_odd([0.37]) == pytest.approx(0.37, rel=1e-12)
    assert graph.p_odd([0.11, 0.11]) == pytest.approx(0.1958, rel=1e-12)


def test_p_odd_matches_xor_enumeration():
    ps = [0.11, 0.07, 0.2]
    total = 0.0
    for fires in itertools.product([0, 1], repeat=3):
        if sum(fires) % 2 == 1:
            total += math.prod(p if f else 1 - p for p, f in zip(ps, fires))
    assert total == pytest.approx(0.29876, rel=1e-12)
    assert graph.p_odd(ps) == pytest.approx(total, rel=1e-12)


@given(a=probs, b=probs, c=probs)
def test_p_odd_associative(a, b, c):
    assert graph.p_odd([graph.p_odd([a, b]), c]) == pytest.approx(
        graph.p_odd([a, b, c]), abs=1e-12)


def test_p_odd_long_lists_saturate():
    assert graph.p_odd([0.01] * 21) == 0.5
    assert graph.p_odd([0.01] * 20) != 0.5


def test_p_odd_domain():
    with pytest.raises(ValueError):
        graph.p_odd([0.6])
    with pytest.raises(ValueError):
        graph.p_odd([-0.1])


# ── Edge and graph structure ─────────────────────────────────────────

def test_edge_canonical_order_and_weight():
    e = Edge(u=(1, 2), v=(0, 1), p=0.11, kind=SPACE, qubit=1)
    assert (e.u, e.v) == ((0, 1), (1, 2))
    assert e.w == pytest.approx(W_011, rel=1e-12)
    b = Edge(u=BOUNDARY_NODE, v=(0, 1), p=0.2, kind=BOUNDARY, qubit=0)
    assert (b.u, b.v) == ((0, 1), BOUNDARY_NODE)
    assert b.is_boundary and not e.is_boundary


def test_edge_validation():
    with pytest.raises(ValueError):
        Edge(u=(0, 0), v=(0, 1), p=0.11, kind="WEIRD")
    for p in (0.0, 0.51, -0.2):
        with pytest.raises(ValueError):
            Edge(u=(0, 0), v=(0, 1), p=p, kind=TIME)


def test_matching_graph_rejects_parallel_edges():
    e1 = Edge(u=(0, 0), v=(0, 1), p=0.1, kind=TIME)
    e2 = Edge(u=(0, 1), v=(0, 0), p=0.2, kind=TIME)
    with pytest.raises(ValueError, match="parallel"):
        MatchingGraph(3, 1, [e1, e2])


def test_edge_between_is_symmetric():
    e = Edge(u=(0, 0), v=(1, 1), p=0.1, kind=DIAGONAL, qubit=1)
    g = MatchingGraph(3, 1, [e])
    assert g.edge_between((1, 1), (0, 0)) is e
    assert g.edge_between((0, 0), (1, 1)) is e
    assert g.edge_between((0, 0), (0, 1)) is None
    assert BOUNDARY_NODE not in g.nodes


# ── Detector extraction ──────────────────────────────────────────────

def test_detectors_from_record_hand_case():
    # d=3, two cycles: layer 0 compares the initial reference, layer 2 the
    # stabilizers recomputed from the final transversal readout.
    rec = make_record([1, 1], [[1, 1], [1, 0]], [0, 1, 1])
    det = graph.detectors_from_record(rec)
    assert np.array_equal(det, [[0, 0], [0, 1], [0, 0]])


def test_detectors_from_record_z_basis_has_no_final_layer():
    rec = make_record([1, 0], [[1, 1]], [0, 0, 0], basis="Z")
    det = graph.detectors_from_record(rec)
    assert np.array_equal(det, [[0, 1]])


def test_detectors_from_record_rejects_erasures():
    rec = make_record([0, 0], [[0, ERASED], [0, 0]], [0, 0, 0])
    with pytest.raises(ErasurePresentError):
        graph.detectors_from_record(rec)


def test_detector_values_with_mask():
    rec = make_record([0, 0], [[1, 0], [ERASED, 0]], [0, 0, 0])
    vals, valid = graph.detector_values_with_mask(rec)
    # Column 0: the erased round invalidates the two comparisons touching it.
    assert np.array_equal(valid[:, 0], [True, False, False])
    assert valid[:, 1].all()
    assert vals[0, 0] == 1 and not vals[:, 1].any()


# ── Erasure reconstruction ───────────────────────────────────────────

def test_reconstruct_without_erasures_matches_plain_detectors():
    rec = make_record([1, 0], [[1, 1], [0, 1]], [1, 0, 0])
    dets, clusters = graph.reconstruct_detectors(rec)
    assert clusters == []
    plain = graph.detectors_from_record(rec)
    assert dets == {(j, t): int(plain[t, j])
                    for t in range(3) for j in range(2)}


def test_reconstruct_single_erasure():
    # One erased round on ancilla 0 spans detector layers 1 and 2; the
    # spanning detector compares the syndromes straddling the gap.
    rec = make_record([0, 0],
                      [[1, 0], [ERASED, 0], [0, 0]],
                      [0, 0, 0])
    dets, clusters = graph.reconstruct_detectors(rec)
    assert clusters == [(0, 1, 2)]
    assert dets[(0, 1, 2)] == 1          # syn[0]=1 vs syn[2]=0
    assert (0, 1) not in dets and (0, 2) not in dets
    assert dets[(0, 0)] == 1 and dets[(0, 3)] == 0
    assert all(dets[(1, lay)] == 0 for lay in range(4))


def test_reconstruct_erasure_run_spans_once():
    rec = make_record([1, 0],
                      [[ERASED, 0], [ERASED, 0], [ERASED, 0], [1, 0]],
                      [0, 0, 0])
    dets, clusters = graph.reconstruct_detectors(rec)
    assert clusters == [(0, 0, 3)]
    assert dets[(0, 0, 3)] == 0          # initial reference 1 vs syn[3]=1
    assert set(dets) == {(0, 0, 3), (0, 4), (1, 0), (1, 1), (1, 2), (1, 3), (1, 4)}
    assert dets[(0, 4)] == 1             # syn[3]=1 vs final stabilizer 0


def test_reconstruct_rejects_z_basis():
    rec = make_record([1, 0], [[1, 1]], [0, 0, 0], basis="Z")
    with pytest.raises(ValueError):
        graph.reconstruct_detectors(rec)


# ── Analytic graph ───────────────────────────────────────────────────

def test_analytic_graph_edge_probabilities():
    model = make_model(d=3, p_z=0.04, p_meas=0.02, p_erase=0.1,
                       final_meas_error=0.03)
    g = graph.analytic_graph(model, cycles=2)
    assert len(g.edges) == 13

    # TIME: syndrome flip conditioned on not being erased.
    for j in range(2):
        for t in range(2):
            e = g.edge_between((j, t), (j, t + 1))
            assert e.kind == TIME and e.qubit is None
            assert e.p == pytest.approx(0.02 / 0.9, rel=1e-12)

    # Interior qubit 1: mid-cycle flips are diagonal, end-of-cycle space.
    for t in range(2):
        e = g.edge_between((0, t), (1, t + 1))
        assert e.kind == DIAGONAL and e.qubit == 1 and e.p == pytest.approx(0.02)
    assert g.edge_between((0, 1), (1, 1)).p == pytest.approx(0.02)
    # Final layer folds the transversal measurement error in.
    e = g.edge_between((0, 2), (1, 2))
    assert e.kind == SPACE and e.p == pytest.approx(0.0488, rel=1e-12)

    # Left boundary: both halves of qubit 0's flip share one signature.
    assert g.edge_between((0, 1), BOUNDARY_NODE).p == pytest.approx(0.0392, rel=1e-12)
    assert g.edge_between((0, 2), BOUNDARY_NODE).p == pytest.approx(0.066848, rel=1e-12)
    assert g.edge_between((0, 0), BOUNDARY_NODE) is None

    # Right boundary: mid-cycle flips surface one layer earlier.
    assert g.edge_between((1, 0), BOUNDARY_NODE).p == pytest.approx(0.02)
    assert g.edge_between((1, 1), BOUNDARY_NODE).p == pytest.approx(0.0392, rel=1e-12)
    assert g.edge_between((1, 2), BOUNDARY_NODE).p == pytest.approx(0.0488, rel=1e-12)
    for e in g.edges:
        if e.is_boundary:
            assert e.qubit in (0, 2)


def test_analytic_graph_measurement_only_has_no_boundary():
    g = graph.analytic_graph(make_model(d=4, p_meas=0.05), cycles=3)
    assert {e.kind for e in g.edges} == {TIME}


def test_analytic_graph_interior_signatures_match_sampler():
    # Sample a single noisy interior qubit and check every two-defect
    # pattern lands exactly on one of that qubit's graph edges.
    p_z = np.array([0.0, 0.0, 0.06, 0.0, 0.0])
    model = make_model(d=5, p_z=p_z, p_meas=0.03)
    g = graph.analytic_graph(model, cycles=3)
    batch = sampler.sample_batch(model, cycles=3, basis="X", shots=1500, seed=30)
    n_edge, n_other = 0, 0
    for rec in batch.records:
        det = graph.detectors_from_record(rec)
        nodes = [(j, t) for t, j in zip(*np.nonzero(det))]
        if len(nodes) == 2:
            if g.edge_between(*nodes) is None:
                n_other += 1     # O(p²) coincidences of two mechanisms
            else:
                n_edge += 1
    assert n_edge > 100
    assert n_other < 0.05 * n_edge


def test_analytic_graph_boundary_signatures_match_sampler():
    for qubit, column in ((0, 0), (3, 2)):
        p_z = np.zeros(4)
        p_z[qubit] = 0.05
        model = make_model(d=4, p_z=p_z)
        g = graph.analytic_graph(model, cycles=2)
        batch = sampler.sample_batch(model, cycles=2, basis="X", shots=2000,
                                     seed=31 + qubit)
        n_single = 0
        for rec in batch.records:
            det = graph.detectors_from_record(rec)
            nodes = [(j, t) for t, j in zip(*np.nonzero(det))]
            for node in nodes:
                assert node[0] == column
            if len(nodes) == 1:
                n_single += 1
                e = g.edge_between(nodes[0], BOUNDARY_NODE)
                assert e is not None and e.qubit == qubit
        assert n_single > 100


# ── Erasure rewriting of graphs ──────────────────────────────────────

def test_merge_edges_for_erasure():
    model = make_model(d=3, p_z=0.04, p_meas=0.02, p_erase=0.1,
                       final_meas_error=0.03)
    base = graph.analytic_graph(model, cycles=2)
    assert graph.merge_edges_for_erasure(base, []) is base

    cluster = (0, 1, 2)                  # ancilla 0, detector layers 1–2
    merged = graph.merge_edges_for_erasure(base, [cluster])
    assert merged.diagnostics["merged_clusters"] == 1
    assert (0, 1) not in merged.nodes and (0, 2) not in merged.nodes
    assert cluster in merged.nodes
    # One TIME edge feeds the cluster; the one inside it disappeared.
    assert merged.edge_between((0, 0), cluster).kind == TIME
    assert len(merged.edges) == len(base.edges) - 3
    # The two absorbed boundary edges combine by odd parity …
    eb = merged.edge_between(cluster, BOUNDARY_NODE)
    assert eb.p == pytest.approx(graph.p_odd([0.0392, 0.066848]), rel=1e-12)
    assert eb.kind == BOUNDARY and eb.qubit == 0
    # … as do the diagonal and space edges that now share endpoints.
    es = merged.edge_between(cluster, (1, 2))
    assert es.p == pytest.approx(graph.p_odd([0.02, 0.0488]), rel=1e-12)
    assert es.kind == SPACE and es.qubit == 1
    assert merged.edge_between(cluster, (1, 1)).p == pytest.approx(0.02)


def test_merge_leaves_no_detector_on_erased_syndrome():
    model = make_model(d=5, p_z=0.03, p_meas=0.05, p_erase=0.4)
    base = graph.analytic_graph(model, cycles=6)
    batch = sampler.sample_batch(model, cycles=6, basis="X", shots=30, seed=40)
    for rec in batch.records:
        dets, clusters = graph.reconstruct_detectors(rec)
        merged = graph.merge_edges_for_erasure(base, clusters)
        erased_layers = {(j, lay) for j, lo, hi in clusters
                         for lay in range(lo, hi + 1)}
        assert not erased_layers & set(merged.nodes)
        assert set(merged.nodes) <= set(dets)


def test_naive_erasure_graph():
    model = make_model(d=3, p_z=0.04, p_meas=0.02, p_erase=0.1)
    base = graph.analytic_graph(model, cycles=2)
    clean = sampler.sample_batch(make_model(d=3), cycles=2, basis="X",
                                 shots=1, seed=0).records[0]
    assert graph.naive_erasure_graph(base, clean) is base

    rec = make_record([0, 0], [[0, 0], [ERASED, 0]], [0, 0, 0])
    patched = graph.naive_erasure_graph(base, rec)
    assert patched.diagnostics["zeroed_edges"] == 1
    e = patched.edge_between((0, 1), (0, 2))
    assert e.p == 0.5 and e.w == 0.0
    unchanged = [x for x in patched.edges if (x.u, x.v) != (e.u, e.v)]
    assert all(base.edge_between(x.u, x.v).p == x.p for x in unchanged)


def test_naive_erasure_graph_adds_missing_vertical_edge():
    # With p_meas = 0 the baseline has no TIME edges at all; the zeroed
    # edge must still appear so the matching can cross the erased round.
    model = make_model(d=3, p_z=0.04)
    base = graph.analytic_graph(model, cycles=2)
    assert all(e.kind != TIME for e in base.edges)
    rec = make_record([0, 0], [[0, 0], [ERASED, 0]], [0, 0, 0])
    patched = graph.naive_erasure_graph(base, rec)
    assert len(patched.edges) == len(base.edges) + 1
    assert patched.edge_between((0, 1), (0, 2)).w == 0.0


# ── Estimated graphs ─────────────────────────────────────────────────

def test_correlation_weights_independent_detectors_hit_floor():
    batch = sampler.sample_batch(make_model(d=4), cycles=3, basis="X",
                                 shots=50, seed=1)
    g = graph.correlation_weights(batch, fraction=1.0)
    assert {e.p for e in g.edges} == {graph.P_FLOOR}


def test_correlation_weights_recover_known_probabilities():
    model = make_model(d=4, p_z=0.05, p_meas=0.03)
    batch = sampler.sample_batch(model, cycles=6, basis="X", shots=30000, seed=3)
    g = graph.correlation_weights(batch, fraction=1.0)

    def mean_p(kind, keep=lambda e: True):
        ps = [e.p for e in g.edges if e.kind == kind and keep(e)]
        assert ps
        return np.mean(ps)

    assert mean_p(TIME) == pytest.approx(0.03, abs=0.004)
    assert mean_p(DIAGONAL) == pytest.approx(0.025, abs=0.004)
    # End-of-cycle flips never fire a layer-0 comparison.
    assert mean_p(SPACE, keep=lambda e: e.u[1] > 0) == pytest.approx(0.025, abs=0.004)
    assert mean_p(SPACE, keep=lambda e: e.u[1] == 0) < 0.01


def test_correlation_weights_use_leading_fraction():
    model = make_model(d=3, p_z=0.05, p_meas=0.05)
    big = sampler.sample_batch(model, cycles=3, basis="X", shots=400, seed=7)
    head = sampler.sample_batch(model, cycles=3, basis="X", shots=100, seed=7)
    g_frac = graph.correlation_weights(big, fraction=0.25)
    g_head = graph.correlation_weights(head, fraction=1.0)
    assert [(e.u, e.v, e.p) for e in g_frac.edges] == \
           [(e.u, e.v, e.p) for e in g_head.edges]


def test_no_erasure_baseline_equals_plain_on_clean_batch():
    model = make_model(d=4, p_z=0.04, p_meas=0.04)
    batch = sampler.sample_batch(model, cycles=4, basis="X", shots=2000, seed=9)
    a = graph.correlation_weights(batch, fraction=1.0)
    b = graph.no_erasure_baseline(batch, fraction=1.0)
    assert [(e.u, e.v, e.p) for e in a.edges] == \
           [(e.u, e.v, e.p) for e in b.edges]


def test_no_erasure_baseline_removes_erasure_contamination():
    # Conditioning recovers the conditional flip rate p_meas/(1−p_erase);
    # coin-filling instead sees p_meas + p_erase/2 on vertical edges.
    model = make_model(d=4, p_meas=0.03, p_erase=0.3)
    batch = sampler.sample_batch(model, cycles=5, basis="X", shots=20000, seed=4)
    cond = graph.no_erasure_baseline(batch, fraction=1.0)
    filled = [sampler.fill_erasures(rec, seed=9) for rec in batch.records]
    raw = graph.correlation_weights(filled, fraction=1.0)

    def bulk_time(g):
        return np.mean([e.p for e in g.edges if e.kind == TIME])

    assert bulk_time(cond) == pytest.approx(0.03 / 0.7, abs=0.004)
    assert bulk_time(raw) == pytest.approx(0.03 + 0.15, abs=0.01)


def test_no_erasure_baseline_counts_fallbacks():
    # A tiny, heavily erased batch cannot condition everywhere.
    model = make_model(d=4, p_meas=0.05, p_erase=0.9)
    batch = sampler.sample_batch(model, cycles=4, basis="X", shots=5, seed=6)
    g = graph.no_erasure_baseline(batch, fraction=1.0)
    assert g.diagnostics["empty_conditioning"] > 0


# ── Text round trip ──────────────────────────────────────────────────

def test_graph_text_round_trip():
    model = make_model(d=4, p_z=[0.01, 0.02, 0.03, 0.04], p_meas=0.05,
                       p_erase=0.06, final_meas_error=0.007)
    g = graph.analytic_graph(model, cycles=3)
    text = g.to_text()
    g2 = graph.graph_from_text(text)
    assert g2.to_text() == text
    assert (g2.d, g2.cycles) == (g.d, g.cycles)
    assert {(e.u, e.v, e.kind, e.p, e.qubit) for e in g.edges} == \
           {(e.u, e.v, e.kind, e.p, e.qubit) for e in g2.edges}


def test_cluster_graphs_are_not_exportable():
    model = make_model(d=3, p_z=0.04, p_meas=0.02, p_erase=0.1)
    base = graph.analytic_graph(model, cycles=2)
    merged = graph.merge_edges_for_erasure(base, [(0, 1, 2)])
    with pytest.raises(ValueError, match="not text-exportable"):
        merged.to_text()


def test_graph_from_text_requires_header():
    with pytest.raises(ValueError, match="header"):
        graph.graph_from_text("TIME 0 0 0 1 0.1\n")
