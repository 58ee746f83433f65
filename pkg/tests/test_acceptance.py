"""End-to-end acceptance suite: one test per headline capability.

Each test exercises a full pipeline at its natural scale and checks a
quantitative target — closed-form projections, exact decoding, Lindblad
oracles, below-threshold scaling, erasure-aware decoding gains,
conditioned weight estimation, error-budget consistency and CX
dispersive-mismatch tolerance.  Every Monte Carlo run is counter-seeded,
so all quoted numbers are exact reruns; tolerances are the targets the
package commits to, not statistical slack.  The whole module takes
roughly half an hour single-threaded; run it with ``pytest -v`` to get
one pass/fail line per capability.
"""

import math

import numpy as np
import pytest

from catrep import analysis, catq, cli, decoder, graph, lindblad, noise, sampler
from catrep.noise import RepCodeNoiseModel

# ── 1. Closed-form overhead projections ──────────────────────────────


def _sig2(x):
    exp = math.floor(math.log10(abs(x)))
    return round(x, 1 - exp)


def test_closed_form_overhead_projections():
    _, _, near = noise.project_overhead(
        d=11, t_cycle=1e-6, T1=300e-6, alpha_sq=5.0, T_Z=1.0)
    _, _, far = noise.project_overhead(
        d=11, t_cycle=1e-6, T1=1e-3, alpha_sq=7.0, T_Z=100.0)
    assert _sig2(near) == 3.8e-6
    assert _sig2(far) == 3.3e-8
    print(f"overhead projections: eps_L = {near:.3e} / {far:.3e} -> PASS")


# ── 2. Parallel-edge merging ─────────────────────────────────────────


def test_parallel_edge_merge_matches_parity_convolution():
    p2 = graph.p_odd([0.11, 0.11])
    assert p2 == pytest.approx(0.1958, abs=1e-12)
    w2 = graph.weight_from_prob(p2)
    assert abs(w2 - 1.43) < 0.025
    # three-edge merges must agree with exhaustive XOR enumeration
    ps = [0.11, 0.07, 0.15]
    enum = 0.0
    for bits in range(8):
        flips = [(bits >> i) & 1 for i in range(3)]
        if sum(flips) % 2:
            enum += math.prod(p if f else 1.0 - p for p, f in zip(ps, flips))
    assert graph.p_odd(ps) == pytest.approx(enum, rel=1e-14)
    print(f"edge merging: p_odd(0.11, 0.11) = {p2:.4f}, w = {w2:.3f}, "
          f"3-edge vs enumeration = {graph.p_odd(ps):.6f} -> PASS")


# ── 3. Decoder exactness ─────────────────────────────────────────────


def _random_graph_and_defects(rng, k_max=10):
    d = int(rng.integers(3, 7))
    cycles = int(rng.integers(2, 6))
    model = RepCodeNoiseModel(
        d=d,
        p_z=rng.uniform(0.01, 0.45, size=d),
        p_meas=rng.uniform(0.01, 0.45, size=d - 1),
        p_erase=rng.uniform(0.0, 0.3, size=d - 1),
        final_meas_error=rng.uniform(0.0, 0.2, size=d),
        t_cycle=1e-6,
    )
    g = graph.analytic_graph(model, cycles)
    k = int(rng.integers(0, min(k_max, len(g.nodes)) + 1))
    idx = rng.choice(len(g.nodes), size=k, replace=False)
    return g, [g.nodes[i] for i in idx]


def test_decoder_reproduces_brute_force_minimum_on_random_graphs():
    rng = np.random.default_rng(2024)
    n_graphs, n_nontrivial, n_near_ties = 220, 0, 0
    for _ in range(n_graphs):
        g, defects = _random_graph_and_defects(rng)
        fast = decoder.decode(g, defects)
        exact = decoder.brute_force(g, defects)
        # The exhaustive minimum is never beaten; the decoder may settle
        # a near-tie (two pairings within its 1e-9 relative tie
        # tolerance) on the lexicographic representative instead.
        assert exact.total_weight <= fast.total_weight
        assert math.isclose(fast.total_weight, exact.total_weight,
                            rel_tol=1e-9, abs_tol=0.0) or fast.total_weight == 0.0
        n_near_ties += fast.total_weight != exact.total_weight
        n_nontrivial += bool(defects)
    assert n_nontrivial >= 150
    print(f"decoder exactness: {n_graphs} random graphs "
          f"({n_nontrivial} nontrivial), all totals equal "
          f"({n_near_ties} sub-1e-9 near-ties) -> PASS")


# ── 4. Integrator vs closed-form phase-flip rates ────────────────────


def _three_point_decay(p0, p1, p2, tau):
    """Rate and asymptote of p(t) = p_inf + (p0 - p_inf) e^{-G t}."""
    ratio = (p2 - p1) / (p1 - p0)
    rate = -math.log(ratio) / tau
    p_inf = p0 - (p1 - p0) / (ratio - 1.0)
    return rate, p_inf


def test_integrator_reproduces_closed_form_phase_flip_rates():
    dim, kappa1 = 40, 1.0 / 500
    space = lindblad.FockSpace(dim)
    a = lindblad.destroy(space)
    par = np.asarray(lindblad.parity(space))
    lines = []
    for alpha_sq in (1.0, 2.0, 3.0):
        alpha = math.sqrt(alpha_sq)
        gen = lindblad.Generator(
            hamiltonian=np.zeros((dim, dim), dtype=complex),
            jump_ops=((a @ a - alpha_sq * np.eye(dim), 1.0), (a, kappa1)))
        rates = catq.phase_flip_rates(
            catq.CatParams(alpha_sq=alpha_sq, kappa1_eff=kappa1, t_cycle=1e-6))
        gamma_ref = rates.gamma_plus_to_minus + rates.gamma_minus_to_plus

        odd = lindblad.cat_state(space, alpha, -1)
        state = lindblad.evolve(np.outer(odd, odd.conj()), gen, 3.0,
                                step_scale=2.0)
        tau = 0.2 / gamma_ref
        pops = []
        for _ in range(3):
            pops.append(0.5 * (1.0 + float(np.trace(par @ state).real)))
            if len(pops) < 3:
                state = lindblad.evolve(state, gen, tau, step_scale=2.0)
        gamma_fit, p_inf = _three_point_decay(*pops, tau)
        assert gamma_fit == pytest.approx(gamma_ref, rel=0.05)
        p_ref = catq.steady_state_plus_population(alpha_sq)
        assert abs(p_inf - p_ref) < 1e-3
        lines.append(f"|a|^2={alpha_sq:g}: rate {gamma_fit:.3e} vs "
                     f"{gamma_ref:.3e}, P+ {p_inf:.4f} vs {p_ref:.4f}")
    print("integrator vs closed forms: " + "; ".join(lines) + " -> PASS")


# ── 5. Below-threshold ordering at derived noise ─────────────────────


def _alpha_sweep_config():
    alphas = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
    return {
        "seed": 7, "basis": "X", "distances": [3, 5], "cycles": [1, 2, 4],
        "shots": 100000, "decoder": "merged", "graph": "analytic",
        "fit": {"with_offset": False, "min_x": 1.5},
        "noise": {"t_cycle_us": 2.8, "t1_eff_us": 60.0, "alpha_sq": alphas,
                  "p_meas": [0.01 + 0.02 * (a - 1.0) / 3.0 for a in alphas],
                  "p_erase": 0.05, "mid_cycle_fraction": 0.5,
                  "final_meas_error": "intrinsic"},
    }


def test_larger_code_distance_lowers_phase_error_with_derived_noise():
    out = cli.run_memory_experiment(_alpha_sweep_config())
    eps = {(pt["d"], pt["x"]): pt["phase"]["eps_per_cycle"] for pt in out.points}
    xs = sorted({x for (_, x) in eps})
    assert len(xs) == 7
    for x in xs:
        assert eps[(5, x)] < eps[(3, x)], f"d=5 not better at |a|^2={x}"
    g5 = out.gamma["5"]["gamma"]
    g3 = out.gamma["3"]["gamma"]
    assert 2.0 <= g5 <= 2.6
    assert g3 < g5
    print(f"below-threshold ordering: eps(d=5) < eps(d=3) at all 7 points, "
          f"gamma_5 = {g5:.3f} in [2.0, 2.6], gamma_3 = {g3:.3f} < gamma_5 -> PASS")


# ── 6. Ideal scaling at low phase noise ──────────────────────────────


def _pure_phase_config(d, p_z_points):
    return {
        "seed": 11, "basis": "X", "distances": [d], "cycles": [16, 32, 64],
        "shots": 1000000, "decoder": "merged", "graph": "analytic",
        "fit": {"with_offset": False, "min_x": 0.0},
        "noise": {"t_cycle_us": 2.8, "p_z": p_z_points, "p_meas": 0.0,
                  "p_erase": 0.0, "mid_cycle_fraction": 0.5,
                  "final_meas_error": 0.0},
    }


def test_ideal_distance_scaling_emerges_at_low_phase_noise():
    lines = []
    for d, p_z_points in ((3, [0.003, 0.0045, 0.007]),
                          (5, [0.006, 0.008, 0.01])):
        out = cli.run_memory_experiment(_pure_phase_config(d, p_z_points))
        got = out.gamma[str(d)]["gamma"]
        ideal = (d + 1) / 2
        assert abs(got - ideal) <= 0.15 * ideal, f"gamma_{d} = {got}"
        lines.append(f"gamma_{d} = {got:.3f} vs ideal {ideal:.1f}")
    print("ideal scaling: " + "; ".join(lines) + " (both within 15%) -> PASS")


# ── 7. Erasure-aware decoding benefit ────────────────────────────────


def test_erasure_aware_decoding_beats_coin_filling():
    cfg = {
        "seed": 13, "basis": "X", "distances": [5], "cycles": [6],
        "shots": 100000, "decoder": "merged", "graph": "analytic",
        "noise": {"t_cycle_us": 2.8, "t1_eff_us": 60.0, "alpha_sq": [1.5],
                  "p_meas": [0.01 + 0.02 * 0.5 / 3.0], "p_erase": 0.05,
                  "mid_cycle_fraction": 0.5, "final_meas_error": "intrinsic"},
    }
    eps = {}
    for mode in ("none", "naive", "merged"):
        out = cli.run_memory_experiment(cfg, decoder_mode=mode)
        eps[mode] = out.points[0]["phase"]["eps_per_cycle"]
    reduction = (eps["none"] - eps["merged"]) / eps["none"]
    assert reduction >= 0.10
    assert eps["merged"] <= eps["naive"]
    print(f"erasure benefit: eps none/naive/merged = {eps['none']:.4e} / "
          f"{eps['naive']:.4e} / {eps['merged']:.4e}; merged reduces the "
          f"coin-fill rate by {100 * reduction:.1f}% (>= 10%) -> PASS")


# ── 8. Conditioned time-edge estimation ──────────────────────────────


def test_no_erasure_conditioning_reduces_time_edge_probabilities():
    model = RepCodeNoiseModel(d=5, p_z=0.05, p_meas=0.01, p_erase=0.05,
                              t_cycle=2.8e-6)
    batch = sampler.sample_batch(model, 8, "X", 100000, 17)
    filled = sampler.ShotBatch(
        records=[sampler.fill_erasures(r, 17) for r in batch.records],
        model=model, basis="X", cycles=8, seed=17)
    g_filled = graph.correlation_weights(filled, fraction=1.0)
    g_cond = graph.no_erasure_baseline(batch, fraction=1.0)
    p_filled = {(e.u, e.v): e.p for e in g_filled.edges if e.kind == "TIME"}
    p_cond = {(e.u, e.v): e.p for e in g_cond.edges if e.kind == "TIME"}
    assert set(p_filled) == set(p_cond) and p_filled
    mean_filled = np.mean([p_filled[k] for k in p_filled])
    mean_cond = np.mean([p_cond[k] for k in p_filled])
    ratio = mean_filled / mean_cond
    assert ratio >= 1.8
    print(f"conditioned estimation: mean time-edge p {mean_filled:.4f} -> "
          f"{mean_cond:.4f} ({ratio:.2f}x reduction, >= 1.8x) -> PASS")


# ── 9. Error-budget consistency ──────────────────────────────────────


def test_budget_attribution_sums_to_total_error():
    # Quadratic models (any cross terms, zero offset) sum exactly.
    rng = np.random.default_rng(9)
    b = rng.uniform(0.1, 1.0, size=4)
    q = rng.uniform(-0.5, 0.5, size=(4, 4))
    q = 0.5 * (q + q.T)

    def eps_quadratic(x):
        return float(b @ x + x @ q @ x)

    a = np.array([1e-3, 5e-4, 0.07, 0.015])
    synthetic = analysis.error_budget(eps_quadratic, a)
    assert synthetic.total == pytest.approx(eps_quadratic(a), rel=1e-12)

    # Full simulated memory at distance 5: the sum stays within 10%.
    cfg = {"seed": 19, "budget": {
        "d": 5, "cycles": 8, "shots": 200000, "t_cycle_us": 2.8,
        "step_fraction": 0.4, "decoder": "none",
        "nominal": {"idle_bitflip": 2e-4, "cx_bitflip": 5e-4, "p_z": 0.07,
                    "p_meas": 0.015, "p_erase": 0.05}}}
    out = cli.run_budget(cfg)
    assert 0.90 <= out["total_over_nominal"] <= 1.10
    items = ", ".join(f"{i['label']} {i['contribution']:.2e}" for i in out["items"])
    print(f"budget: quadratic sum exact; simulated total/nominal = "
          f"{out['total_over_nominal']:.4f} in [0.9, 1.1] ({items}) -> PASS")


# ── 10. CX dispersive-mismatch tolerance ─────────────────────────────


def test_cx_bitflip_probability_tolerates_dispersive_mismatch():
    chi = 2.0 * math.pi / 800e-9
    space = lindblad.FockSpace(22)

    def p_flip(mismatch):
        model = lindblad.CxModel(
            chi_ge=(1.0 + mismatch) * chi, chi_gf=chi, gate_time=800e-9,
            ancilla_decay_fe=8e4, ancilla_decay_eg=4e4, prep_error_e=0.01,
            alpha_sq=3.0, kappa2=2.0 * math.pi * 5e4, dissipation_time=16e-6)
        return lindblad.cx2_bitflip_probability(model, space)

    plateau = [p_flip(m) for m in (-0.1, -0.05, 0.0, 0.05, 0.1)]
    spread = max(plateau) / min(plateau)
    assert spread < 2.0
    growth = p_flip(0.3) / p_flip(0.0)
    assert growth > 5.0
    print(f"CX mismatch tolerance: plateau spread {spread:.2f}x (< 2x) over "
          f"+-10%, growth {growth:.1f}x (> 5x) at 30% -> PASS")
