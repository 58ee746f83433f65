"""Monte Carlo simulation and decoding of cat-qubit repetition codes.

Modules
-------
catq      closed-form cat-qubit rates, steady states and readout errors
noise     circuit-level noise models and phenomenological bit-flip fits
lindblad  dense Lindblad integrator for stabilization and CX gate models
sampler   syndrome sampling with heralded erasures and counter-based RNG
graph     matching graphs: analytic, correlation-estimated, erasure-rewritten
decoder   exact minimum-weight perfect matching and scoring
analysis  posterior estimates, decay/power-law fits, error budgets
cli       config-driven experiment pipelines and the `catrep` command
"""

__version__ = "0.1.0"

from . import analysis, catq, decoder, graph, lindblad, noise, sampler
from .analysis import (
    BetaPosterior,
    Budget,
    DecayFit,
    beta_posterior,
    error_budget,
    fit_exponential,
    fit_power_law,
    observable_estimate,
)
from .catq import (
    CatParams,
    PhaseFlipRates,
    ZReadoutPOVM,
    error_per_cycle,
    intrinsic_readout_error,
    phase_flip_rates,
    steady_state_plus_population,
    z_readout_povm,
)
from .decoder import Matching, brute_force, correction, decode, score
from .graph import (
    Edge,
    MatchingGraph,
    analytic_graph,
    correlation_weights,
    merge_edges_for_erasure,
    naive_erasure_graph,
    no_erasure_baseline,
    p_odd,
    prob_from_weight,
    reconstruct_detectors,
    weight_from_prob,
)
from .lindblad import (
    CxModel,
    FockSpace,
    Generator,
    cat_state,
    coherent,
    cx2_bitflip_probability,
    dissipative_map,
    detuned_stabilization_generator,
    evolve,
    two_photon_generator,
)
from .noise import (
    BitFlipPhenomModel,
    RepCodeNoiseModel,
    logical_bitflip_per_cycle,
    project_overhead,
    pz_per_cycle,
)
from .sampler import (
    ShotBatch,
    SyndromeRecord,
    fill_erasures,
    read_batch,
    sample_batch,
    sample_shot,
    shot_rng,
    write_batch,
)

__all__ = [name for name in dir() if not name.startswith("_")]
