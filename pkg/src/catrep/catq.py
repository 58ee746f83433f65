"""Closed-form physics of a dissipatively stabilized cat qubit.

A cat qubit stores its computational states in the two coherent states
|±α⟩ of a bosonic mode that is held on the cat manifold by engineered
two-photon dissipation.  Single-photon loss at effective rate κ₁ drives
incoherent jumps between the even and odd cat states |±⟩ (phase flips)
at rates growing linearly with the mean photon number |α|², while bit
flips |α⟩ ↔ |−α⟩ are exponentially suppressed in |α|².

This module collects the closed forms the rest of the package uses as
analytic oracles: the asymmetric phase-flip rates, the steady-state
parity populations they imply through detailed balance, the single-shot
Z-basis readout POVM, and the conversion between fitted decay times and
error per cycle.  Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CatParams:
    """Physical knobs of one cat qubit.

    alpha_sq    -- mean photon number |α|² of the stabilized cat (> 0)
    kappa1_eff  -- effective single-photon loss rate 1/T₁,eff in 1/s (≥ 0)
    t_cycle     -- error-correction cycle time in seconds (> 0)
    """

    alpha_sq: float
    kappa1_eff: float
    t_cycle: float

    def __post_init__(self):
        if not self.alpha_sq > 0:
            raise ValueError(f"alpha_sq must be > 0, got {self.alpha_sq}")
        if self.kappa1_eff < 0:
            raise ValueError(f"kappa1_eff must be >= 0, got {self.kappa1_eff}")
        if not self.t_cycle > 0:
            raise ValueError(f"t_cycle must be > 0, got {self.t_cycle}")


@dataclass(frozen=True)
class PhaseFlipRates:
    """Asymmetric cat phase-flip rates in 1/s.

    Loss-induced jumps out of the even cat are slower than jumps out of
    the odd cat at any photon number, so
    0 ≤ gamma_plus_to_minus ≤ gamma_minus_to_plus.
    """

    gamma_plus_to_minus: float
    gamma_minus_to_plus: float

    def __post_init__(self):
        if not 0 <= self.gamma_plus_to_minus <= self.gamma_minus_to_plus:
            raise ValueError(
                "require 0 <= gamma_plus_to_minus <= gamma_minus_to_plus, got "
                f"({self.gamma_plus_to_minus}, {self.gamma_minus_to_plus})"
            )

    @property
    def total(self) -> float:
        """Parity relaxation rate γ₊₋ + γ₋₊ (decay rate of ⟨X̂⟩)."""
        return self.gamma_plus_to_minus + self.gamma_minus_to_plus


@dataclass(frozen=True)
class ZReadoutPOVM:
    """Diagonal single-shot Z-readout POVM elements.

    f0_diag / f1_diag hold the weights of |0⟩⟨0| and |1⟩⟨1| in the two
    outcome operators F̂₀ and F̂₁.  Completeness F̂₀ + F̂₁ = 1 holds by
    construction; both operators are diagonal in the computational basis
    for every input, so the readout never induces coherent errors.
    """

    f0_diag: tuple[float, float]
    f1_diag: tuple[float, float]

    def __post_init__(self):
        for a, b in zip(self.f0_diag, self.f1_diag):
            if not math.isclose(a + b, 1.0, rel_tol=0, abs_tol=1e-12):
                raise ValueError("POVM completeness violated")
            if not (-1e-12 <= a <= 1 + 1e-12 and -1e-12 <= b <= 1 + 1e-12):
                raise ValueError("POVM weights must lie in [0, 1]")

    @property
    def assignment_error(self) -> float:
        """Probability of reading 1 when |0⟩ was prepared (= F̂₁ weight on |0⟩⟨0|)."""
        return self.f1_diag[0]


def phase_flip_rates(p: CatParams) -> PhaseFlipRates:
    """Loss-induced cat phase-flip rates.

    γ₊→₋ = κ₁ |α|² tanh|α|²  and  γ₋→₊ = κ₁ |α|² coth|α|².

    The asymmetry comes from the photon-number difference of the even and
    odd cats; both rates approach κ₁|α|² from opposite sides as |α|² grows.
    coth diverges at |α|² = 0, so the Fock-qubit limit is a hard error
    rather than a clamp: callers must model that regime explicitly.
    """
    x = p.alpha_sq
    if x <= 0:
        raise ValueError("phase_flip_rates undefined at alpha_sq = 0 (coth diverges)")
    t = math.tanh(x)
    return PhaseFlipRates(
        gamma_plus_to_minus=p.kappa1_eff * x * t,
        gamma_minus_to_plus=p.kappa1_eff * x / t,
    )


def steady_state_plus_population(alpha_sq: float) -> float:
    """Steady-state population of the even cat |+⟩ under single-photon loss.

    Returns (1 + e^{−2|α|²})² / (2 (1 + e^{−4|α|²})); the complement is the
    odd-cat population.  Equal to γ₋→₊/(γ₊→₋ + γ₋→₊) by detailed balance,
    1 at |α|² = 0 and → 1/2 in the large-cat limit.
    """
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    e2 = math.exp(-2.0 * alpha_sq)
    e4 = math.exp(-4.0 * alpha_sq)
    return (1.0 + e2) ** 2 / (2.0 * (1.0 + e4))


def intrinsic_readout_error(alpha_sq: float) -> float:
    """Intrinsic Z-readout assignment error ½(1 − √(1 − e^{−4|α|²})).

    The floor set by the finite overlap of |±α⟩; vanishes exponentially
    with photon number and reaches the random-guess value 1/2 at |α|² = 0.
    """
    return 0.5 * (1.0 - math.sqrt(1.0 - math.exp(-4.0 * alpha_sq)))


def z_readout_povm(alpha_sq: float, p_ge: float = 0.0, p_eg: float = 0.0) -> ZReadoutPOVM:
    """Symmetrized single-shot Z-basis readout POVM.

    The ideal contrast √(1 − e^{−4|α|²}) is degraded by a factor
    (1 − ½(p_ge + p_eg)) when the transmon readout confuses its |g⟩/|e⟩
    outcomes with probabilities p_ge, p_eg.  Only the effective confusion
    probabilities are modeled, not the pulse-level mechanism behind them.
    """
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    if not (0 <= p_ge <= 1 and 0 <= p_eg <= 1):
        raise ValueError("confusion probabilities must lie in [0, 1]")
    contrast = math.sqrt(1.0 - math.exp(-4.0 * alpha_sq)) * (1.0 - 0.5 * (p_ge + p_eg))
    hi = 0.5 * (1.0 + contrast)
    lo = 0.5 * (1.0 - contrast)
    return ZReadoutPOVM(f0_diag=(hi, lo), f1_diag=(lo, hi))


def error_per_cycle(decay_time: float, t_cycle: float) -> float:
    """Convert a fitted decay time T to an error per cycle ε = t_cycle / (2T).

    The factor 2 reflects the convention that ⟨Ô_L(0)Ô_L(t)⟩ = e^{−t/T}
    decays at twice the per-cycle flip probability.
    """
    if decay_time <= 0:
        raise ValueError(f"decay_time must be > 0, got {decay_time}")
    return t_cycle / (2.0 * decay_time)


def decay_time_from_error(eps_per_cycle: float, t_cycle: float) -> float:
    """Inverse of :func:`error_per_cycle`: T = t_cycle / (2ε)."""
    if eps_per_cycle <= 0:
        raise ValueError(f"eps_per_cycle must be > 0, got {eps_per_cycle}")
    return t_cycle / (2.0 * eps_per_cycle)
