"""Noise models for the repetition-code memory simulation.

Two layers live here.  ``RepCodeNoiseModel`` is the simplified
circuit-level model driving the Monte Carlo sampler: independent
per-data-qubit phase flips each cycle (with a configurable fraction
landing between the two CX layers, which is what produces diagonal
detector correlations), and a per-ancilla categorical syndrome outcome
{correct, flipped, erased}.  ``BitFlipPhenomModel`` is the
phenomenological logical bit-flip model — exponentially suppressed
idle contributions A e^{−B|α|²} plus additive per-CX terms — together
with the coherence-limited overhead projection.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import catq


def _as_prob_array(value, n, name, upper=0.5):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if np.any(arr < 0) or np.any(arr > upper):
        raise ValueError(f"{name} entries must lie in [0, {upper}], got {arr}")
    return arr


@dataclass(frozen=True)
class RepCodeNoiseModel:
    """Simplified circuit-level noise model for one repetition-code memory.

    d                  -- code distance (number of data cats); d = 2 is
                          allowed for calibration codes
    p_z                -- per-data-qubit phase-flip probability per cycle
    mid_cycle_fraction -- fraction of each p_z injected between the two CX
                          layers of a cycle (default 0.5); the remainder is
                          injected at the end of the cycle
    p_meas             -- per-ancilla probability of a flipped syndrome
    p_erase            -- per-ancilla probability of an erased syndrome
                          (heralded ancilla decay); mutually exclusive with
                          a flip, sampled as one categorical draw
    t_cycle            -- cycle time in seconds
    final_meas_error   -- per-data-qubit error probability of the final
                          transversal measurement (0 unless configured)
    p_bitflip          -- per-data-qubit bit-flip probability per cycle for
                          Z-basis runs; disabled (0) by default, in which
                          case the recorded Z truth is exactly the final
                          measurement noise
    """

    d: int
    p_z: np.ndarray
    p_meas: np.ndarray
    p_erase: np.ndarray
    t_cycle: float
    mid_cycle_fraction: float = 0.5
    final_meas_error: np.ndarray = None
    p_bitflip: float = 0.0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        object.__setattr__(self, "p_z", _as_prob_array(self.p_z, self.d, "p_z"))
        object.__setattr__(self, "p_meas", _as_prob_array(self.p_meas, self.d - 1, "p_meas", upper=1.0))
        object.__setattr__(self, "p_erase", _as_prob_array(self.p_erase, self.d - 1, "p_erase", upper=1.0))
        fin = 0.0 if self.final_meas_error is None else self.final_meas_error
        object.__setattr__(self, "final_meas_error", _as_prob_array(fin, self.d, "final_meas_error", upper=1.0))
        if not 0.0 <= self.mid_cycle_fraction <= 1.0:
            raise ValueError("mid_cycle_fraction must lie in [0, 1]")
        if not 0.0 <= self.p_bitflip <= 0.5:
            raise ValueError("p_bitflip must lie in [0, 0.5]")
        if not self.t_cycle > 0:
            raise ValueError("t_cycle must be > 0")
        if np.any(self.p_meas + self.p_erase > 1.0 + 1e-12):
            raise ValueError("p_meas + p_erase must be <= 1 per ancilla")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "p_z": self.p_z.tolist(),
            "p_meas": self.p_meas.tolist(),
            "p_erase": self.p_erase.tolist(),
            "t_cycle": self.t_cycle,
            "mid_cycle_fraction": self.mid_cycle_fraction,
            "final_meas_error": self.final_meas_error.tolist(),
            "p_bitflip": self.p_bitflip,
        }

    def content_hash(self) -> str:
        """Stable hash of the model parameters, embedded in output files."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def pz_per_cycle(kappa1_eff: float, alpha_sq: float, t_cycle: float) -> float:
    """Phase-flip probability per cycle p_Z = κ₁ |α|² t_cycle.

    Raises if the linear-rate conversion leaves the probability regime
    (> 0.5), since the downstream model treats p_Z as a Bernoulli weight.
    """
    if kappa1_eff < 0 or alpha_sq < 0 or t_cycle < 0:
        raise ValueError("inputs must be nonnegative")
    p = kappa1_eff * alpha_sq * t_cycle
    if p > 0.5:
        raise ValueError(f"p_z = {p:.4g} exceeds 0.5; rates too large for the Bernoulli model")
    return p


@dataclass(frozen=True)
class BitFlipPhenomModel:
    """Phenomenological logical bit-flip model.

    Idle cats contribute A_i e^{−B_i |α|²} per cycle, and each CX gate
    adds a constant p_cx (one value for the ancilla-|g⟩ branch, one for
    the |f⟩ branch, averaged since the ancilla spends half a cycle in
    each).  Ancilla phase flips do not propagate through the CX gates and
    are deliberately absent.
    """

    A: np.ndarray
    B: np.ndarray
    p_cx_g: np.ndarray
    p_cx_f: np.ndarray

    def __post_init__(self):
        A = np.atleast_1d(np.asarray(self.A, dtype=float))
        B = np.atleast_1d(np.asarray(self.B, dtype=float))
        g = np.atleast_1d(np.asarray(self.p_cx_g, dtype=float))
        f = np.atleast_1d(np.asarray(self.p_cx_f, dtype=float))
        if A.shape != B.shape:
            raise ValueError("A and B must have matching shapes")
        if g.shape != f.shape:
            raise ValueError("p_cx_g and p_cx_f must have matching shapes")
        if np.any(A < 0) or np.any(B < 0) or np.any(g < 0) or np.any(f < 0):
            raise ValueError("phenomenological parameters must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "p_cx_g", g)
        object.__setattr__(self, "p_cx_f", f)


def idle_bitflip(A: float, B: float, alpha_sq: float) -> float:
    """Idle bit-flip probability per cycle, A e^{−B |α|²}."""
    if A < 0 or B < 0:
        raise ValueError("A and B must be nonnegative")
    return A * math.exp(-B * alpha_sq)


def fit_cx_phenom(cx2_probs, idle, fit_range_min: float = 3.0) -> float:
    """Extract the additive per-CX bit-flip probability from CX² data.

    The CX² experiment measures p^(CX²) = p_idle + 2 p_cx per cycle; with
    the idle parameters (A, B) known, the least-squares constant p_cx over
    the points with alpha_sq >= fit_range_min is half the mean excess.
    The fit is restricted to relatively large photon numbers (default
    |α|² ≥ 3) where the idle contribution no longer dominates.
    """
    A, B = idle
    pts = [(a, p) for a, p in cx2_probs if a >= fit_range_min]
    if len(pts) < 2:
        raise ValueError(
            f"need at least 2 points with alpha_sq >= {fit_range_min}, got {len(pts)}"
        )
    excess = [p - idle_bitflip(A, B, a) for a, p in pts]
    return float(np.mean(excess)) / 2.0


def logical_bitflip_per_cycle(m: BitFlipPhenomModel, alpha_sq: float) -> float:
    """Total logical bit-flip probability per cycle.

    Sum of all idle contributions plus the CX contributions averaged over
    the two ancilla branches: Σ_i A_i e^{−B_i|α|²} + Σ_j ½(p_cx_g + p_cx_f).
    Additive by construction: disjoint sub-models sum.
    """
    idle = float(np.sum(m.A * np.exp(-m.B * alpha_sq)))
    cx = float(np.sum(0.5 * (m.p_cx_g + m.p_cx_f)))
    return idle + cx


def project_overhead(
    d: int,
    t_cycle: float,
    T1: float,
    alpha_sq: float,
    T_Z: float,
    A_fit: float = 0.1,
    p_th: float = 0.1,
):
    """Coherence-limited logical-error projection for a distance-d memory.

    Phase flips: ε_phase = A (p_Z/p_th)^{(d+1)/2} with p_Z = |α|² t_cycle/T₁,
    the standard below-threshold ansatz with threshold error per cycle
    p_th ≈ 0.1 and prefactor A ≈ 0.1.  Bit flips: ε_bit = d t_cycle/(2 T_Z)
    for a physical bit-flip time T_Z.  Returns (ε_phase, ε_bit, ε_total)
    with ε_total = (ε_phase + ε_bit)/2.
    """
    if d < 1 or T1 <= 0 or T_Z <= 0:
        raise ValueError("d, T1 and T_Z must be positive")
    p_Z = pz_per_cycle(1.0 / T1, alpha_sq, t_cycle)
    eps_phase = A_fit * (p_Z / p_th) ** ((d + 1) / 2)
    eps_bit = d * t_cycle / (2.0 * T_Z)
    return eps_phase, eps_bit, 0.5 * (eps_phase + eps_bit)
