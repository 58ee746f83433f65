"""Truncated-Fock-space Lindblad engine for cat-qubit noise models.

Dense master-equation integration for one storage mode (optionally
tensored with a three-level ancilla) under two-photon stabilization
D[â² − α²], single-photon loss, dispersive CX interactions and ancilla
decay.  The buffer mode is adiabatically eliminated throughout: at zero
buffer detuning the effective two-photon rate is 4g₂²/κ_b, and a
detuning Δ_b leaves behind a Kerr-like Hamiltonian on the stabilized
manifold.

The integrator is a fixed-step fourth-order Runge–Kutta on the full
density matrix, with the step chosen from the fastest jump rate and a
spectral bound on the Liouvillian; it is validated against a dense
matrix-exponential propagator on small spaces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

_HERM_RTOL = 1e-12
_STATE_TOL = 1e-10
_TRACE_TOL = 1e-8
_PSD_CLIP_TOL = 1e-5


class TruncationWarning(UserWarning):
    """Fock-space cutoff too small for the requested amplitude."""


class AdiabaticWarning(UserWarning):
    """Buffer detuning too large for reliable adiabatic elimination."""


class IntegratorError(RuntimeError):
    """Fixed-step integration failed its conservation checks."""


class ConvergenceError(RuntimeError):
    """State did not converge onto the cat manifold."""


@dataclass(frozen=True)
class FockSpace:
    """Truncated oscillator space with photon numbers 0..dim−1."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"Fock dimension must be at least 2, got {self.dim}")


def destroy(space: FockSpace) -> np.ndarray:
    """Annihilation operator â on the truncated space."""
    return np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1).astype(complex)


def number(space: FockSpace) -> np.ndarray:
    return np.diag(np.arange(space.dim, dtype=float)).astype(complex)


def parity(space: FockSpace) -> np.ndarray:
    """Photon-number parity operator (−1)^n̂."""
    return np.diag((-1.0) ** np.arange(space.dim)).astype(complex)


def coherent(space: FockSpace, alpha: complex) -> np.ndarray:
    """Truncated coherent state |α⟩ with analytic normalization.

    The truncated tail leaves the norm slightly below one; callers that
    need an exactly normalized vector on the truncated space should
    renormalize (cat_state does).
    """
    amps = np.empty(space.dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, space.dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps * math.exp(-abs(alpha) ** 2 / 2.0)


def cat_state(space: FockSpace, alpha: complex, sign: int) -> np.ndarray:
    """Normalized even (sign=+1) or odd (sign=−1) cat state ∝ |α⟩ ± |−α⟩."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    v = coherent(space, alpha) + sign * coherent(space, -alpha)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Generator:
    """Lindblad generator: Hamiltonian (rad/s) plus (jump, rate 1/s) pairs."""

    hamiltonian: np.ndarray
    jump_ops: tuple = ()

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        scale = max(np.linalg.norm(h), 1.0)
        if np.linalg.norm(h - h.conj().T) > _HERM_RTOL * scale:
            raise ValueError("hamiltonian is not Hermitian to 1e-12 relative")
        jumps = []
        for op, rate in self.jump_ops:
            if rate < 0:
                raise ValueError(f"jump rates must be nonnegative, got {rate}")
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise ValueError("jump operator shape differs from hamiltonian")
            jumps.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jump_ops", tuple(jumps))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def _check_truncation(space: FockSpace, alpha: complex):
    needed = 4.0 * abs(alpha) ** 2 + 10.0
    if space.dim < needed:
        warnings.warn(
            f"Fock dim {space.dim} below convergence guideline "
            f"4|α|²+10 ≈ {needed:.0f} for |α|² = {abs(alpha) ** 2:.2f}",
            TruncationWarning, stacklevel=3)


def two_photon_generator(alpha: complex, kappa2: float, space: FockSpace) -> Generator:
    """Two-photon stabilization κ₂ D[â² − α²]; |±α⟩ span its kernel."""
    _check_truncation(space, alpha)
    a = destroy(space)
    jump = a @ a - complex(alpha) ** 2 * np.eye(space.dim)
    return Generator(hamiltonian=np.zeros((space.dim, space.dim), dtype=complex),
                     jump_ops=((jump, kappa2),))


def detuned_stabilization_generator(g2: float, delta_b: float, kappa_b: float,
                                    alpha: complex, space: FockSpace) -> Generator:
    """Stabilization via a detuned buffer, adiabatically eliminated.

    The buffer at detuning Δ_b turns the ideal dissipator into a reduced
    rate κ_b·g₂²/(Δ_b² + (κ_b/2)²) plus a Kerr-like Hamiltonian
    −g₂²Δ_b/(Δ_b² + (κ_b/2)²)·(â†² − α*²)(â² − α²) that deforms the cat
    manifold and biases the dissipative map.
    """
    if kappa_b <= 0:
        raise ValueError(f"buffer linewidth must be positive, got {kappa_b}")
    if abs(delta_b) > kappa_b / 2.0:
        warnings.warn(
            f"|Δ_b| = {abs(delta_b):.3g} exceeds κ_b/2 = {kappa_b / 2.0:.3g}; "
            "adiabatic elimination is marginal", AdiabaticWarning, stacklevel=2)
    _check_truncation(space, alpha)
    a = destroy(space)
    k_op = a @ a - complex(alpha) ** 2 * np.eye(space.dim)
    denom = delta_b ** 2 + (kappa_b / 2.0) ** 2
    rate = kappa_b * g2 ** 2 / denom
    kerr = -(g2 ** 2) * delta_b / denom
    return Generator(hamiltonian=kerr * (k_op.conj().T @ k_op),
                     jump_ops=((k_op, rate),))


# ── Integration ───────────────────────────────────────────────────────


def _spectral_scale(g: Generator) -> float:
    """Upper bound on the Liouvillian spectral radius (rad/s)."""
    lam = 2.0 * np.linalg.norm(g.hamiltonian, 2)
    for op, rate in g.jump_ops:
        lam += rate * np.linalg.norm(op, 2) ** 2
    return float(lam)


def _rhs(g: Generator, rho: np.ndarray) -> np.ndarray:
    h = g.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for op, rate in g.jump_ops:
        lr = op @ rho
        opd = op.conj().T
        out += rate * (lr @ opd - 0.5 * (opd @ lr + rho @ (opd @ op)))
    return out


def _validate_state(rho: np.ndarray, dim: int):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"state shape {rho.shape} does not match generator dim {dim}")
    if np.linalg.norm(rho - rho.conj().T) > _STATE_TOL * max(np.linalg.norm(rho), 1.0):
        raise ValueError("initial state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > _STATE_TOL:
        raise ValueError("initial state is not unit trace")
    if np.linalg.eigvalsh(rho).min() < -_STATE_TOL:
        raise ValueError("initial state is not positive semidefinite")
    return rho


def evolve(rho0: np.ndarray, g: Generator, t: float, step_scale: float = 1.0) -> np.ndarray:
    """Integrate dρ/dt = −i[H,ρ] + Σ rate·D[L]ρ for time t.

    Fixed-step RK4 with step h = step_scale·min(0.02/max rate, 1/λ̂),
    where λ̂ bounds the Liouvillian spectral radius (keeping the fastest
    decaying modes inside the RK4 stability region with a 2.8× margin).
    Trace preservation is checked to 1e-8 and the result symmetrized
    after a 1e-10 Hermiticity check.
    """
    rho = _validate_state(rho0, g.dim)
    if t < 0:
        raise ValueError(f"evolution time must be nonnegative, got {t}")
    if t == 0:
        return rho.copy()
    max_rate = max((rate for _, rate in g.jump_ops), default=0.0)
    lam = _spectral_scale(g)
    bounds = [t]
    if max_rate > 0:
        bounds.append(0.02 / max_rate)
    if lam > 0:
        bounds.append(1.0 / lam)
    h = step_scale * min(bounds)
    n_steps = max(1, math.ceil(t / h))
    h = t / n_steps
    for _ in range(n_steps):
        k1 = _rhs(g, rho)
        k2 = _rhs(g, rho + 0.5 * h * k1)
        k3 = _rhs(g, rho + 0.5 * h * k2)
        k4 = _rhs(g, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    drift = abs(np.trace(rho).real - 1.0)
    if drift > _TRACE_TOL or not np.isfinite(drift):
        raise IntegratorError(
            f"trace drift {drift:.3e} exceeds {_TRACE_TOL} "
            f"(steps={n_steps}, h={h:.3e}, lambda={lam:.3e})")
    herm = np.linalg.norm(rho - rho.conj().T)
    if herm > 1e-10 * max(np.linalg.norm(rho), 1.0):
        raise IntegratorError(f"Hermiticity drift {herm:.3e} after {n_steps} steps")
    return 0.5 * (rho + rho.conj().T)


def dense_propagator(g: Generator, t: float) -> np.ndarray:
    """Exact channel e^{𝓛t} as a dim²×dim² matrix on row-major vec(ρ).

    Independent of the RK4 path (used to validate it); dense exponential
    limits it to dim ≤ 20.
    """
    dim = g.dim
    if dim > 20:
        raise ValueError("dense propagator limited to dim <= 20")
    eye = np.eye(dim)
    h = g.hamiltonian
    liou = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in g.jump_ops:
        opd_op = op.conj().T @ op
        liou += rate * (np.kron(op, op.conj())
                        - 0.5 * (np.kron(opd_op, eye) + np.kron(eye, opd_op.T)))
    return expm(liou * t)


def apply_propagator(prop: np.ndarray, rho: np.ndarray) -> np.ndarray:
    dim = rho.shape[0]
    return (prop @ rho.reshape(-1)).reshape(dim, dim)


# ── Cat-manifold projections ─────────────────────────────────────────


def lowdin_cat_populations(rho: np.ndarray, alpha: complex) -> tuple[float, float]:
    """Populations of |±α⟩ after symmetric orthogonalization.

    Löwdin orthogonalization S^{−1/2} keeps the two basis vectors on an
    equal footing, which stays well-defined at small |α|² where the
    overlap ⟨−α|α⟩ = e^{−2|α|²} is not negligible.
    """
    space = FockSpace(rho.shape[0])
    vp = coherent(space, alpha)
    vm = coherent(space, -alpha)
    basis = np.column_stack([vp, vm])
    s = basis.conj().T @ basis
    evals, evecs = np.linalg.eigh(s)
    if evals.min() <= 0:
        raise ValueError("coherent basis is numerically degenerate")
    s_inv_half = evecs @ np.diag(evals ** -0.5) @ evecs.conj().T
    ortho = basis @ s_inv_half
    pops = np.einsum("ni,nm,mi->i", ortho.conj(), rho, ortho).real
    return float(pops[0]), float(pops[1])


def stabilized_amplitude(g: Generator) -> complex:
    """α recovered from the stabilization jump operator â² − α²."""
    if not g.jump_ops:
        raise ValueError("generator has no jump operators")
    op = g.jump_ops[0][0]
    alpha_sq = -op[0, 0]
    return complex(np.sqrt(alpha_sq))


def dissipative_map(beta: complex, g: Generator, t_relax: float) -> tuple[float, float]:
    """Relax |β⟩ under the stabilizer and read out the |±α⟩ populations.

    Returns (p_plus, p_minus) in the Löwdin-orthogonalized coherent
    basis of the generator's own α.  t_relax must be long enough for the
    state to reach the cat manifold; if the two populations do not
    account for 99% of the state a ConvergenceError reports the
    residual.
    """
    space = FockSpace(g.dim)
    alpha = stabilized_amplitude(g)
    v = coherent(space, beta)
    v = v / np.linalg.norm(v)
    rho = evolve(np.outer(v, v.conj()), g, t_relax)
    p_plus, p_minus = lowdin_cat_populations(rho, alpha)
    residual = 1.0 - (p_plus + p_minus)
    if residual > 0.01:
        raise ConvergenceError(
            f"cat-manifold population {p_plus + p_minus:.4f} < 0.99 "
            f"(residual {residual:.3e}); increase t_relax or the Fock cutoff")
    return p_plus, p_minus


# ── CX bit-flip model ────────────────────────────────────────────────


@dataclass(frozen=True)
class CxModel:
    """Storage ⊗ three-level-ancilla model of the CX² bit-flip channel.

    The ancilla ladder is |g⟩,|e⟩,|f⟩; the gate is the dispersive
    rotation â†â(χ_ge|e⟩⟨e| + χ_gf|f⟩⟨f|) for gate_time (χ_gf·gate_time
    ≈ 2π for a CX²), with ancilla decay f→e and e→g during the gate and
    an imperfect initial ancilla (prep_error_e in |e⟩ instead of |f⟩).
    After the gate the storage relaxes back onto the cat manifold for
    dissipation_time under κ₂ D[â²−α²].
    """

    chi_ge: float
    chi_gf: float
    gate_time: float
    ancilla_decay_fe: float
    ancilla_decay_eg: float
    prep_error_e: float
    alpha_sq: float
    kappa2: float
    dissipation_time: float

    def __post_init__(self):
        if not 0.0 <= self.prep_error_e <= 1.0:
            raise ValueError("prep_error_e must be a probability")
        for name in ("gate_time", "dissipation_time", "kappa2", "alpha_sq"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if min(self.ancilla_decay_fe, self.ancilla_decay_eg) < 0:
            raise ValueError("decay rates must be nonnegative")


def _partial_trace_ancilla(rho: np.ndarray, dim_s: int, dim_a: int) -> np.ndarray:
    return np.einsum("iaja->ij", rho.reshape(dim_s, dim_a, dim_s, dim_a))


def _project_psd(rho: np.ndarray, tol: float = _PSD_CLIP_TOL) -> np.ndarray:
    """Project integration debris back onto the physical cone.

    Fixed-step integration of a strongly oscillatory stage leaves
    eigenvalues slightly negative (well below the integration error);
    clipping them and renormalizing is the standard positive projection.
    Anything beyond ``tol`` is not debris and raises instead.
    """
    rho = 0.5 * (rho + rho.conj().T)
    vals, vecs = np.linalg.eigh(rho)
    worst = float(vals.min())
    if worst < -tol:
        raise IntegratorError(
            f"state eigenvalue {worst:.3e} below -{tol}; reduce the step size")
    if worst >= 0.0:
        return rho
    vals = np.clip(vals, 0.0, None)
    rho = (vecs * vals) @ vecs.conj().T
    return rho / np.trace(rho).real


def cx2_bitflip_probability(m: CxModel, space: FockSpace) -> float:
    """Bit-flip probability of one CX² cycle.

    Simulates the dispersive rotation with ancilla decay, traces out the
    ancilla, relaxes the storage onto the cat manifold, and returns the
    population transferred from |α⟩ to |−α⟩.  With matched dispersive
    shifts (χ_ge = χ_gf) a single ancilla decay leaves the storage phase
    intact, so the channel is dominated by double decays f→e→g.
    """
    alpha = math.sqrt(m.alpha_sq)
    _check_truncation(space, alpha)
    dim_s, dim_a = space.dim, 3
    eye_s = np.eye(dim_s)
    n_op = np.asarray(number(space))
    proj_e = np.zeros((dim_a, dim_a), dtype=complex)
    proj_e[1, 1] = 1.0
    proj_f = np.zeros((dim_a, dim_a), dtype=complex)
    proj_f[2, 2] = 1.0
    ham = np.kron(n_op, m.chi_ge * proj_e + m.chi_gf * proj_f)
    low_fe = np.zeros((dim_a, dim_a), dtype=complex)
    low_fe[1, 2] = 1.0
    low_eg = np.zeros((dim_a, dim_a), dtype=complex)
    low_eg[0, 1] = 1.0
    gate = Generator(hamiltonian=ham,
                     jump_ops=((np.kron(eye_s, low_fe), m.ancilla_decay_fe),
                               (np.kron(eye_s, low_eg), m.ancilla_decay_eg)))

    v = coherent(space, alpha)
    v = v / np.linalg.norm(v)
    rho_s = np.outer(v, v.conj())
    rho_a = (1.0 - m.prep_error_e) * proj_f + m.prep_error_e * proj_e
    rho = np.kron(rho_s, rho_a)

    # The dispersive rotation is phase-dominated; a finer step keeps the
    # accumulated RK4 error (and hence the positive projection below)
    # well under the bit-flip probabilities being resolved.
    rho = evolve(rho, gate, m.gate_time, step_scale=0.25)
    rho_s = _project_psd(_partial_trace_ancilla(rho, dim_s, dim_a))

    relax = two_photon_generator(alpha, m.kappa2, space)
    rho_s = evolve(rho_s, relax, m.dissipation_time)
    _, p_minus = lowdin_cat_populations(rho_s, alpha)
    return float(p_minus)
