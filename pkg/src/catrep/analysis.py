"""Statistics and fitting for memory-experiment data.

Logical flip fractions are summarized with a Beta posterior (uniform
prior), converted to logical-observable autocorrelations via
⟨Ô_L(0)Ô_L(t)⟩ = 1 − 2μ, and fitted with weighted nonlinear least
squares to exponentials (with an optional constant offset, used for
X-basis data only).  Scaling exponents come from weighted log-log
linear fits, and error budgets from central finite-difference
derivatives of a supplied ε_L(x) evaluated at half the nominal noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit


class FitError(RuntimeError):
    """A fit failed to converge or had too few usable points."""


class BudgetNoiseError(RuntimeError):
    """Finite-difference signal not resolvable above Monte Carlo noise."""


# ── Beta-posterior estimates ─────────────────────────────────────────────


@dataclass(frozen=True)
class BetaPosterior:
    """Beta(a, b) posterior for a flip probability with uniform prior.

    For N shots with sample mean μ₀ the posterior is
    β(1 + Nμ₀, 1 + N − Nμ₀).
    """

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("shape parameters must be positive")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def std(self) -> float:
        n = self.a + self.b
        return math.sqrt(self.a * self.b / (n * n * (n + 1.0)))


def beta_posterior(n: int, mu0: float) -> BetaPosterior:
    """Posterior for a flip fraction from n shots with sample mean mu0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= mu0 <= 1.0:
        raise ValueError("mu0 must lie in [0, 1]")
    k = n * mu0
    if abs(k - round(k)) > 1e-6:
        raise ValueError(f"n*mu0 = {k} is not an integral count")
    return BetaPosterior(a=1.0 + k, b=1.0 + n - k)


def observable_estimate(posterior: BetaPosterior) -> tuple[float, float]:
    """Logical-observable autocorrelation estimate from a flip posterior.

    ⟨Ô_L(0)Ô_L(t)⟩ = 1 − 2μ with standard deviation 2σ_μ.
    """
    return 1.0 - 2.0 * posterior.mean, 2.0 * posterior.std


# ── Decay fits ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DecayFit:
    """Fitted exponential decay A e^{−t/T} + B.

    The offset B is identically 0 when fitted without one (the Z-basis
    convention; X-basis fits may allow it).  ``cov`` is the parameter
    covariance in the order (A, T) or (A, T, B).
    """

    amplitude: float
    decay_time: float
    offset: float
    cov: np.ndarray

    def __post_init__(self):
        if self.decay_time <= 0:
            raise FitError(f"fitted decay time must be positive, got {self.decay_time}")

    @property
    def decay_time_std(self) -> float:
        return float(np.sqrt(self.cov[1, 1]))


def _initial_guess(t, y, with_offset):
    """Log-linear starting point; offset seeded from the tail of the data."""
    if with_offset:
        n_tail = max(1, int(math.ceil(0.1 * len(y))))
        b0 = float(np.mean(y[np.argsort(t)][-n_tail:]))
        # keep the offset guess strictly below the data so the log is defined
        b0 = min(b0, np.min(y) - 1e-12) if b0 >= np.min(y) else b0
    else:
        b0 = 0.0
    resid = np.clip(y - b0, 1e-12, None)
    slope, intercept = np.polyfit(t, np.log(resid), 1)
    T0 = -1.0 / slope if slope < 0 else max(np.max(t), 1.0) * 10.0
    A0 = math.exp(intercept)
    return A0, T0, b0


def fit_exponential(points, with_offset: bool = False) -> DecayFit:
    """Weighted nonlinear least-squares fit of A e^{−t/T} (+ B).

    ``points`` is a sequence of (t, value, sigma); each point is weighed
    by the inverse of its standard deviation.  Needs at least 3 points
    (4 with the offset enabled).  The decay time is reported with its
    covariance; scaling all t by c scales T by c exactly.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be (t, value, sigma) triples")
    n_min = 4 if with_offset else 3
    if pts.shape[0] < n_min:
        raise FitError(f"need at least {n_min} points, got {pts.shape[0]}")
    t, y, sigma = pts[:, 0], pts[:, 1], pts[:, 2]
    if np.any(sigma <= 0):
        raise ValueError("sigmas must be positive")
    A0, T0, B0 = _initial_guess(t, y, with_offset)

    try:
        if with_offset:
            def model(t, A, T, B):
                return A * np.exp(-t / T) + B

            popt, pcov = curve_fit(
                model, t, y, p0=(A0, T0, B0), sigma=sigma, absolute_sigma=True,
                bounds=([-np.inf, 1e-300, -np.inf], [np.inf, np.inf, np.inf]),
                maxfev=20000,
            )
            A, T, B = popt
        else:
            def model(t, A, T):
                return A * np.exp(-t / T)

            popt, pcov = curve_fit(
                model, t, y, p0=(A0, T0), sigma=sigma, absolute_sigma=True,
                bounds=([-np.inf, 1e-300], [np.inf, np.inf]), maxfev=20000,
            )
            A, T = popt
            B = 0.0
    except RuntimeError as exc:
        resid = "unavailable"
        raise FitError(f"exponential fit did not converge ({exc}); residuals {resid}") from exc

    return DecayFit(amplitude=float(A), decay_time=float(T), offset=float(B), cov=pcov)


def fit_power_law(points, min_alpha_sq: float = 1.5) -> tuple[float, float]:
    """Scaling exponent γ of ε ∝ (|α|²)^γ from a weighted log-log fit.

    ``points`` holds (alpha_sq, eps) or (alpha_sq, eps, sigma) rows; only
    rows with alpha_sq >= min_alpha_sq enter the fit (the power law only
    holds once the code is clearly below threshold).  Returns (γ, σ_γ).
    The overall scale of ε is absorbed by the intercept, leaving γ
    invariant.  When sigmas are supplied σ_γ propagates them directly;
    without sigmas it is the ordinary least-squares standard error
    estimated from the fit residuals.
    """
    rows = [tuple(map(float, r)) for r in points]
    use = [r for r in rows if r[0] >= min_alpha_sq]
    if len(use) < 3:
        raise FitError(f"need >= 3 points with alpha_sq >= {min_alpha_sq}, got {len(use)}")
    x = np.log([r[0] for r in use])
    y = np.log([r[1] for r in use])
    if any(len(r) > 2 for r in use):
        # σ_ln ε = σ_ε / ε; fall back to unit weight where σ is absent
        w = np.array([r[1] / r[2] if len(r) > 2 and r[2] > 0 else 1.0 for r in use])
        (gamma, _), cov = np.polyfit(x, y, 1, w=w, cov="unscaled")
        var = cov[0, 0]
    else:
        (gamma, icept), cov = np.polyfit(x, y, 1, cov="unscaled")
        resid = y - (gamma * x + icept)
        var = cov[0, 0] * float(resid @ resid) / (len(use) - 2)
    return float(gamma), float(np.sqrt(var))


# ── Error budgets ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Budget:
    """Per-mechanism attribution of the logical error rate.

    items holds (label, contribution) pairs with contribution
    a_i ∂ε_L/∂x_i evaluated at x = a/2; nominal_eps is ε_L(a).  For a
    quadratic ε_L with ε_L(0) = 0 the contributions sum exactly to the
    nominal value; in general the identity holds approximately.
    """

    items: tuple
    nominal_eps: float

    @property
    def total(self) -> float:
        return float(sum(c for _, c in self.items))


def error_budget(
    eps_fn,
    nominal,
    labels=None,
    step_fraction: float = 0.25,
    eps_fn_std: float | None = None,
) -> Budget:
    """Central-finite-difference error budget of eps_fn around a/2.

    Each mechanism i contributes a_i ∂ε_L/∂x_i with the derivative taken
    at the half-noise point x = a/2 using a symmetric step of
    step_fraction·a_i.  When ``eps_fn_std`` declares the standard error of
    a (stochastic) eps_fn — a scalar, or one value per mechanism with
    zeros marking axes whose differences are analytically exact — every
    central difference must clear 5·√2 times its noise floor, otherwise
    the attribution would be fit to noise and a BudgetNoiseError is
    raised.  Contributions are independent of mechanism ordering.
    """
    a = np.asarray(nominal, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("nominal must be a nonempty 1-D vector")
    if labels is None:
        labels = [f"mechanism_{i}" for i in range(a.size)]
    if len(labels) != a.size:
        raise ValueError("labels must match the nominal vector length")
    if not 0 < step_fraction <= 0.5:
        raise ValueError("step_fraction must lie in (0, 0.5]")
    if eps_fn_std is None:
        stds = None
    else:
        stds = np.broadcast_to(np.asarray(eps_fn_std, dtype=float), a.shape)
        if np.any(stds < 0.0):
            raise ValueError("eps_fn_std must be nonnegative")

    nominal_eps = float(eps_fn(a))
    half = a / 2.0
    items = []
    for i, label in enumerate(labels):
        h = step_fraction * a[i]
        if h == 0.0:
            items.append((label, 0.0))
            continue
        up = half.copy()
        dn = half.copy()
        up[i] += h
        dn[i] -= h
        f_up = float(eps_fn(up))
        f_dn = float(eps_fn(dn))
        diff = f_up - f_dn
        if stds is not None and abs(diff) < 5.0 * math.sqrt(2.0) * stds[i]:
            raise BudgetNoiseError(
                f"central difference for {label!r} ({diff:.3g}) is below "
                f"5*sqrt(2) x the declared standard error ({stds[i]:.3g}); "
                "increase the step or the sample size"
            )
        items.append((label, a[i] * diff / (2.0 * h)))
    return Budget(items=tuple(items), nominal_eps=nominal_eps)
