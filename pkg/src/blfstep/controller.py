"""Backstepping cascade with barrier envelopes and gain search.

Level by level the cascade forms the error coordinate z_i = x_i - v_{i-1}
(v_0 is the reference), its barrier factor Q_i, the uncertainty estimate
eps_hat_i, and a stabilizing function alpha_i; the virtual control for
the next level is v_i = N(zeta_i) * alpha_i where N is the gain-search
function, and zeta_i integrates Q_i * alpha_i. The last level emits the
actual input u and the weight update for the approximator.

Error envelopes. Each state bound Psi_i(t) is split between the error
coordinate and the virtual control feeding it: a reserve A_{i-1} for
|v_{i-1}| is subtracted from the envelope and z_i must stay inside what
remains. The reserve is released exponentially,

    psi_i(t) = Psi_i(t) - A_{i-1} * exp(-r_i * t),
    r_i = |dPsi_i/dt(0)| / (Psi_i(0) - A_{i-1}),

so psi_i(0) = Psi_i(0) - A_{i-1} exactly, and for a constant bound
(r_i = 0) the subtraction holds verbatim for all time. For a shrinking
bound a fixed subtraction would go nonpositive as soon as Psi_i dips
below A_{i-1}, leaving the barrier undefined mid-run even for perfectly
behaved trajectories; releasing the reserve at the envelope's own
initial contraction rate keeps the error tube positive whenever the
initial split is feasible (A_{i-1} < Psi_i(0)). Positivity is still
re-checked every step through the barrier evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approximator import RbfNetwork
from .barrier import BarrierViolation, blf_value, damped_inverse, nussbaum, q_value
from .observer import estimate
from .signals import TimeSignal


class DiagnosticUnavailable(RuntimeError):
    """A diagnostic formula's precondition does not hold."""


class ControllerError(ValueError):
    """Controller configuration is invalid."""


@dataclass(frozen=True)
class GainConfig:
    """Per-level feedback gains k, weight-update rate lam, leakage eta,
    and the regularizer delta for the reciprocal barrier term."""

    k: tuple
    lam: float
    eta: float
    delta: float = 1e-4

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        for i, v in enumerate(self.k):
            if not v > 0:
                raise ControllerError(f"gain k[{i + 1}] must be > 0, got {v}")
        if not self.lam > 0:
            raise ControllerError(f"lambda must be > 0, got {self.lam}")
        if not self.eta > 0:
            raise ControllerError(f"eta must be > 0, got {self.eta}")
        if not self.delta > 0:
            raise ControllerError(f"delta must be > 0, got {self.delta}")


class ConstraintConfig:
    """State bounds Psi_i(t) plus the per-level reserves A_{i-1} for the
    virtual controls, from which the error envelopes psi_i(t) follow."""

    def __init__(self, state_bounds, virtual_bounds):
        self.state_bounds = tuple(state_bounds)
        self.virtual_bounds = tuple(float(a) for a in virtual_bounds)
        if len(self.state_bounds) != len(self.virtual_bounds):
            raise ControllerError(
                f"need one virtual-control bound per level: got {len(self.virtual_bounds)} "
                f"for {len(self.state_bounds)} state bounds"
            )
        rates = []
        for i, (bound, reserve) in enumerate(zip(self.state_bounds, self.virtual_bounds)):
            psi0 = bound.value(0.0)
            if reserve < 0:
                raise ControllerError(f"A[{i}] must be >= 0, got {reserve}")
            if not psi0 > reserve:
                raise ControllerError(
                    f"infeasible envelope split at level {i + 1}: Psi({i + 1})(0) = {psi0:g} "
                    f"does not exceed A[{i}] = {reserve:g}"
                )
            rates.append(abs(bound.derivative(0.0)) / (psi0 - reserve))
        self._release_rates = tuple(rates)

    @property
    def n(self) -> int:
        return len(self.state_bounds)

    def state_bound(self, i: int, t: float) -> float:
        """Psi_i(t) for level i (0-based)."""
        return self.state_bounds[i].value(t)

    def envelope(self, i: int, t: float) -> float:
        """Error envelope psi_i(t) for level i (0-based)."""
        reserve = self.virtual_bounds[i]
        if reserve == 0.0:
            return self.state_bounds[i].value(t)
        return self.state_bounds[i].value(t) - reserve * math.exp(-self._release_rates[i] * t)

    def envelope_rate(self, i: int, t: float) -> float:
        """d/dt of the error envelope (analytic)."""
        reserve = self.virtual_bounds[i]
        rate = self.state_bounds[i].derivative(t)
        if reserve == 0.0:
            return rate
        r = self._release_rates[i]
        return rate + r * reserve * math.exp(-r * t)


@dataclass(eq=False)
class StepRecord:
    """Controller internals at one instant (all arrays are per level)."""

    z: np.ndarray
    q: np.ndarray
    eps_hat: np.ndarray
    alpha: np.ndarray
    v: np.ndarray
    u: float
    zeta_rate: np.ndarray
    theta_rate: np.ndarray
    barrier_energy: float


class BacksteppingCascade:
    """Pure map from (t, x, dhat, zeta, theta) to the controller outputs.

    Everything is evaluated at the same instant, left to right: the
    virtual control of level i feeds the error coordinate of level i+1
    with no time lag.
    """

    def __init__(self, reference: TimeSignal, constraints: ConstraintConfig,
                 gains: GainConfig, observer_gains, rbf: RbfNetwork):
        self.reference = reference
        self.constraints = constraints
        self.gains = gains
        self.observer_gains = tuple(float(g) for g in observer_gains)
        self.rbf = rbf
        self.n = constraints.n
        if len(gains.k) != self.n:
            raise ControllerError(f"need {self.n} feedback gains, got {len(gains.k)}")
        if len(self.observer_gains) != self.n:
            raise ControllerError(f"need {self.n} observer gains, got {len(self.observer_gains)}")
        for i, g in enumerate(self.observer_gains):
            if not g > 0:
                raise ControllerError(f"observer gain k_eps[{i + 1}] must be > 0, got {g}")
        if rbf.n != self.n:
            raise ControllerError(f"approximator input dimension {rbf.n} does not match order {self.n}")
        # Constants of the final level, hoisted out of the hot loop.
        self._kn4_over_8 = self.observer_gains[-1] ** 4 / 8.0
        self._kn_sq = self.observer_gains[-1] ** 2

    def initial_errors(self, x0) -> np.ndarray:
        """Error coordinates at t = 0 for a run started at rest.

        The gain-search states start at zero, so every virtual control is
        exactly zero at t = 0 regardless of alpha; only the reference
        enters the first level.
        """
        x0 = np.asarray(x0, dtype=float)
        z0 = x0.copy()
        z0[0] = x0[0] - self.reference.value(0.0)
        return z0

    def _eval(self, t: float, x, dhat, zeta, theta):
        """Cascade pass; returns (z, q, eps_hat, alpha, v, u, zeta_rate,
        theta_rate, nn_out)."""
        n = self.n
        k = self.gains.k
        kobs = self.observer_gains
        phi = self.rbf.basis(x)
        z = np.empty(n)
        q = np.empty(n)
        eps_hat = np.empty(n)
        alpha = np.empty(n)
        zeta_rate = np.empty(n)
        v = np.empty(n - 1)
        v_prev = self.reference.value(t)
        u = 0.0
        nn_out = 0.0
        for i in range(n):
            zi = x[i] - v_prev
            psi = self.constraints.envelope(i, t)
            if not (abs(zi) < psi):
                raise BarrierViolation(zi, psi, level=i + 1, t=t)
            qi = q_value(zi, psi)
            ei = estimate(dhat[i], kobs[i], zi)
            wall_rate = (zi / psi) * self.constraints.envelope_rate(i, t)
            if i < n - 1:
                ai = k[i] * zi + ei + qi - wall_rate
                v_prev = nussbaum(zeta[i]) * ai
                v[i] = v_prev
            else:
                nn_out = float(theta @ phi)
                ai = (k[i] * zi + ei + 0.5 * qi - wall_rate + nn_out
                      + damped_inverse(qi, self.gains.delta) * self._kn4_over_8)
                u = nussbaum(zeta[i]) * ai
            z[i] = zi
            q[i] = qi
            eps_hat[i] = ei
            alpha[i] = ai
            zeta_rate[i] = qi * ai
        lam = self.gains.lam
        theta_rate = lam * (q[n - 1] * phi - self._kn_sq * theta - self.gains.eta * theta)
        return z, q, eps_hat, alpha, v, u, zeta_rate, theta_rate, nn_out

    def step(self, t: float, x, dhat, zeta, theta) -> StepRecord:
        """Full controller record at one instant (pure; repeat calls with
        the same inputs produce identical records)."""
        z, q, eps_hat, alpha, v, u, zeta_rate, theta_rate, _ = self._eval(t, x, dhat, zeta, theta)
        energy = 0.0
        for i in range(self.n):
            energy += blf_value(z[i], self.constraints.envelope(i, t))
        return StepRecord(z, q, eps_hat, alpha, v, u, zeta_rate, theta_rate, energy)


def lyapunov_decay_rates(gains: GainConfig, observer_gains, basis_bound: float) -> np.ndarray:
    """Guaranteed decay rate per level (diagnostic only).

    Inner levels: min(2*k_i, 2*(k_eps_i - 1)). Final level:
    min(2*k_n, 2*(k_eps_n - 1 - basis_bound^2/2), lam*eta). A
    nonpositive value means the sufficient stability condition is not
    met for that level at the given gains. Margins within 1e-9 of zero
    are reported as exactly zero: they are not certifiable, and the
    basis bound typically arrives through a square root whose round
    trip leaves that much noise.
    """
    if basis_bound < 0:
        raise ValueError(f"basis bound must be >= 0, got {basis_bound}")
    kobs = tuple(float(g) for g in observer_gains)
    n = len(gains.k)
    if len(kobs) != n:
        raise ValueError(f"need {n} observer gains, got {len(kobs)}")
    rates = np.empty(n)
    for i in range(n - 1):
        rates[i] = min(2.0 * gains.k[i], 2.0 * (kobs[i] - 1.0))
    rates[n - 1] = min(
        2.0 * gains.k[n - 1],
        2.0 * (kobs[n - 1] - 1.0 - basis_bound ** 2 / 2.0),
        gains.lam * gains.eta,
    )
    rates[np.abs(rates) <= 1e-9] = 0.0
    return rates


def tracking_error_bound(psi: float, residual_power: float, decay_rate: float,
                         tail_constant: float) -> float:
    """Asymptotic bound psi*sqrt(1 - exp(-2*residual_power/decay_rate
    - 2*tail_constant)) on the first error coordinate.

    The tail constant is not computable a priori and must be supplied by
    the caller, so this is a diagnostic formula only.
    """
    if residual_power < 0:
        raise ValueError(f"residual power must be >= 0, got {residual_power}")
    if tail_constant < 0:
        raise ValueError(f"tail constant must be >= 0, got {tail_constant}")
    if decay_rate <= 0:
        raise DiagnosticUnavailable(
            f"decay rate {decay_rate:g} is not positive; the bound formula does not apply"
        )
    return psi * math.sqrt(1.0 - math.exp(-2.0 * residual_power / decay_rate - 2.0 * tail_constant))
