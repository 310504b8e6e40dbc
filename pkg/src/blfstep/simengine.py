"""Closed-loop assembly and fixed-step integration.

The augmented state stacks the plant state x, the observer auxiliary
states dhat, the gain-search states zeta, and the approximator weights
theta into one vector of dimension 3n + l, integrated with classic
fourth-order Runge-Kutta at a fixed step. The barrier preconditions are
checked at every stage evaluation, not just at accepted steps, because a
stage state outside an envelope makes the controller math undefined.
Runs are deterministic: the same configuration produces bit-identical
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barrier import BarrierViolation
from .controller import BacksteppingCascade, ConstraintConfig, GainConfig
from .observer import dhat_rate_final, dhat_rate_inner, initial_dhat
from .approximator import RbfNetwork
from .plant import PlantSpec
from .signals import TimeSignal


class InfeasibleInitialCondition(RuntimeError):
    """An initial error coordinate already sits outside its envelope."""

    def __init__(self, level: int, z0: float, psi0: float):
        self.level = level
        self.z0 = z0
        self.psi0 = psi0
        super().__init__(
            f"initial error at level {level} is infeasible: |z({level})(0)| = {abs(z0):.6g} "
            f">= psi({level})(0) = {psi0:.6g}"
        )


class NonFiniteState(RuntimeError):
    """The integrated state left the representable range (NaN or overflow)."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"state became non-finite at t={t:.6g}")


@dataclass
class RunConfig:
    """Everything one simulation run needs."""

    plant: PlantSpec
    constraints: ConstraintConfig
    rbf: RbfNetwork
    gains: GainConfig
    observer_gains: tuple
    reference: TimeSignal
    horizon: float = 20.0
    step: float = 1e-3
    decimation: int = 10
    initial_x: tuple = ()
    output_path: str | None = None

    def __post_init__(self) -> None:
        self.observer_gains = tuple(float(g) for g in self.observer_gains)
        self.initial_x = tuple(float(v) for v in self.initial_x)
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if not isinstance(self.decimation, int) or self.decimation < 1:
            raise ValueError(f"decimation must be an integer >= 1, got {self.decimation!r}")
        if len(self.initial_x) != self.plant.n:
            raise ValueError(
                f"initial state has length {len(self.initial_x)}, expected {self.plant.n}"
            )


@dataclass
class RunMetrics:
    """Run-level summaries over every accepted step (not just recorded ones)."""

    tracking_rmse_tail: float
    max_constraint_ratio: np.ndarray
    max_error_ratio: np.ndarray
    max_abs_u: float
    final_theta_norm: float
    observed_max_abs_v: np.ndarray
    max_abs_zeta: np.ndarray
    max_abs_eps_hat: np.ndarray
    max_theta_norm: float
    # max |d eps_hat/dt| by step differencing; the smoothness bound on the
    # true lumped uncertainty is unobservable, so this is diagnostic only
    max_abs_eps_hat_rate: np.ndarray


@dataclass
class SimResult:
    """Recorded trajectory plus metrics for one completed run."""

    times: np.ndarray
    trajectory: np.ndarray
    records: list
    metrics: RunMetrics
    config: RunConfig = field(repr=False)


def rk4_step(f, t: float, y, h: float):
    """One classic fourth-order Runge-Kutta step of y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class ClosedLoop:
    """Augmented dynamics of plant + observer + gain search + weights."""

    def __init__(self, plant: PlantSpec, cascade: BacksteppingCascade):
        self.plant = plant
        self.cascade = cascade
        self.n = plant.n
        self.l = cascade.rbf.l
        self.dim = 3 * self.n + self.l

    def split(self, s: np.ndarray):
        n = self.n
        return s[:n], s[n:2 * n], s[2 * n:3 * n], s[3 * n:]

    def derivative(self, t: float, s: np.ndarray) -> np.ndarray:
        x, dhat, zeta, theta = self.split(s)
        (_, _, eps_hat, _, _, u, zeta_rate, theta_rate, nn_out) = \
            self.cascade._eval(t, x, dhat, zeta, theta)
        n = self.n
        ds = np.empty(self.dim)
        ds[:n] = self.plant.rhs(t, x, u)
        kobs = self.cascade.observer_gains
        for i in range(n - 1):
            ds[n + i] = dhat_rate_inner(kobs[i], x[i + 1], eps_hat[i])
        ds[2 * n - 1] = dhat_rate_final(kobs[n - 1], nn_out, u, eps_hat[n - 1])
        ds[2 * n:3 * n] = zeta_rate
        ds[3 * n:] = theta_rate
        return ds


def _nan_guard(exc: BarrierViolation, t: float) -> None:
    """A NaN error coordinate means the state blew up, not that a finite
    trajectory crossed its envelope; report it as such."""
    if math.isnan(exc.z) or math.isnan(exc.psi):
        raise NonFiniteState(t) from exc


def run(config: RunConfig) -> SimResult:
    """Integrate the closed loop over [0, horizon] at the fixed step.

    Raises InfeasibleInitialCondition if some |z_i(0)| >= psi_i(0),
    BarrierViolation (with level and time) if an error coordinate reaches
    its envelope at any accepted step or RK4 stage, and NonFiniteState if
    the state leaves the representable range. Never continues past a
    violation.
    """
    cascade = BacksteppingCascade(
        config.reference, config.constraints, config.gains, config.observer_gains, config.rbf
    )
    loop = ClosedLoop(config.plant, cascade)
    n, l = loop.n, loop.l
    h = config.step

    z0 = cascade.initial_errors(config.initial_x)
    for i in range(n):
        psi0 = config.constraints.envelope(i, 0.0)
        if not (abs(z0[i]) < psi0):
            raise InfeasibleInitialCondition(i + 1, z0[i], psi0)

    s = np.zeros(loop.dim)
    s[:n] = config.initial_x
    s[n:2 * n] = initial_dhat(config.observer_gains, z0)

    steps = int(round(config.horizon / h)) if config.horizon > 0 else 0
    times = []
    trajectory = []
    records = []

    max_constraint_ratio = np.zeros(n)
    max_error_ratio = np.zeros(n)
    max_abs_v = np.zeros(n - 1)
    max_abs_zeta = np.zeros(n)
    max_abs_eps_hat = np.zeros(n)
    max_eps_hat_rate = np.zeros(n)
    max_abs_u = 0.0
    max_theta_norm = 0.0
    tail_sq_sum = 0.0
    tail_count = 0
    prev_eps_hat = None

    deriv = loop.derivative
    for k in range(steps + 1):
        t = k * h
        x, dhat, zeta, theta = loop.split(s)
        try:
            rec = cascade.step(t, x, dhat, zeta, theta)
        except BarrierViolation as exc:
            _nan_guard(exc, t)
            raise

        for i in range(n):
            cr = abs(x[i]) / config.constraints.state_bound(i, t)
            if cr > max_constraint_ratio[i]:
                max_constraint_ratio[i] = cr
            er = abs(rec.z[i]) / config.constraints.envelope(i, t)
            if er > max_error_ratio[i]:
                max_error_ratio[i] = er
            if abs(zeta[i]) > max_abs_zeta[i]:
                max_abs_zeta[i] = abs(zeta[i])
            if abs(rec.eps_hat[i]) > max_abs_eps_hat[i]:
                max_abs_eps_hat[i] = abs(rec.eps_hat[i])
        for i in range(n - 1):
            if abs(rec.v[i]) > max_abs_v[i]:
                max_abs_v[i] = abs(rec.v[i])
        if abs(rec.u) > max_abs_u:
            max_abs_u = abs(rec.u)
        if prev_eps_hat is not None:
            np.maximum(max_eps_hat_rate, np.abs(rec.eps_hat - prev_eps_hat) / h,
                       out=max_eps_hat_rate)
        prev_eps_hat = rec.eps_hat
        theta_norm = float(np.linalg.norm(theta))
        if theta_norm > max_theta_norm:
            max_theta_norm = theta_norm
        if 2 * k >= steps:
            tail_sq_sum += rec.z[0] ** 2
            tail_count += 1

        if k % config.decimation == 0 or k == steps:
            times.append(t)
            trajectory.append(s.copy())
            records.append(rec)

        if k == steps:
            break
        try:
            s_next = rk4_step(deriv, t, s, h)
        except BarrierViolation as exc:
            _nan_guard(exc, exc.t if exc.t is not None else t)
            raise
        if not np.isfinite(s_next).all():
            raise NonFiniteState((k + 1) * h)
        s = s_next

    metrics = RunMetrics(
        tracking_rmse_tail=math.sqrt(tail_sq_sum / tail_count),
        max_constraint_ratio=max_constraint_ratio,
        max_error_ratio=max_error_ratio,
        max_abs_u=max_abs_u,
        final_theta_norm=float(np.linalg.norm(loop.split(s)[3])),
        observed_max_abs_v=max_abs_v,
        max_abs_zeta=max_abs_zeta,
        max_abs_eps_hat=max_abs_eps_hat,
        max_theta_norm=max_theta_norm,
        max_abs_eps_hat_rate=max_eps_hat_rate,
    )
    return SimResult(
        times=np.asarray(times),
        trajectory=np.asarray(trajectory),
        records=records,
        metrics=metrics,
        config=config,
    )
