"""Composite-uncertainty observer.

Each level i carries an auxiliary state dhat_i whose role is to estimate
the lumped uncertainty eps_i acting on that level's error dynamics
(disturbance plus the derivative of the upstream virtual control; the
final level additionally absorbs the approximator error and the
(beta - 1)*u mismatch). The estimate is recovered algebraically as

    eps_hat_i = dhat_i + k_i * z_i

and the auxiliary state integrates the rates below. For a frozen plant
the estimation error then decays as exp(-k_i * t).
"""

from __future__ import annotations

import numpy as np


def estimate(dhat: float, gain: float, z: float) -> float:
    """Uncertainty estimate eps_hat = dhat + gain * z."""
    return dhat + gain * z


def dhat_rate_inner(gain: float, x_next: float, eps_hat: float) -> float:
    """Auxiliary-state rate -gain*(x_next + eps_hat) for levels below the last."""
    return -gain * (x_next + eps_hat)


def dhat_rate_final(gain: float, nn_out: float, u: float, eps_hat: float) -> float:
    """Auxiliary-state rate -gain*(nn_out + u + eps_hat) for the last level."""
    return -gain * (nn_out + u + eps_hat)


def initial_dhat(gains, z0) -> np.ndarray:
    """Start from eps_hat(0) = 0: dhat_i(0) = -gain_i * z_i(0).

    There is no prior knowledge of the lumped uncertainty, so the
    estimate starts at zero rather than at an arbitrary value.
    """
    gains = np.asarray(gains, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    return -gains * z0


def gain_warnings(gains, basis_bound: float) -> list:
    """Check the sufficient conditions for a positive decay margin.

    Inner levels need gain > 1; the final level needs
    gain > 1 + basis_bound^2 / 2. These conditions are sufficient, not
    necessary, so failures are reported as warnings rather than errors.
    """
    gains = np.asarray(gains, dtype=float)
    warnings = []
    n = len(gains)
    # 1e-9 slack: a margin indistinguishable from zero is not certifiable
    for i, g in enumerate(gains[:-1]):
        if g <= 1.0 + 1e-9:
            warnings.append(
                f"observer gain k_eps[{i + 1}] = {g:g} does not exceed 1; "
                "the decay margin for that level is not positive"
            )
    need = 1.0 + basis_bound ** 2 / 2.0
    if gains[-1] <= need + 1e-9:
        warnings.append(
            f"observer gain k_eps[{n}] = {gains[-1]:g} does not exceed "
            f"1 + basis_bound^2/2 = {need:g}; the final-level decay margin "
            "is not positive under the conservative basis bound"
        )
    return warnings
