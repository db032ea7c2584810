"""CCC acceleration laws, the time-headway barrier pair, and the safety filter.

The filter is the pointwise-minimal modification of a nominal command: with a
single scalar input and a strictly negative input direction of the extended
barrier, the quadratic program collapses to ``min(u_nominal, k_s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .models import CavParams, CavState, CbfParams, XI_LAG_FREE, range_policy, speed_policy


@dataclass(frozen=True)
class ControlSnapshot:
    """Everything the CCC laws read at one instant: own gap/speed plus the
    broadcast speeds (and, for acceleration feedback, accelerations) of the
    linked vehicles, keyed by link index."""

    D0: float
    v0: float
    speeds: Mapping[int, float]
    accels: Mapping[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class FilterOutcome:
    """Result of one safety-filter evaluation."""

    u_applied: float
    u_nominal: float
    u_safe: float
    filter_active: bool
    h: float
    h_e: float


def _link_speed(snap: ControlSnapshot, k: int) -> float:
    try:
        return snap.speeds[k]
    except KeyError:
        raise ConfigError(f"control snapshot is missing the speed of link {k}") from None


def _link_accel(snap: ControlSnapshot, k: int) -> float:
    try:
        return snap.accels[k]
    except KeyError:
        raise ConfigError(
            f"control snapshot is missing the acceleration of link {k}"
        ) from None


def ccc_nominal(snap: ControlSnapshot, p: CavParams) -> float:
    """Speed/distance CCC law: distance feedback through the range policy
    plus clamped speed feedback from the leader and every connected link."""
    target = range_policy(snap.D0, p.kappa, p.D_st, p.v_max)
    u = p.A * (target - snap.v0)
    u += p.B[1] * (speed_policy(_link_speed(snap, 1), p.v_max) - snap.v0)
    for k in p.Phi:
        u += p.B[k] * (speed_policy(_link_speed(snap, k), p.v_max) - snap.v0)
    return u


def ccc_nominal_accel(snap: ControlSnapshot, p: CavParams) -> float:
    """CCC law with additional acceleration feedback on the links that carry
    a nonzero C gain (reduces to :func:`ccc_nominal` when C is empty)."""
    u = ccc_nominal(snap, p)
    for k, ck in p.C.items():
        if ck != 0.0:
            u += ck * _link_accel(snap, k)
    return u


def cbf_h(state: CavState, c: CbfParams) -> float:
    """Time-headway barrier: nonnegative iff the gap beyond the safe
    standstill distance covers the current speed at the safe headway rate."""
    return c.kappa_sf * (state.D0 - c.D_sf) - state.v0


def cbf_h_gradient(c: CbfParams) -> np.ndarray:
    """Constant gradient of the barrier w.r.t. (D0, v0, a0, v1)."""
    return np.array([c.kappa_sf, -1.0, 0.0, 0.0])


def cbf_h_extended(state: CavState, c: CbfParams) -> float:
    """Extension of the barrier that makes the input direction visible: its
    rate along the drift plus a linear class-K term of the barrier itself."""
    return c.kappa_sf * (state.v1 - state.v0) - state.a0 + c.gamma * cbf_h(state, c)


def cbf_h_extended_gradient(c: CbfParams) -> np.ndarray:
    """Constant gradient of the extended barrier w.r.t. (D0, v0, a0, v1)."""
    return np.array(
        [c.gamma * c.kappa_sf, -c.kappa_sf - c.gamma, -1.0, c.kappa_sf]
    )


def lie_derivatives_h_extended(
    state: CavState, c: CbfParams, xi: float
) -> tuple[float, float]:
    """Drift and input components of the extended barrier's rate for the
    lagged CAV model: returns (L_f, L_g) with L_g = -1/xi < 0."""
    if xi < XI_LAG_FREE:
        raise ConfigError(
            "the extended barrier needs a positive lag; got xi < 1e-6 s"
        )
    lf = (
        c.kappa_sf * (state.a1 - state.a0)
        + state.a0 / xi
        + c.gamma * (c.kappa_sf * (state.v1 - state.v0) - state.a0)
    )
    return lf, -1.0 / xi


def safe_input_ks(state: CavState, c: CbfParams, xi: float) -> float:
    """Largest acceleration command that keeps the extended barrier's rate
    above ``-gamma_e * h_e``; commands above it are unsafe, below it safe."""
    if xi < XI_LAG_FREE:
        raise ConfigError(
            "the safe input is defined only for a lagged CAV; run unfiltered "
            "or use a small positive lag (e.g. xi = 1e-3 s)"
        )
    dv = c.kappa_sf * (state.v1 - state.v0) - state.a0
    return (
        (1.0 - xi * c.kappa_sf) * state.a0
        + xi * c.kappa_sf * state.a1
        + xi * c.gamma * dv
        + xi * c.gamma_e * (dv + c.gamma * (c.kappa_sf * (state.D0 - c.D_sf) - state.v0))
    )


def safety_filter(
    u_nominal: float, state: CavState, c: CbfParams, xi: float
) -> FilterOutcome:
    """Apply the min-form safety filter to a nominal command.

    The filter reports itself active only when it strictly lowers the
    command (a tie is not an intervention).
    """
    u_safe = safe_input_ks(state, c, xi)
    active = u_safe < u_nominal
    return FilterOutcome(
        u_applied=min(u_nominal, u_safe),
        u_nominal=u_nominal,
        u_safe=u_safe,
        filter_active=active,
        h=cbf_h(state, c),
        h_e=cbf_h_extended(state, c),
    )


def qp_closed_form_check(
    u_nominal: float, L_f_h_e: float, L_g_h_e: float, alpha_term: float
) -> float:
    """General closed-form solution of the minimal-modification QP for a
    scalar input; independent of the min-form filter, used to cross-check it.

    ``alpha_term`` is the class-K value at the current extended-barrier
    level (gamma_e * h_e for the linear choice).
    """
    if L_g_h_e == 0.0:
        return u_nominal
    eta = -L_f_h_e - L_g_h_e * u_nominal - alpha_term
    return u_nominal + max(0.0, eta) * L_g_h_e / (L_g_h_e * L_g_h_e)
