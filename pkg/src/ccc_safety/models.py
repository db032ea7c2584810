"""Longitudinal dynamics and driver policies for a mixed vehicle chain.

The chain is indexed tail to head: vehicle 0 is the connected automated
vehicle (CAV), vehicles 1..n are human-driven (HV), and vehicle n+1 is the
head vehicle whose motion is prescribed externally. All quantities are SI:
m, s, m/s, m/s^2, gains in 1/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

# Lags below this threshold switch the CAV to the lag-free 2-state model,
# avoiding the 1/xi singularity.
XI_LAG_FREE = 1e-6


@dataclass(frozen=True)
class HvParams:
    """Human-driven vehicle: OVM driver gains and range-policy constants."""

    A_h: float  # distance-feedback gain, 1/s
    B_h: float  # relative-speed gain, 1/s
    kappa_h: float  # range-policy gradient, 1/s
    tau: float  # driver reaction + powertrain delay, s
    D_st: float = 5.0  # standstill distance, m
    v_max: float = 30.0  # speed limit, m/s

    def __post_init__(self) -> None:
        if min(self.A_h, self.B_h, self.kappa_h) < 0:
            raise ValueError("HV gains must be nonnegative")
        if self.tau <= 0:
            raise ValueError("driver delay tau must be positive")
        if self.D_st <= 0 or self.v_max <= 0:
            raise ValueError("D_st and v_max must be positive")


@dataclass(frozen=True)
class CavParams:
    """CAV control gains and actuation constants.

    ``B`` maps a link index k to the speed-feedback gain toward the vehicle
    k positions ahead: key 1 is the immediate leader (on-board sensing),
    keys k > 1 are connected vehicles reached over V2X. ``C`` optionally
    maps link indices to acceleration-feedback gains. ``Phi`` lists the
    connected links (k > 1) in increasing order; when omitted it is derived
    from the keys of ``B``.
    """

    A: float  # distance-feedback gain, 1/s
    B: Mapping[int, float]
    kappa: float  # range-policy gradient, 1/s
    xi: float  # first-order lag, s
    C: Mapping[int, float] = field(default_factory=dict)
    Phi: tuple[int, ...] | None = None
    D_st: float = 5.0
    v_max: float = 30.0

    def __post_init__(self) -> None:
        b = dict(self.B)
        c = dict(self.C)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        if 1 not in b:
            raise ValueError("B must contain the immediate-leader gain (key 1)")
        if self.Phi is None:
            object.__setattr__(self, "Phi", tuple(sorted(k for k in b if k > 1)))
        else:
            object.__setattr__(self, "Phi", tuple(self.Phi))
        phi = self.Phi
        if any(k <= 1 for k in phi) or list(phi) != sorted(set(phi)):
            raise ValueError("Phi must be strictly increasing indices > 1")
        if set(b) != {1, *phi}:
            raise ValueError("keys of B must be exactly {1} plus Phi")
        if not set(c) <= {1, *phi}:
            raise ValueError("keys of C must be within {1} plus Phi")
        if self.A < 0 or any(v < 0 for v in b.values()):
            raise ValueError("CAV gains must be nonnegative")
        if self.xi < 0:
            raise ValueError("lag xi must be nonnegative")
        if self.kappa <= 0 or self.D_st <= 0 or self.v_max <= 0:
            raise ValueError("kappa, D_st and v_max must be positive")

    @property
    def lag_free(self) -> bool:
        return self.xi < XI_LAG_FREE


@dataclass(frozen=True)
class CbfParams:
    """Time-headway safety constraint and class-K slopes."""

    kappa_sf: float  # inverse safe time headway, 1/s
    D_sf: float  # safe standstill distance, m
    gamma: float  # class-K slope of the barrier extension, 1/s
    gamma_e: float  # class-K slope enforced by the filter, 1/s

    def __post_init__(self) -> None:
        if self.kappa_sf <= 0 or self.gamma <= 0 or self.gamma_e <= 0:
            raise ValueError("kappa_sf, gamma and gamma_e must be positive")
        if self.D_sf < 0:
            raise ValueError("D_sf must be nonnegative")


@dataclass(frozen=True)
class CavState:
    """Kinematic snapshot of the CAV and its immediate leader."""

    D0: float  # gap to the vehicle ahead, m
    v0: float  # own speed, m/s
    a0: float  # actual acceleration, m/s^2
    v1: float  # leader speed, m/s
    a1: float = 0.0  # leader acceleration, m/s^2


@dataclass(frozen=True)
class HvState:
    """Gap and speed of one human-driven vehicle."""

    D: float
    v: float


@dataclass(frozen=True)
class Chain:
    """One CAV at the tail followed by ``n`` modeled HVs; the head vehicle
    (index n+1) is prescribed externally and not part of the state."""

    cav: CavParams
    hvs: tuple[HvParams, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "hvs", tuple(self.hvs))
        if self.cav.Phi and max(self.cav.Phi) > self.n + 1:
            raise ValueError(
                f"connected link {max(self.cav.Phi)} is beyond the head vehicle "
                f"(n={self.n})"
            )

    @property
    def n(self) -> int:
        return len(self.hvs)

    @property
    def identical_hvs(self) -> bool:
        return self.n == 0 or all(hv == self.hvs[0] for hv in self.hvs)


def range_policy(D: float, kappa: float, D_st: float, v_max: float) -> float:
    """Gap-to-target-speed map: zero up to the standstill distance, then
    linear with gradient ``kappa``, saturated at the speed limit."""
    return max(0.0, min(kappa * (D - D_st), v_max))


def speed_policy(v: float, v_max: float) -> float:
    """Clamp a broadcast speed at the speed limit."""
    return min(v, v_max)


def ovm_desired_accel(D: float, v: float, v_lead: float, p: HvParams) -> float:
    """Optimal-velocity-model desired acceleration of a human driver."""
    target = range_policy(D, p.kappa_h, p.D_st, p.v_max)
    return p.A_h * (target - v) + p.B_h * (v_lead - v)


def hv_derivatives(
    state_now: HvState, v_lead_now: float, delayed_input: float
) -> tuple[float, float]:
    """Right-hand side of one HV. ``delayed_input`` must be the desired
    acceleration evaluated on the state one driver delay in the past; the
    caller owns the history bookkeeping."""
    return (v_lead_now - state_now.v, delayed_input)


def cav_derivatives(
    state: CavState, u0: float, xi: float
) -> tuple[float, float] | tuple[float, float, float]:
    """Right-hand side of the CAV with first-order actuation lag.

    Returns (dD0, dv0, da0). For ``xi`` below :data:`XI_LAG_FREE` the
    command acts instantly, the lag state is dropped, and a 2-tuple
    (dD0, dv0) is returned with dv0 = u0.
    """
    dD0 = state.v1 - state.v0
    if xi < XI_LAG_FREE:
        return (dD0, u0)
    return (dD0, state.a0, (u0 - state.a0) / xi)
