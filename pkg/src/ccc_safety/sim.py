"""Deterministic fixed-step simulation of the closed-loop vehicle chain.

Classical RK4 advances the CAV (with its actuation lag) and every modeled HV
simultaneously. HV commands act after the driver delay: each step looks the
delayed desired acceleration up in a uniformly sampled history ring (linear
interpolation) and holds it constant across the four stages of the step. The
head vehicle follows an analytic brake/resume profile or recorded speed data;
recorded data may also replay the HVs themselves instead of simulating them.
"""

from __future__ import annotations

import csv
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .control import ControlSnapshot
from .errors import ComputationFault, ConfigError
from .models import CavState, CbfParams, Chain, HvState, ovm_desired_accel

log = logging.getLogger(__name__)

# Steps must resolve both the driver delay and the actuation lag.
DT_DIVISOR = 10.0
_DT_SLACK = 1.0 + 1e-9


class SimulationFault(ComputationFault):
    """The integration produced a non-finite state."""


@dataclass(frozen=True)
class BrakeResume:
    """Head-vehicle speed profile: cruise, brake down by ``v_pert`` at
    ``a_brake``, then recover the initial speed at ``a_resume``."""

    v_eq: float
    v_pert: float
    a_brake: float
    a_resume: float
    t_start: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.v_pert <= self.v_eq:
            raise ValueError("need 0 <= v_pert <= v_eq")
        if self.v_pert > 0.0 and (self.a_brake <= 0.0 or self.a_resume <= 0.0):
            raise ValueError("a_brake and a_resume must be positive")
        if self.t_start < 0.0:
            raise ValueError("t_start must be nonnegative")

    @property
    def brake_end(self) -> float:
        return self.t_start + (self.v_pert / self.a_brake if self.v_pert else 0.0)

    @property
    def resume_end(self) -> float:
        return self.brake_end + (self.v_pert / self.a_resume if self.v_pert else 0.0)


@dataclass(frozen=True)
class DataDriven:
    """Recorded speed samples for the head vehicle and, optionally, every
    HV in the chain (which then replay the data instead of being simulated)."""

    t: np.ndarray
    v_head: np.ndarray
    v_hvs: tuple[np.ndarray, ...] = ()

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ConfigError("speed profile needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("profile times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v_head", np.asarray(self.v_head, dtype=float))
        object.__setattr__(
            self, "v_hvs", tuple(np.asarray(v, dtype=float) for v in self.v_hvs)
        )
        for v in (self.v_head, *self.v_hvs):
            if v.shape != t.shape:
                raise ConfigError("speed columns must match the time column")
            if np.any(v < 0):
                raise ConfigError("speeds must be nonnegative")

    @property
    def duration(self) -> float:
        return float(self.t[-1])


class _ProfileInterp:
    """Scalar linear interpolation with interval-slope accelerations."""

    def __init__(self, t: np.ndarray, v: np.ndarray):
        self._t = list(map(float, t))
        self._v = list(map(float, v))
        self._last = len(self._t) - 2

    def __call__(self, tq: float) -> tuple[float, float]:
        ts, vs = self._t, self._v
        i = bisect_right(ts, tq) - 1
        if i < 0:
            i = 0
        elif i > self._last:
            i = self._last
        slope = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i])
        return vs[i] + slope * (tq - ts[i]), slope


@dataclass(frozen=True)
class Equilibrium:
    """Start every vehicle at a uniform speed with equilibrium gaps."""

    v_star: float


@dataclass(frozen=True)
class ExplicitInit:
    """Explicit initial kinematics: CAV (D0, v0, a0) plus one HvState per HV."""

    cav: tuple[float, float, float]
    hvs: tuple[HvState, ...] = ()


@dataclass(frozen=True)
class Scenario:
    n_hv: int
    head_profile: BrakeResume | DataDriven
    initial: Equilibrium | ExplicitInit
    t_final: float
    dt: float

    def __post_init__(self) -> None:
        if self.n_hv < 0:
            raise ValueError("n_hv must be nonnegative")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")


def head_profile_eval(profile: BrakeResume | DataDriven, t: float) -> tuple[float, float]:
    """Head-vehicle speed and acceleration at time t."""
    if isinstance(profile, BrakeResume):
        if profile.v_pert == 0.0 or t < profile.t_start:
            return profile.v_eq, 0.0
        if t < profile.brake_end:
            return profile.v_eq - profile.a_brake * (t - profile.t_start), -profile.a_brake
        if t < profile.resume_end:
            low = profile.v_eq - profile.v_pert
            return low + profile.a_resume * (t - profile.brake_end), profile.a_resume
        return profile.v_eq, 0.0
    return _ProfileInterp(profile.t, profile.v_head)(t)


class HistoryBuffer:
    """Uniformly sampled ring of past per-HV desired accelerations.

    Lookups at or before the start time return the prefill values (the
    constant pre-start history); later lookups interpolate linearly between
    adjacent samples. The ring retains slightly more than ``span`` seconds.
    """

    def __init__(self, n_hv: int, dt: float, span: float, prefill):
        self._dt = dt
        self._cap = int(math.ceil(span / dt)) + 3
        self._prefill = tuple(prefill)
        if len(self._prefill) != n_hv:
            raise ValueError("prefill length must match the HV count")
        self._t0: float | None = None
        self._base = 0
        self._samples: list[tuple[float, ...]] = []

    @property
    def span(self) -> float:
        if self._t0 is None or len(self._samples) < 2:
            return 0.0
        return (self._base + len(self._samples) - 1) * self._dt

    def append(self, t: float, u) -> None:
        u = tuple(u)
        if self._t0 is None:
            self._t0 = t
        else:
            expected = self._t0 + (self._base + len(self._samples)) * self._dt
            if abs(t - expected) > 1e-9 * max(1.0, abs(expected)):
                raise ValueError(
                    f"history samples must be uniform: got t={t}, expected {expected}"
                )
        self._samples.append(u)
        if len(self._samples) > self._cap:
            del self._samples[0]
            self._base += 1

    def delayed(self, t: float) -> tuple[float, ...]:
        """Values at time t (typically now minus the driver delay)."""
        if self._t0 is None or t <= self._t0:
            return self._prefill
        x = (t - self._t0) / self._dt - self._base
        i = int(math.floor(x))
        frac = x - i
        if i < 0:
            raise ValueError("history lookup fell off the retained ring")
        if frac < 1e-12:
            return self._samples[i]
        lo, hi = self._samples[i], self._samples[i + 1]
        return tuple(a + (b - a) * frac for a, b in zip(lo, hi))


@dataclass
class Trajectory:
    """Uniformly sampled closed-loop run. ``hv_D``/``hv_v`` have one column
    per modeled HV; lag-free runs carry NaN in ``u_safe``/``h_e``."""

    t: np.ndarray
    D0: np.ndarray
    v0: np.ndarray
    a0: np.ndarray
    u_nom: np.ndarray
    u_safe: np.ndarray
    u_app: np.ndarray
    h: np.ndarray
    h_e: np.ndarray
    hv_D: np.ndarray
    hv_v: np.ndarray
    v_head: np.ndarray
    filter_active: np.ndarray
    controller: str
    floor_events: int = 0

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def min_h(self) -> float:
        return float(self.h.min())

    @property
    def min_D0(self) -> float:
        return float(self.D0.min())

    @property
    def filter_active_seconds(self) -> float:
        return float(self.filter_active.sum()) * self.dt

    def columns(self) -> list[tuple[str, np.ndarray]]:
        cols = [
            ("t", self.t),
            ("D0", self.D0),
            ("v0", self.v0),
            ("a0", self.a0),
            ("u_nom", self.u_nom),
            ("u_safe", self.u_safe),
            ("u_app", self.u_app),
            ("h", self.h),
            ("h_e", self.h_e),
        ]
        for i in range(self.hv_D.shape[1]):
            cols.append((f"D{i + 1}", self.hv_D[:, i]))
            cols.append((f"v{i + 1}", self.hv_v[:, i]))
        cols.append(("v_head", self.v_head))
        return cols

    def to_csv(self, path) -> None:
        cols = self.columns()
        with open(path, "w") as f:
            f.write(",".join(name for name, _ in cols) + "\n")
            arrays = [arr for _, arr in cols]
            for i in range(len(self.t)):
                f.write(",".join(repr(float(a[i])) for a in arrays) + "\n")


def equilibrium_init(
    v_star: float, chain: Chain, dt: float
) -> tuple[tuple[float, float, float], tuple[HvState, ...], HistoryBuffer]:
    """Uniform-flow initial condition: every vehicle at ``v_star`` with the
    gap that makes its range policy return exactly that speed, plus a history
    prefilled with the equilibrium (zero desired accelerations)."""
    cav = chain.cav
    for v_max in [cav.v_max, *(hv.v_max for hv in chain.hvs)]:
        if v_star >= v_max:
            raise ConfigError(
                "no unique equilibrium gap at or above the speed limit "
                f"(v_star={v_star}, v_max={v_max})"
            )
    if v_star < 0:
        raise ConfigError("v_star must be nonnegative")
    cav0 = (v_star / cav.kappa + cav.D_st, v_star, 0.0)
    hv0 = tuple(
        HvState(D=v_star / hv.kappa_h + hv.D_st, v=v_star) for hv in chain.hvs
    )
    span = max((hv.tau for hv in chain.hvs), default=0.0)
    history = HistoryBuffer(chain.n, dt, max(span, dt), (0.0,) * chain.n)
    return cav0, hv0, history


CONTROLLERS = ("nominal", "nominal_accel", "filtered")


class ChainIntegrator:
    """Advances the chain state one fixed RK4 step at a time.

    The CAV command is re-evaluated at every RK4 stage (it is delay free);
    the HVs' delayed inputs are interpolated once per step and frozen across
    the stages.
    """

    def __init__(
        self,
        chain: Chain,
        cbf: CbfParams,
        head_profile: BrakeResume | DataDriven,
        dt: float,
        controller,
        cav0: tuple[float, float, float],
        hv0: tuple[HvState, ...],
        history: HistoryBuffer | None,
        u_clamp: tuple[float, float] | None = None,
    ):
        cav = chain.cav
        if u_clamp is not None and u_clamp[0] >= u_clamp[1]:
            raise ConfigError("u_clamp bounds must satisfy lo < hi")
        self._u_clamp = u_clamp
        self._chain = chain
        self._cbf = cbf
        self._dt = dt
        self._n = chain.n
        self._lagged = not cav.lag_free
        self._xi = cav.xi
        self._A = cav.A
        self._B1 = cav.B[1]
        self._kap = cav.kappa
        self._Dst = cav.D_st
        self._vmax = cav.v_max
        self._blinks = tuple((k, cav.B[k]) for k in cav.Phi)
        self._clinks = tuple((k, v) for k, v in sorted(cav.C.items()) if v != 0.0)
        self._ksf = cbf.kappa_sf
        self._Dsf = cbf.D_sf
        self._g = cbf.gamma
        self._ge = cbf.gamma_e

        self._replay = isinstance(head_profile, DataDriven) and bool(head_profile.v_hvs)
        if self._replay and len(head_profile.v_hvs) != chain.n:
            raise ConfigError(
                f"data profile has {len(head_profile.v_hvs)} HV columns, "
                f"chain has {chain.n} HVs"
            )
        if isinstance(head_profile, DataDriven):
            self._head = _ProfileInterp(head_profile.t, head_profile.v_head)
            self._hv_profiles = [
                _ProfileInterp(head_profile.t, v) for v in head_profile.v_hvs
            ]
        else:
            self._head = lambda t: head_profile_eval(head_profile, t)
            self._hv_profiles = []

        if callable(controller):
            self._mode = "callable"
            self._callable = controller
        elif controller in CONTROLLERS:
            self._mode = controller
            self._callable = None
            if controller == "filtered" and not self._lagged:
                raise ConfigError(
                    "the safety filter needs xi >= 1e-6 s; run unfiltered or "
                    "use a small positive lag (e.g. xi = 1e-3 s)"
                )
        else:
            raise ConfigError(f"unknown controller {controller!r}")
        self._accel_law = self._mode == "nominal_accel" or (
            self._mode == "filtered" and bool(self._clinks)
        )

        if len(hv0) != chain.n:
            raise ConfigError("initial HV states must match the chain length")
        y = [cav0[0], cav0[1]]
        if self._lagged:
            y.append(cav0[2])
        self._off = len(y)
        for s in hv0:
            y.append(s.D)
            if not self._replay:
                y.append(s.v)
        self._stride = 1 if self._replay else 2
        self._y = y
        self._k = 0
        self._history = history if (chain.n and not self._replay) else None
        if self._history is not None:
            self._history.append(0.0, self._hv_inputs(0.0, y))
        self.floor_events = 0
        self._taus = tuple(hv.tau for hv in chain.hvs)

    # -- state access ------------------------------------------------------

    @property
    def t(self) -> float:
        return self._k * self._dt

    @property
    def cav_state(self) -> CavState:
        y = self._y
        t = self.t
        ud = self._delayed(t)
        vh, ah = self._head(t)
        v1 = self._hv_v(1, t, y) if self._n else vh
        a1 = self._hv_a(1, t, ud, ah)
        a0 = y[2] if self._lagged else math.nan
        return CavState(D0=y[0], v0=y[1], a0=a0, v1=v1, a1=a1)

    @property
    def hv_states(self) -> tuple[HvState, ...]:
        y, t = self._y, self.t
        return tuple(
            HvState(D=y[self._off + self._stride * i], v=self._hv_v(i + 1, t, y))
            for i in range(self._n)
        )

    def head(self, t: float | None = None) -> tuple[float, float]:
        return self._head(self.t if t is None else t)

    # -- internals ----------------------------------------------------------

    def _hv_v(self, k: int, ts: float, y) -> float:
        if self._replay:
            return self._hv_profiles[k - 1](ts)[0]
        return y[self._off + 2 * (k - 1) + 1]

    def _hv_a(self, k: int, ts: float, ud, head_a: float) -> float:
        if self._n == 0 or k == self._n + 1:
            return head_a
        if self._replay:
            return self._hv_profiles[k - 1](ts)[1]
        return ud[k - 1]

    def _hv_inputs(self, ts: float, y) -> tuple[float, ...]:
        """Current OVM desired accelerations of all HVs (history samples)."""
        vh, _ = self._head(ts)
        out = []
        for i, hv in enumerate(self._chain.hvs):
            base = self._off + 2 * i
            v_lead = y[base + 3] if i + 1 < self._n else vh
            out.append(ovm_desired_accel(y[base], y[base + 1], v_lead, hv))
        return tuple(out)

    def _delayed(self, t: float) -> tuple[float, ...]:
        if self._history is None:
            return ()
        if len(set(self._taus)) == 1:
            return self._history.delayed(t - self._taus[0])
        return tuple(
            self._history.delayed(t - tau)[i] for i, tau in enumerate(self._taus)
        )

    def _eval_controls(self, ts: float, y, ud):
        """(u_nom, u_safe, u_app, h, h_e, active) at one stage state."""
        vh, ah = self._head(ts)
        n = self._n
        if n:
            v1 = self._hv_v(1, ts, y)
            a1 = self._hv_a(1, ts, ud, ah)
        else:
            v1, a1 = vh, ah
        D0, v0 = y[0], y[1]
        a0 = y[2] if self._lagged else math.nan

        if self._mode == "callable":
            speeds = {1: v1}
            accels = {1: a1}
            for k, _ in self._blinks:
                speeds[k] = vh if k == n + 1 else self._hv_v(k, ts, y)
                accels[k] = self._hv_a(k, ts, ud, ah)
            snap = ControlSnapshot(D0=D0, v0=v0, speeds=speeds, accels=accels)
            u = self._callable(ts, snap, CavState(D0, v0, a0, v1, a1))
            return (u, math.nan, u, self._ksf * (D0 - self._Dsf) - v0, math.nan, False)

        tgt = self._kap * (D0 - self._Dst)
        if tgt < 0.0:
            tgt = 0.0
        elif tgt > self._vmax:
            tgt = self._vmax
        u = self._A * (tgt - v0) + self._B1 * (min(v1, self._vmax) - v0)
        for k, bk in self._blinks:
            vk = vh if k == n + 1 else self._hv_v(k, ts, y)
            u += bk * (min(vk, self._vmax) - v0)
        if self._accel_law:
            for k, ck in self._clinks:
                u += ck * (a1 if k == 1 else self._hv_a(k, ts, ud, ah))

        h = self._ksf * (D0 - self._Dsf) - v0
        if not self._lagged:
            return (u, math.nan, u, h, math.nan, False)
        dv = self._ksf * (v1 - v0) - a0
        he = dv + self._g * h
        xi = self._xi
        ks = (
            (1.0 - xi * self._ksf) * a0
            + xi * self._ksf * a1
            + xi * self._g * dv
            + xi * self._ge * he
        )
        if self._mode == "filtered":
            active = ks < u
            return (u, ks, ks if active else u, h, he, active)
        return (u, ks, u, h, he, False)

    def controls(self) -> tuple[float, float, float, float, float, bool]:
        """Control outputs evaluated on the current state."""
        return self._eval_controls(self.t, self._y, self._delayed(self.t))

    def _rhs(self, ts: float, y, ud):
        n = self._n
        vh, _ = self._head(ts)
        u_app = self._eval_controls(ts, y, ud)[2]
        dy = [0.0] * len(y)
        v1 = self._hv_v(1, ts, y) if n else vh
        dy[0] = v1 - y[1]
        if self._lagged:
            dy[1] = y[2]
            dy[2] = (u_app - y[2]) / self._xi
        else:
            dy[1] = u_app
        off = self._off
        if self._replay:
            for i in range(n):
                v_self = self._hv_profiles[i](ts)[0]
                v_lead = self._hv_profiles[i + 1](ts)[0] if i + 1 < n else vh
                dy[off + i] = v_lead - v_self
        else:
            for i in range(n):
                base = off + 2 * i
                v_lead = y[base + 3] if i + 1 < n else vh
                dy[base] = v_lead - y[base + 1]
                dy[base + 1] = ud[i]
        return dy

    def step(self) -> None:
        """Advance one RK4 step of length dt."""
        dt = self._dt
        t = self._k * dt
        y = self._y
        ud = self._delayed(t)
        m = len(y)
        k1 = self._rhs(t, y, ud)
        y2 = [y[i] + 0.5 * dt * k1[i] for i in range(m)]
        k2 = self._rhs(t + 0.5 * dt, y2, ud)
        y3 = [y[i] + 0.5 * dt * k2[i] for i in range(m)]
        k3 = self._rhs(t + 0.5 * dt, y3, ud)
        y4 = [y[i] + dt * k3[i] for i in range(m)]
        k4 = self._rhs(t + dt, y4, ud)
        sixth = dt / 6.0
        yn = [
            y[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) for i in range(m)
        ]
        # nonphysical reversal guard: speeds never go negative
        if yn[1] < 0.0:
            yn[1] = 0.0
            self.floor_events += 1
        if not self._replay:
            for i in range(self._n):
                j = self._off + 2 * i + 1
                if yn[j] < 0.0:
                    yn[j] = 0.0
                    self.floor_events += 1
        if not (math.isfinite(yn[0]) and math.isfinite(yn[1])):
            raise SimulationFault(f"non-finite state at t = {t + dt:.6g} s")
        self._y = yn
        self._k += 1
        if self._history is not None:
            self._history.append(self._k * dt, self._hv_inputs(self._k * dt, yn))


def _validate_dt(scenario: Scenario, chain: Chain) -> None:
    limit = min((hv.tau for hv in chain.hvs), default=math.inf)
    if not chain.cav.lag_free:
        limit = min(limit, chain.cav.xi)
    if math.isfinite(limit) and scenario.dt * DT_DIVISOR > limit * _DT_SLACK:
        raise ConfigError(
            f"dt={scenario.dt} violates dt <= min(tau, xi)/{DT_DIVISOR:g} "
            f"= {limit / DT_DIVISOR:.6g} s"
        )


def simulate(
    scenario: Scenario,
    chain: Chain,
    cbf: CbfParams,
    controller: str = "nominal",
) -> Trajectory:
    """Run the closed loop and record one row per step.

    ``controller`` is one of ``nominal`` (speed/distance law),
    ``nominal_accel`` (with acceleration feedback), or ``filtered`` (the
    nominal law passed through the safety filter).
    """
    if scenario.n_hv != chain.n:
        raise ConfigError(
            f"scenario.n_hv={scenario.n_hv} does not match the chain ({chain.n} HVs)"
        )
    _validate_dt(scenario, chain)
    profile = scenario.head_profile
    if isinstance(profile, DataDriven):
        if profile.duration + 1e-9 < scenario.t_final:
            raise ConfigError(
                f"data profile covers {profile.duration:.6g} s but the scenario "
                f"runs to {scenario.t_final:.6g} s"
            )
        if profile.v_hvs and len(profile.v_hvs) != chain.n:
            raise ConfigError(
                f"data profile has {len(profile.v_hvs)} HV columns, chain has {chain.n}"
            )

    dt = scenario.dt
    if isinstance(scenario.initial, Equilibrium):
        replay = isinstance(profile, DataDriven) and bool(profile.v_hvs)
        if replay:
            # replayed vehicles start on their own recorded speeds
            own = [_ProfileInterp(profile.t, v)(0.0)[0] for v in profile.v_hvs]
            v1 = own[0] if own else profile.v_head[0]
            cav0 = (v1 / chain.cav.kappa + chain.cav.D_st, v1, 0.0)
            hv0 = tuple(
                HvState(D=v / hv.kappa_h + hv.D_st, v=v)
                for v, hv in zip(own, chain.hvs)
            )
            history = None
        else:
            cav0, hv0, history = equilibrium_init(scenario.initial.v_star, chain, dt)
    else:
        cav0 = scenario.initial.cav
        hv0 = tuple(scenario.initial.hvs)
        span = max((hv.tau for hv in chain.hvs), default=0.0)
        # constant pre-start history from the initial states
        vh0 = head_profile_eval(profile, 0.0)[0]
        prefill = []
        for i, hv in enumerate(chain.hvs):
            v_lead = hv0[i + 1].v if i + 1 < chain.n else vh0
            prefill.append(ovm_desired_accel(hv0[i].D, hv0[i].v, v_lead, hv))
        history = HistoryBuffer(chain.n, dt, max(span, dt), tuple(prefill))

    integ = ChainIntegrator(chain, cbf, profile, dt, controller, cav0, hv0, history)
    n_steps = int(math.floor(scenario.t_final / dt + 1e-9))
    n = chain.n

    rows = n_steps + 1
    t_arr = np.empty(rows)
    cols = {
        name: np.empty(rows)
        for name in ("D0", "v0", "a0", "u_nom", "u_safe", "u_app", "h", "h_e", "v_head")
    }
    hv_D = np.empty((rows, n))
    hv_v = np.empty((rows, n))
    active_arr = np.zeros(rows, dtype=bool)

    for k in range(rows):
        t = k * dt
        y = integ._y
        u_nom, u_safe, u_app, h, he, active = integ.controls()
        vh, _ = integ.head(t)
        t_arr[k] = t
        cols["D0"][k] = y[0]
        cols["v0"][k] = y[1]
        cols["a0"][k] = y[2] if integ._lagged else u_app
        cols["u_nom"][k] = u_nom
        cols["u_safe"][k] = u_safe
        cols["u_app"][k] = u_app
        cols["h"][k] = h
        cols["h_e"][k] = he
        cols["v_head"][k] = vh
        for i in range(n):
            hv_D[k, i] = y[integ._off + integ._stride * i]
            hv_v[k, i] = integ._hv_v(i + 1, t, y)
        active_arr[k] = active
        if k < n_steps:
            integ.step()

    if integ.floor_events:
        log.info("speed floor engaged %d times", integ.floor_events)
    return Trajectory(
        t=t_arr,
        D0=cols["D0"],
        v0=cols["v0"],
        a0=cols["a0"],
        u_nom=cols["u_nom"],
        u_safe=cols["u_safe"],
        u_app=cols["u_app"],
        h=cols["h"],
        h_e=cols["h_e"],
        hv_D=hv_D,
        hv_v=hv_v,
        v_head=cols["v_head"],
        filter_active=active_arr,
        controller=controller if isinstance(controller, str) else "callable",
        floor_events=integ.floor_events,
    )


def load_speed_csv(path) -> DataDriven:
    """Read a ``t,v_head[,v_hv1,...]`` CSV into a data-driven head profile.

    Times must be strictly increasing and speeds nonnegative; parse errors
    name the offending row.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "t" or header[1] != "v_head":
            raise ConfigError(
                f"{path}: header must start with 't,v_head', got {','.join(header)}"
            )
        ncol = len(header)
        data: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise ConfigError(
                    f"{path}: row {lineno} has {len(row)} fields, expected {ncol}"
                )
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ConfigError(f"{path}: row {lineno} is not numeric") from None
            if data and vals[0] <= data[-1][0]:
                raise ConfigError(
                    f"{path}: row {lineno}: time {vals[0]} does not increase"
                )
            if any(v < 0 for v in vals[1:]):
                raise ConfigError(f"{path}: row {lineno}: negative speed")
            data.append(vals)
    if len(data) < 2:
        raise ConfigError(f"{path}: need at least two sample rows")
    arr = np.asarray(data)
    return DataDriven(
        t=arr[:, 0],
        v_head=arr[:, 1],
        v_hvs=tuple(arr[:, j] for j in range(2, ncol)),
    )
