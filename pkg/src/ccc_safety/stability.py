"""Frequency-domain analysis of the vehicle chain.

Link and head-to-tail transfer functions, plant/string stability checks, and
the analytic boundary curves in the (A, B1) and (B1, B_N) gain planes (B_N is
the gain toward the head vehicle, link n+1). Boundary formulas are exposed for
chains of identical HVs connected as Phi = {n+1}; the transfer functions and
the numeric string-stability check work for arbitrary per-HV parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ComputationFault
from .models import CavParams, Chain, HvParams, XI_LAG_FREE

log = logging.getLogger(__name__)

PLANE_A_B1 = "A-B1"  # x = A, y = B1, gain toward the head fixed
PLANE_B1_BN = "B1-BN"  # x = B1, y = B_{n+1}, A fixed
PLANES = (PLANE_A_B1, PLANE_B1_BN)

# Frequency sweep used by the numeric string-stability check.
OMEGA_MIN = 1e-3
OMEGA_MAX = 1e2
OMEGA_POINTS = 800
STRING_TOL = 1e-9
POLE_TOL = 1e-14

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GOLDEN_ITERS = 48


class PoleError(ComputationFault):
    """A transfer function was evaluated at (or next to) a pole."""


@dataclass(frozen=True)
class FrequencySample:
    """One complex frequency-response value at s = j*omega."""

    omega: float
    value: complex


@dataclass(frozen=True)
class StabilityFlags:
    plant_stable: bool
    string_stable: bool
    sup_gain: float


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of a boundary curve in the active gain plane, tagged with the
    parameter values that generated it (Omega for plant curves, (omega, K)
    for string curves, nothing for fixed lines)."""

    x: float
    y: float
    omega: float | None = None
    K: float | None = None
    Omega: float | None = None


@dataclass(frozen=True)
class BoundaryLine:
    """The line a*x + b*y + c = 0 in the active gain plane."""

    label: str
    a: float
    b: float
    c: float

    def residual(self, x: float, y: float) -> float:
        return self.a * x + self.b * y + self.c


@dataclass(frozen=True)
class BoundaryCurves:
    """Lines and parameterized points making up one boundary family."""

    plane: str
    lines: tuple[BoundaryLine, ...] = ()
    points: tuple[BoundaryPoint, ...] = ()


def _check_scalar_pole(den: complex, s: complex) -> None:
    if np.ndim(den) == 0 and abs(den) < POLE_TOL:
        raise PoleError(f"transfer-function pole at s = {s}")


def cav_char_poly(s, p: CavParams):
    """Characteristic polynomial of the CAV link (cubic in s; quadratic for
    the lag-free model, realized by xi = 0 in the same expression)."""
    psi0 = p.A + sum(p.B.values())
    return p.xi * s**3 + s**2 + psi0 * s + p.A * p.kappa


def link_T01(s, p: CavParams):
    """Transfer function from the immediate leader's speed to the CAV's."""
    den = cav_char_poly(s, p)
    _check_scalar_pole(den, s)
    return (p.B[1] * s + p.A * p.kappa) / den


def link_T0k(s, p: CavParams, k: int):
    """Transfer function from connected link k's speed to the CAV's."""
    if k not in p.B:
        raise ValueError(f"no connected gain for link {k}")
    den = cav_char_poly(s, p)
    _check_scalar_pole(den, s)
    return (p.B[k] * s) / den


def link_Thv(s, p: HvParams):
    """Transfer function across one HV, including its exact driver-delay
    factor e^(s*tau)."""
    den = np.exp(s * p.tau) * s * s + (p.A_h + p.B_h) * s + p.A_h * p.kappa_h
    _check_scalar_pole(den, s)
    return (p.B_h * s + p.A_h * p.kappa_h) / den


def head_to_tail_G(s, chain: Chain):
    """Speed-perturbation transfer function from the head vehicle to the CAV.

    Composes the link transfer functions along the chain; identical HVs use
    the n-th power as a fast path.
    """
    n = chain.n
    cav = chain.cav
    if chain.identical_hvs:
        t_pow = {}  # power -> T_hv^power
        base = link_Thv(s, chain.hvs[0]) if n else None

        def suffix(k: int):
            m = n - k + 1
            if m == 0:
                return 1.0
            if m not in t_pow:
                t_pow[m] = base**m
            return t_pow[m]

    else:
        links = [link_Thv(s, hv) for hv in chain.hvs]
        suffixes = {n + 1: 1.0}
        acc = 1.0
        for i in range(n, 0, -1):
            acc = acc * links[i - 1]
            suffixes[i] = acc

        def suffix(k: int):
            return suffixes[k]

    g = link_T01(s, cav) * suffix(1)
    for k in cav.Phi:
        g = g + link_T0k(s, cav, k) * suffix(k)
    return g


def frequency_response(chain: Chain, omegas) -> list[FrequencySample]:
    """Sample the head-to-tail transfer function along the imaginary axis."""
    return [FrequencySample(float(w), complex(head_to_tail_G(1j * w, chain))) for w in omegas]


def hv_gamma(omega, p: HvParams, n: int) -> tuple[float, float]:
    """Real and imaginary parts of the n-fold HV link transfer function at
    s = j*omega (the factor the CAV sees looking past all HVs)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    g = link_Thv(1j * omega, p) ** n
    return (g.real, g.imag)


def plant_stable(p: CavParams) -> bool:
    """Routh-Hurwitz test of the CAV link's characteristic polynomial.

    Cubic xi*s^3 + s^2 + Psi0*s + A*kappa for a lagged CAV (stable iff all
    coefficients are positive and Psi0 > xi*A*kappa); quadratic for the
    lag-free model.
    """
    psi0 = p.A + sum(p.B.values())
    a0 = p.A * p.kappa
    if psi0 <= 0.0 or a0 <= 0.0:
        return False
    if p.lag_free:
        return True
    return psi0 > p.xi * a0


def default_omega_grid() -> np.ndarray:
    return np.logspace(math.log10(OMEGA_MIN), math.log10(OMEGA_MAX), OMEGA_POINTS)


def _thv_pow_num(s, hv: HvParams, n: int):
    """T_hv(s)^n for scalar or array s (identity for n = 0)."""
    if n == 0:
        return np.ones_like(np.asarray(s)) if np.ndim(s) else 1.0
    t = (hv.B_h * s + hv.A_h * hv.kappa_h) / (
        np.exp(s * hv.tau) * s * s + (hv.A_h + hv.B_h) * s + hv.A_h * hv.kappa_h
    )
    return t**n


def _hv_factor_arrays(hv: HvParams | None, n: int, omega):
    """(Re, Im) of T_hv(j*omega)^n as float arrays matching omega."""
    if n == 0 or hv is None:
        shape = np.shape(omega)
        return np.ones(shape), np.zeros(shape)
    g = _thv_pow_num(1j * np.asarray(omega, dtype=float), hv, n)
    return np.real(g), np.imag(g)


def _gain_sq_cells(A, B1, BN, kappa, xi, gr, gi, w):
    """|G(j*w)|^2 in pure real arithmetic, broadcast over cells x omegas.

    ``gr``/``gi`` are the HV factor (Re/Im of T_hv^n) evaluated on ``w``.
    """
    ak = A * kappa
    n_re = ak * gr - w * B1 * gi
    n_im = w * (B1 * gr + BN) + ak * gi
    w2 = w * w
    d_re = ak - w2
    d_im = (A + B1 + BN) * w - xi * w2 * w
    with np.errstate(divide="ignore", invalid="ignore"):
        return (n_re * n_re + n_im * n_im) / (d_re * d_re + d_im * d_im)


def _sup_gain_cells(A, B1, BN, kappa, xi, hv, n, omega_grid) -> np.ndarray:
    """Sup of |G(j*omega)| per gain cell: coarse max over the grid followed
    by one vectorized golden-section refinement around each argmax."""
    A = np.atleast_1d(np.asarray(A, dtype=float))
    B1 = np.atleast_1d(np.asarray(B1, dtype=float))
    BN = np.atleast_1d(np.asarray(BN, dtype=float))
    gr, gi = _hv_factor_arrays(hv, n, omega_grid)
    sq = _gain_sq_cells(
        A[:, None], B1[:, None], BN[:, None], kappa, xi,
        gr[None, :], gi[None, :], omega_grid[None, :],
    )
    sq = np.where(np.isfinite(sq), sq, np.inf)
    idx = np.argmax(sq, axis=1)
    best = sq[np.arange(len(A)), idx]
    lo = omega_grid[np.maximum(idx - 1, 0)]
    hi = omega_grid[np.minimum(idx + 1, len(omega_grid) - 1)]

    def f(w):
        gr_w, gi_w = _hv_factor_arrays(hv, n, w)
        return _gain_sq_cells(A, B1, BN, kappa, xi, gr_w, gi_w, w)

    for _ in range(_GOLDEN_ITERS):
        d = _GOLDEN * (hi - lo)
        x1 = hi - d
        x2 = lo + d
        left = f(x1) > f(x2)
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
    refined = f(0.5 * (lo + hi))
    refined = np.where(np.isfinite(refined), refined, np.inf)
    return np.sqrt(np.maximum(best, refined))


def _sup_gain_general(chain: Chain, omega_grid: np.ndarray) -> float:
    """Sup of |G| for an arbitrary chain (per-HV parameters, any Phi)."""

    def mag(omega):
        s = 1j * np.asarray(omega)
        suffixes = {chain.n + 1: np.ones_like(s)}
        acc = np.ones_like(s)
        for i in range(chain.n, 0, -1):
            acc = acc * _thv_pow_num(s, chain.hvs[i - 1], 1)
            suffixes[i] = acc
        cav = chain.cav
        den = cav_char_poly(s, cav)
        num = (cav.B[1] * s + cav.A * cav.kappa) * suffixes[1]
        for k in cav.Phi:
            num = num + cav.B[k] * s * suffixes[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(num / den)

    mags = mag(omega_grid)
    mags = np.where(np.isfinite(mags), mags, np.inf)
    i = int(np.argmax(mags))
    best = float(mags[i])
    lo = float(omega_grid[max(i - 1, 0)])
    hi = float(omega_grid[min(i + 1, len(omega_grid) - 1)])
    for _ in range(_GOLDEN_ITERS):
        d = _GOLDEN * (hi - lo)
        x1, x2 = hi - d, lo + d
        if float(mag(x1)) > float(mag(x2)):
            hi = x2
        else:
            lo = x1
    return max(best, float(mag(0.5 * (lo + hi))))


def check_hv_link_poles(hv: HvParams, grid: np.ndarray) -> bool:
    """Warn when an HV link denominator (nearly) vanishes on the scan grid.

    HV plant stability is assumed rather than verified; a pole on the
    imaginary axis means that assumption is violated. Returns True when the
    grid is pole free."""
    s = 1j * grid
    den = np.exp(s * hv.tau) * s * s + (hv.A_h + hv.B_h) * s + hv.A_h * hv.kappa_h
    if float(np.min(np.abs(den))) < 1e-9:
        log.warning(
            "HV link transfer function has a pole on the frequency grid; "
            "the HV plant-stability assumption is violated"
        )
        return False
    return True


def string_stable_numeric(chain: Chain, omega_grid: np.ndarray | None = None) -> StabilityFlags:
    """Numeric head-to-tail string-stability check: sup of |G(j*omega)| over
    a log-spaced grid with golden-section refinement. A plant-unstable chain
    is never flagged string stable."""
    grid = default_omega_grid() if omega_grid is None else np.asarray(omega_grid, dtype=float)
    for hv in set(chain.hvs):
        check_hv_link_poles(hv, grid)
    plant = plant_stable(chain.cav)
    cav = chain.cav
    if chain.identical_hvs and set(cav.Phi) <= {chain.n + 1}:
        hv = chain.hvs[0] if chain.n else None
        bn = cav.B[chain.n + 1] if (chain.n + 1) in cav.Phi else 0.0
        sup = float(
            _sup_gain_cells(cav.A, cav.B[1], bn, cav.kappa, cav.xi, hv, chain.n, grid)[0]
        )
    else:
        sup = _sup_gain_general(chain, grid)
    if not math.isfinite(sup):
        log.warning("pole encountered on the frequency grid; flagging string unstable")
        return StabilityFlags(plant, False, math.inf)
    return StabilityFlags(plant, plant and sup < 1.0 - STRING_TOL, sup)


def _require_boundary_chain(chain: Chain) -> tuple[HvParams | None, float]:
    if not chain.identical_hvs:
        raise ValueError("boundary formulas require identical HV parameters")
    if not set(chain.cav.Phi) <= {chain.n + 1}:
        raise ValueError("boundary formulas require the single link Phi = {n+1}")
    hv = chain.hvs[0] if chain.n else None
    bn = chain.cav.B[chain.n + 1] if (chain.n + 1) in chain.cav.Phi else 0.0
    return hv, bn


def string_stability_margin(omega: float, chain: Chain) -> float:
    """String-stability margin (|D|^2 - |N|^2)/omega^2 of the head-to-tail
    transfer function; positive exactly where |G(j*omega)| < 1."""
    if omega <= 0.0:
        raise ValueError("P is defined for omega > 0; the limit is the w0 boundary")
    hv, bn = _require_boundary_chain(chain)
    cav = chain.cav
    s = 1j * omega
    g = _thv_pow_num(s, hv, chain.n) if chain.n else 1.0
    num = (cav.B[1] * s + cav.A * cav.kappa) * g + bn * s
    den = cav_char_poly(s, cav)
    return float((abs(den) ** 2 - abs(num) ** 2) / omega**2)


def hv_curvature_limit(hv: HvParams, n: int) -> float:
    """Low-frequency curvature constant of the n-fold HV transfer gain,
    n*(A_h + 2*B_h - 2*kappa_h)/(A_h*kappa_h^2); appears in the w0 string
    boundary."""
    if hv is None or n == 0:
        return 0.0
    if hv.A_h <= 0:
        raise ValueError("the w0 boundary needs A_h > 0")
    return n * (hv.A_h + 2.0 * hv.B_h - 2.0 * hv.kappa_h) / (hv.A_h * hv.kappa_h**2)


def string_boundary_w0(plane: str, fixed_gain: float, chain: Chain) -> BoundaryCurves:
    """Zero-frequency string-stability boundary lines in the given plane.

    ``fixed_gain`` is B_{n+1} for the A-B1 plane and A for the B1-BN plane.
    """
    hv, _ = _require_boundary_chain(chain)
    cav = chain.cav
    kap = cav.kappa
    n = chain.n
    lh = hv_curvature_limit(hv, n)
    kh = hv.kappa_h if hv is not None else kap  # n = 0: HV terms drop out anyway
    ratio = (n * kap / kh + 1.0) if n else 1.0
    if plane == PLANE_A_B1:
        bn = fixed_gain
        lines = (
            BoundaryLine("string_w0_A0", 1.0, 0.0, 0.0),
            BoundaryLine(
                "string_w0",
                lh * kap**2 + 1.0,
                2.0,
                2.0 * bn * ratio - 2.0 * kap,
            ),
        )
    elif plane == PLANE_B1_BN:
        a = fixed_gain
        lines = (
            BoundaryLine(
                "string_w0",
                1.0,
                ratio,
                (lh * kap**2 + 1.0) * a / 2.0 - kap,
            ),
        )
    else:
        raise ValueError(f"unknown plane {plane!r}")
    return BoundaryCurves(plane=plane, lines=lines)


def string_boundary_wK(
    plane: str,
    fixed_gain: float,
    chain: Chain,
    omega_grid,
    K_grid,
) -> BoundaryCurves:
    """Positive-frequency string-stability boundary curves.

    For every (omega, K) the condition G(j*omega) = e^(-j*K) is linear in the
    two free gains of the plane; each sample solves that 2x2 system. Samples
    whose system is near singular are skipped (curve gaps are tolerated).
    By construction every returned point satisfies |G(j*omega)| = 1 and
    arg G = -K.
    """
    hv, _ = _require_boundary_chain(chain)
    if len(np.atleast_1d(K_grid)) == 0:
        raise ValueError("K grid must not be empty")
    cav = chain.cav
    kap, xi, n = cav.kappa, cav.xi, chain.n
    pts: list[BoundaryPoint] = []
    skipped = 0
    for K in np.atleast_1d(K_grid):
        cK, sK = math.cos(K), math.sin(K)
        for w in np.atleast_1d(omega_grid):
            gr, gi = hv_gamma(w, hv, n) if n else (1.0, 0.0)
            p1 = kap * (gr * cK - gi * sK - 1.0)
            q1 = -w * (gr * sK + gi * cK)
            p2 = kap * (gr * sK + gi * cK) - w
            q2 = w * (gr * cK - gi * sK) - w
            if plane == PLANE_A_B1:
                bn = fixed_gain
                r1 = w * (bn * sK - w)
                r2 = bn * w * (1.0 - cK) - w**3 * xi
                det = p1 * q2 - p2 * q1
                if abs(det) < 1e-10:
                    skipped += 1
                    continue
                x = (q2 * r1 - q1 * r2) / det
                y = (p1 * r2 - p2 * r1) / det
            elif plane == PLANE_B1_BN:
                a = fixed_gain
                # eq1: q1*B1 - w*sin(K)*BN = -p1*A - w^2
                # eq2: q2*B1 + w*(cos(K)-1)*BN = -p2*A - w^3*xi
                q3 = -w * sK
                q4 = w * (cK - 1.0)
                r3 = -p1 * a - w * w
                r4 = -p2 * a - w**3 * xi
                det = q1 * q4 - q2 * q3
                if abs(det) < 1e-10:
                    skipped += 1
                    continue
                x = (q4 * r3 - q3 * r4) / det
                y = (q1 * r4 - q2 * r3) / det
            else:
                raise ValueError(f"unknown plane {plane!r}")
            pts.append(BoundaryPoint(float(x), float(y), omega=float(w), K=float(K)))
    if skipped:
        log.debug("string_boundary_wK: skipped %d near-singular samples", skipped)
    return BoundaryCurves(plane=plane, points=tuple(pts))


def plant_boundary(
    plane: str, fixed_gain: float, chain: Chain, Omega_grid=None
) -> BoundaryCurves:
    """Plant-stability boundaries: the A = 0 line plus the curve where a
    conjugate root pair sits on the imaginary axis (a single line in the
    B1-BN plane)."""
    cav = chain.cav
    kap, xi = cav.kappa, cav.xi
    if plane == PLANE_A_B1:
        bn = fixed_gain
        grid = np.linspace(0.0, 2.0, 100) if Omega_grid is None else np.atleast_1d(Omega_grid)
        pts = tuple(
            BoundaryPoint(
                float(om * om / kap),
                float((xi - 1.0 / kap) * om * om - bn),
                Omega=float(om),
            )
            for om in grid
        )
        return BoundaryCurves(
            plane=plane,
            lines=(BoundaryLine("plant_A0", 1.0, 0.0, 0.0),),
            points=pts,
        )
    if plane == PLANE_B1_BN:
        a = fixed_gain
        return BoundaryCurves(
            plane=plane,
            lines=(BoundaryLine("plant_jOmega", 1.0, 1.0, -a * (kap * xi - 1.0)),),
        )
    raise ValueError(f"unknown plane {plane!r}")


def clip_line_to_window(
    line: BoundaryLine,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
) -> list[tuple[float, float]]:
    """Intersect a*x + b*y + c = 0 with a window rectangle; returns the two
    segment endpoints (empty when the line misses the window)."""
    x0, x1 = x_range
    y0, y1 = y_range
    a, b, c = line.a, line.b, line.c
    hits: list[tuple[float, float]] = []
    if abs(b) > 1e-300:
        for x in (x0, x1):
            y = -(a * x + c) / b
            if y0 - 1e-12 <= y <= y1 + 1e-12:
                hits.append((x, y))
    if abs(a) > 1e-300:
        for y in (y0, y1):
            x = -(b * y + c) / a
            if x0 - 1e-12 <= x <= x1 + 1e-12:
                hits.append((x, y))
    uniq: list[tuple[float, float]] = []
    for p in hits:
        if not any(abs(p[0] - q[0]) < 1e-9 and abs(p[1] - q[1]) < 1e-9 for q in uniq):
            uniq.append(p)
    uniq.sort()
    return uniq[:2] if len(uniq) >= 2 else []


def write_boundary_csv(
    path,
    curves: BoundaryCurves,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
) -> int:
    """Write boundary polylines as ``plane,param1,param2,x,y`` rows.

    Lines become two-point segments clipped to the window; parameterized
    points are emitted inside the window only, ordered by parameter. Returns
    the number of rows written.
    """
    rows: list[str] = []
    for line in curves.lines:
        for (x, y) in clip_line_to_window(line, x_range, y_range):
            rows.append(f"{curves.plane},,,{x!r},{y!r}")
    pts = sorted(
        (p for p in curves.points if _in_window(p, x_range, y_range)),
        key=lambda p: (p.K if p.K is not None else -1.0, p.omega or 0.0, p.Omega or 0.0),
    )
    for p in pts:
        p1 = "" if p.Omega is None and p.omega is None else repr(p.Omega if p.Omega is not None else p.omega)
        p2 = "" if p.K is None else repr(p.K)
        rows.append(f"{curves.plane},{p1},{p2},{p.x!r},{p.y!r}")
    with open(path, "w") as f:
        f.write("plane,param1,param2,x,y\n")
        for r in rows:
            f.write(r + "\n")
    return len(rows)


def _in_window(p: BoundaryPoint, x_range, y_range) -> bool:
    return x_range[0] <= p.x <= x_range[1] and y_range[0] <= p.y <= y_range[1]
