"""Closed-form safe-gain regions, the critical lag, and safety charts.

The safe-region bounds are sufficient conditions derived for the lagged CAV
under bounded speed differences and bounded lead acceleration. Chart cells
are classified by plant stability, numeric string stability, and the safe
bounds evaluated at the cell's exact gains; the three flags are independent
(safety is never silently merged with stability).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import CavParams, CbfParams, Chain, HvParams, XI_LAG_FREE
from . import stability
from .stability import (
    PLANE_A_B1,
    PLANE_B1_BN,
    BoundaryCurves,
    BoundaryLine,
    BoundaryPoint,
    STRING_TOL,
)


class HypothesisError(ValueError):
    """A hypothesis of a safe-region result is violated by the parameters."""


@dataclass(frozen=True)
class SafetyEnvelope:
    """Disturbance bounds the safe-region results assume: speed differences
    within +-v_bar, lead braking no harder than -a_min, and (for the
    acceleration-feedback law) link accelerations within +-a_bar."""

    v_bar: float
    a_min: float
    a_bar: float | None = None

    def __post_init__(self) -> None:
        if self.v_bar <= 0 or self.a_min <= 0:
            raise ValueError("v_bar and a_min must be positive")
        if self.a_bar is not None and self.a_bar <= 0:
            raise ValueError("a_bar must be positive when given")


@dataclass(frozen=True)
class SafeBounds:
    """Admissible interval for the distance gain A; empty when infeasible."""

    A_lower: float
    A_upper: float

    @property
    def feasible(self) -> bool:
        return self.A_lower <= self.A_upper

    def contains(self, A: float) -> bool:
        return self.feasible and self.A_lower <= A <= self.A_upper


def optimal_gamma(xi: float, kappa_sf: float) -> float:
    """Barrier-extension slope that maximizes the upper gain bound."""
    if xi < XI_LAG_FREE:
        raise HypothesisError("optimal gamma requires a positive lag xi")
    return (1.0 - xi * kappa_sf) / (2.0 * xi)


def _check_hypotheses(p: CavParams, c: CbfParams, gamma: float) -> None:
    if p.D_st <= c.D_sf:
        raise HypothesisError("requires D_st > D_sf")
    if not (c.kappa_sf >= p.kappa > 0):
        raise HypothesisError("requires kappa_sf >= kappa > 0")
    if gamma <= 0:
        raise HypothesisError("requires gamma > 0")
    if not (XI_LAG_FREE <= p.xi < 1.0 / c.kappa_sf):
        raise HypothesisError("requires 0 < xi < 1/kappa_sf")


def _upper_bound(xi: float, kappa_sf: float, gamma: float) -> float:
    peak = (1.0 - xi * kappa_sf) ** 2 / (4.0 * xi)
    return peak - xi * (gamma - (1.0 - xi * kappa_sf) / (2.0 * xi)) ** 2


def _n1(p: CavParams, c: CbfParams) -> float:
    return abs(c.kappa_sf - p.xi * c.kappa_sf**2 - p.B[1]) + sum(
        p.B[k] for k in p.Phi
    )


def safe_gain_bounds(
    p: CavParams, c: CbfParams, env: SafetyEnvelope, gamma: float | None = None
) -> SafeBounds:
    """Safe interval for the distance gain A of the speed/distance CCC law.

    ``gamma`` defaults to :func:`optimal_gamma`, which maximizes the upper
    bound; pass the run-time filter slope to evaluate the full two-term
    expression instead.
    """
    if gamma is None:
        gamma = optimal_gamma(p.xi, c.kappa_sf)
    _check_hypotheses(p, c, gamma)
    lower = (_n1(p, c) * env.v_bar + p.xi * c.kappa_sf * env.a_min) / (
        p.kappa * (p.D_st - c.D_sf)
    )
    return SafeBounds(A_lower=lower, A_upper=_upper_bound(p.xi, c.kappa_sf, gamma))


def safe_gain_bounds_accel(
    p: CavParams, c: CbfParams, env: SafetyEnvelope, gamma: float | None = None
) -> SafeBounds:
    """Safe interval for A when the law also feeds back link accelerations
    bounded by +-a_bar."""
    if env.a_bar is None:
        raise HypothesisError("acceleration-feedback bounds need env.a_bar")
    if gamma is None:
        gamma = optimal_gamma(p.xi, c.kappa_sf)
    _check_hypotheses(p, c, gamma)
    n2 = abs(p.xi * c.kappa_sf - p.C.get(1, 0.0)) + sum(
        abs(p.C.get(k, 0.0)) for k in p.Phi
    )
    lower = (_n1(p, c) * env.v_bar + n2 * env.a_bar) / (p.kappa * (p.D_st - c.D_sf))
    return SafeBounds(A_lower=lower, A_upper=_upper_bound(p.xi, c.kappa_sf, gamma))


def critical_lag(
    c: CbfParams, env: SafetyEnvelope, kappa: float, D_st: float
) -> float:
    """Largest lag for which any safe gain choice exists (closed form)."""
    if D_st <= c.D_sf:
        raise HypothesisError("requires D_st > D_sf")
    if kappa <= 0:
        raise HypothesisError("requires kappa > 0")
    rho = math.sqrt(4.0 * c.kappa_sf * env.a_min / (kappa * (D_st - c.D_sf)))
    return 1.0 / (c.kappa_sf + rho)


@dataclass(frozen=True)
class SafeSegment:
    """Safe region in the unbounded speed-difference limit: the B gains pin
    to a point and A to an interval."""

    B1: float
    A_lower: float
    A_upper: float

    @property
    def feasible(self) -> bool:
        return self.A_lower <= self.A_upper


def vbar_infinity_region(
    xi: float, c: CbfParams, env: SafetyEnvelope, kappa: float, D_st: float
) -> SafeSegment:
    """Limit of the safe region as the speed-difference bound grows without
    limit: B1 = kappa_sf - xi*kappa_sf^2, all connected gains zero, and A in
    a closed interval."""
    if D_st <= c.D_sf:
        raise HypothesisError("requires D_st > D_sf")
    if not (XI_LAG_FREE <= xi < 1.0 / c.kappa_sf):
        raise HypothesisError("requires 0 < xi < 1/kappa_sf")
    return SafeSegment(
        B1=c.kappa_sf - xi * c.kappa_sf**2,
        A_lower=xi * c.kappa_sf * env.a_min / (kappa * (D_st - c.D_sf)),
        A_upper=(1.0 - xi * kappa) ** 2 / (4.0 * xi),
    )


# ---------------------------------------------------------------------------
# Safety charts


@dataclass
class ChartGrid:
    """Rectangular gain-plane sweep with per-cell classification flags.

    Arrays are indexed [iy, ix]; ``x``/``y`` hold the grid coordinates.
    ``boundaries`` carries the analytic boundary overlays; ``meta`` records
    the fixed parameters of the sweep.
    """

    plane: str
    x: np.ndarray
    y: np.ndarray
    plant: np.ndarray
    string: np.ndarray
    safe: np.ndarray
    sup_gain: np.ndarray
    boundaries: tuple[BoundaryCurves, ...] = ()
    meta: dict = field(default_factory=dict)

    @property
    def safe_count(self) -> int:
        return int(self.safe.sum())

    def to_csv(self, path) -> None:
        """Write ``x,y,plant,string,safe,sup_gain`` rows, y-major order."""
        with open(path, "w") as f:
            f.write("x,y,plant,string,safe,sup_gain\n")
            for iy in range(len(self.y)):
                for ix in range(len(self.x)):
                    f.write(
                        f"{float(self.x[ix])!r},{float(self.y[iy])!r},"
                        f"{int(self.plant[iy, ix])},{int(self.string[iy, ix])},"
                        f"{int(self.safe[iy, ix])},{float(self.sup_gain[iy, ix])!r}\n"
                    )

    def to_svg(self, path) -> None:
        with open(path, "w") as f:
            f.write(chart_svg(self))


DEFAULT_RANGES = {
    PLANE_A_B1: ((0.0, 1.5), (0.0, 1.5)),
    PLANE_B1_BN: ((0.0, 1.5), (0.0, 1.0)),
}


def _cell_gains(plane, X, Y, fixed_gain):
    if plane == PLANE_A_B1:
        return X, Y, np.full_like(X, fixed_gain)
    if plane == PLANE_B1_BN:
        return np.full_like(X, fixed_gain), X, Y
    raise ValueError(f"unknown plane {plane!r}")


def safe_region_boundary(
    plane: str,
    fixed_gain: float,
    p: CavParams,
    c: CbfParams,
    env: SafetyEnvelope,
    x_range: tuple[float, float],
    gamma: float | None = None,
    samples: int = 201,
) -> BoundaryCurves:
    """Polylines where the safe-gain bounds hold with equality."""
    xi = p.xi
    lag_free = xi < XI_LAG_FREE
    margin = p.kappa * (p.D_st - c.D_sf)
    center = c.kappa_sf - xi * c.kappa_sf**2
    lag_term = xi * c.kappa_sf * env.a_min
    a_up = math.inf if lag_free else _upper_bound(
        xi, c.kappa_sf, optimal_gamma(xi, c.kappa_sf) if gamma is None else gamma
    )
    pts: list[BoundaryPoint] = []
    lines: list[BoundaryLine] = []
    xs = np.linspace(x_range[0], x_range[1], samples)
    if plane == PLANE_A_B1:
        # lower V: A = (|center - B1| + BN)*v_bar/margin + lag_term/margin
        bn = fixed_gain
        for b1 in xs:
            a_lo = ((abs(center - b1) + bn) * env.v_bar + lag_term) / margin
            pts.append(BoundaryPoint(float(a_lo), float(b1)))
        if math.isfinite(a_up):
            lines.append(BoundaryLine("safe_upper", 1.0, 0.0, -a_up))
    elif plane == PLANE_B1_BN:
        a = fixed_gain
        if a <= a_up:
            budget = (a * margin - lag_term) / env.v_bar
            for b1 in xs:
                pts.append(BoundaryPoint(float(b1), float(budget - abs(center - b1))))
    else:
        raise ValueError(f"unknown plane {plane!r}")
    return BoundaryCurves(plane=plane, lines=tuple(lines), points=tuple(pts))


def classify_chart(
    plane: str,
    chain: Chain,
    cbf: CbfParams,
    env: SafetyEnvelope,
    fixed_gain: float | None = None,
    x_range: tuple[float, float] | None = None,
    y_range: tuple[float, float] | None = None,
    resolution: tuple[int, int] = (200, 200),
    gamma: float | None = None,
    workers: int | None = None,
    include_boundaries: bool = True,
    omega_grid: np.ndarray | None = None,
) -> ChartGrid:
    """Sweep a gain plane and classify every cell.

    Per cell: plant stability (Routh-Hurwitz), head-to-tail string stability
    (numeric sup of |G|), and the closed-form safe bounds at the cell's
    exact gains. For a lag-free CAV the safe flag uses the vanishing-lag
    limit of the bounds (infinite upper bound) and the metadata records it.
    """
    cav = chain.cav
    n = chain.n
    if not chain.identical_hvs or not set(cav.Phi) <= {n + 1}:
        raise ValueError("charts require identical HVs and the single link Phi = {n+1}")
    hv = chain.hvs[0] if n else None
    if fixed_gain is None:
        if plane == PLANE_A_B1:
            fixed_gain = cav.B[n + 1] if (n + 1) in cav.Phi else 0.0
        elif plane == PLANE_B1_BN:
            fixed_gain = cav.A
        else:
            raise ValueError(f"unknown plane {plane!r}")
    if plane == PLANE_B1_BN and (n + 1) not in cav.Phi:
        raise ValueError("the B1-BN plane needs the head link in Phi")
    xr, yr = DEFAULT_RANGES[plane]
    x_range = xr if x_range is None else x_range
    y_range = yr if y_range is None else y_range
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2x2")
    x = np.linspace(x_range[0], x_range[1], nx)
    y = np.linspace(y_range[0], y_range[1], ny)
    X, Y = np.meshgrid(x, y)
    A, B1, BN = _cell_gains(plane, X, Y, fixed_gain)

    xi, kap = cav.xi, cav.kappa
    lag_free = xi < XI_LAG_FREE

    psi0 = A + B1 + BN
    a0 = A * kap
    plant = (psi0 > 0.0) & (a0 > 0.0)
    if not lag_free:
        plant &= psi0 > xi * a0

    grid = stability.default_omega_grid() if omega_grid is None else omega_grid
    sup = np.empty(A.size)
    flat = (A.ravel(), B1.ravel(), BN.ravel())
    n_workers = workers or min(8, os.cpu_count() or 1)
    chunks = np.array_split(np.arange(A.size), max(1, min(n_workers * 4, A.size)))

    def run(ix):
        sup[ix] = stability._sup_gain_cells(
            flat[0][ix], flat[1][ix], flat[2][ix], kap, xi, hv, n, grid
        )

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(run, chunks))
    else:
        for ix in chunks:
            run(ix)
    sup = sup.reshape(A.shape)
    string = plant & (sup < 1.0 - STRING_TOL)

    # Safe bounds at the cell's exact gains; hypotheses checked once.
    if cbf.kappa_sf < kap:
        raise HypothesisError("requires kappa_sf >= kappa")
    if cav.D_st <= cbf.D_sf:
        raise HypothesisError("requires D_st > D_sf")
    margin = kap * (cav.D_st - cbf.D_sf)
    center = cbf.kappa_sf - xi * cbf.kappa_sf**2
    n2 = 0.0
    if cav.C:
        if env.a_bar is None:
            raise HypothesisError("acceleration-feedback chart needs env.a_bar")
        n2 = abs(xi * cbf.kappa_sf - cav.C.get(1, 0.0)) + sum(
            abs(cav.C.get(k, 0.0)) for k in cav.Phi
        )
    a_lo = ((np.abs(center - B1) + BN) * env.v_bar + xi * cbf.kappa_sf * env.a_min + n2 * (env.a_bar or 0.0)) / margin
    if lag_free:
        a_up = math.inf
    else:
        g = optimal_gamma(xi, cbf.kappa_sf) if gamma is None else gamma
        if g <= 0:
            raise HypothesisError("requires gamma > 0")
        a_up = _upper_bound(xi, cbf.kappa_sf, g)
    safe = (A >= a_lo) & (A <= a_up)

    boundaries: tuple[BoundaryCurves, ...] = ()
    if include_boundaries:
        bchain = chain
        k_grid = np.arange(12) * (math.pi / 6.0)
        w_grid = np.logspace(-3, 2, 200)
        omg = np.linspace(0.0, math.sqrt(max(x_range[1], 1.0) * kap) * 1.5, 120)
        boundaries = (
            stability.plant_boundary(plane, fixed_gain, bchain, Omega_grid=omg),
            stability.string_boundary_w0(plane, fixed_gain, bchain),
            stability.string_boundary_wK(plane, fixed_gain, bchain, w_grid, k_grid),
            safe_region_boundary(plane, fixed_gain, cav, cbf, env, x_range, gamma=gamma),
        )

    return ChartGrid(
        plane=plane,
        x=x,
        y=y,
        plant=plant,
        string=string,
        safe=safe,
        sup_gain=sup,
        boundaries=boundaries,
        meta={
            "plane": plane,
            "fixed_gain": fixed_gain,
            "xi": xi,
            "n": n,
            "v_bar": env.v_bar,
            "a_min": env.a_min,
            "gamma": "optimal" if gamma is None else gamma,
            "lag_free_limit": lag_free,
            "x_range": list(x_range),
            "y_range": list(y_range),
            "resolution": [nx, ny],
        },
    )


# ---------------------------------------------------------------------------
# SVG rendering (flat-color cells plus boundary polylines, no plotting deps)

_CELL_COLORS = {
    ("unstable"): "#ffffff",
    ("plant"): "#f2b8b5",
    ("string"): "#a8c7e7",
    ("safe"): "#79c779",
}

_LINE_COLORS = {
    "plant_A0": "#a01010",
    "plant_jOmega": "#a01010",
    "string_w0": "#1f4e9c",
    "string_w0_A0": "#1f4e9c",
    "safe_upper": "#1a661a",
}


def chart_svg(grid: ChartGrid, width: int = 720, height: int = 720) -> str:
    """Render a chart as a standalone SVG string."""
    m = 48  # margin, px
    pw, ph = width - 2 * m, height - 2 * m
    x0, x1 = float(grid.x[0]), float(grid.x[-1])
    y0, y1 = float(grid.y[0]), float(grid.y[-1])

    def px(x):
        return m + (x - x0) / (x1 - x0) * pw

    def py(y):
        return height - m - (y - y0) / (y1 - y0) * ph

    nx, ny = len(grid.x), len(grid.y)
    cw, ch = pw / nx, ph / ny
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    # flat-color cells, merged into horizontal runs
    for iy in range(ny):
        ix = 0
        ytop = py(float(grid.y[iy])) - ch / 2
        while ix < nx:
            if grid.safe[iy, ix]:
                key = "safe"
            elif grid.string[iy, ix]:
                key = "string"
            elif grid.plant[iy, ix]:
                key = "plant"
            else:
                key = "unstable"
            j = ix
            while j + 1 < nx:
                jn = j + 1
                if grid.safe[iy, jn]:
                    k2 = "safe"
                elif grid.string[iy, jn]:
                    k2 = "string"
                elif grid.plant[iy, jn]:
                    k2 = "plant"
                else:
                    k2 = "unstable"
                if k2 != key:
                    break
                j = jn
            if key != "unstable":
                xl = px(float(grid.x[ix])) - cw / 2
                wpx = px(float(grid.x[j])) + cw / 2 - xl
                out.append(
                    f'<rect x="{xl:.2f}" y="{ytop:.2f}" width="{wpx:.2f}" '
                    f'height="{ch + 0.5:.2f}" fill="{_CELL_COLORS[key]}"/>'
                )
            ix = j + 1
    # boundary overlays
    for curves in grid.boundaries:
        for line in curves.lines:
            seg = stability.clip_line_to_window(line, (x0, x1), (y0, y1))
            if len(seg) == 2:
                color = _LINE_COLORS.get(line.label, "#333333")
                out.append(
                    f'<line x1="{px(seg[0][0]):.2f}" y1="{py(seg[0][1]):.2f}" '
                    f'x2="{px(seg[1][0]):.2f}" y2="{py(seg[1][1]):.2f}" '
                    f'stroke="{color}" stroke-width="1.5"/>'
                )
        groups: dict[float | None, list[BoundaryPoint]] = {}
        for p in curves.points:
            if x0 <= p.x <= x1 and y0 <= p.y <= y1:
                groups.setdefault(p.K, []).append(p)
        for kval, pts in groups.items():
            pts.sort(key=lambda p: (p.omega or p.Omega or 0.0))
            if len(pts) < 2:
                continue
            if kval is None:
                color = "#a01010" if pts[0].Omega is not None else "#1a661a"
            else:
                hue = int(360 * kval / (2 * math.pi))
                color = f"hsl({hue},85%,45%)"
            chunks: list[list[BoundaryPoint]] = [[pts[0]]]
            for a, b in zip(pts, pts[1:]):
                # break the polyline across window exits
                if abs(b.x - a.x) > 0.25 * (x1 - x0) or abs(b.y - a.y) > 0.25 * (y1 - y0):
                    chunks.append([])
                chunks[-1].append(b)
            for chunk in chunks:
                if len(chunk) < 2:
                    continue
                path = " ".join(f"{px(p.x):.2f},{py(p.y):.2f}" for p in chunk)
                out.append(
                    f'<polyline points="{path}" fill="none" stroke="{color}" '
                    f'stroke-width="1.2"/>'
                )
    # frame and axis labels
    out.append(
        f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#000000" stroke-width="1"/>'
    )
    xlab, ylab = grid.plane.split("-")
    out.append(
        f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{xlab} '
        f'[{x0:g}, {x1:g}]</text>'
    )
    out.append(
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{ylab} [{y0:g}, {y1:g}]</text>'
    )
    out.append("</svg>")
    return "\n".join(out)
