#!/usr/bin/env python3
"""Safety/stability chart gallery over the lag sweep.

Builds the leader-only (A, B1) charts for several lags and the connected
(B1, B2) chart at the baseline lag, writing CSV + SVG for each.

    python3 scripts/make_charts.py [outdir] [resolution]
"""

import sys
import time

from ccc_safety import (
    CavParams,
    CbfParams,
    Chain,
    HvParams,
    SafetyEnvelope,
    classify_chart,
)

OUT = sys.argv[1] if len(sys.argv) > 1 else "."
RES = int(sys.argv[2]) if len(sys.argv) > 2 else 200

hv = HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=0.9)
cbf = CbfParams(kappa_sf=0.6, D_sf=1.0, gamma=1.0, gamma_e=1.0)
env = SafetyEnvelope(v_bar=15.0, a_min=7.0, a_bar=7.0)

for xi in (0.0, 0.15, 0.2, 0.25):
    cav = CavParams(A=0.6, B={1: 0.53, 2: 0.03}, kappa=0.6, xi=xi)
    chain = Chain(cav=cav, hvs=(hv,))
    t0 = time.perf_counter()
    grid = classify_chart(
        "A-B1", chain, cbf, env, fixed_gain=0.0, resolution=(RES, RES)
    )
    stem = f"{OUT}/chart_A-B1_xi{xi:g}"
    grid.to_csv(stem + ".csv")
    grid.to_svg(stem + ".svg")
    print(
        f"xi={xi:4g}: safe={grid.safe_count:6d} string={int(grid.string.sum()):6d} "
        f"({time.perf_counter() - t0:.1f} s) -> {stem}.csv/.svg"
    )

cav = CavParams(A=0.6, B={1: 0.53, 2: 0.03}, kappa=0.6, xi=0.2)
chain = Chain(cav=cav, hvs=(hv,))
grid = classify_chart("B1-BN", chain, cbf, env, resolution=(RES, RES))
grid.to_csv(f"{OUT}/chart_B1-BN_xi0.2.csv")
grid.to_svg(f"{OUT}/chart_B1-BN_xi0.2.svg")
print(f"B1-BN plane at xi=0.2: safe={grid.safe_count} -> {OUT}/chart_B1-BN_xi0.2.svg")
