#!/usr/bin/env python3
"""Brake-resume case study: safe gains vs unsafe gains vs the safety filter.

Reproduces the three-controller comparison at desk scale and writes one
trajectory CSV per controller plus a short console summary.

    python3 scripts/run_brake_resume.py [outdir]
"""

import sys

from ccc_safety import (
    BrakeResume,
    CavParams,
    CbfParams,
    Chain,
    Equilibrium,
    HvParams,
    Scenario,
    simulate,
)

OUT = sys.argv[1] if len(sys.argv) > 1 else "."

hv = HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=0.9)
cbf = CbfParams(kappa_sf=0.6, D_sf=1.0, gamma=1.0, gamma_e=1.0)
gains_p = CavParams(A=0.6, B={1: 0.53, 2: 0.03}, kappa=0.6, xi=0.2)
gains_q = CavParams(A=0.6, B={1: 0.53, 2: 0.5}, kappa=0.6, xi=0.2)

profile = BrakeResume(v_eq=20.0, v_pert=15.0, a_brake=7.0, a_resume=3.0, t_start=5.0)
scenario = Scenario(
    n_hv=1, head_profile=profile, initial=Equilibrium(20.0), t_final=40.0, dt=0.01
)

runs = [
    ("safe_gains_nominal", gains_p, "nominal"),
    ("unsafe_gains_nominal", gains_q, "nominal"),
    ("unsafe_gains_filtered", gains_q, "filtered"),
]
for name, cav, controller in runs:
    traj = simulate(scenario, Chain(cav=cav, hvs=(hv,)), cbf, controller=controller)
    path = f"{OUT}/{name}.csv"
    traj.to_csv(path)
    print(
        f"{name:24s} min_h={traj.min_h:+8.4f}  min_D0={traj.min_D0:7.3f} m  "
        f"filter_active={traj.filter_active_seconds:5.2f} s  -> {path}"
    )
