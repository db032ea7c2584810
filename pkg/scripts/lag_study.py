#!/usr/bin/env python3
"""Effect of the actuation lag on the filtered controller.

Runs the brake-resume scenario with the unsafe gain point under the safety
filter for a sweep of lags and prints how the minimum gap and the filter
engagement change (the larger the lag, the later and shorter the
intervention).

    python3 scripts/lag_study.py
"""

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

hv = HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=0.9)
cbf = CbfParams(kappa_sf=0.6, D_sf=1.0, gamma=1.0, gamma_e=1.0)
profile = BrakeResume(v_eq=20.0, v_pert=15.0, a_brake=7.0, a_resume=3.0, t_start=5.0)

print("xi_s,dt_s,min_D0_m,min_h,filter_active_s")
for xi in (1e-3, 0.1, 0.2, 0.4, 0.6, 1.0):
    dt = min(0.01, xi / 10.0)
    cav = CavParams(A=0.6, B={1: 0.53, 2: 0.5}, kappa=0.6, xi=xi)
    scenario = Scenario(
        n_hv=1, head_profile=profile, initial=Equilibrium(20.0), t_final=40.0, dt=dt
    )
    traj = simulate(scenario, Chain(cav=cav, hvs=(hv,)), cbf, controller="filtered")
    print(
        f"{xi!r},{dt!r},{traj.min_D0:.4f},{traj.min_h:.4f},"
        f"{traj.filter_active_seconds:.3f}"
    )
