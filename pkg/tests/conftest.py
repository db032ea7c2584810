import pytest

from ccc_safety import (
    BrakeResume,
    CavParams,
    CbfParams,
    Chain,
    Equilibrium,
    HvParams,
    SafetyEnvelope,
    Scenario,
)

# Baseline constants of the numerical case studies.
V_MAX = 30.0
D_ST = 5.0
A_MIN = 7.0
A_MAX = 3.0


@pytest.fixture
def hv_base() -> HvParams:
    return HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=0.9, D_st=D_ST, v_max=V_MAX)


@pytest.fixture
def cav_p() -> CavParams:
    # "safe" gain point: (A, B1, B2) = (0.6, 0.53, 0.03)
    return CavParams(A=0.6, B={1: 0.53, 2: 0.03}, kappa=0.6, xi=0.2, D_st=D_ST, v_max=V_MAX)


@pytest.fixture
def cav_q() -> CavParams:
    # "unsafe" gain point: (A, B1, B2) = (0.6, 0.53, 0.5)
    return CavParams(A=0.6, B={1: 0.53, 2: 0.5}, kappa=0.6, xi=0.2, D_st=D_ST, v_max=V_MAX)


@pytest.fixture
def cbf_base() -> CbfParams:
    return CbfParams(kappa_sf=0.6, D_sf=1.0, gamma=1.0, gamma_e=1.0)


@pytest.fixture
def env_base() -> SafetyEnvelope:
    return SafetyEnvelope(v_bar=15.0, a_min=A_MIN, a_bar=A_MIN)


@pytest.fixture
def chain_p(cav_p, hv_base) -> Chain:
    return Chain(cav=cav_p, hvs=(hv_base,))


@pytest.fixture
def chain_q(cav_q, hv_base) -> Chain:
    return Chain(cav=cav_q, hvs=(hv_base,))


@pytest.fixture
def brake_profile() -> BrakeResume:
    return BrakeResume(v_eq=20.0, v_pert=15.0, a_brake=A_MIN, a_resume=A_MAX, t_start=5.0)


@pytest.fixture
def brake_scenario(brake_profile) -> Scenario:
    return Scenario(
        n_hv=1,
        head_profile=brake_profile,
        initial=Equilibrium(v_star=20.0),
        t_final=40.0,
        dt=0.01,
    )
