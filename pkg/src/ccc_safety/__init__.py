"""Safety and stability toolkit for connected cruise control.

Simulates the delayed/lagged closed-loop chain of a connected automated
vehicle behind human-driven vehicles, applies a barrier-based safety filter,
and computes analytic stability and safety charts over the controller gains.
"""

from .control import (
    ControlSnapshot,
    FilterOutcome,
    cbf_h,
    cbf_h_extended,
    ccc_nominal,
    ccc_nominal_accel,
    qp_closed_form_check,
    safe_input_ks,
    safety_filter,
)
from .errors import ComputationFault, ConfigError
from .models import (
    CavParams,
    CavState,
    CbfParams,
    Chain,
    HvParams,
    HvState,
    cav_derivatives,
    hv_derivatives,
    ovm_desired_accel,
    range_policy,
    speed_policy,
)
from .safety import (
    ChartGrid,
    SafeBounds,
    SafetyEnvelope,
    classify_chart,
    critical_lag,
    optimal_gamma,
    safe_gain_bounds,
    safe_gain_bounds_accel,
    vbar_infinity_region,
)
from .sim import (
    BrakeResume,
    ChainIntegrator,
    DataDriven,
    Equilibrium,
    ExplicitInit,
    HistoryBuffer,
    Scenario,
    Trajectory,
    equilibrium_init,
    head_profile_eval,
    load_speed_csv,
    simulate,
)
from .stability import (
    BoundaryCurves,
    BoundaryPoint,
    StabilityFlags,
    string_stability_margin,
    head_to_tail_G,
    hv_gamma,
    link_T01,
    link_T0k,
    link_Thv,
    plant_boundary,
    plant_stable,
    string_boundary_w0,
    string_boundary_wK,
    string_stable_numeric,
)

__version__ = "0.1.0"
