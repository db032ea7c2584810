import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccc_safety import (
    CavParams,
    Chain,
    HvParams,
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
from ccc_safety.stability import (
    BoundaryLine,
    PoleError,
    clip_line_to_window,
    default_omega_grid,
    frequency_response,
    hv_curvature_limit,
    write_boundary_csv,
)


# Independent oracle: assemble the transfer functions from their numerator
# and denominator polynomials with plain complex arithmetic.
def oracle_T01(s, A, B1, BN, kappa, xi):
    return (B1 * s + A * kappa) / (xi * s**3 + s**2 + (A + B1 + BN) * s + A * kappa)


def oracle_T0k(s, A, B1, BN, kappa, xi, bk):
    return (bk * s) / (xi * s**3 + s**2 + (A + B1 + BN) * s + A * kappa)


def oracle_Thv(s, Ah, Bh, kh, tau):
    return (Bh * s + Ah * kh) / (cmath.exp(s * tau) * s * s + (Ah + Bh) * s + Ah * kh)


def oracle_G(s, A, B1, BN, kappa, xi, hv: HvParams, n: int):
    g = oracle_Thv(s, hv.A_h, hv.B_h, hv.kappa_h, hv.tau) ** n if n else 1.0
    return oracle_T01(s, A, B1, BN, kappa, xi) * g + oracle_T0k(
        s, A, B1, BN, kappa, xi, BN
    )


def test_link_T01_dc_gain(cav_p):
    assert link_T01(0.0, cav_p) == 1.0
    cav0 = CavParams(A=0.0, B={1: 0.5, 2: 0.1}, kappa=0.6, xi=0.2)
    with pytest.raises(PoleError):
        link_T01(0.0, cav0)


def test_links_match_independent_oracle(cav_p, cav_q, hv_base):
    s = 1j * 1.0
    assert link_T01(s, cav_p) == pytest.approx(
        oracle_T01(s, 0.6, 0.53, 0.03, 0.6, 0.2), abs=1e-14
    )
    s = 1j * 0.5
    assert link_T0k(s, cav_q, 2) == pytest.approx(
        oracle_T0k(s, 0.6, 0.53, 0.5, 0.6, 0.2, 0.5), abs=1e-14
    )
    s = 1j * 1.0
    assert link_Thv(s, hv_base) == pytest.approx(
        oracle_Thv(s, 0.1, 0.6, 0.6, 0.9), abs=1e-14
    )


def test_link_T0k_zero_cases(cav_q):
    assert link_T0k(0.0, cav_q, 2) == 0.0
    cav = CavParams(A=0.6, B={1: 0.53, 2: 0.0}, kappa=0.6, xi=0.2)
    for w in (0.1, 1.0, 10.0):
        assert link_T0k(1j * w, cav, 2) == 0.0


def test_link_Thv_delay_free_reduces_to_rational():
    hv = HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=1e-12)
    s = 1j * 0.8
    rational = (0.6 * s + 0.06) / (s * s + 0.7 * s + 0.06)
    assert link_Thv(s, hv) == pytest.approx(rational, abs=1e-9)
    assert link_Thv(0.0, hv) == pytest.approx(1.0)


def test_head_to_tail_dc_and_reduction(chain_p, cav_p):
    assert head_to_tail_G(0.0, chain_p) == 1.0
    solo = Chain(cav=CavParams(A=0.6, B={1: 0.5}, kappa=0.6, xi=0.2), hvs=())
    s = 1j * 0.7
    assert head_to_tail_G(s, solo) == link_T01(s, solo.cav)


def test_head_to_tail_general_composition(hv_base):
    # two distinct HVs and two connected links exercise the product form
    hv2 = HvParams(A_h=0.2, B_h=0.5, kappa_h=0.7, tau=0.6)
    cav = CavParams(A=0.6, B={1: 0.4, 2: 0.1, 3: 0.05}, kappa=0.6, xi=0.2)
    chain = Chain(cav=cav, hvs=(hv_base, hv2))
    s = 1j * 0.9
    t1 = link_Thv(s, hv_base)
    t2 = link_Thv(s, hv2)
    expect = (
        link_T01(s, cav) * (t1 * t2)
        + link_T0k(s, cav, 2) * t2
        + link_T0k(s, cav, 3)
    )
    assert head_to_tail_G(s, chain) == pytest.approx(expect, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(
    w=st.floats(1e-3, 50.0),
    a=st.floats(0.05, 1.5),
    b1=st.floats(0.0, 1.5),
    bn=st.floats(0.0, 1.0),
)
def test_conjugate_symmetry(w, a, b1, bn):
    hv = HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=0.9)
    cav = CavParams(A=a, B={1: b1, 2: bn}, kappa=0.6, xi=0.2)
    chain = Chain(cav=cav, hvs=(hv,))
    s = complex(0.3, w)
    assert head_to_tail_G(s.conjugate(), chain) == pytest.approx(
        head_to_tail_G(s, chain).conjugate(), rel=1e-12, abs=1e-12
    )


def test_plant_stable_examples(cav_p):
    # Routh-Hurwitz margin: Psi0 = 1.16 > xi*A*kappa = 0.072
    assert plant_stable(cav_p)
    marginal = CavParams(A=0.0, B={1: 0.5, 2: 0.1}, kappa=0.6, xi=0.2)
    assert not plant_stable(marginal)


def test_plant_stable_matches_eigenvalue_oracle():
    rng = np.random.default_rng(11)
    agree = 0
    for _ in range(1000):
        a = rng.uniform(0.0, 2.0)
        b1 = rng.uniform(0.0, 2.0)
        bn = rng.uniform(0.0, 1.0)
        kap = rng.uniform(0.1, 2.0)
        xi = rng.uniform(0.01, 3.0)
        cav = CavParams(A=a, B={1: b1, 2: bn}, kappa=kap, xi=xi)
        roots = np.roots([xi, 1.0, a + b1 + bn, a * kap])
        agree += plant_stable(cav) == bool(np.max(roots.real) < 0.0)
    assert agree == 1000


def test_string_stable_numeric(chain_p):
    flags = string_stable_numeric(chain_p)
    assert flags.plant_stable and flags.string_stable
    assert flags.sup_gain < 1.0
    marginal = Chain(
        cav=CavParams(A=0.0, B={1: 0.53, 2: 0.03}, kappa=0.6, xi=0.2),
        hvs=chain_p.hvs,
    )
    flags = string_stable_numeric(marginal)
    assert not flags.plant_stable and not flags.string_stable


def test_string_flag_general_path_agrees(chain_p, hv_base):
    # non-identical HVs exercise the generic product path
    hv2 = HvParams(A_h=0.1, B_h=0.6, kappa_h=0.6, tau=0.9)  # equal values, new object
    chain = Chain(cav=chain_p.cav, hvs=(hv_base, hv2))
    flags = string_stable_numeric(chain)
    assert flags.plant_stable
    assert math.isfinite(flags.sup_gain)


def test_P_criterion_sign_matches_gain(hv_base):
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = rng.uniform(0.05, 1.5)
        b1 = rng.uniform(0.0, 1.5)
        bn = rng.uniform(0.0, 1.0)
        w = 10 ** rng.uniform(-2, 1.5)
        cav = CavParams(A=a, B={1: b1, 2: bn}, kappa=0.6, xi=0.2)
        chain = Chain(cav=cav, hvs=(hv_base,))
        p = string_stability_margin(w, chain)
        mag = abs(head_to_tail_G(1j * w, chain))
        if abs(mag - 1.0) > 1e-9:
            assert (p > 0) == (mag < 1.0)


def test_P_criterion_positive_for_stable_gains(chain_p):
    assert all(string_stability_margin(w, chain_p) > 0 for w in default_omega_grid())


def test_P_criterion_zero_on_boundary(chain_p, hv_base):
    curves = string_boundary_wK(
        "A-B1", 0.03, chain_p, np.array([0.4]), np.array([2.0])
    )
    p = curves.points[0]
    if p.x >= 0 and p.y >= 0:
        cav = CavParams(A=p.x, B={1: p.y, 2: 0.03}, kappa=0.6, xi=0.2)
        chain = Chain(cav=cav, hvs=(hv_base,))
        assert abs(string_stability_margin(p.omega, chain)) < 1e-6


def test_hv_gamma_low_frequency_limits(hv_base):
    gr, gi = hv_gamma(1e-5, hv_base, 1)
    assert gr == pytest.approx(1.0, abs=1e-6)
    assert gi == pytest.approx(0.0, abs=1e-4)
    assert gi / 1e-5 == pytest.approx(-1.0 / 0.6, rel=1e-3)
    lh = hv_curvature_limit(hv_base, 1)
    assert lh == pytest.approx(0.1 / (0.1 * 0.36))
    assert (1.0 - gr**2 - gi**2) / 1e-10 == pytest.approx(lh, rel=1e-3)
    # n-fold limits scale with the chain length
    gr3, gi3 = hv_gamma(1e-5, hv_base, 3)
    assert gi3 / 1e-5 == pytest.approx(-3.0 / 0.6, rel=1e-3)


def test_string_boundary_w0_lines(chain_p):
    # B1-BN plane with A fixed: B1 = -A - 2*B2 + 0.6 for the baseline chain
    curves = string_boundary_w0("B1-BN", 0.6, chain_p)
    (line,) = curves.lines
    # line.a*x + line.b*y + line.c = 0 normalized to x + ratio*y + c
    for b2 in (0.0, 0.1, 0.3):
        b1 = -0.6 - 2.0 * b2 + 0.6
        assert line.residual(b1, b2) == pytest.approx(0.0, abs=1e-12)
    # A-B1 plane carries the A = 0 branch as well
    curves = string_boundary_w0("A-B1", 0.03, chain_p)
    labels = {l.label for l in curves.lines}
    assert "string_w0_A0" in labels
    a0 = next(l for l in curves.lines if l.label == "string_w0_A0")
    assert a0.residual(0.0, 0.7) == 0.0


def test_string_boundary_w0_leader_only_degenerate(hv_base):
    # no connected link: the line reduces to B1 = -A/2 + kappa (L_h drops for n=0)
    cav = CavParams(A=0.6, B={1: 0.5}, kappa=0.6, xi=0.2)
    chain = Chain(cav=cav, hvs=())
    curves = string_boundary_w0("A-B1", 0.0, chain)
    line = next(l for l in curves.lines if l.label == "string_w0")
    for a in (0.0, 0.4, 1.0):
        assert line.residual(a, -a / 2.0 + 0.6) == pytest.approx(0.0, abs=1e-12)


def test_string_boundary_wK_defining_property(chain_p, hv_base):
    wgrid = np.logspace(-3, 2, 60)
    kgrid = np.arange(12) * (math.pi / 6.0)
    for plane, fixed in (("A-B1", 0.03), ("B1-BN", 0.6)):
        curves = string_boundary_wK(plane, fixed, chain_p, wgrid, kgrid)
        assert len(curves.points) > 500
        for p in curves.points:
            if plane == "A-B1":
                g = oracle_G(1j * p.omega, p.x, p.y, fixed, 0.6, 0.2, hv_base, 1)
            else:
                g = oracle_G(1j * p.omega, fixed, p.x, p.y, 0.6, 0.2, hv_base, 1)
            assert abs(abs(g) - 1.0) < 1e-6
            arg_err = (cmath.phase(g) + p.K + math.pi) % (2 * math.pi) - math.pi
            assert abs(arg_err) < 1e-6


def test_string_boundary_wK_low_frequency_endpoint(chain_p):
    curves = string_boundary_wK(
        "A-B1", 0.03, chain_p, np.array([1e-4]), np.array([math.pi / 3, math.pi])
    )
    for p in curves.points:
        assert abs(p.x) < 1e-6  # endpoints land on the A = 0 line


def test_string_boundary_wK_empty_K_grid(chain_p):
    with pytest.raises(ValueError, match="K grid"):
        string_boundary_wK("A-B1", 0.03, chain_p, np.array([0.5]), np.array([]))


def test_boundary_point_on_curve_has_unit_sup(chain_p, hv_base):
    # a point on the active envelope: its own sup-gain sits at 1
    wgrid = np.logspace(-3, 1.2, 300)
    kgrid = np.arange(12) * (math.pi / 6.0)
    curves = string_boundary_wK("A-B1", 0.03, chain_p, wgrid, kgrid)
    found = 0
    for p in curves.points:
        if not (0 <= p.x <= 1.5 and 0 <= p.y <= 1.5):
            continue
        cav = CavParams(A=p.x, B={1: p.y, 2: 0.03}, kappa=0.6, xi=0.2)
        flags = string_stable_numeric(Chain(cav=cav, hvs=(hv_base,)))
        if abs(flags.sup_gain - 1.0) < 1e-4:
            found += 1
    assert found >= 2


def test_plant_boundary_curve_and_lines(chain_p):
    omegas = np.linspace(0.0, 1.5, 40)
    curves = plant_boundary("A-B1", 0.03, chain_p, Omega_grid=omegas)
    assert curves.points[0].x == 0.0 and curves.points[0].y == pytest.approx(-0.03)
    for p in curves.points:
        # the characteristic cubic must have a root at s = j*Omega
        s = 1j * p.Omega
        psi0 = p.x + p.y + 0.03
        residual = abs(0.2 * s**3 + s**2 + psi0 * s + p.x * 0.6)
        assert residual < 1e-9
    labels = {l.label for l in curves.lines}
    assert "plant_A0" in labels
    curves = plant_boundary("B1-BN", 0.6, chain_p)
    (line,) = curves.lines
    for b1 in (0.0, 0.4, 1.0):
        b2 = 0.6 * (0.6 * 0.2 - 1.0) - b1  # = -0.528 - b1
        assert line.residual(b1, b2) == pytest.approx(0.0, abs=1e-12)


def test_zero_frequency_unity_gain_random_chains():
    rng = np.random.default_rng(5)
    for _ in range(100):
        hv = HvParams(
            A_h=rng.uniform(0.05, 1.0),
            B_h=rng.uniform(0.0, 1.5),
            kappa_h=rng.uniform(0.1, 1.5),
            tau=rng.uniform(0.1, 1.5),
        )
        n = int(rng.integers(0, 4))
        b = {1: rng.uniform(0.0, 1.5)}
        if n:
            b[n + 1] = rng.uniform(0.0, 1.0)
        cav = CavParams(
            A=rng.uniform(0.05, 2.0), B=b, kappa=rng.uniform(0.1, 2.0), xi=rng.uniform(0.0, 1.0)
        )
        chain = Chain(cav=cav, hvs=(hv,) * n)
        assert head_to_tail_G(0.0, chain) == 1.0
        assert abs(abs(head_to_tail_G(1j * 1e-8, chain)) - 1.0) < 1e-9


def test_frequency_response_samples(chain_p):
    samples = frequency_response(chain_p, [0.1, 1.0])
    assert [s.omega for s in samples] == [0.1, 1.0]
    assert samples[0].value == pytest.approx(
        complex(head_to_tail_G(1j * 0.1, chain_p))
    )


def test_clip_line_to_window():
    seg = clip_line_to_window(BoundaryLine("x0", 1.0, 0.0, -0.5), (0, 1), (0, 1))
    assert seg == [(0.5, 0.0), (0.5, 1.0)]
    assert clip_line_to_window(BoundaryLine("miss", 1.0, 0.0, 5.0), (0, 1), (0, 1)) == []


def test_write_boundary_csv(tmp_path, chain_p):
    curves = string_boundary_wK(
        "A-B1", 0.03, chain_p, np.logspace(-2, 1, 40), np.array([math.pi / 2])
    )
    path = tmp_path / "b.csv"
    rows = write_boundary_csv(path, curves, (0.0, 1.5), (0.0, 1.5))
    lines = path.read_text().splitlines()
    assert lines[0] == "plane,param1,param2,x,y"
    assert len(lines) == rows + 1
    assert rows > 0
