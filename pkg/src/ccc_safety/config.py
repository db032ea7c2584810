"""Run configuration: a single INI-style file of ``key = value`` sections.

The schema mirrors the physical and controller constants of the vehicle
chain, field for field; every key is documented with units in the README.
Unknown sections or keys are rejected outright.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass

from .errors import ConfigError
from .models import CavParams, CbfParams, Chain, HvParams
from .safety import SafetyEnvelope
from .sim import BrakeResume, DataDriven, Equilibrium, Scenario, load_speed_csv

_GAIN_KEY = re.compile(r"^[bc][0-9]+$")

_SCHEMA: dict[str, set[str]] = {
    "limits": {"v_max", "d_st", "a_min", "a_max"},
    "hv": {"a", "b", "kappa", "tau"},
    "cav": {"a", "kappa", "xi"},  # plus B<k>/C<k> gain keys
    "cbf": {"kappa_sf", "d_sf", "gamma", "gamma_e"},
    "envelope": {"v_bar", "a_min", "a_bar"},
    "scenario": {
        "n_hv",
        "profile",
        "v_star",
        "t_start",
        "v_pert",
        "a_brake",
        "a_resume",
        "t_final",
        "dt",
        "data_file",
    },
    "chart": {"plane", "resolution", "fixed_a", "fixed_bn", "x_range", "y_range"},
    "boundaries": {
        "omega_min",
        "omega_max",
        "omega_points",
        "k_count",
        "omega_plant_max",
        "omega_plant_points",
    },
}
_REQUIRED_SECTIONS = ("limits", "hv", "cav", "cbf")


@dataclass(frozen=True)
class ChartSpec:
    plane: str
    resolution: tuple[int, int]
    fixed_A: float | None
    fixed_BN: float | None
    x_range: tuple[float, float] | None
    y_range: tuple[float, float] | None


@dataclass(frozen=True)
class BoundarySpec:
    omega_min: float
    omega_max: float
    omega_points: int
    K_count: int
    omega_plant_max: float
    omega_plant_points: int


@dataclass(frozen=True)
class RunConfig:
    chain: Chain
    cbf: CbfParams
    envelope: SafetyEnvelope
    scenario: Scenario | None
    chart: ChartSpec
    boundaries: BoundarySpec
    limits: dict[str, float]


def _f(sec, key, default=None) -> float:
    raw = sec.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing key '{key}' in section [{sec.name}]")
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a number") from None


def _parse_range(raw: str, where: str) -> tuple[float, float]:
    parts = raw.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{where} must look like 'lo:hi', got {raw!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{where} must be numeric, got {raw!r}") from None
    if hi <= lo:
        raise ConfigError(f"{where}: upper bound must exceed the lower")
    return lo, hi


def parse_resolution(raw: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", raw.strip())
    if not m:
        raise ConfigError(f"resolution must look like 'NxM', got {raw!r}")
    nx, ny = int(m.group(1)), int(m.group(2))
    if nx < 2 or ny < 2:
        raise ConfigError("resolution must be at least 2x2")
    return nx, ny


def load_config(path, require_scenario: bool = False) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    for section in parser.sections():
        name = section.lower()
        if name not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = _SCHEMA[name]
        for key in parser[section]:
            k = key.lower()
            if k in allowed:
                continue
            if name == "cav" and _GAIN_KEY.fullmatch(k):
                continue
            raise ConfigError(f"unknown key '{key}' in section [{section}]")
    for name in _REQUIRED_SECTIONS:
        if not parser.has_section(name):
            raise ConfigError(f"missing required config section [{name}]")

    lim = parser["limits"]
    limits = {
        "v_max": _f(lim, "v_max"),
        "D_st": _f(lim, "d_st"),
        "a_min": _f(lim, "a_min"),
        "a_max": _f(lim, "a_max"),
    }

    hv_sec = parser["hv"]
    try:
        hv = HvParams(
            A_h=_f(hv_sec, "a"),
            B_h=_f(hv_sec, "b"),
            kappa_h=_f(hv_sec, "kappa"),
            tau=_f(hv_sec, "tau"),
            D_st=limits["D_st"],
            v_max=limits["v_max"],
        )
    except ValueError as e:
        raise ConfigError(f"[hv] {e}") from None

    cav_sec = parser["cav"]
    b_gains: dict[int, float] = {}
    c_gains: dict[int, float] = {}
    for key in cav_sec:
        k = key.lower()
        if _GAIN_KEY.fullmatch(k):
            idx = int(k[1:])
            if idx < 1:
                raise ConfigError(f"[cav] gain index must be >= 1, got {key}")
            (b_gains if k[0] == "b" else c_gains)[idx] = _f(cav_sec, key)
    if 1 not in b_gains:
        raise ConfigError("[cav] must define the immediate-leader gain B1")
    try:
        cav = CavParams(
            A=_f(cav_sec, "a"),
            B=b_gains,
            C=c_gains,
            kappa=_f(cav_sec, "kappa"),
            xi=_f(cav_sec, "xi"),
            D_st=limits["D_st"],
            v_max=limits["v_max"],
        )
    except ValueError as e:
        raise ConfigError(f"[cav] {e}") from None

    cbf_sec = parser["cbf"]
    try:
        cbf = CbfParams(
            kappa_sf=_f(cbf_sec, "kappa_sf"),
            D_sf=_f(cbf_sec, "d_sf"),
            gamma=_f(cbf_sec, "gamma"),
            gamma_e=_f(cbf_sec, "gamma_e"),
        )
    except ValueError as e:
        raise ConfigError(f"[cbf] {e}") from None

    env_sec = parser["envelope"] if parser.has_section("envelope") else {"name": "envelope"}
    if parser.has_section("envelope"):
        envelope = SafetyEnvelope(
            v_bar=_f(env_sec, "v_bar", 15.0),
            a_min=_f(env_sec, "a_min", limits["a_min"]),
            a_bar=_f(env_sec, "a_bar", limits["a_min"]),
        )
    else:
        envelope = SafetyEnvelope(v_bar=15.0, a_min=limits["a_min"], a_bar=limits["a_min"])

    scenario = None
    n_hv = 0
    if parser.has_section("scenario"):
        sc = parser["scenario"]
        n_hv = int(_f(sc, "n_hv"))
        kind = sc.get("profile", "brake_resume").strip().lower()
        t_final = _f(sc, "t_final", 40.0)
        dt = _f(sc, "dt", 0.01)
        v_star = _f(sc, "v_star", 20.0)
        if kind in ("brake_resume", "brake-resume"):
            profile: BrakeResume | DataDriven = BrakeResume(
                v_eq=v_star,
                v_pert=_f(sc, "v_pert", 15.0),
                a_brake=_f(sc, "a_brake", limits["a_min"]),
                a_resume=_f(sc, "a_resume", limits["a_max"]),
                t_start=_f(sc, "t_start", 5.0),
            )
        elif kind == "data":
            data_file = sc.get("data_file")
            if not data_file:
                raise ConfigError("[scenario] profile = data needs data_file")
            profile = load_speed_csv(data_file)
        else:
            raise ConfigError(f"[scenario] unknown profile {kind!r}")
        try:
            scenario = Scenario(
                n_hv=n_hv,
                head_profile=profile,
                initial=Equilibrium(v_star=v_star),
                t_final=t_final,
                dt=dt,
            )
        except ValueError as e:
            raise ConfigError(f"[scenario] {e}") from None
    elif require_scenario:
        raise ConfigError("this command needs a [scenario] section")

    try:
        chain = Chain(cav=cav, hvs=(hv,) * n_hv)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    if parser.has_section("chart"):
        ch = parser["chart"]
        plane = ch.get("plane", "A-B1").strip()
        chart = ChartSpec(
            plane=plane,
            resolution=parse_resolution(ch.get("resolution", "200x200")),
            fixed_A=_f(ch, "fixed_a", math.nan) if "fixed_a" in ch else None,
            fixed_BN=_f(ch, "fixed_bn", math.nan) if "fixed_bn" in ch else None,
            x_range=_parse_range(ch["x_range"], "[chart] x_range") if "x_range" in ch else None,
            y_range=_parse_range(ch["y_range"], "[chart] y_range") if "y_range" in ch else None,
        )
    else:
        chart = ChartSpec("A-B1", (200, 200), None, None, None, None)

    if parser.has_section("boundaries"):
        bd = parser["boundaries"]
        boundaries = BoundarySpec(
            omega_min=_f(bd, "omega_min", 1e-3),
            omega_max=_f(bd, "omega_max", 100.0),
            omega_points=int(_f(bd, "omega_points", 400)),
            K_count=int(_f(bd, "k_count", 12)),
            omega_plant_max=_f(bd, "omega_plant_max", 2.0),
            omega_plant_points=int(_f(bd, "omega_plant_points", 200)),
        )
    else:
        boundaries = BoundarySpec(1e-3, 100.0, 400, 12, 2.0, 200)

    return RunConfig(
        chain=chain,
        cbf=cbf,
        envelope=envelope,
        scenario=scenario,
        chart=chart,
        boundaries=boundaries,
        limits=limits,
    )
