"""Physical data types and property models for heated oil pipelines.

All internal computation is SI. Volume flows are entered in m^3/h (the unit
operators use) and converted once through the ``q_si`` properties; costs are
integrated per second and reported per day.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SECONDS_PER_DAY = 86400.0
SECONDS_PER_HOUR = 3600.0


class ScenarioError(ValueError):
    """Invalid scenario data; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DomainError(ValueError):
    """A property model was evaluated outside its domain (T <= 0)."""


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ScenarioError(path, message)


@dataclass(frozen=True)
class ViscosityModel:
    """Two-term exponential dynamic viscosity, mu(T) in mPa*s."""

    a1: float
    b1: float
    a2: float = 0.0
    b2: float = 0.0

    def __post_init__(self):
        _require(self.a1 >= 0 and self.a2 >= 0, "fluid.viscosity", "a1, a2 must be >= 0")
        _require(self.b1 <= 0 and self.b2 <= 0, "fluid.viscosity", "b1, b2 must be <= 0")
        _require(self.a1 + self.a2 > 0, "fluid.viscosity", "viscosity must be positive")

    def dynamic(self, t):
        return self.a1 * np.exp(self.b1 * t) + self.a2 * np.exp(self.b2 * t)

    def dynamic_slope(self, t):
        return self.a1 * self.b1 * np.exp(self.b1 * t) + self.a2 * self.b2 * np.exp(self.b2 * t)

    @property
    def is_constant(self) -> bool:
        return (self.a1 == 0 or self.b1 == 0) and (self.a2 == 0 or self.b2 == 0)


# Curve fit of the Q-T crude (dynamic viscosity in mPa*s, T in degC).
QT_VISCOSITY = ViscosityModel(a1=8.166e6, b1=-0.3302, a2=77.04, b2=-0.02882)


@dataclass(frozen=True)
class FluidProps:
    density: float
    specific_heat: float
    viscosity: ViscosityModel

    def __post_init__(self):
        _require(self.density > 0, "fluid.density", "must be > 0")
        _require(self.specific_heat > 0, "fluid.specific_heat", "must be > 0")


@dataclass(frozen=True)
class FrictionModel:
    """Leibenzon coefficients; the defaults are the hydraulically smooth regime."""

    beta: float = 0.0246
    m: float = 0.25

    def __post_init__(self):
        _require(self.beta > 0, "friction.beta", "must be > 0")
        _require(0 < self.m < 1, "friction.m", "must lie in (0, 1)")


@dataclass(frozen=True)
class EconomicParams:
    electricity_price: float  # yuan / (W s)
    fuel_price: float  # yuan / m^3
    heat_value: float  # J / m^3
    gravity: float = 9.81

    def __post_init__(self):
        for name in ("electricity_price", "fuel_price", "heat_value", "gravity"):
            _require(getattr(self, name) > 0, f"economics.{name}", "must be > 0")


@dataclass(frozen=True)
class PipeSegment:
    length: float  # m
    inner_diameter: float  # m
    outer_diameter: float  # m
    elevation_change: float = 0.0  # m, end minus start
    heat_transfer: float = 0.0  # W / (m^2 degC)
    volume_flow: float = 1.0  # m^3 / h
    ground_temp: float = 0.0  # degC
    friction_heat: float = 0.0  # degC
    head_lb: float = -math.inf  # m, at segment end
    head_ub: float = math.inf

    def validate(self, path: str) -> None:
        _require(self.length >= 0, f"{path}.length", "must be >= 0")
        _require(self.inner_diameter > 0, f"{path}.inner_diameter", "must be > 0")
        _require(self.outer_diameter >= self.inner_diameter, f"{path}.outer_diameter",
                 "must be >= inner_diameter")
        _require(self.volume_flow > 0, f"{path}.volume_flow", "must be > 0")
        _require(self.heat_transfer >= 0, f"{path}.heat_transfer", "must be >= 0")
        _require(self.head_lb <= self.head_ub, f"{path}.head_lb", "exceeds head_ub")

    @property
    def q_si(self) -> float:
        return self.volume_flow / SECONDS_PER_HOUR

    @property
    def ambient(self) -> float:
        """Temperature the oil relaxes to along the segment."""
        return self.ground_temp + self.friction_heat


@dataclass(frozen=True)
class Station:
    flow: float  # m^3 / h
    n_csp: int = 0
    csp_head: float = 0.0
    csp_eff: float = 1.0
    n_ssp: int = 0
    ssp_head_lb: float = 0.0
    ssp_head_ub: float = 0.0
    ssp_eff: float = 1.0
    furnace_eff: float = 1.0
    h_in_lb: float = 0.0
    h_in_ub: float = math.inf
    h_out_lb: float = 0.0
    h_out_ub: float = math.inf
    t_in_lb: float = 0.0
    t_in_ub: float = math.inf
    t_out_lb: float = 0.0
    t_out_ub: float = math.inf

    def validate(self, path: str, pumping: bool = True) -> None:
        _require(self.flow > 0, f"{path}.flow", "must be > 0")
        for name in ("n_csp", "n_ssp"):
            v = getattr(self, name)
            _require(int(v) == v and v >= 0, f"{path}.{name}", "must be a non-negative integer")
        for name in ("csp_eff", "ssp_eff", "furnace_eff"):
            v = getattr(self, name)
            _require(0 < v <= 1, f"{path}.{name}", "must lie in (0, 1]")
        _require(self.csp_head >= 0, f"{path}.csp_head", "must be >= 0")
        _require(0 <= self.ssp_head_lb <= self.ssp_head_ub, f"{path}.ssp_head_lb",
                 "need 0 <= ssp_head_lb <= ssp_head_ub")
        for lo, hi in (("h_in_lb", "h_in_ub"), ("h_out_lb", "h_out_ub"),
                       ("t_in_lb", "t_in_ub"), ("t_out_lb", "t_out_ub")):
            _require(getattr(self, lo) <= getattr(self, hi), f"{path}.{lo}", f"exceeds {hi}")
        _require(math.isfinite(self.h_in_lb), f"{path}.h_in_lb", "must be finite")
        if pumping:
            _require(math.isfinite(self.h_out_lb), f"{path}.h_out_lb", "must be finite")
            _require(self.t_out_lb > 0, f"{path}.t_out_lb", "must be > 0")
            _require(math.isfinite(self.t_out_ub), f"{path}.t_out_ub", "must be finite")

    @property
    def q_si(self) -> float:
        return self.flow / SECONDS_PER_HOUR


@dataclass(frozen=True)
class Scenario:
    """Immutable pipeline description.

    ``gaps[j]`` holds the pipe segments between ``stations[j]`` and
    ``stations[j + 1]``; the last station carries no pumps or furnaces.
    """

    fluid: FluidProps
    economics: EconomicParams
    stations: tuple[Station, ...]
    gaps: tuple[tuple[PipeSegment, ...], ...]
    inlet_head: float
    inlet_temp: float
    friction: FrictionModel = field(default_factory=FrictionModel)

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))
        object.__setattr__(self, "gaps", tuple(tuple(g) for g in self.gaps))
        ns = len(self.stations)
        _require(ns >= 2, "stations", "need at least two stations")
        _require(len(self.gaps) == ns - 1, "gaps", f"expected {ns - 1} gaps, got {len(self.gaps)}")
        for j, st in enumerate(self.stations):
            st.validate(f"stations[{j}]", pumping=j < ns - 1)
        last = self.stations[-1]
        _require(last.n_csp == 0 and last.n_ssp == 0, f"stations[{ns - 1}]",
                 "the last station cannot have pumps")
        for j, gap in enumerate(self.gaps):
            _require(len(gap) >= 1, f"gaps[{j}].segments", "need at least one segment")
            for r, seg in enumerate(gap):
                seg.validate(f"gaps[{j}].segments[{r}]")
        first = self.stations[0]
        _require(first.h_in_lb == first.h_in_ub == self.inlet_head, "stations[0].h_in_lb",
                 "first-station inlet head bounds must both equal inlet.head")
        _require(first.t_in_lb == first.t_in_ub == self.inlet_temp, "stations[0].t_in_lb",
                 "first-station inlet temperature bounds must both equal inlet.temperature")

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_pumping(self) -> int:
        """Stations that carry decisions (all but the last)."""
        return len(self.stations) - 1

    @property
    def n_segments(self) -> int:
        return sum(len(g) for g in self.gaps)

    @property
    def max_counts(self) -> tuple[np.ndarray, np.ndarray]:
        st = self.stations[:-1]
        return (np.array([s.n_csp for s in st], dtype=int),
                np.array([s.n_ssp for s in st], dtype=int))

    def with_stations(self, stations: Sequence[Station]) -> "Scenario":
        from dataclasses import replace
        return replace(self, stations=tuple(stations))


# ---------------------------------------------------------------------------
# property models

def _check_temperature(t) -> None:
    if np.any(np.asarray(t) <= 0):
        raise DomainError(f"temperature must be > 0 degC, got {t}")


def kinematic_viscosity(t, fluid: FluidProps):
    """nu(T) in m^2/s."""
    _check_temperature(t)
    return fluid.viscosity.dynamic(t) / 1000.0 / fluid.density


def viscosity_slope(t, fluid: FluidProps):
    """d nu / dT in m^2/(s degC); never positive."""
    _check_temperature(t)
    return fluid.viscosity.dynamic_slope(t) / 1000.0 / fluid.density


def _friction_factor(seg: PipeSegment, friction: FrictionModel) -> float:
    m = friction.m
    return friction.beta * seg.q_si ** (2 - m) / seg.inner_diameter ** (5 - m)


def unit_friction(t_ave, seg: PipeSegment, fluid: FluidProps,
                  friction: FrictionModel = FrictionModel()):
    """Hydraulic gradient f(T, Q, D) in metres of head per metre of pipe."""
    return _friction_factor(seg, friction) * kinematic_viscosity(t_ave, fluid) ** friction.m


def unit_friction_slope(t_ave, seg: PipeSegment, fluid: FluidProps,
                        friction: FrictionModel = FrictionModel()):
    m = friction.m
    nu = kinematic_viscosity(t_ave, fluid)
    return _friction_factor(seg, friction) * m * nu ** (m - 1) * viscosity_slope(t_ave, fluid)


def friction_head_loss(t_ave, seg: PipeSegment, fluid: FluidProps,
                       friction: FrictionModel = FrictionModel()):
    """Friction head loss over the whole segment (m)."""
    return unit_friction(t_ave, seg, fluid, friction) * seg.length


def friction_slope(t_ave, seg: PipeSegment, fluid: FluidProps,
                   friction: FrictionModel = FrictionModel()):
    """d(head loss)/dT_ave in m/degC; never positive."""
    return unit_friction_slope(t_ave, seg, fluid, friction) * seg.length


def fit_viscosity(temps, mu, p0=(1e6, -0.3, 50.0, -0.03)) -> ViscosityModel:
    """Least-squares fit of the two-term exponential model to (T, mu) data."""
    from scipy.optimize import curve_fit

    def model(t, a1, b1, a2, b2):
        return a1 * np.exp(b1 * t) + a2 * np.exp(b2 * t)

    params, _ = curve_fit(model, np.asarray(temps, float), np.asarray(mu, float),
                          p0=p0, maxfev=20000)
    return ViscosityModel(*map(float, params))


# ---------------------------------------------------------------------------
# thermal chain

def thermal_decay(seg: PipeSegment, fluid: FluidProps) -> tuple[float, float]:
    """Return (per-metre decay rate, exp(-rate * length)) for the axial temperature drop."""
    rate = seg.heat_transfer * math.pi * seg.outer_diameter / (
        fluid.density * seg.q_si * fluid.specific_heat)
    return rate, math.exp(-rate * seg.length)


def axial_outlet_temperature(t_in, seg: PipeSegment, fluid: FluidProps):
    _, decay = thermal_decay(seg, fluid)
    amb = seg.ambient
    return amb + (t_in - amb) * decay


def average_temperature(t_start, t_end):
    return t_start / 3.0 + 2.0 * t_end / 3.0


def segment_affine_maps(gap: Sequence[PipeSegment], fluid: FluidProps) -> np.ndarray:
    """Per-segment (a, b) with T_out = a * T_in + b."""
    out = np.empty((len(gap), 2))
    for r, seg in enumerate(gap):
        _, decay = thermal_decay(seg, fluid)
        out[r] = decay, seg.ambient * (1.0 - decay)
    return out


def chain_coefficients(scen: Scenario, j: int, r0: int, n: int) -> np.ndarray:
    """Rows (phi_t, psi_t) with T_ave of segment r0 + t equal to phi_t*u + psi_t.

    ``u`` is the temperature at the end of the first ``r0`` segments of gap
    ``j`` (``r0 = 0`` is the station outlet); ``t`` runs 1..n.
    """
    gap = scen.gaps[j]
    if r0 < 0 or n < 0 or r0 + n > len(gap):
        raise IndexError(f"segment range {r0}+{n} outside gap {j} of {len(gap)} segments")
    maps = segment_affine_maps(gap[r0:r0 + n], scen.fluid)
    coef = np.empty((n, 2))
    a, b = 1.0, 0.0
    for t, (e, g) in enumerate(maps):
        a_next, b_next = e * a, e * b + g
        coef[t] = (a + 2 * a_next) / 3.0, (b + 2 * b_next) / 3.0
        a, b = a_next, b_next
    return coef


def gap_temperature_map(scen: Scenario, j: int, n: int | None = None) -> tuple[float, float]:
    """(a, b) such that the temperature after ``n`` segments is a * T_out + b."""
    gap = scen.gaps[j]
    n = len(gap) if n is None else n
    a, b = 1.0, 0.0
    for e, g in segment_affine_maps(gap[:n], scen.fluid):
        a, b = e * a, e * b + g
    return a, b


def inverse_temperature_to_station(scen: Scenario, j: int, r0: int, u: float) -> float:
    """Station outlet temperature whose propagation over r0 segments reaches u."""
    t = u
    for seg in reversed(scen.gaps[j][:r0]):
        _, decay = thermal_decay(seg, scen.fluid)
        amb = seg.ambient
        t = amb + (t - amb) / decay
    return t


# ---------------------------------------------------------------------------
# cost

def cost_coefficients(scen: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Daily cost per running CSP, per metre of SSP head and per degC of heating."""
    eco, fl = scen.economics, scen.fluid
    st = scen.stations[:-1]
    q = np.array([s.q_si for s in st])
    hydraulic = SECONDS_PER_DAY * eco.electricity_price * fl.density * q * eco.gravity
    c_x = hydraulic * np.array([s.csp_head / s.csp_eff for s in st])
    c_dh = hydraulic * np.array([1.0 / s.ssp_eff for s in st])
    c_dt = SECONDS_PER_DAY * eco.fuel_price * fl.specific_heat * fl.density * q / (
        np.array([s.furnace_eff for s in st]) * eco.heat_value)
    return c_x, c_dh, c_dt


def cost_breakdown(x, dh_sp, dt, scen: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Per-station (power, fuel) cost in yuan/d."""
    x, dh_sp, dt = (np.asarray(v, float) for v in (x, dh_sp, dt))
    k = scen.n_pumping
    if not (x.shape == dh_sp.shape == dt.shape == (k,)):
        raise ValueError(f"decision vectors must have length {k}")
    c_x, c_dh, c_dt = cost_coefficients(scen)
    return c_x * x + c_dh * dh_sp, c_dt * dt


def total_cost(x, dh_sp, dt, scen: Scenario) -> float:
    """Total operating cost in yuan/d (divide by 24 for yuan/h)."""
    power, fuel = cost_breakdown(x, dh_sp, dt, scen)
    return float(power.sum() + fuel.sum())
