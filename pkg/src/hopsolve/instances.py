"""Scenario builders: random small pipelines, structured test cases and the Q-T-like case."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .model import (QT_VISCOSITY, SECONDS_PER_DAY, EconomicParams, FluidProps, PipeSegment,
                    Scenario, Station, ViscosityModel, average_temperature, friction_head_loss,
                    segment_affine_maps)
from .scheme import gap_temperatures

DEFAULT_FLUID = FluidProps(density=859.0, specific_heat=2400.0, viscosity=QT_VISCOSITY)


def _fuel_price_for_ratio(ratio: float, electricity_price: float, heat_value: float,
                          fluid: FluidProps, ssp_eff: float, furnace_eff: float,
                          gravity: float) -> float:
    """Fuel price making one degC of heating cost as much as ``ratio`` metres of SSP head."""
    return (ratio * furnace_eff * heat_value * electricity_price * gravity
            / (fluid.specific_heat * ssp_eff))


def random_scenario(rng: np.random.Generator, n_stations: int | None = None,
                    max_csp: int = 2, max_ssp: int = 1, max_segments: int = 4) -> Scenario:
    """A small random pipeline with pump capacity sized to the gap losses."""
    ns = int(n_stations or rng.integers(2, 5))
    fluid = DEFAULT_FLUID
    flow = float(rng.uniform(1500.0, 2500.0))
    price = float(rng.uniform(1.2e-7, 2.5e-7))
    eco = EconomicParams(price, _fuel_price_for_ratio(rng.uniform(0.5, 6.0), price, 3.6e7,
                                                      fluid, 0.8, 0.9, 9.81), 3.6e7)
    t_lo = float(rng.uniform(36.0, 40.0))
    t_hi = t_lo + float(rng.uniform(2.0, 4.0))
    inlet_temp = float(t_lo - rng.uniform(0.0, 1.5))
    inlet_head = float(rng.uniform(30.0, 60.0))
    gaps, stations = [], []
    for j in range(ns - 1):
        nseg = int(rng.integers(1, max_segments + 1))
        total = float(rng.uniform(15e3, 40e3))
        cuts = np.sort(rng.uniform(0, 1, nseg - 1))
        lengths = np.diff(np.concatenate([[0.0], cuts, [1.0]])) * total
        diam = float(rng.uniform(0.55, 0.7))
        gap = []
        for r in range(nseg):
            gap.append(PipeSegment(
                length=float(lengths[r]), inner_diameter=diam, outer_diameter=diam + 0.02,
                elevation_change=float(rng.uniform(-15.0, 25.0)),
                heat_transfer=float(rng.uniform(1.0, 2.5)), volume_flow=flow,
                ground_temp=float(rng.uniform(3.0, 8.0)),
                head_lb=20.0, head_ub=900.0))
        gaps.append(tuple(gap))
        loss = sum(friction_head_loss(t_lo - 4.0, s, fluid) + s.elevation_change for s in gap)
        loss = max(loss, 10.0) + 30.0
        n_csp = int(rng.integers(0 if max_ssp else 1, max_csp + 1))
        n_ssp = int(rng.integers(0, max_ssp + 1)) if n_csp < max_csp else int(
            rng.integers(0, max_ssp + 1))
        if n_csp == 0 and n_ssp == 0:
            n_csp = 1
        share = float(rng.uniform(0.55, 1.0))
        csp_head = loss * share / n_csp if n_csp else 0.0
        ssp_ub = max(loss * float(rng.uniform(0.5, 1.0)), 1.3 * (loss - n_csp * csp_head)) \
            if n_ssp else 0.0
        if not n_ssp and n_csp * csp_head < 1.25 * loss:
            csp_head = 1.25 * loss / n_csp
        stations.append(Station(
            flow=flow, n_csp=n_csp, csp_head=round(csp_head, 2), csp_eff=0.8,
            n_ssp=n_ssp, ssp_head_lb=round(ssp_ub * float(rng.uniform(0.2, 0.5)), 2),
            ssp_head_ub=round(ssp_ub, 2), ssp_eff=0.8, furnace_eff=0.9,
            h_in_lb=20.0, h_in_ub=900.0, h_out_lb=30.0, h_out_ub=900.0,
            t_in_lb=t_lo - 6.0, t_in_ub=t_hi, t_out_lb=t_lo, t_out_ub=t_hi))
    stations.append(Station(flow=flow, h_in_lb=20.0, h_in_ub=900.0,
                            t_in_lb=t_lo - 6.0, t_in_ub=t_hi))
    first = replace(stations[0], h_in_lb=inlet_head, h_in_ub=inlet_head,
                    t_in_lb=inlet_temp, t_in_ub=inlet_temp)
    stations[0] = first
    return Scenario(fluid, eco, stations, gaps, inlet_head, inlet_temp)


def cutting_stock_scenario(demand: float, heads, counts, unit_costs,
                           temperature: float = 40.0) -> Scenario:
    """Pumping pipeline encoding a bounded min-cost covering problem.

    Station j offers up to ``counts[j]`` pumps of head ``heads[j]``, each costing
    ``unit_costs[j]`` per day. Pipes are frictionless, flat and isothermal, so
    the only requirement is raising the head by ``demand`` between the inlet
    and the final station.
    """
    k = len(heads)
    flow = 3600.0  # 1 m^3/s
    # unit density and gravity make a pump's daily cost proportional to head / efficiency;
    # efficiencies are scaled so the largest equals one
    ratio = [h / c for h, c in zip(heads, unit_costs)]
    scale = max(ratio)
    eco = EconomicParams(electricity_price=1.0 / (SECONDS_PER_DAY * scale), fuel_price=1.0,
                         heat_value=1.0, gravity=1.0)
    fluid = replace(DEFAULT_FLUID, density=1.0)
    seg = PipeSegment(length=0.0, inner_diameter=0.5, outer_diameter=0.5, volume_flow=flow,
                      head_lb=0.0)
    stations = []
    for j in range(k):
        stations.append(Station(flow=flow, n_csp=int(counts[j]), csp_head=float(heads[j]),
                                csp_eff=ratio[j] / scale, h_in_lb=0.0, h_out_lb=0.0,
                                t_in_lb=temperature, t_in_ub=temperature,
                                t_out_lb=temperature, t_out_ub=temperature))
    stations[0] = replace(stations[0], h_in_ub=0.0)
    stations.append(Station(flow=flow, h_in_lb=float(demand), t_in_lb=temperature,
                            t_in_ub=temperature))
    return Scenario(fluid, eco, stations, [(seg,)] * k, 0.0, temperature)


def pinched_valley_scenario(threshold: float = 40.0, t_max: float = 60.0) -> Scenario:
    """Two stations; a summit followed by a valley caps the usable outlet temperature.

    The valley's head ceiling equals the summit floor minus the head drop
    between them at ``threshold`` degC, so outlets warmer than the threshold
    lose too little head and overshoot the valley ceiling.
    """
    fluid = DEFAULT_FLUID
    flow = 2200.0
    mk = dict(inner_diameter=0.7, outer_diameter=0.72, heat_transfer=1.5, volume_flow=flow,
              ground_temp=5.0)
    gap = [PipeSegment(length=30e3, elevation_change=60.0, head_lb=120.0, **mk),
           PipeSegment(length=30e3, elevation_change=-150.0, **mk),
           PipeSegment(length=10e3, elevation_change=-120.0, **mk)]
    probe = Scenario(fluid, EconomicParams(1.6e-7, 2.0, 3.6e7), [
        Station(flow=flow, n_csp=3, csp_head=250.0, csp_eff=0.8, h_in_lb=40.0, h_in_ub=40.0,
                h_out_lb=50.0, h_out_ub=800.0, t_in_lb=30.0, t_in_ub=30.0, t_out_lb=30.0,
                t_out_ub=t_max),
        Station(flow=flow, h_in_lb=20.0)], [tuple(gap)], 40.0, 30.0)
    temps, tave = gap_temperatures(probe, 0, threshold)
    drop = friction_head_loss(tave[1], gap[1], fluid) + gap[1].elevation_change
    gap[1] = replace(gap[1], head_ub=gap[0].head_lb - drop)
    return replace(probe, gaps=(tuple(gap),))


def upstream_spike_scenario() -> Scenario:
    """A low head ceiling upstream of a steep climb whose summit floor cannot be met."""
    fluid = DEFAULT_FLUID
    flow = 2200.0
    mk = dict(inner_diameter=0.7, outer_diameter=0.72, heat_transfer=1.5, volume_flow=flow,
              ground_temp=5.0)
    gap = (PipeSegment(length=20e3, elevation_change=0.0, head_ub=150.0, **mk),
           PipeSegment(length=10e3, elevation_change=200.0, head_lb=50.0, **mk),
           PipeSegment(length=20e3, elevation_change=-200.0, **mk))
    return Scenario(fluid, EconomicParams(1.6e-7, 2.0, 3.6e7), [
        Station(flow=flow, n_csp=3, csp_head=250.0, csp_eff=0.8, h_in_lb=40.0, h_in_ub=40.0,
                h_out_lb=50.0, h_out_ub=800.0, t_in_lb=35.0, t_in_ub=35.0, t_out_lb=35.0,
                t_out_ub=60.0),
        Station(flow=flow, h_in_lb=20.0)], [gap], 40.0, 35.0)


# ---------------------------------------------------------------------------
# Q-T-like pipeline

QT_STATIONS = [
    # flow m3/h, inner diameter m, CSP head, N_CP, CSP eff, SSP lb, SSP ub, N_SP, SSP eff
    (2212, 0.740, 235.76, 4, 0.787, 0.0, 0.0, 0, 1.0),
    (2810, 0.740, 0.0, 0, 1.0, 0.0, 0.0, 0, 1.0),
    (2215, 0.772, 245.70, 3, 0.780, 94.01, 244.24, 1, 0.803),
    (2941, 0.622, 222.36, 4, 0.835, 0.0, 0.0, 0, 1.0),
    (2751, 0.685, 229.96, 3, 0.833, 102.84, 231.35, 1, 0.838),
    (2022, 0.695, 239.56, 3, 0.757, 95.34, 239.56, 1, 0.795),
    (2102, 0.715, 237.96, 3, 0.770, 92.94, 237.96, 1, 0.796),
    (2047, 0.705, 0.0, 0, 1.0, 0.0, 0.0, 0, 1.0),
]
QT_PRACTICAL = {
    "x": [3, 0, 1, 3, 2, 1, 1, 0],
    "dh_sp": [0, 0, 219.96, 0, 104.33, 170.27, 203.94, 0],
    "dt": [3.00, 3.50, 2.90, 2.80, 4.10, 6.48, 8.80, 6.90],
    "cost_power": [72510.05, 0, 47578.26, 85751.64, 67879.53, 39140.92, 43330.03, 0],
    "cost_fuel": [14047.23, 20818.94, 13597.40, 17431.60, 23875.84, 27735.78, 39156.12,
                  29898.62],
}
QT_OPTIMAL = {
    "x": [3, 0, 1, 1, 1, 2, 0, 0],
    "dh_sp": [0, 0, 244.24, 0, 231.35, 224.68, 175.05, 0],
    "dt": [7.30, 1.24, 10.13, 3.83, 0.00, 6.84, 7.46, 9.10],
    "cost_power": [72510.05, 0, 50020.79, 28583.88, 55390.45, 67530.40, 16858.35, 0],
    "cost_fuel": [34181.59, 7391.16, 47496.64, 23825.27, 0, 29293.14, 33178.22, 39416.83],
}
QT_GAP_KM = [69.2, 61.5, 72.3, 66.8, 70.1, 74.4, 68.9, 65.34]
QT_INLET_HEAD, QT_INLET_TEMP = 57.0, 40.7
QT_HEAD_BOUNDS, QT_TEMP_BOUNDS = (35.6, 748.4), (35.0, 48.0)
QT_GROUND_TEMP = 5.0
QT_GRAVITY, QT_FURNACE_EFF, QT_HEAT_VALUE = 9.81, 0.9, 3.6e7


def qt_prices() -> tuple[float, float]:
    """Electricity and fuel prices reproducing the first row of the practical scheme."""
    flow, _, h_cp, _, eff = QT_STATIONS[0][:5]
    rho, c = DEFAULT_FLUID.density, DEFAULT_FLUID.specific_heat
    q = flow / 3600.0
    power = QT_PRACTICAL["cost_power"][0]
    c_p = power / (SECONDS_PER_DAY * rho * q * QT_GRAVITY * QT_PRACTICAL["x"][0] * h_cp / eff)
    fuel = QT_PRACTICAL["cost_fuel"][0]
    c_f = fuel * QT_FURNACE_EFF * QT_HEAT_VALUE / (SECONDS_PER_DAY * c * rho * q
                                                  * QT_PRACTICAL["dt"][0])
    return c_p, c_f


def qt_like_scenario(segments_per_gap: int = 3) -> Scenario:
    """Nine-station pipeline with the published station data and made-up pipe geometry.

    Elevation changes and heat-transfer coefficients are chosen so that the
    practical scheme runs inside every bound: inlet heads of about 60 m and
    the inlet temperatures listed in ``targets`` below.
    """
    fluid = DEFAULT_FLUID
    c_p, c_f = qt_prices()
    eco = EconomicParams(c_p, c_f, QT_HEAT_VALUE, QT_GRAVITY)
    h_lo, h_hi = QT_HEAD_BOUNDS
    t_lo, t_hi = QT_TEMP_BOUNDS
    targets = [40.7, 39.0, 39.5, 39.5, 39.0, 39.0, 38.5, 38.0, 38.0]
    stations = []
    for k, row in enumerate(QT_STATIONS):
        flow, _, h_cp, n_cp, e_cp, s_lo, s_hi, n_sp, e_sp = row
        stations.append(Station(flow=flow, n_csp=n_cp, csp_head=h_cp, csp_eff=e_cp,
                                n_ssp=n_sp, ssp_head_lb=s_lo, ssp_head_ub=s_hi, ssp_eff=e_sp,
                                furnace_eff=QT_FURNACE_EFF, h_in_lb=h_lo, h_in_ub=h_hi,
                                h_out_lb=h_lo, h_out_ub=h_hi, t_in_lb=t_lo, t_in_ub=t_hi,
                                t_out_lb=t_lo, t_out_ub=t_hi))
    stations.append(Station(flow=QT_STATIONS[-1][0], h_in_lb=h_lo, h_in_ub=h_hi,
                            t_in_lb=t_lo, t_in_ub=t_hi))
    stations[0] = replace(stations[0], h_in_lb=QT_INLET_HEAD, h_in_ub=QT_INLET_HEAD,
                          t_in_lb=QT_INLET_TEMP, t_in_ub=QT_INLET_TEMP)

    gaps = []
    h_in = QT_INLET_HEAD
    for j, km in enumerate(QT_GAP_KM):
        flow, diam = QT_STATIONS[j][:2]
        t_out = targets[j] + QT_PRACTICAL["dt"][j]
        decay = (targets[j + 1] - QT_GROUND_TEMP) / (t_out - QT_GROUND_TEMP)
        length = km * 1e3 / segments_per_gap
        rho_qc = fluid.density * flow / 3600.0 * fluid.specific_heat
        outer = diam + 0.02
        k_heat = -math.log(decay) * rho_qc / (math.pi * outer * km * 1e3)
        segs = [PipeSegment(length=length, inner_diameter=diam, outer_diameter=outer,
                            heat_transfer=k_heat, volume_flow=flow, ground_temp=QT_GROUND_TEMP,
                            head_lb=h_lo, head_ub=h_hi) for _ in range(segments_per_gap)]
        st = stations[j]
        pumped = h_in + QT_PRACTICAL["x"][j] * st.csp_head + QT_PRACTICAL["dh_sp"][j]
        h_out = min(pumped, h_hi - 8.0)
        temps = [t_out]
        for a, b in segment_affine_maps(segs, fluid):
            temps.append(a * temps[-1] + b)
        fric = sum(friction_head_loss(average_temperature(t0, t1), seg, fluid)
                   for t0, t1, seg in zip(temps, temps[1:], segs))
        target_in = 60.0
        dz = (h_out - target_in - fric) / segments_per_gap
        gaps.append(tuple(replace(s, elevation_change=float(dz)) for s in segs))
        h_in = target_in
    return Scenario(fluid, eco, stations, gaps, QT_INLET_HEAD, QT_INLET_TEMP)


def constant_viscosity_scenario(base: Scenario, mu: float = 30.0) -> Scenario:
    """Same pipeline with a temperature-independent viscosity."""
    return replace(base, fluid=replace(base.fluid, viscosity=ViscosityModel(mu, 0.0)))


__all__ = ["random_scenario", "cutting_stock_scenario", "pinched_valley_scenario",
           "upstream_spike_scenario", "qt_like_scenario", "qt_prices",
           "constant_viscosity_scenario", "QT_PRACTICAL", "QT_OPTIMAL"]
