import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopsolve import instances
from hopsolve.model import (QT_VISCOSITY, DomainError, EconomicParams, FluidProps, PipeSegment,
                            Scenario, ScenarioError, Station, ViscosityModel,
                            average_temperature, axial_outlet_temperature, chain_coefficients,
                            cost_breakdown, fit_viscosity, friction_head_loss, friction_slope,
                            inverse_temperature_to_station, kinematic_viscosity, thermal_decay,
                            total_cost, viscosity_slope)

QT_FLUID = FluidProps(859.0, 2400.0, QT_VISCOSITY)
SEG_5KM = PipeSegment(length=5000.0, inner_diameter=0.740, outer_diameter=0.760,
                      volume_flow=2212.0)

# Frozen from a 40-digit mpmath evaluation of the closed-form expressions.
NU_40 = 4.5770763094303071035e-05
FRICTION_40 = 18.03209012195856387
ALPHA_K15 = 2.8272726800995240469e-06
AXIAL_T = 44.003171557510302073

TABLE3_T = [35, 36, 37, 38, 39, 40, 42, 46, 50, 54, 60, 68]
TABLE3_MU = [107.4, 82.6, 64.1, 55.7, 48.3, 41.9, 27.6, 21.9, 19.2, 16.9, 13.7, 10.7]


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def chain_scenario(rng, n_seg=3):
    segs = [PipeSegment(length=rng.uniform(5e3, 30e3), inner_diameter=0.7, outer_diameter=0.72,
                        heat_transfer=rng.uniform(0.5, 3.0), volume_flow=2000.0,
                        ground_temp=rng.uniform(2, 8), friction_heat=rng.uniform(0, 1.5))
            for _ in range(n_seg)]
    return Scenario(QT_FLUID, EconomicParams(1e-7, 1.0, 3.6e7), [
        Station(flow=2000.0, n_csp=1, csp_head=100.0, h_in_lb=50, h_in_ub=50, t_in_lb=40,
                t_in_ub=40, t_out_lb=35, t_out_ub=60),
        Station(flow=2000.0)], [segs], 50.0, 40.0)


class TestViscosity:
    def test_value_at_40(self):
        assert rel(kinematic_viscosity(40.0, QT_FLUID), NU_40) < 1e-12

    def test_fit_reproduces_table_point_within_residual(self):
        model = fit_viscosity(TABLE3_T, TABLE3_MU)
        resid = np.abs(model.dynamic(np.array(TABLE3_T, float)) - TABLE3_MU)
        assert abs(model.dynamic(40.0) - 41.9) <= resid.max()
        assert rel(model.a1, 8.166e6) < 1e-3 and rel(model.b2, -0.02882) < 1e-3

    def test_degenerate_constant(self):
        fl = FluidProps(859.0, 2400.0, ViscosityModel(1000 * 859.0, 0.0))
        assert kinematic_viscosity(12.3, fl) == pytest.approx(1.0, rel=1e-15)
        assert viscosity_slope(12.3, fl) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            kinematic_viscosity(0.0, QT_FLUID)
        with pytest.raises(DomainError):
            viscosity_slope(-1.0, QT_FLUID)

    def test_slope_negative_on_range(self):
        t = np.linspace(35, 68, 200)
        assert np.all(viscosity_slope(t, QT_FLUID) < 0)

    def test_slope_matches_central_difference(self):
        rng = np.random.default_rng(0)
        for t in rng.uniform(5, 90, 1000):
            h = 1e-4
            fd = (kinematic_viscosity(t + h, QT_FLUID) - kinematic_viscosity(t - h, QT_FLUID)) / (
                2 * h)
            assert rel(viscosity_slope(t, QT_FLUID), fd) < 1e-6

    def test_rejects_increasing_model(self):
        with pytest.raises(ScenarioError):
            ViscosityModel(1.0, 0.1)


class TestFriction:
    def test_golden_value(self):
        assert rel(friction_head_loss(40.0, SEG_5KM, QT_FLUID), FRICTION_40) < 1e-12

    def test_zero_length_and_tiny_flow(self):
        assert friction_head_loss(40.0, replace(SEG_5KM, length=0.0), QT_FLUID) == 0.0
        assert friction_head_loss(40.0, replace(SEG_5KM, volume_flow=1e-12), QT_FLUID) < 1e-15

    def test_constant_model_slope_zero(self):
        fl = FluidProps(859.0, 2400.0, ViscosityModel(30.0, 0.0))
        assert friction_slope(40.0, SEG_5KM, fl) == 0.0

    def test_slope_matches_central_difference(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            seg = replace(SEG_5KM, length=rng.uniform(1e3, 4e4), volume_flow=rng.uniform(800, 3000),
                          inner_diameter=rng.uniform(0.4, 0.9))
            seg = replace(seg, outer_diameter=seg.inner_diameter + 0.02)
            t = rng.uniform(20, 80)
            h = 1e-4
            fd = (friction_head_loss(t + h, seg, QT_FLUID)
                  - friction_head_loss(t - h, seg, QT_FLUID)) / (2 * h)
            slope = friction_slope(t, seg, QT_FLUID)
            assert slope <= 0
            assert rel(slope, fd) < 1e-6

    def test_domain(self):
        with pytest.raises(DomainError):
            friction_head_loss(0.0, SEG_5KM, QT_FLUID)

    @settings(max_examples=200, deadline=None)
    @given(t=st.floats(1.0, 120.0), d=st.floats(0.01, 20.0),
           a1=st.floats(0.0, 1e7), b1=st.floats(-0.5, -1e-3),
           a2=st.floats(1e-3, 200.0), b2=st.floats(-0.2, -1e-4))
    def test_strictly_decreasing(self, t, d, a1, b1, a2, b2):
        fl = FluidProps(859.0, 2400.0, ViscosityModel(a1, b1, a2, b2))
        assert kinematic_viscosity(t + d, fl) < kinematic_viscosity(t, fl)
        assert friction_head_loss(t + d, SEG_5KM, fl) < friction_head_loss(t, SEG_5KM, fl)

    @settings(max_examples=200, deadline=None)
    @given(t1=st.floats(1.0, 100.0), gap=st.floats(0.01, 50.0), lam=st.floats(0.0, 1.0))
    def test_convex(self, t1, gap, lam):
        t2 = t1 + gap
        f = lambda t: friction_head_loss(t, SEG_5KM, QT_FLUID)  # noqa: E731
        assert f(lam * t1 + (1 - lam) * t2) <= lam * f(t1) + (1 - lam) * f(t2) + 1e-12


class TestThermal:
    def test_decay_golden(self):
        seg = replace(SEG_5KM, heat_transfer=1.5)
        alpha, factor = thermal_decay(seg, QT_FLUID)
        assert rel(alpha, ALPHA_K15) < 1e-12
        assert factor == pytest.approx(math.exp(-ALPHA_K15 * 5000.0), rel=1e-14)

    def test_insulated_and_empty(self):
        assert thermal_decay(SEG_5KM, QT_FLUID) == (0.0, 1.0)
        assert thermal_decay(replace(SEG_5KM, heat_transfer=2.0, length=0.0), QT_FLUID)[1] == 1.0

    def test_axial_golden(self):
        seg = replace(SEG_5KM, heat_transfer=1.0, ground_temp=5.0, friction_heat=1.0)
        alpha, _ = thermal_decay(seg, QT_FLUID)
        seg = replace(seg, length=0.1 / alpha)
        assert axial_outlet_temperature(48.0, seg, QT_FLUID) == pytest.approx(AXIAL_T, abs=1e-12)

    def test_axial_trivial(self):
        seg = replace(SEG_5KM, heat_transfer=1.5, ground_temp=5.0, friction_heat=1.0)
        assert axial_outlet_temperature(6.0, seg, QT_FLUID) == pytest.approx(6.0, abs=1e-14)
        assert axial_outlet_temperature(48.0, replace(seg, length=0.0), QT_FLUID) == 48.0

    @pytest.mark.parametrize("a,b,expected", [(30, 30, 30), (48, 39, 42), (40.7, 36.2, 37.7)])
    def test_average(self, a, b, expected):
        assert average_temperature(a, b) == pytest.approx(expected, abs=1e-12)


class TestChain:
    def test_single_segment_formula(self):
        scen = chain_scenario(np.random.default_rng(2), 1)
        seg = scen.gaps[0][0]
        _, e = thermal_decay(seg, scen.fluid)
        gain, offset = chain_coefficients(scen, 0, 0, 1)[0]
        assert gain == pytest.approx((1 + 2 * e) / 3, abs=1e-15)
        assert offset == pytest.approx(2 / 3 * seg.ambient * (1 - e), abs=1e-13)

    def test_insulated_chain(self):
        scen = chain_scenario(np.random.default_rng(3), 3)
        scen = replace(scen, gaps=(tuple(replace(s, heat_transfer=0.0) for s in scen.gaps[0]),))
        coef = chain_coefficients(scen, 0, 0, 3)
        assert np.allclose(coef[:, 0], 1.0, atol=0) and np.allclose(coef[:, 1], 0.0, atol=0)

    def test_matches_forward_propagation(self):
        rng = np.random.default_rng(4)
        scen = chain_scenario(rng, 3)
        for r0 in range(3):
            coef = chain_coefficients(scen, 0, r0, 3 - r0)
            for u in rng.uniform(10, 70, 100):
                t = u
                for (gain, offset), seg in zip(coef, scen.gaps[0][r0:]):
                    nxt = axial_outlet_temperature(t, seg, scen.fluid)
                    assert gain * u + offset == pytest.approx(average_temperature(t, nxt), abs=1e-9)
                    t = nxt

    def test_range_error(self):
        scen = chain_scenario(np.random.default_rng(5), 2)
        with pytest.raises(IndexError):
            chain_coefficients(scen, 0, 1, 2)

    def test_inverse_identities(self):
        rng = np.random.default_rng(6)
        scen = chain_scenario(rng, 3)
        assert inverse_temperature_to_station(scen, 0, 0, 41.5) == 41.5
        seg = scen.gaps[0][0]
        alpha, _ = thermal_decay(seg, scen.fluid)
        g = math.exp(alpha * seg.length)
        u = 37.0
        assert inverse_temperature_to_station(scen, 0, 1, u) == pytest.approx(
            seg.ambient * (1 - g) + g * u, abs=1e-12)
        for t in rng.uniform(10, 70, 200):
            r0 = int(rng.integers(0, 4))
            u = t
            for s in scen.gaps[0][:r0]:
                u = axial_outlet_temperature(u, s, scen.fluid)
            assert abs(inverse_temperature_to_station(scen, 0, r0, u) - t) < 1e-9


class TestCost:
    def test_zero(self):
        scen = instances.qt_like_scenario()
        k = scen.n_pumping
        assert total_cost(np.zeros(k), np.zeros(k), np.zeros(k), scen) == 0.0

    def test_back_solved_price_reproduces_row_one(self):
        scen = instances.qt_like_scenario()
        k = scen.n_pumping
        x = np.zeros(k)
        x[0] = 3
        power, _ = cost_breakdown(x, np.zeros(k), np.zeros(k), scen)
        assert power[0] == pytest.approx(72510.05, rel=1e-12)

    def test_fuel_linear_in_heating(self):
        scen = instances.qt_like_scenario()
        k = scen.n_pumping
        dt = np.linspace(0.5, 4, k)
        _, f1 = cost_breakdown(np.zeros(k), np.zeros(k), dt, scen)
        _, f2 = cost_breakdown(np.zeros(k), np.zeros(k), 2 * dt, scen)
        assert np.array_equal(f2, 2 * f1)

    def test_affine(self):
        scen = instances.qt_like_scenario()
        k = scen.n_pumping
        rng = np.random.default_rng(7)
        a = [rng.uniform(0, 3, k) for _ in range(3)]
        b = [rng.uniform(0, 3, k) for _ in range(3)]
        z = [np.zeros(k)] * 3
        lhs = total_cost(*[p + q for p, q in zip(a, b)], scen) + total_cost(*z, scen)
        rhs = total_cost(*a, scen) + total_cost(*b, scen)
        assert lhs == pytest.approx(rhs, rel=1e-14)

    def test_shape_mismatch(self):
        scen = instances.qt_like_scenario()
        with pytest.raises(ValueError):
            total_cost([1, 2], [0, 0], [0, 0], scen)


class TestScenarioValidation:
    def test_last_station_without_pumps(self):
        scen = instances.pinched_valley_scenario()
        bad = list(scen.stations)
        bad[-1] = replace(bad[-1], n_csp=1, csp_head=10.0)
        with pytest.raises(ScenarioError) as err:
            scen.with_stations(bad)
        assert err.value.path == "stations[1]"

    def test_first_station_pinned(self):
        scen = instances.pinched_valley_scenario()
        bad = list(scen.stations)
        bad[0] = replace(bad[0], h_in_ub=99.0)
        with pytest.raises(ScenarioError) as err:
            scen.with_stations(bad)
        assert err.value.path == "stations[0].h_in_lb"

    def test_bounds_order(self):
        with pytest.raises(ScenarioError) as err:
            Station(flow=1.0, t_out_lb=50.0, t_out_ub=40.0).validate("stations[3]")
        assert err.value.path == "stations[3].t_out_lb"
