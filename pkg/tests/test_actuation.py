import math

import pytest

from pipebot import actuation as act

ANCHORS = act.TorqueMap.anchors()
POLY = act.TorqueMap.from_polynomial()


def test_anchor_values():
    assert ANCHORS.torque_nm(0.0) == 0.0
    assert ANCHORS.torque_nm(10.0) == pytest.approx(0.42, abs=1e-12)
    assert ANCHORS.torque_nm(25.0) == pytest.approx(1.32, abs=1e-12)
    assert ANCHORS.torque_nm(50.0) == pytest.approx(2.55, abs=1e-12)
    assert ANCHORS.torque_nm(70.0) == pytest.approx(3.0, abs=1e-12)
    assert ANCHORS.torque_nm(85.0) == pytest.approx(3.0, abs=1e-12)
    assert ANCHORS.torque_nm(100.0) == pytest.approx(3.0, abs=1e-12)


def test_anchor_map_metadata():
    assert ANCHORS.mode == "anchors"
    assert ANCHORS.tau_sat_nm == 3.0
    assert ANCHORS.sat_onset_duty_pct == 70.0


def test_duty_range_enforced():
    with pytest.raises(ValueError):
        ANCHORS.torque_nm(-0.1)
    with pytest.raises(ValueError):
        ANCHORS.torque_nm(100.1)


def test_raw_polynomial_both_power_readings():
    """Brute-force check of the coefficient/power pairing: only the
    ascending reading lands near the 0.42 Nm working point; the printed
    descending pairing explodes."""
    a = act.EQ_COEFFS_ASCENDING
    asc10 = sum(c * 10.0**k for k, c in enumerate(a))
    desc25 = sum(c * 25.0 ** (4 - k) for k, c in enumerate(a))
    assert asc10 == pytest.approx(0.41950515, abs=1e-8)
    assert abs(desc25 + 45266.8) < 1.0
    assert act.raw_polynomial_nm(10.0) == pytest.approx(asc10, abs=1e-12)


def test_raw_polynomial_reference_values():
    assert act.raw_polynomial_nm(0.0) == pytest.approx(-0.1178, abs=1e-12)
    assert act.raw_polynomial_nm(25.0) == pytest.approx(1.2604839844, abs=1e-9)
    assert act.raw_polynomial_nm(50.0) == pytest.approx(1.58151875, abs=1e-9)


def test_poly_map_matches_raw_where_increasing():
    assert POLY.torque_nm(10.0) == pytest.approx(0.41950515, abs=1e-8)
    assert POLY.torque_nm(25.0) == pytest.approx(1.2604839844, abs=1e-8)


def test_poly_map_zero_clamp_at_origin():
    assert POLY.torque_nm(0.0) == 0.0
    assert POLY.torque_nm(1.0) == 0.0  # raw value still negative at 1%


def test_poly_map_plateau_after_peak():
    peak = max(act.raw_polynomial_nm(r / 5.0) for r in range(501))
    assert POLY.tau_sat_nm == pytest.approx(peak, abs=1e-12)
    assert POLY.sat_onset_duty_pct == pytest.approx(41.8, abs=0.2001)
    assert POLY.torque_nm(70.0) == pytest.approx(peak, abs=1e-12)
    assert POLY.torque_nm(100.0) == pytest.approx(peak, abs=1e-12)
    assert peak == pytest.approx(1.7421, abs=1e-4)


@pytest.mark.parametrize("tmap", [ANCHORS, POLY], ids=["anchors", "poly"])
def test_map_monotone_and_bounded(tmap):
    grid = [r / 5.0 for r in range(501)]
    vals = [tmap.torque_nm(r) for r in grid]
    assert vals[0] == 0.0
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert max(vals) <= act.PEAK_JOINT_TORQUE_NM


def test_torque_map_table_resolution():
    table = act.torque_map_table(ANCHORS)
    assert len(table) == 501
    assert table[0] == (0.0, 0.0)
    assert table[-1][0] == 100.0


def test_duty_to_speed():
    assert act.duty_to_speed(100.0) == pytest.approx(0.088)
    assert act.duty_to_speed(0.0) == 0.0
    assert act.duty_to_speed(-50.0) == pytest.approx(-0.044)
    with pytest.raises(ValueError):
        act.duty_to_speed(101.0)


def test_thermal_steady_state_exact():
    c = act.ThermalConstants()
    assert c.steady_state_c(50.0) == pytest.approx(25.0 + 110.0, rel=1e-12)
    assert c.steady_state_c(25.0) == pytest.approx(52.5, rel=1e-12)


def test_thermal_crossing_at_50pct_duty():
    # holding 50% from ambient crosses the soft limit at 900 s
    c = act.ThermalConstants()
    ts = act.ThermalState()
    t = 0.0
    dt = 0.001
    while not ts.failed and t < 1000.0:
        ts = act.thermal_step(ts, 50.0, dt, c)
        t += dt
    assert ts.failed
    assert t == pytest.approx(900.0, abs=1.0)


def test_thermal_25pct_never_fails():
    c = act.ThermalConstants()
    ts = act.ThermalState()
    dt = 1.0  # coarse step is fine: monotone approach to 52.5 degC
    for _ in range(15000):
        ts = act.thermal_step(ts, 25.0, dt, c)
    assert not ts.failed
    assert ts.board_temp_c < c.soft_limit_c
    assert ts.board_temp_c == pytest.approx(52.5, abs=0.01)


def test_thermal_monotone_toward_steady_state():
    c = act.ThermalConstants()
    ts = act.ThermalState()
    temps = []
    for _ in range(5000):
        ts = act.thermal_step(ts, 40.0, 0.5, c)
        temps.append(ts.board_temp_c)
    assert all(b >= a for a, b in zip(temps, temps[1:]))
    assert temps[-1] <= c.steady_state_c(40.0) + 1e-9


def test_thermal_cooling_strictly_monotone():
    c = act.ThermalConstants()
    ts = act.ThermalState(board_temp_c=70.0)
    temps = [ts.board_temp_c]
    for _ in range(1000):
        ts = act.thermal_step(ts, 0.0, 1.0, c)
        temps.append(ts.board_temp_c)
    assert all(b < a for a, b in zip(temps, temps[1:]))
    assert temps[-1] > c.ambient_c


def test_thermal_failure_latches():
    c = act.ThermalConstants()
    ts = act.ThermalState(board_temp_c=85.0, failed=True)
    for _ in range(100):
        ts = act.thermal_step(ts, 0.0, 10.0, c)
    assert ts.failed
    assert ts.board_temp_c < c.soft_limit_c  # cooled down, latch held


def test_thermal_time_above_limit_accumulates():
    c = act.ThermalConstants()
    ts = act.ThermalState(board_temp_c=90.0)
    ts = act.thermal_step(ts, 0.0, 1.0, c)
    ts = act.thermal_step(ts, 0.0, 1.0, c)
    assert ts.time_above_soft_limit_s == pytest.approx(2.0)
