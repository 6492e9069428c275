import math
import random

import pytest

from pipebot.robot import (
    BracingError,
    RobotParams,
    RobotState,
    advance_position,
    diameter_from_theta,
    solve_configuration,
)


def test_default_params_satisfy_length_identity():
    p = RobotParams()
    total = 2 * (p.end_link_m + p.link_joint_to_joint_m + p.wheel_radius_m)
    assert total == pytest.approx(0.51, abs=1e-9)
    assert p.total_mass_kg == 1.57
    assert p.max_cont_joint_torque_nm == 2.56
    assert p.peak_joint_torque_nm == 12.32
    assert p.max_speed_m_s == 0.088
    assert p.max_cont_traction_n == 151.0
    assert p.peak_traction_n == 728.0


def test_inconsistent_length_identity_rejected():
    with pytest.raises(ValueError, match="inconsistent"):
        RobotParams(end_link_m=0.09)


def test_zero_clearance_gives_zero_angles():
    p = RobotParams()
    cfg = solve_configuration(p, 2 * p.wheel_radius_m)
    assert cfg.theta_mid_rad == 0.0
    assert cfg.phi_rad == 0.0
    assert cfg.theta_front_rad == 0.0
    assert not any(cfg.in_contact)


def test_theta_mid_3in_bore():
    cfg = solve_configuration(RobotParams(), 0.075)
    assert math.degrees(cfg.theta_mid_rad) == pytest.approx(44.0486, abs=0.01)
    assert cfg.theta_mid_rad == pytest.approx(2 * cfg.phi_rad, abs=1e-15)
    assert all(cfg.in_contact)


def test_theta_mid_4in_bore():
    cfg = solve_configuration(RobotParams(), 0.100)
    assert math.degrees(cfg.theta_mid_rad) == pytest.approx(71.3707, abs=0.01)


def test_bracing_errors():
    p = RobotParams()
    with pytest.raises(BracingError):
        solve_configuration(p, 2 * p.wheel_radius_m - 0.001)  # wheels oversize bore
    with pytest.raises(BracingError):
        solve_configuration(p, 2 * p.wheel_radius_m + p.link_joint_to_joint_m + 0.001)
    with pytest.raises(BracingError):
        solve_configuration(p, 0.075, curvature_per_m=2.0 / p.link_joint_to_joint_m + 1)


def test_bend_deflection_added_to_joints():
    p = RobotParams()
    straight_cfg = solve_configuration(p, 0.075)
    bend_cfg = solve_configuration(p, 0.075, curvature_per_m=10.0, bend_angle_rad=math.pi / 2)
    delta = 2 * math.asin(0.12 * 10.0 / 2)
    assert bend_cfg.bend_deflection_rad == pytest.approx(delta, abs=1e-12)
    assert bend_cfg.theta_mid_rad == pytest.approx(
        straight_cfg.theta_mid_rad + delta, abs=1e-12
    )
    assert bend_cfg.theta_front_rad == pytest.approx(
        straight_cfg.theta_front_rad + delta, abs=1e-12
    )


def test_bend_deflection_capped_at_turn_angle():
    # 45 degree elbow, r = 0.062 m: chord inscription alone would ask for
    # 150.8 degrees of joint deflection
    p = RobotParams()
    cfg = solve_configuration(
        p, 0.075, curvature_per_m=1 / 0.062, bend_angle_rad=math.pi / 4
    )
    assert cfg.bend_deflection_rad == pytest.approx(math.pi / 4, abs=1e-12)


def test_theta_strictly_increasing_in_diameter():
    p = RobotParams()
    thetas = [
        solve_configuration(p, d / 1000.0).theta_mid_rad for d in range(75, 101)
    ]
    assert all(b > a for a, b in zip(thetas, thetas[1:]))


def test_configuration_matches_closed_form_random_triples():
    rng = random.Random(1234)
    for _ in range(1000):
        rw = rng.uniform(0.005, 0.034)
        h_min = 0.075 - 2 * rw  # constructor demands 3-in feasibility
        lj = rng.uniform(h_min, 0.30)
        h = rng.uniform(1e-4, lj)
        d = h + 2 * rw
        p = RobotParams(
            link_joint_to_joint_m=lj,
            end_link_m=0.1,
            wheel_radius_m=rw,
            total_extended_length_m=2 * (0.1 + lj + rw),
        )
        cfg = solve_configuration(p, d)
        # closed form in terms of the bore diameter, same float ops
        assert cfg.theta_mid_rad == 2.0 * math.asin((d - 2 * rw) / lj)
        # round-trip: recover the bore from the solved angle
        assert diameter_from_theta(p, cfg.theta_mid_rad) == pytest.approx(d, abs=1e-12)


def test_advance_position_nominal():
    s, arrived = advance_position(0.0, 0.088, 1.0, 10.0)
    assert s == pytest.approx(0.088)
    assert not arrived


def test_advance_position_zero_speed():
    s, arrived = advance_position(0.5, 0.0, 1.0, 10.0)
    assert s == 0.5
    assert not arrived


def test_advance_position_clamps_and_flags_arrival():
    s, arrived = advance_position(9.99, 0.088, 1.0, 10.0)
    assert s == 10.0
    assert arrived
    s, arrived = advance_position(0.01, -0.088, 1.0, 10.0)
    assert s == 0.0
    assert not arrived


def test_advance_position_rejects_bad_dt():
    with pytest.raises(ValueError):
        advance_position(0.0, 0.1, 0.0, 1.0)


def test_robot_state_defaults():
    st = RobotState()
    assert st.s_m == 0.0
    assert not st.slip
    assert not st.arrived
