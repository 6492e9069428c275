import math
import random

import pytest

from pipebot import geometry as geo
from pipebot import mechanics as mech
from pipebot.robot import RobotParams, RobotState, solve_configuration

P = RobotParams()


def vertical_3in():
    return geo.build_network([geo.straight(1.0, 0.075, 1.0)])


def horizontal_3in():
    return geo.build_network([geo.straight(1.0, 0.075, 0.0)])


def test_zero_torque_zero_normals():
    cfg = solve_configuration(P, 0.075)
    f = mech.contact_forces(cfg, 0.0, P)
    assert f.n_outer_front_n == 0.0
    assert f.n_mid_n == 0.0
    assert f.n_outer_rear_n == 0.0


def test_contact_forces_worked_example():
    # tau = 1.32 Nm in the 3-in bore with default link geometry
    cfg = solve_configuration(P, 0.075)
    f = mech.contact_forces(cfg, 1.32, P)
    assert f.n_outer_front_n == pytest.approx(11.866, abs=0.01)
    assert f.n_mid_n == pytest.approx(23.732, abs=0.02)
    assert f.n_mid_n == pytest.approx(f.n_outer_front_n + f.n_outer_rear_n, rel=1e-12)


def test_contact_forces_homogeneous_in_torque():
    cfg = solve_configuration(P, 0.075)
    f1 = mech.contact_forces(cfg, 0.7, P)
    f2 = mech.contact_forces(cfg, 1.4, P)
    assert f2.n_outer_front_n == pytest.approx(2 * f1.n_outer_front_n, rel=1e-12)
    assert f2.n_mid_n == pytest.approx(2 * f1.n_mid_n, rel=1e-12)


def test_contact_forces_rejects_negative_torque_and_loose_fit():
    cfg = solve_configuration(P, 0.075)
    with pytest.raises(ValueError):
        mech.contact_forces(cfg, -0.1, P)
    loose = solve_configuration(P, 2 * P.wheel_radius_m)
    with pytest.raises(ValueError):
        mech.contact_forces(loose, 1.0, P)


def test_rig_relation_consistency():
    # on the straight symmetric rig the sensed wheel force is 2*tau/L
    # with L the outer-wheel separation 2*L_j*cos(phi)
    cfg = solve_configuration(P, 0.075)
    lever = 2 * P.link_joint_to_joint_m * math.cos(cfg.phi_rad)
    for tau in (0.1, 0.42, 1.32, 2.55):
        f = mech.contact_forces(cfg, tau, P)
        assert f.n_outer_front_n == pytest.approx(2 * tau / lever, abs=1e-12)


def test_traction_capacity_friction_limited():
    cfg = solve_configuration(P, 0.075)
    f = mech.contact_forces(cfg, 1.32, P)
    env = mech.Environment(mu=0.4)
    assert mech.traction_capacity(f, env, P) == pytest.approx(18.985, abs=0.01)


def test_traction_capacity_motor_ceiling():
    cfg = solve_configuration(P, 0.075)
    f = mech.contact_forces(cfg, P.peak_joint_torque_nm, P)
    env = mech.Environment(mu=1.5)
    assert env.mu * f.total_normal_n > 151.0
    assert mech.traction_capacity(f, env, P) == 151.0
    assert mech.traction_capacity(f, env, P, peak_mode=True) > 151.0


def test_traction_capacity_zero_torque():
    cfg = solve_configuration(P, 0.075)
    f = mech.contact_forces(cfg, 0.0, P)
    assert mech.traction_capacity(f, mech.Environment(), P) == 0.0


def test_environment_validation():
    with pytest.raises(ValueError):
        mech.Environment(mu=0.0)
    with pytest.raises(ValueError):
        mech.Environment(mu=2.0)
    with pytest.raises(ValueError):
        mech.Environment(cable_drag_n=-1.0)


def test_required_force_vertical_straight():
    st = RobotState(s_m=0.5)
    req = mech.required_force(st, vertical_3in(), mech.Environment(), P)
    assert req == pytest.approx(1.57 * 9.80665, rel=1e-12)


def test_required_force_horizontal_straight():
    st = RobotState(s_m=0.5)
    assert mech.required_force(st, horizontal_3in(), mech.Environment(), P) == 0.0


def test_required_force_bend_spring_drag():
    # 0.1 m-radius 90 degree bend at half-vertical inclination
    net = geo.build_network([geo.bend(0.1, math.pi / 2, 0.075, 0.5)])
    st = RobotState(s_m=0.05)
    req = mech.required_force(st, net, mech.Environment(), P)
    delta = 2 * math.asin(0.12 * 10.0 / 2)
    f_bend = 0.5 * 2 * delta / 0.12
    assert f_bend == pytest.approx(10.725, abs=0.001)
    assert req == pytest.approx(0.5 * 1.57 * 9.80665 + f_bend, rel=1e-9)


def test_cable_drag_added():
    st = RobotState(s_m=0.5)
    env = mech.Environment(mu=0.2, cable_drag_n=2.0, label="sewage")
    req = mech.required_force(st, horizontal_3in(), env, P)
    assert req == 2.0


def test_step_slips_at_low_torque_on_vertical():
    # 0.42 Nm on a dry vertical 3-in straight: capacity ~6 N < 15.4 N
    st = RobotState(s_m=0.5, tau_mid_nm=0.42, drive_duty_pct=100.0)
    st = mech.step_quasistatic(st, vertical_3in(), mech.Environment(mu=0.4), P, 0.001)
    assert st.slip
    assert st.s_m == 0.5
    assert st.slip_margin_n == pytest.approx(6.041 - 15.396, abs=0.01)


def test_step_advances_at_working_torque_on_vertical():
    st = RobotState(s_m=0.5, tau_mid_nm=1.32, drive_duty_pct=100.0)
    st = mech.step_quasistatic(st, vertical_3in(), mech.Environment(mu=0.4), P, 1.0)
    assert not st.slip
    assert st.s_m == pytest.approx(0.5 + 0.088, rel=1e-12)


def test_step_sewage_outcomes():
    env = mech.Environment(mu=0.2, cable_drag_n=2.0, label="sewage")
    st = RobotState(s_m=0.5, tau_mid_nm=1.32, drive_duty_pct=100.0)
    st = mech.step_quasistatic(st, vertical_3in(), env, P, 0.001)
    assert st.slip  # 9.49 N capacity < 17.40 N required
    st = RobotState(s_m=0.5, tau_mid_nm=2.55, drive_duty_pct=100.0)
    st = mech.step_quasistatic(st, vertical_3in(), env, P, 0.001)
    assert not st.slip  # 18.34 N capacity >= 17.40 N required


def test_any_positive_torque_advances_without_load():
    st = RobotState(s_m=0.5, tau_mid_nm=1e-6, drive_duty_pct=50.0)
    st = mech.step_quasistatic(st, horizontal_3in(), mech.Environment(), P, 0.001)
    assert not st.slip
    assert st.s_m > 0.5


def test_slip_margin_monotone_in_torque_and_mu():
    rng = random.Random(99)
    net = vertical_3in()
    for _ in range(300):
        tau = rng.uniform(0.0, 3.0)
        mu = rng.uniform(0.05, 1.5)
        d_tau = rng.uniform(0.0, 1.0)
        d_mu = rng.uniform(0.0, 1.5 - mu)
        s = rng.uniform(0.0, 1.0)
        base = RobotState(s_m=s, tau_mid_nm=tau)
        grown_tau = RobotState(s_m=s, tau_mid_nm=tau + d_tau)
        f0, _ = mech.analyze(base, net, mech.Environment(mu=mu), P)
        f1, _ = mech.analyze(grown_tau, net, mech.Environment(mu=mu), P)
        f2, _ = mech.analyze(base, net, mech.Environment(mu=mu + d_mu), P)
        assert f1.slip_margin_n >= f0.slip_margin_n - 1e-12
        assert f2.slip_margin_n >= f0.slip_margin_n - 1e-12


def test_slip_pass_outcome_table_with_default_frictions():
    """All four reported slip/pass outcomes must hold at once with the
    shipped friction and cable-drag defaults."""
    dry = mech.Environment(mu=mech.MU_DRY)
    sewage = mech.Environment(mu=mech.MU_SEWAGE, cable_drag_n=2.0, label="sewage")
    bend3 = geo.build_network([geo.bend(0.1, math.pi / 2, 0.075, 0.5)])
    bend4 = geo.build_network([geo.bend(0.128, math.pi / 2, 0.100, 0.5)])
    vert3 = vertical_3in()
    vert4 = geo.build_network([geo.straight(1.0, 0.100, 1.0)])

    def margin(net, tau, env):
        f, _ = mech.analyze(RobotState(s_m=0.05, tau_mid_nm=tau), net, env, P)
        return f.slip_margin_n

    # 10% duty (0.42 Nm) slips somewhere on both dry courses
    assert margin(bend3, 0.42, dry) < 0 and margin(vert3, 0.42, dry) < 0
    assert margin(bend4, 0.42, dry) < 0
    # 25% duty (1.32 Nm) passes everywhere on both dry courses
    assert margin(bend3, 1.32, dry) > 0 and margin(vert3, 1.32, dry) > 0
    assert margin(bend4, 1.32, dry) > 0 and margin(vert4, 1.32, dry) > 0
    # sewage: 25% slips on the riser, 50% (2.55 Nm) passes
    assert margin(vert3, 1.32, sewage) < 0
    assert margin(vert3, 2.55, sewage) > 0
