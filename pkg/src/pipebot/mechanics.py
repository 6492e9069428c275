"""Quasi-static traction: wall normals, slip margin, advance-or-slip.

Middle-joint torque presses the outer drive wheels against one wall and
the middle wheel against the opposite wall. Traction is Coulomb friction
on the sum of wall normals, capped by the motor/gear traction ceiling.
The robot advances whenever traction capacity covers the axial load
(gravity share, cable drag, spring drag in bends); otherwise the wheels
spin in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import PipeNetwork, bend_angle_at, curvature_at, diameter_at, gravity_axial_at
from .robot import BracingConfig, RobotParams, RobotState, advance_position, solve_configuration

G_M_S2 = 9.80665

MU_DRY = 0.4
MU_SEWAGE = 0.2


@dataclass(frozen=True)
class Environment:
    mu: float = MU_DRY
    cable_drag_n: float = 0.0
    label: str = "dry"

    def __post_init__(self) -> None:
        if not 0.0 < self.mu <= 1.5:
            raise ValueError(f"friction coefficient {self.mu} outside (0, 1.5]")
        if self.cable_drag_n < 0.0:
            raise ValueError("cable drag cannot be negative")


@dataclass(frozen=True)
class ContactForces:
    n_outer_front_n: float
    n_mid_n: float
    n_outer_rear_n: float
    traction_capacity_n: float = 0.0
    required_force_n: float = 0.0
    slip_margin_n: float = 0.0

    @property
    def total_normal_n(self) -> float:
        return self.n_outer_front_n + self.n_mid_n + self.n_outer_rear_n


def contact_forces(
    config: BracingConfig, tau_mid_nm: float, params: RobotParams
) -> ContactForces:
    """Wall normals produced by the middle-joint torque (normals only).

    The torque is reacted at the outer drive-wheel contacts across the
    axial moment arm L_j*cos(phi); the middle wheel carries the sum by
    perpendicular equilibrium.
    """
    if tau_mid_nm < 0.0:
        raise ValueError("bracing torque must be >= 0")
    if config.clearance_m <= 0.0:
        raise ValueError("no bracing clearance: normals undefined")
    arm = params.link_joint_to_joint_m * math.cos(config.phi_rad)
    if arm <= 0.0:
        raise ValueError("unphysical configuration: cos(phi) <= 0")
    n_outer = tau_mid_nm / arm
    return ContactForces(n_outer, 2.0 * n_outer, n_outer)


def traction_capacity(
    forces: ContactForces,
    env: Environment,
    params: RobotParams,
    peak_mode: bool = False,
) -> float:
    """Friction-limited axial force, capped by the motor/gear ceiling."""
    ceiling = params.peak_traction_n if peak_mode else params.max_cont_traction_n
    return min(env.mu * forces.total_normal_n, ceiling)


def required_force(
    state: RobotState, net: PipeNetwork, env: Environment, params: RobotParams
) -> float:
    """Axial load: gravity share + cable drag + spring drag in bends."""
    s = state.s_m
    f_grav = params.total_mass_kg * G_M_S2 * gravity_axial_at(net, s)
    f_bend = 0.0
    kappa = curvature_at(net, s)
    if kappa != 0.0:
        config = solve_configuration(
            params, diameter_at(net, s), kappa, bend_angle_at(net, s)
        )
        f_bend = (
            params.spring_stiffness_nm_per_rad
            * 2.0
            * config.bend_deflection_rad
            / params.link_joint_to_joint_m
        )
    return f_grav + env.cable_drag_n + f_bend


def analyze(
    state: RobotState,
    net: PipeNetwork,
    env: Environment,
    params: RobotParams,
    peak_mode: bool = False,
) -> tuple[ContactForces, BracingConfig]:
    """Full force balance at the robot's current position."""
    s = state.s_m
    config = solve_configuration(
        params, diameter_at(net, s), curvature_at(net, s), bend_angle_at(net, s)
    )
    normals = contact_forces(config, state.tau_mid_nm, params)
    capacity = traction_capacity(normals, env, params, peak_mode)
    required = required_force(state, net, env, params)
    forces = replace(
        normals,
        traction_capacity_n=capacity,
        required_force_n=required,
        slip_margin_n=capacity - required,
    )
    return forces, config


def step_quasistatic(
    state: RobotState,
    net: PipeNetwork,
    env: Environment,
    params: RobotParams,
    dt_s: float,
    peak_mode: bool = False,
) -> RobotState:
    """Advance one time step: move at commanded speed or slip in place.

    The slip flag marks drive wheels spinning without progress, so it
    only raises while a drive speed is actually commanded.
    """
    forces, _ = analyze(state, net, env, params, peak_mode)
    state.slip_margin_n = forces.slip_margin_n
    if forces.slip_margin_n >= 0.0:
        v = params.max_speed_m_s * state.drive_duty_pct / 100.0
        state.s_m, state.arrived = advance_position(state.s_m, v, dt_s, net.total_length_m)
        state.slip = False
    else:
        state.slip = state.drive_duty_pct != 0.0
    return state
