"""Robot constants and the bracing configuration solver.

The robot is a three-joint, four-link chain with drive wheels at each
joint and passive roll wheels at both ends. It braces by folding into a
planar zigzag: wheel centers alternate between the two walls of the
bore, separated by the clearance h = D - 2*r_w. The middle joint is the
only actively torqued one; front and rear joints carry torsion springs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# adaptive bore range the robot is sized for
MIN_BORE_M = 0.075
MAX_BORE_M = 0.100

WHEEL_COUNT = 5


class BracingError(ValueError):
    """Raised when the robot cannot brace in the queried cross-section."""


@dataclass(frozen=True)
class RobotParams:
    link_joint_to_joint_m: float = 0.12
    end_link_m: float = 0.12
    wheel_radius_m: float = 0.015
    total_mass_kg: float = 1.57
    total_extended_length_m: float = 0.51
    spring_stiffness_nm_per_rad: float = 0.5
    max_cont_joint_torque_nm: float = 2.56
    peak_joint_torque_nm: float = 12.32
    max_speed_m_s: float = 0.088
    max_cont_traction_n: float = 151.0
    peak_traction_n: float = 728.0

    def __post_init__(self) -> None:
        if min(
            self.link_joint_to_joint_m,
            self.end_link_m,
            self.wheel_radius_m,
            self.total_mass_kg,
        ) <= 0.0:
            raise ValueError("robot dimensions and mass must be > 0")
        ident = 2.0 * (self.end_link_m + self.link_joint_to_joint_m + self.wheel_radius_m)
        if abs(ident - self.total_extended_length_m) > 1e-6:
            raise ValueError(
                f"link split {ident:.6f} m inconsistent with total extended "
                f"length {self.total_extended_length_m} m"
            )
        h_min = MIN_BORE_M - 2.0 * self.wheel_radius_m
        if not 0.0 < h_min <= self.link_joint_to_joint_m:
            raise ValueError(
                f"robot cannot brace a {MIN_BORE_M} m bore: clearance {h_min:.4f} m"
            )

    def with_overrides(self, **kwargs: float) -> "RobotParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class BracingConfig:
    """Joint geometry of the braced robot at one cross-section.

    theta_* include the extra chord-inscription deflection inside bends;
    bend_deflection_rad carries that extra part alone (zero in straights).
    """

    theta_mid_rad: float
    phi_rad: float
    theta_front_rad: float
    theta_rear_rad: float
    bend_deflection_rad: float
    clearance_m: float
    in_contact: tuple[bool, ...]


def solve_configuration(
    params: RobotParams,
    diameter_m: float,
    curvature_per_m: float = 0.0,
    bend_angle_rad: float = math.inf,
) -> BracingConfig:
    """Solve the planar zigzag bracing pose for a local cross-section.

    In a bend every joint picks up an extra deflection from inscribing
    the link chord in the centerline arc, capped at the bend's total
    turn angle so short fittings cannot demand more deflection than the
    pipe itself turns through.
    """
    lj = params.link_joint_to_joint_m
    h = diameter_m - 2.0 * params.wheel_radius_m
    if h < 0.0:
        raise BracingError(f"wheels oversize bore: clearance {h:.4f} m < 0")
    if h > lj:
        raise BracingError(f"clearance {h:.4f} m exceeds link length {lj} m")
    phi = math.asin(h / lj)
    delta = 0.0
    if curvature_per_m != 0.0:
        half_chord = lj * abs(curvature_per_m) / 2.0
        if half_chord > 1.0:
            raise BracingError(
                f"bend too tight: link {lj} m cannot inscribe curvature "
                f"{curvature_per_m} 1/m"
            )
        delta = min(2.0 * math.asin(half_chord), bend_angle_rad)
    contact = h > 0.0
    return BracingConfig(
        theta_mid_rad=2.0 * phi + delta,
        phi_rad=phi,
        theta_front_rad=phi + delta,
        theta_rear_rad=phi + delta,
        bend_deflection_rad=delta,
        clearance_m=h,
        in_contact=(contact,) * WHEEL_COUNT,
    )


def diameter_from_theta(params: RobotParams, theta_mid_rad: float) -> float:
    """Invert the straight-pipe bracing relation (round-trip check)."""
    return 2.0 * params.wheel_radius_m + params.link_joint_to_joint_m * math.sin(
        theta_mid_rad / 2.0
    )


def advance_position(
    s_m: float, v_axial_m_s: float, dt_s: float, total_length_m: float
) -> tuple[float, bool]:
    """March the arclength position, clamped to the course ends.

    Returns (new position, arrived-at-far-end flag).
    """
    if dt_s <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt_s}")
    s_new = min(max(s_m + v_axial_m_s * dt_s, 0.0), total_length_m)
    return s_new, s_new >= total_length_m


@dataclass
class RobotState:
    """Mutable mission-level state advanced by the simulation loop."""

    s_m: float = 0.0
    roll_angle_rad: float = 0.0
    joint_duty_pct: float = 0.0
    drive_duty_pct: float = 0.0
    tau_mid_nm: float = 0.0
    slip: bool = False
    slip_margin_n: float = 0.0
    arrived: bool = False
