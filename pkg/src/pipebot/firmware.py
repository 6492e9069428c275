"""Per-board controller emulation: mode machine, pot feedback, duty caps.

Each board runs the same deterministic state machine. Commands arrive
decoded from the bus; the only outputs are duty ratios. An e-stop is
absorbing until an explicit reset and forces every duty to zero. The
joint duty is capped at 50% for continuous operation; the peak-mode
flag raises the cap to 100% with a logged warning.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum

from . import canbus

log = logging.getLogger(__name__)

JOINT_DUTY_CAP_CONT_PCT = 50.0
JOINT_DUTY_CAP_PEAK_PCT = 100.0

CONTROL_TICK_S = 0.010
TELEMETRY_TICK_S = 0.100


class Mode(Enum):
    IDLE = "idle"
    DRIVE = "drive"
    ROLL = "roll"
    HOLD_ANGLE = "hold_angle"
    ESTOP = "estop"


@dataclass
class PiGains:
    kp_duty_per_rad: float = 120.0
    ki_duty_per_rad_s: float = 40.0


@dataclass
class FirmwareState:
    node: int = 0
    mode: Mode = Mode.IDLE
    drive_duty_pct: float = 0.0
    roll_duty_pct: float = 0.0
    joint_duty_pct: float = 0.0
    target_angle_rad: float = 0.0
    last_adc_code: int = 0
    peak_mode: bool = False
    nak: bool = False
    integrator: float = 0.0

    @property
    def joint_duty_cap_pct(self) -> float:
        return JOINT_DUTY_CAP_PEAK_PCT if self.peak_mode else JOINT_DUTY_CAP_CONT_PCT


@dataclass
class PotModel:
    """Single-turn pot behind a 5 V -> 3.3 V divider into a 12-bit ADC."""

    v_supply: float = 5.0
    divider_ratio: float = 3.3 / 5.0
    adc_bits: int = 12
    angle_fullscale_rad: float = math.radians(150.0)
    noise_sigma_v: float = 0.0

    @property
    def full_code(self) -> int:
        return (1 << self.adc_bits) - 1


def pot_read(
    pot: PotModel, theta_rad: float, rng: random.Random | None = None
) -> tuple[int, bool]:
    """ADC code for a joint angle; returns (code, angle-was-in-range).

    Out-of-range angles clamp to the nearest end of travel. Rounding is
    round-half-to-even, so exactly mid-scale reads 2048 on 12 bits.
    """
    in_range = 0.0 <= theta_rad <= pot.angle_fullscale_rad
    theta = min(max(theta_rad, 0.0), pot.angle_fullscale_rad)
    v_pot = pot.v_supply * theta / pot.angle_fullscale_rad
    v_adc = v_pot * pot.divider_ratio
    if pot.noise_sigma_v > 0.0 and rng is not None:
        v_adc += rng.gauss(0.0, pot.noise_sigma_v)
    v_ref = pot.v_supply * pot.divider_ratio
    code = round(v_adc / v_ref * pot.full_code)
    return min(max(code, 0), pot.full_code), in_range


def angle_from_code(pot: PotModel, code: int) -> float:
    return code / pot.full_code * pot.angle_fullscale_rad


def angle_controller_step(
    fs: FirmwareState,
    measured_angle_rad: float,
    dt_s: float,
    gains: PiGains = PiGains(),
) -> float:
    """PI position law on the middle joint; signed duty, anti-windup.

    Only meaningful in HOLD_ANGLE mode; the returned duty magnitude is
    clamped at the active joint-duty cap. Integration freezes while the
    output is clamped and the error keeps pushing into the clamp.
    """
    err = fs.target_angle_rad - measured_angle_rad
    cap = fs.joint_duty_cap_pct
    raw = gains.kp_duty_per_rad * err + fs.integrator
    into_clamp = (raw > cap and err > 0.0) or (raw < -cap and err < 0.0)
    if not into_clamp:
        fs.integrator += gains.ki_duty_per_rad_s * err * dt_s
        raw = gains.kp_duty_per_rad * err + fs.integrator
    return min(max(raw, -cap), cap)


def emergency_stop(fs: FirmwareState) -> FirmwareState:
    fs.mode = Mode.ESTOP
    fs.drive_duty_pct = 0.0
    fs.roll_duty_pct = 0.0
    fs.joint_duty_pct = 0.0
    fs.integrator = 0.0
    return fs


def _clamp_joint_duty(fs: FirmwareState, duty: float) -> float:
    cap = fs.joint_duty_cap_pct
    if duty > cap:
        if fs.peak_mode:
            log.warning(
                "node %d joint duty %.1f%% above continuous cap, peak mode active",
                fs.node,
                duty,
            )
        else:
            log.warning(
                "node %d joint duty %.1f%% clamped to continuous cap %.0f%%",
                fs.node,
                duty,
                cap,
            )
        return min(duty, cap)
    return duty


def handle_command(fs: FirmwareState, cmd: canbus.Command) -> FirmwareState:
    """Apply one decoded command to the state machine."""
    if isinstance(cmd, canbus.Estop):
        return emergency_stop(fs)
    if fs.mode is Mode.ESTOP:
        if isinstance(cmd, canbus.ResetEstop):
            fs.mode = Mode.IDLE
        return fs  # absorbing: everything else is ignored
    if isinstance(cmd, canbus.ResetEstop):
        return fs
    if isinstance(cmd, canbus.Stop):
        fs.mode = Mode.IDLE
        fs.drive_duty_pct = 0.0
        fs.roll_duty_pct = 0.0
        fs.joint_duty_pct = 0.0
        fs.integrator = 0.0
    elif isinstance(cmd, canbus.Drive):
        fs.mode = Mode.DRIVE
        fs.drive_duty_pct = float(cmd.duty_pct)
        fs.roll_duty_pct = 0.0
    elif isinstance(cmd, canbus.Roll):
        fs.mode = Mode.ROLL
        fs.roll_duty_pct = float(cmd.duty_pct)
        fs.drive_duty_pct = 0.0
    elif isinstance(cmd, canbus.SetJointAngle):
        fs.mode = Mode.HOLD_ANGLE
        fs.target_angle_rad = math.radians(cmd.centideg / 100.0)
        fs.drive_duty_pct = 0.0
        fs.roll_duty_pct = 0.0
        fs.integrator = 0.0
    elif isinstance(cmd, canbus.SetJointDuty):
        fs.joint_duty_pct = _clamp_joint_duty(fs, float(cmd.duty_pct))
        if fs.mode is Mode.HOLD_ANGLE:
            fs.mode = Mode.IDLE  # open-loop duty overrides the servo
    else:
        raise TypeError(f"not a command: {cmd!r}")
    return fs
