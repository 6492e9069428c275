"""Duty-ratio actuation laws: torque map, wheel speed, board thermals.

Two torque maps are shipped. The default ("anchors") is a monotone
piecewise-linear interpolation through the measured operating points
(0, 10, 25, 50, 70, 100)% -> (0, 0.42, 1.32, 2.55, 3.0, 3.0) Nm. The
"poly" map evaluates the fitted quartic directly (ascending powers of
duty percent), clamped at zero, monotonized by running max, and capped
at the 3.0 Nm saturation torque; the quartic peaks near 42% duty at
about 1.74 Nm and holds that plateau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# quartic fit coefficients, ascending powers of duty percent
EQ_COEFFS_ASCENDING = (-0.1178, 4.7894e-2, 7.6041e-4, -1.6902e-5, -7.7385e-8)

TAU_SAT_NM = 3.0
PEAK_JOINT_TORQUE_NM = 12.32

ANCHOR_DUTIES_PCT = (0.0, 10.0, 25.0, 50.0, 70.0, 100.0)
ANCHOR_TORQUES_NM = (0.0, 0.42, 1.32, 2.55, TAU_SAT_NM, TAU_SAT_NM)

MAX_SPEED_M_S = 0.088

GRID_STEP_PCT = 0.2


def _duty_grid() -> np.ndarray:
    # i / 5 keeps integer duties exactly representable
    per_unit = round(1.0 / GRID_STEP_PCT)
    return np.arange(100 * per_unit + 1) / per_unit


@dataclass(frozen=True, eq=False)
class TorqueMap:
    """Monotone duty->torque lookup with saturation envelope."""

    mode: str
    coeffs: tuple[float, ...]
    tau_sat_nm: float
    sat_onset_duty_pct: float
    grid_duty_pct: np.ndarray
    grid_torque_nm: np.ndarray

    @classmethod
    def anchors(cls) -> "TorqueMap":
        # breakpoints are the anchors themselves, so anchor duties
        # evaluate exactly
        return cls(
            mode="anchors",
            coeffs=EQ_COEFFS_ASCENDING,
            tau_sat_nm=TAU_SAT_NM,
            sat_onset_duty_pct=70.0,
            grid_duty_pct=np.asarray(ANCHOR_DUTIES_PCT),
            grid_torque_nm=np.asarray(ANCHOR_TORQUES_NM),
        )

    @classmethod
    def from_polynomial(
        cls, coeffs: tuple[float, ...] = EQ_COEFFS_ASCENDING
    ) -> "TorqueMap":
        grid = _duty_grid()
        raw = np.polynomial.polynomial.polyval(grid, coeffs)
        clamped = np.maximum(raw, 0.0)
        mono = np.maximum.accumulate(clamped)
        capped = np.minimum(mono, TAU_SAT_NM)
        if capped.max() > PEAK_JOINT_TORQUE_NM:
            raise ValueError("torque map exceeds peak joint torque")
        onset_idx = int(np.flatnonzero(raw == raw.max())[-1])
        return cls(
            mode="poly",
            coeffs=tuple(coeffs),
            tau_sat_nm=float(capped[-1]),
            sat_onset_duty_pct=float(grid[onset_idx]),
            grid_duty_pct=grid,
            grid_torque_nm=capped,
        )

    def torque_nm(self, duty_pct: float) -> float:
        if not 0.0 <= duty_pct <= 100.0:
            raise ValueError(f"joint duty {duty_pct}% outside [0, 100]")
        return float(np.interp(duty_pct, self.grid_duty_pct, self.grid_torque_nm))


def duty_to_torque(torque_map: TorqueMap, duty_pct: float) -> float:
    return torque_map.torque_nm(duty_pct)


def raw_polynomial_nm(
    duty_pct: float, coeffs: tuple[float, ...] = EQ_COEFFS_ASCENDING
) -> float:
    """Unclamped quartic evaluation (ascending powers of duty percent)."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * duty_pct + c
    return acc


def duty_to_speed(duty_pct: float, max_speed_m_s: float = MAX_SPEED_M_S) -> float:
    """Signed drive-wheel speed; sign of the duty is the direction."""
    if not -100.0 <= duty_pct <= 100.0:
        raise ValueError(f"drive duty {duty_pct}% outside [-100, 100]")
    return max_speed_m_s * duty_pct / 100.0


# Board thermal model: first-order lag toward a duty-dependent steady
# state, dT/dt = (gain*R^2 - (T - T_amb)) / tau. Constants are solved so
# that holding 50% duty from ambient crosses the 80 degC resin soft
# limit at 900 s while 25% settles at 52.5 degC and never fails.
@dataclass(frozen=True)
class ThermalConstants:
    gain_c_per_duty2: float = 0.044
    tau_s: float = 900.0 / math.log(2.0)
    ambient_c: float = 25.0
    soft_limit_c: float = 80.0

    def steady_state_c(self, duty_pct: float) -> float:
        return self.ambient_c + self.gain_c_per_duty2 * duty_pct * duty_pct


@dataclass
class ThermalState:
    board_temp_c: float = 25.0
    ambient_c: float = 25.0
    time_above_soft_limit_s: float = 0.0
    failed: bool = False


def thermal_step(
    ts: ThermalState,
    joint_duty_pct: float,
    dt_s: float,
    consts: ThermalConstants = ThermalConstants(),
) -> ThermalState:
    """Advance the board temperature one step; the failure latch sticks."""
    if dt_s <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt_s}")
    drive = consts.gain_c_per_duty2 * joint_duty_pct * joint_duty_pct
    temp = ts.board_temp_c + dt_s * (drive - (ts.board_temp_c - ts.ambient_c)) / consts.tau_s
    above = ts.time_above_soft_limit_s
    failed = ts.failed
    if temp >= consts.soft_limit_c:
        above += dt_s
        failed = True
    return ThermalState(temp, ts.ambient_c, above, failed)


def torque_map_table(torque_map: TorqueMap) -> list[tuple[float, float]]:
    """Duty->torque table at 0.2% resolution, for CSV dumps and plots."""
    grid = _duty_grid()
    vals = np.interp(grid, torque_map.grid_duty_pct, torque_map.grid_torque_nm)
    return [(float(d), float(t)) for d, t in zip(grid, vals)]
