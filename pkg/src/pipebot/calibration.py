"""Bench calibration: simulated duty sweep, force sensing, quartic fit.

The rig clamps the robot between two plates; a force sensor under one
drive wheel reads F while the middle joint presses. Static equilibrium
over the lever between the outer drive wheels gives tau = F * L / 2.
The sweep raises duty 0 -> 100% and lowers it back in 0.2% steps, two
samples per step at 50 ms, and the whole pass is run twice. Measured
torque shows stepwise plateaus from elastic gear deformation, modeled
as floor quantization plus a small uniform sensor term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_LEVER_ARM_M = 0.24
DEFAULT_STEP_HEIGHT_NM = 0.08
DEFAULT_SENSOR_NOISE_NM = 0.01

POLY_DEGREE = 4


class FitError(ValueError):
    """Raised when the sample set cannot determine a quartic."""


def tau_from_force(force_n: float, lever_arm_m: float) -> float:
    """Static-equilibrium torque from the sensed wheel force."""
    if lever_arm_m <= 0.0:
        raise ValueError(f"lever arm must be > 0, got {lever_arm_m}")
    return force_n * lever_arm_m / 2.0


def force_from_tau(torque_nm: float, lever_arm_m: float) -> float:
    return 2.0 * torque_nm / lever_arm_m


@dataclass(frozen=True)
class SweepProtocol:
    duty_step_pct: float = 0.2
    repeats: int = 2
    sample_period_s: float = 0.05
    samples_per_step: int = 2

    def __post_init__(self) -> None:
        if self.duty_step_pct <= 0.0:
            raise ValueError("duty step must be > 0")
        if self.repeats < 1:
            raise ValueError("need at least one sweep pass")

    def duty_sequence(self) -> np.ndarray:
        """Duty values for all passes: up 0..100, down back to 0."""
        n = round(100.0 / self.duty_step_pct)
        up = np.arange(n + 1) / (n / 100.0)  # endpoint lands exactly on 100
        down = up[-2::-1]
        one_pass = np.repeat(np.concatenate([up, down]), self.samples_per_step)
        return np.tile(one_pass, self.repeats)


@dataclass(frozen=True)
class CalibrationSample:
    t_s: float
    duty_pct: float
    force_n: float
    torque_nm: float


def simulate_rig(
    ground_truth: Callable[[float], float],
    proto: SweepProtocol = SweepProtocol(),
    step_height_nm: float = DEFAULT_STEP_HEIGHT_NM,
    sensor_noise_nm: float = DEFAULT_SENSOR_NOISE_NM,
    seed: int = 0,
    lever_arm_m: float = DEFAULT_LEVER_ARM_M,
) -> list[CalibrationSample]:
    """Run the sweep against a duty->torque ground truth.

    Zero step height and zero sensor noise reproduce the ground truth
    exactly. Output is deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    duties = proto.duty_sequence()
    true_nm = np.array([ground_truth(float(r)) for r in duties])
    meas = true_nm.copy()
    if step_height_nm > 0.0:
        meas = np.floor(meas / step_height_nm) * step_height_nm
    if sensor_noise_nm > 0.0:
        meas = meas + rng.uniform(-sensor_noise_nm, sensor_noise_nm, meas.size)
    samples = []
    for i, (duty, torque) in enumerate(zip(duties, meas)):
        samples.append(
            CalibrationSample(
                t_s=i * proto.sample_period_s,
                duty_pct=float(duty),
                force_n=force_from_tau(float(torque), lever_arm_m),
                torque_nm=float(torque),
            )
        )
    return samples


@dataclass(frozen=True)
class FitReport:
    coeffs: tuple[float, ...]
    rmse_nm: float
    max_residual_nm: float
    condition_number: float
    n_samples: int
    n_distinct_duties: int

    def torque_nm(self, duty_pct: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * duty_pct + c
        return acc


def fit_quartic(samples: Sequence[CalibrationSample]) -> FitReport:
    """Least-squares quartic in duty percent, ascending coefficients.

    Duties are rescaled to [0, 1] and the Vandermonde columns normalized
    before the orthogonal-decomposition solve; coefficients are mapped
    back to percent units. Raw percent powers would span 1e8 and wreck
    the conditioning.
    """
    if len(samples) < POLY_DEGREE + 1:
        raise FitError(f"need >= {POLY_DEGREE + 1} samples, got {len(samples)}")
    duty = np.array([s.duty_pct for s in samples])
    torque = np.array([s.torque_nm for s in samples])
    distinct = np.unique(duty).size
    if distinct < POLY_DEGREE + 1:
        raise FitError(
            f"need >= {POLY_DEGREE + 1} distinct duty values, got {distinct}"
        )
    x = duty / 100.0
    vander = np.vander(x, POLY_DEGREE + 1, increasing=True)
    norms = np.linalg.norm(vander, axis=0)
    scaled = vander / norms
    coef_scaled, _, _, _ = np.linalg.lstsq(scaled, torque, rcond=None)
    coef_unit = coef_scaled / norms
    coeffs = coef_unit / 100.0 ** np.arange(POLY_DEGREE + 1)
    pred = vander @ coef_unit
    resid = torque - pred
    return FitReport(
        coeffs=tuple(float(c) for c in coeffs),
        rmse_nm=float(math.sqrt(np.mean(resid**2))),
        max_residual_nm=float(np.max(np.abs(resid))) if resid.size else 0.0,
        condition_number=float(np.linalg.cond(scaled)),
        n_samples=len(samples),
        n_distinct_duties=int(distinct),
    )


CSV_HEADER = "t_s,duty_pct,force_N,torque_Nm"


def samples_to_csv(samples: Sequence[CalibrationSample]) -> str:
    lines = [CSV_HEADER]
    for s in samples:
        lines.append(f"{s.t_s:.3f},{s.duty_pct:.1f},{s.force_n:.6f},{s.torque_nm:.6f}")
    return "\n".join(lines) + "\n"


def fit_report_text(report: FitReport) -> str:
    """Human-readable fit summary; coefficients ascending, 10 sig figs."""
    lines = ["quartic fit, ascending powers of duty percent"]
    for k, c in enumerate(report.coeffs):
        lines.append(f"a{k} = {c:.10g}")
    lines.append(f"rmse_Nm = {report.rmse_nm:.10g}")
    lines.append(f"max_residual_Nm = {report.max_residual_nm:.10g}")
    lines.append(f"condition_number = {report.condition_number:.10g}")
    lines.append(f"n_samples = {report.n_samples}")
    lines.append(f"n_distinct_duties = {report.n_distinct_duties}")
    return "\n".join(lines) + "\n"
