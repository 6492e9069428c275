"""Fixed-step mission loop binding pipe, robot, bus, firmware, thermals.

Master clock dt = 1 ms; firmware control runs every 10 ms, telemetry
every 100 ms. Commands (scripted or from the gateway) travel the same
path: logical command -> CAN frames -> bus -> per-node firmware. The
mission result is recomputed from the telemetry log by a pure
classifier, so an offline checker reaches the same verdict.
"""

from __future__ import annotations

import math
import queue
import random
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

from . import canbus, firmware, mechanics
from .actuation import ThermalConstants, ThermalState, TorqueMap, thermal_step
from .geometry import SegmentKind
from .robot import RobotState, solve_configuration
from .scenario import Scenario, TimedCommand

TELEMETRY_CSV_HEADER = (
    "t_s,s_m,D_m,theta_mid_deg,joint_duty,drive_duty,"
    "est_torque_Nm,slip_margin_N,slip_flag,board_temp_C,mode"
)

STALL_WINDOW_S = 2.0
STALL_EPS_M = 1e-3
ARRIVAL_EPS_M = 1e-9

ROLL_RATE_RAD_S_AT_FULL = 1.0

# node roles on the bus: front roll, J1 drive, J2 joint+drive, J3 drive,
# rear roll
NODE_FRONT_ROLL = 0
NODE_J1_DRIVE = 1
NODE_J2_JOINT = 2
NODE_J3_DRIVE = 3
NODE_REAR_ROLL = 4

DRIVE_NODES = (NODE_J1_DRIVE, NODE_J2_JOINT, NODE_J3_DRIVE)
# the J2 board coordinates mode, so roll commands address it too
ROLL_NODES = (NODE_FRONT_ROLL, NODE_J2_JOINT, NODE_REAR_ROLL)
ALL_NODES = tuple(range(canbus.NODE_COUNT))


class MissionResult(Enum):
    COMPLETED = "completed"
    SLIPPED_OUT = "slipped_out"
    OVERHEATED = "overheated"
    TIMEOUT = "timeout"

    @property
    def exit_code(self) -> int:
        return {"completed": 0, "slipped_out": 2, "overheated": 3, "timeout": 4}[
            self.value
        ]


@dataclass(frozen=True)
class TelemetryRecord:
    t_s: float
    s_m: float
    d_m: float
    theta_mid_deg: float
    joint_duty: float
    drive_duty: float
    est_torque_nm: float
    slip_margin_n: float
    slip_flag: int
    board_temp_c: float
    mode: str

    def csv_line(self) -> str:
        return (
            f"{self.t_s:.3f},{self.s_m:.6f},{self.d_m:.6f},{self.theta_mid_deg:.4f},"
            f"{self.joint_duty:.1f},{self.drive_duty:.1f},{self.est_torque_nm:.4f},"
            f"{self.slip_margin_n:.4f},{self.slip_flag:d},{self.board_temp_c:.3f},"
            f"{self.mode}"
        )


@dataclass
class MissionOutcome:
    result: MissionResult
    t_end_s: float
    rows: list[TelemetryRecord]
    frame_log: list[str]


def rows_to_csv(rows: Iterable[TelemetryRecord]) -> str:
    return "\n".join([TELEMETRY_CSV_HEADER] + [r.csv_line() for r in rows]) + "\n"


def classify_log(
    rows: Sequence[TelemetryRecord],
    total_length_m: float,
    max_time_s: float,
    window_s: float = STALL_WINDOW_S,
    soft_limit_c: float = 80.0,
) -> tuple[MissionResult, float]:
    """Pure mission verdict from a telemetry log.

    Scanned row by row with per-row priority arrival > overheat > stall,
    mirroring the live loop, so replaying a written log reproduces the
    result.
    """
    window: deque[TelemetryRecord] = deque()
    for row in rows:
        if row.s_m >= total_length_m - ARRIVAL_EPS_M:
            return MissionResult.COMPLETED, row.t_s
        if row.board_temp_c >= soft_limit_c:
            return MissionResult.OVERHEATED, row.t_s
        window.append(row)
        while window and window[0].t_s < row.t_s - window_s - 1e-9:
            window.popleft()
        if stall_detector(window, window_s):
            return MissionResult.SLIPPED_OUT, row.t_s
    t_end = rows[-1].t_s if rows else max_time_s
    return MissionResult.TIMEOUT, t_end


def stall_detector(window: Sequence[TelemetryRecord], window_s: float = STALL_WINDOW_S) -> bool:
    """Slip verdict over a trailing log window.

    Fires only when the window is full, drive was commanded the whole
    time, and net progress stayed under 1 mm.
    """
    if len(window) < 2:
        return False
    if window[-1].t_s - window[0].t_s < window_s - 1e-9:
        return False
    if any(r.drive_duty == 0.0 for r in window):
        return False
    s_vals = [r.s_m for r in window]
    return max(s_vals) - min(s_vals) < STALL_EPS_M


class Simulation:
    """Single-owner mission loop; all randomness from one seeded rng."""

    def __init__(
        self,
        sc: Scenario,
        torque_map: TorqueMap | None = None,
        thermal_consts: ThermalConstants | None = None,
        command_queue=None,
        on_telemetry: Callable[[TelemetryRecord], None] | None = None,
        bus_loss_probability: float = 0.0,
    ) -> None:
        self.sc = sc
        self.net = sc.network()
        self.params = sc.robot
        self.torque_map = torque_map or TorqueMap.anchors()
        self.thermal_consts = thermal_consts or ThermalConstants()
        self.rng = random.Random(sc.seed)
        self.bus = canbus.Bus(
            latency_s=min(0.001, sc.dt_s),
            loss_probability=bus_loss_probability,
            rng=self.rng if bus_loss_probability > 0 else None,
        )
        self.nodes = [
            firmware.FirmwareState(node=i, peak_mode=sc.peak_mode) for i in ALL_NODES
        ]
        self.pot = firmware.PotModel()
        self.pi_gains = firmware.PiGains()
        self.state = RobotState()
        self.thermal = ThermalState(
            board_temp_c=self.thermal_consts.ambient_c,
            ambient_c=self.thermal_consts.ambient_c,
        )
        self.command_queue = command_queue
        self.on_telemetry = on_telemetry
        self.rows: list[TelemetryRecord] = []
        self.t_s = 0.0
        self.rejected_commands = 0
        self._script = sorted(sc.mission, key=lambda c: c.t_s)
        self._script_i = 0
        self._mg_n = self.params.total_mass_kg * mechanics.G_M_S2
        self._traction_ceiling = (
            self.params.peak_traction_n if sc.peak_mode else self.params.max_cont_traction_n
        )
        self._seg_cache_i = -1
        self._seg_lo = math.inf  # invalid range forces first lookup
        self._seg_hi = -math.inf
        self._seg_is_increaser = False
        self._seg_cache = (0.0, 0.0, 0.0, 0.0)
        self._env_lo = math.inf
        self._env_hi = -math.inf
        self._env = self.sc.env_profile.at(0.0)
        self._tau_cache_duty = None
        self._tau_cache_nm = 0.0
        steps_per = round(firmware.CONTROL_TICK_S / sc.dt_s)
        self._control_every = max(1, steps_per)
        self._telemetry_every = max(1, round(firmware.TELEMETRY_TICK_S / sc.dt_s))
        self._window: deque[TelemetryRecord] = deque()

    # -- command path (shared by scripted missions and the gateway) ----

    def submit(self, kind: str, value: float = 0.0) -> tuple[bool, str]:
        """Map a logical command onto CAN frames and put them on the bus."""
        try:
            if kind == "stop":
                frames = [canbus.encode_command(canbus.Stop(), n) for n in ALL_NODES]
            elif kind == "estop":
                frames = [canbus.encode_command(canbus.Estop(), n) for n in ALL_NODES]
            elif kind == "reset_estop":
                frames = [
                    canbus.encode_command(canbus.ResetEstop(), n) for n in ALL_NODES
                ]
            elif kind == "drive":
                cmd = canbus.Drive(int(round(value)))
                frames = [canbus.encode_command(cmd, n) for n in DRIVE_NODES]
            elif kind == "roll":
                cmd = canbus.Roll(int(round(value)))
                frames = [canbus.encode_command(cmd, n) for n in ROLL_NODES]
            elif kind == "set_joint_duty":
                cmd = canbus.SetJointDuty(int(round(value)))
                frames = [canbus.encode_command(cmd, NODE_J2_JOINT)]
            elif kind == "set_joint_angle":
                cmd = canbus.SetJointAngle(int(round(value * 100.0)))
                frames = [canbus.encode_command(cmd, NODE_J2_JOINT)]
            else:
                return False, f"unknown command {kind!r}"
        except canbus.DecodeError as exc:
            self.rejected_commands += 1
            return False, str(exc)
        for f in frames:
            self.bus.send(f)
        return True, ""

    # -- cached local quantities --------------------------------------

    def _section(self) -> tuple[float, float, float, float]:
        """(lever arm, theta_mid, bend drag, inclination) at current s."""
        s = self.state.s_m
        if not (self._seg_lo <= s < self._seg_hi):
            self._refresh_segment(s)
        if self._seg_is_increaser:
            i = self._seg_cache_i
            seg = self.net.segments[i]
            d = seg.diameter_at_local(s - self.net.starts[i])
            cfg = solve_configuration(self.params, d)
            arm = self.params.link_joint_to_joint_m * math.cos(cfg.phi_rad)
            return arm, cfg.theta_mid_rad, 0.0, seg.inclination
        return self._seg_cache

    def _refresh_segment(self, s: float) -> None:
        i, _ = self.net.locate(s)
        seg = self.net.segments[i]
        self._seg_cache_i = i
        self._seg_lo = self.net.starts[i]
        is_last = i == len(self.net.segments) - 1
        self._seg_hi = (
            self.net.total_length_m + 1.0 if is_last else self._seg_lo + seg.length_m
        )
        self._seg_is_increaser = seg.kind is SegmentKind.INCREASER
        if not self._seg_is_increaser:
            cfg = solve_configuration(
                self.params,
                seg.diameter_in_m,
                seg.curvature_per_m,
                seg.bend_angle_rad if seg.kind is SegmentKind.BEND else math.inf,
            )
            arm = self.params.link_joint_to_joint_m * math.cos(cfg.phi_rad)
            f_bend = (
                self.params.spring_stiffness_nm_per_rad
                * 2.0
                * cfg.bend_deflection_rad
                / self.params.link_joint_to_joint_m
            )
            self._seg_cache = (arm, cfg.theta_mid_rad, f_bend, seg.inclination)

    def _locate(self, s: float) -> tuple[int, float]:
        return self.net.locate(s)

    def _env_at(self, s: float) -> mechanics.Environment:
        if not (self._env_lo <= s < self._env_hi):
            self._env, self._env_lo, self._env_hi = self.sc.env_profile.at_with_bounds(s)
        return self._env

    def _tau_for(self, duty: float) -> float:
        if duty != self._tau_cache_duty:
            self._tau_cache_duty = duty
            self._tau_cache_nm = self.torque_map.torque_nm(duty)
        return self._tau_cache_nm

    # -- loop ----------------------------------------------------------

    def _ingest_commands(self) -> None:
        while self._script_i < len(self._script):
            cmd = self._script[self._script_i]
            if cmd.t_s > self.t_s + 1e-12:
                break
            self._script_i += 1
            ok, err = self.submit(cmd.kind, cmd.value)
            if not ok:
                raise ValueError(f"mission command at t={cmd.t_s}: {err}")
        q = self.command_queue
        if q is not None and not q.empty():
            while True:
                try:
                    kind, value = q.get_nowait()
                except queue.Empty:
                    break
                self.submit(kind, value)

    def _deliver_bus(self, dt: float) -> None:
        for _, frame in self.bus.step(dt):
            node_idx = canbus.command_node(frame)
            if node_idx is None:
                continue  # telemetry frames terminate at the operator side
            try:
                cmd = canbus.decode(frame)
            except canbus.DecodeError:
                self.nodes[node_idx].nak = True
                continue
            firmware.handle_command(self.nodes[node_idx], cmd)

    def _control_tick(self, dt: float) -> None:
        j2 = self.nodes[NODE_J2_JOINT]
        if j2.mode is firmware.Mode.HOLD_ANGLE:
            _, theta, _, _ = self._section()
            code, _ = firmware.pot_read(self.pot, theta, self.rng)
            j2.last_adc_code = code
            measured = firmware.angle_from_code(self.pot, code)
            out = firmware.angle_controller_step(j2, measured, dt, self.pi_gains)
            j2.joint_duty_pct = max(0.0, out)  # bracing torque only presses

    def _physics_step(self, dt: float) -> None:
        j2 = self.nodes[NODE_J2_JOINT]
        estopped = j2.mode is firmware.Mode.ESTOP
        joint_duty = 0.0 if estopped else j2.joint_duty_pct
        drive_duty = 0.0 if estopped else j2.drive_duty_pct
        roll_duty = 0.0 if estopped else j2.roll_duty_pct
        st = self.state
        st.joint_duty_pct = joint_duty
        st.drive_duty_pct = drive_duty
        st.tau_mid_nm = self._tau_for(joint_duty)

        arm, _, f_bend, incl = self._section()
        env = self._env_at(st.s_m)
        required = self._mg_n * incl + env.cable_drag_n + f_bend
        normals = 4.0 * st.tau_mid_nm / arm if arm > 0 else 0.0
        capacity = min(env.mu * normals, self._traction_ceiling)
        st.slip_margin_n = capacity - required
        if st.slip_margin_n >= 0.0:
            st.slip = False
            if drive_duty != 0.0:
                s_new = st.s_m + self.params.max_speed_m_s * drive_duty * dt / 100.0
                if s_new <= 0.0:
                    st.s_m = 0.0
                elif s_new >= self.net.total_length_m:
                    st.s_m = self.net.total_length_m
                    st.arrived = True
                else:
                    st.s_m = s_new
        else:
            st.slip = drive_duty != 0.0  # spinning without progress
        if roll_duty != 0.0:
            st.roll_angle_rad += ROLL_RATE_RAD_S_AT_FULL * roll_duty / 100.0 * dt
        # inline first-order thermal lag (same law as actuation.thermal_step)
        th = self.thermal
        consts = self.thermal_consts
        temp = th.board_temp_c + dt * (
            consts.gain_c_per_duty2 * joint_duty * joint_duty
            - (th.board_temp_c - th.ambient_c)
        ) / consts.tau_s
        th.board_temp_c = temp
        if temp >= consts.soft_limit_c:
            th.time_above_soft_limit_s += dt
            th.failed = True

    def _emit_telemetry(self) -> TelemetryRecord:
        j2 = self.nodes[NODE_J2_JOINT]
        _, theta, _, _ = self._section()
        i, u = self._locate(self.state.s_m)
        d = self.net.segments[i].diameter_at_local(u)
        row = TelemetryRecord(
            t_s=self.t_s,
            s_m=self.state.s_m,
            d_m=d,
            theta_mid_deg=math.degrees(theta),
            joint_duty=self.state.joint_duty_pct,
            drive_duty=self.state.drive_duty_pct,
            est_torque_nm=self.state.tau_mid_nm,
            slip_margin_n=self.state.slip_margin_n,
            slip_flag=int(self.state.slip),
            board_temp_c=self.thermal.board_temp_c,
            mode=j2.mode.value,
        )
        self.rows.append(row)
        self._window.append(row)
        while self._window and self._window[0].t_s < row.t_s - STALL_WINDOW_S - 1e-9:
            self._window.popleft()
        self._broadcast_node_telemetry(row)
        if self.on_telemetry is not None:
            self.on_telemetry(row)
        return row

    def _broadcast_node_telemetry(self, row: TelemetryRecord) -> None:
        for node in self.nodes:
            is_j2 = node.node == NODE_J2_JOINT
            tele = canbus.Telemetry(
                node=node.node,
                angle_centideg=int(round(row.theta_mid_deg * 100)) if is_j2 else 0,
                est_torque_mnm=int(round(row.est_torque_nm * 1000)) if is_j2 else 0,
                board_temp_deci_c=int(round(row.board_temp_c * 10))
                if is_j2
                else int(round(self.thermal_consts.ambient_c * 10)),
                slip=self.state.slip if is_j2 else False,
                estop=node.mode is firmware.Mode.ESTOP,
                nak=node.nak,
                peak_mode=node.peak_mode,
                mode=node.mode.value,
            )
            node.nak = False
            self.bus.send(canbus.encode_telemetry(tele))

    def run(self, realtime: bool = False, stop_flag=None) -> MissionOutcome:
        dt = self.sc.dt_s
        max_steps = int(round(self.sc.max_sim_time_s / dt))
        wall_start = time.monotonic()
        result: MissionResult | None = None
        self._emit_telemetry()  # initial row at t = 0
        bus = self.bus
        queue_in = self.command_queue
        n = 0
        while n < max_steps:
            if stop_flag is not None and stop_flag.is_set():
                break
            bus.clock_s = n * dt
            if self._script_i < len(self._script) or (
                queue_in is not None and not queue_in.empty()
            ):
                self.t_s = n * dt
                self._ingest_commands()
            if bus.has_pending:
                self._deliver_bus(dt)
            else:
                bus.clock_s = (n + 1) * dt
            if n % self._control_every == 0:
                self._control_tick(firmware.CONTROL_TICK_S)
                if realtime:
                    lag = wall_start + n * dt - time.monotonic()
                    if lag > 0.0:
                        time.sleep(lag)
            self._physics_step(dt)
            n += 1
            self.t_s = n * dt
            on_tick = n % self._telemetry_every == 0
            terminal = self.state.arrived or self.thermal.failed
            if on_tick or terminal:
                self._emit_telemetry()
                if self.state.arrived:
                    result = MissionResult.COMPLETED
                elif self.thermal.failed:
                    result = MissionResult.OVERHEATED
                elif stall_detector(self._window):
                    result = MissionResult.SLIPPED_OUT
                if result is not None:
                    break
        if result is None:
            if self.rows[-1].t_s < self.t_s:
                self._emit_telemetry()
            result = MissionResult.TIMEOUT
        # the verdict must be recomputable from the log alone
        replayed, _ = classify_log(
            self.rows,
            self.net.total_length_m,
            self.sc.max_sim_time_s,
            soft_limit_c=self.thermal_consts.soft_limit_c,
        )
        assert replayed is result, f"log replay {replayed} != live {result}"
        return MissionOutcome(result, self.t_s, self.rows, self.bus.frame_log)


def run_scenario(
    sc: Scenario,
    torque_map: TorqueMap | None = None,
    csv_path=None,
    **kwargs,
) -> MissionOutcome:
    """Run a scenario to its terminal condition; optionally write the CSV."""
    sim = Simulation(sc, torque_map=torque_map, **kwargs)
    outcome = sim.run()
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            fh.write(rows_to_csv(outcome.rows))
    return outcome


def make_mission(*cmds: tuple[float, str, float]) -> list[TimedCommand]:
    return [TimedCommand(t, kind, value) for t, kind, value in cmds]
