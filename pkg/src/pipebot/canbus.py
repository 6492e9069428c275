"""Bit-exact CAN 2.0A codec and a deterministic simulated bus.

Frame layout (fixed so independent implementations interoperate):
  command id   = 0x100 + node, telemetry id = 0x200 + node, node 0..4
  payload[0]   = opcode, operands little-endian from payload[1]
  telemetry    = 8 bytes: angle centideg (i16), est torque mNm (i16),
                 board temp deci-degC (i16), status flags, mode code
Status flag bits: 0 slip, 1 estop, 2 nak, 3 peak-mode.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass
from typing import Union

NODE_COUNT = 5
COMMAND_ID_BASE = 0x100
TELEMETRY_ID_BASE = 0x200

OP_STOP = 0x00
OP_DRIVE = 0x01
OP_ROLL = 0x02
OP_SET_JOINT_ANGLE = 0x03
OP_SET_JOINT_DUTY = 0x04
OP_ESTOP = 0x05
OP_RESET_ESTOP = 0x06

FLAG_SLIP = 0x01
FLAG_ESTOP = 0x02
FLAG_NAK = 0x04
FLAG_PEAK = 0x08

MODE_CODES = {"idle": 0, "drive": 1, "roll": 2, "hold_angle": 3, "estop": 4}
MODE_NAMES = {v: k for k, v in MODE_CODES.items()}


class DecodeError(ValueError):
    """Base class for frame decode failures."""


class UnknownIdError(DecodeError):
    pass


class UnknownOpcodeError(DecodeError):
    pass


class DlcMismatchError(DecodeError):
    pass


class OperandRangeError(DecodeError):
    pass


@dataclass(frozen=True)
class CanFrame:
    can_id: int
    dlc: int
    payload: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.can_id < 0x800:
            raise ValueError(f"id {self.can_id:#x} does not fit 11 bits")
        if not 0 <= self.dlc <= 8:
            raise ValueError(f"dlc {self.dlc} outside 0..8")
        if len(self.payload) != self.dlc:
            raise ValueError(f"payload length {len(self.payload)} != dlc {self.dlc}")


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Drive:
    duty_pct: int  # signed, -100..100


@dataclass(frozen=True)
class Roll:
    duty_pct: int  # signed, -100..100


@dataclass(frozen=True)
class SetJointAngle:
    centideg: int  # signed 16-bit


@dataclass(frozen=True)
class SetJointDuty:
    duty_pct: int  # 0..100


@dataclass(frozen=True)
class Estop:
    pass


@dataclass(frozen=True)
class ResetEstop:
    pass


Command = Union[Stop, Drive, Roll, SetJointAngle, SetJointDuty, Estop, ResetEstop]


@dataclass(frozen=True)
class Telemetry:
    node: int
    angle_centideg: int
    est_torque_mnm: int
    board_temp_deci_c: int
    slip: bool = False
    estop: bool = False
    nak: bool = False
    peak_mode: bool = False
    mode: str = "idle"


def _check_node(node: int) -> None:
    if not 0 <= node < NODE_COUNT:
        raise ValueError(f"node {node} outside 0..{NODE_COUNT - 1}")


def _check_signed_duty(duty: int) -> None:
    if not -100 <= duty <= 100:
        raise OperandRangeError(f"signed duty {duty} outside -100..100")


def encode_command(cmd: Command, node: int) -> CanFrame:
    _check_node(node)
    if isinstance(cmd, Stop):
        payload = bytes([OP_STOP])
    elif isinstance(cmd, Drive):
        _check_signed_duty(cmd.duty_pct)
        payload = bytes([OP_DRIVE]) + struct.pack("<b", cmd.duty_pct)
    elif isinstance(cmd, Roll):
        _check_signed_duty(cmd.duty_pct)
        payload = bytes([OP_ROLL]) + struct.pack("<b", cmd.duty_pct)
    elif isinstance(cmd, SetJointAngle):
        if not -32768 <= cmd.centideg <= 32767:
            raise OperandRangeError(f"angle {cmd.centideg} centideg overflows int16")
        payload = bytes([OP_SET_JOINT_ANGLE]) + struct.pack("<h", cmd.centideg)
    elif isinstance(cmd, SetJointDuty):
        if not 0 <= cmd.duty_pct <= 100:
            raise OperandRangeError(f"joint duty {cmd.duty_pct} outside 0..100")
        payload = bytes([OP_SET_JOINT_DUTY, cmd.duty_pct])
    elif isinstance(cmd, Estop):
        payload = bytes([OP_ESTOP])
    elif isinstance(cmd, ResetEstop):
        payload = bytes([OP_RESET_ESTOP])
    else:
        raise TypeError(f"not a command: {cmd!r}")
    return CanFrame(COMMAND_ID_BASE + node, len(payload), payload)


def encode_telemetry(tele: Telemetry) -> CanFrame:
    _check_node(tele.node)
    for name, v in (
        ("angle", tele.angle_centideg),
        ("torque", tele.est_torque_mnm),
        ("temp", tele.board_temp_deci_c),
    ):
        if not -32768 <= v <= 32767:
            raise OperandRangeError(f"telemetry {name} {v} overflows int16")
    flags = (
        (FLAG_SLIP if tele.slip else 0)
        | (FLAG_ESTOP if tele.estop else 0)
        | (FLAG_NAK if tele.nak else 0)
        | (FLAG_PEAK if tele.peak_mode else 0)
    )
    if tele.mode not in MODE_CODES:
        raise ValueError(f"unknown mode {tele.mode!r}")
    payload = struct.pack(
        "<hhhBB",
        tele.angle_centideg,
        tele.est_torque_mnm,
        tele.board_temp_deci_c,
        flags,
        MODE_CODES[tele.mode],
    )
    return CanFrame(TELEMETRY_ID_BASE + tele.node, len(payload), payload)


_COMMAND_DLC = {
    OP_STOP: 1,
    OP_DRIVE: 2,
    OP_ROLL: 2,
    OP_SET_JOINT_ANGLE: 3,
    OP_SET_JOINT_DUTY: 2,
    OP_ESTOP: 1,
    OP_RESET_ESTOP: 1,
}


def _decode_command(frame: CanFrame) -> Command:
    if frame.dlc < 1:
        raise DlcMismatchError("command frame has no opcode byte")
    op = frame.payload[0]
    expected = _COMMAND_DLC.get(op)
    if expected is None:
        raise UnknownOpcodeError(f"unknown opcode {op:#04x}")
    if frame.dlc != expected:
        raise DlcMismatchError(f"opcode {op:#04x} expects dlc {expected}, got {frame.dlc}")
    if op == OP_STOP:
        return Stop()
    if op == OP_DRIVE:
        duty = struct.unpack("<b", frame.payload[1:2])[0]
        _check_signed_duty(duty)
        return Drive(duty)
    if op == OP_ROLL:
        duty = struct.unpack("<b", frame.payload[1:2])[0]
        _check_signed_duty(duty)
        return Roll(duty)
    if op == OP_SET_JOINT_ANGLE:
        return SetJointAngle(struct.unpack("<h", frame.payload[1:3])[0])
    if op == OP_SET_JOINT_DUTY:
        duty = frame.payload[1]
        if duty > 100:
            raise OperandRangeError(f"joint duty {duty} outside 0..100")
        return SetJointDuty(duty)
    if op == OP_ESTOP:
        return Estop()
    return ResetEstop()


def _decode_telemetry(frame: CanFrame, node: int) -> Telemetry:
    if frame.dlc != 8:
        raise DlcMismatchError(f"telemetry expects dlc 8, got {frame.dlc}")
    angle, torque, temp, flags, mode_code = struct.unpack("<hhhBB", frame.payload)
    if mode_code not in MODE_NAMES:
        raise OperandRangeError(f"unknown mode code {mode_code}")
    return Telemetry(
        node=node,
        angle_centideg=angle,
        est_torque_mnm=torque,
        board_temp_deci_c=temp,
        slip=bool(flags & FLAG_SLIP),
        estop=bool(flags & FLAG_ESTOP),
        nak=bool(flags & FLAG_NAK),
        peak_mode=bool(flags & FLAG_PEAK),
        mode=MODE_NAMES[mode_code],
    )


def decode(frame: CanFrame) -> Command | Telemetry:
    if COMMAND_ID_BASE <= frame.can_id < COMMAND_ID_BASE + NODE_COUNT:
        return _decode_command(frame)
    if TELEMETRY_ID_BASE <= frame.can_id < TELEMETRY_ID_BASE + NODE_COUNT:
        return _decode_telemetry(frame, frame.can_id - TELEMETRY_ID_BASE)
    raise UnknownIdError(f"id {frame.can_id:#05x} is not a known node id")


def command_node(frame: CanFrame) -> int | None:
    """Destination node for command frames, None otherwise."""
    if COMMAND_ID_BASE <= frame.can_id < COMMAND_ID_BASE + NODE_COUNT:
        return frame.can_id - COMMAND_ID_BASE
    return None


def format_frame_log_line(t_s: float, frame: CanFrame) -> str:
    payload_hex = frame.payload.hex() if frame.dlc else "-"
    return f"{t_s:.3f} {frame.can_id:#05x} {frame.dlc} {payload_hex}"


class Bus:
    """Shared bus with fixed latency, id-priority delivery, seeded loss.

    Arbitration is modeled at tick granularity: every frame due in the
    same step is delivered lowest-id first, ties in enqueue order.
    """

    def __init__(
        self,
        latency_s: float = 0.001,
        loss_probability: float = 0.0,
        rng: random.Random | None = None,
    ) -> None:
        if not 0.0 <= loss_probability < 1.0:
            raise ValueError("loss probability must be in [0, 1)")
        if loss_probability > 0.0 and rng is None:
            raise ValueError("lossy bus needs a seeded rng")
        self.latency_s = latency_s
        self.loss_probability = loss_probability
        self._rng = rng
        self._queue: list[tuple[float, int, int, CanFrame]] = []
        self._seq = 0
        self.clock_s = 0.0
        self.frame_log: list[str] = []
        self.dropped = 0

    @property
    def has_pending(self) -> bool:
        return bool(self._queue)

    def send(self, frame: CanFrame) -> bool:
        """Enqueue a frame; returns False if the bus lost it."""
        if self.loss_probability > 0.0 and self._rng.random() < self.loss_probability:
            self.dropped += 1
            return False
        self._queue.append((self.clock_s + self.latency_s, frame.can_id, self._seq, frame))
        self._seq += 1
        return True

    def step(self, dt_s: float) -> list[tuple[float, CanFrame]]:
        """Advance the bus clock and return frames due for delivery."""
        if dt_s <= 0.0:
            raise ValueError(f"dt must be > 0, got {dt_s}")
        self.clock_s += dt_s
        if not self._queue:
            return []
        due = [e for e in self._queue if e[0] <= self.clock_s]
        if not due:
            return []
        self._queue = [e for e in self._queue if e[0] > self.clock_s]
        due.sort(key=lambda e: (e[0], e[1], e[2]))
        out = []
        for deliver_t, _, _, frame in due:
            self.frame_log.append(format_frame_log_line(deliver_t, frame))
            out.append((deliver_t, frame))
        return out


def bus_step(bus: Bus, dt_s: float) -> list[tuple[float, CanFrame]]:
    return bus.step(dt_s)
