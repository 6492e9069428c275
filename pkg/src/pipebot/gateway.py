"""Operator gateway: live mission over WebSocket, JSON line messages.

One commander at a time, any number of observers; the e-stop is always
accepted no matter who sends it. Client commands travel the exact same
path as scripted missions (logical command -> CAN frames -> bus), so
the gateway cannot mutate simulation state any other way. Telemetry is
broadcast every telemetry tick and the last 60 s are replayable so a
reloaded console can rebuild its strip charts.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from collections import deque

from .geometry import segment_profile
from .scenario import Scenario
from .simloop import Simulation, TelemetryRecord
from .wsserver import WsConnection, WsServer

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
REPLAY_SECONDS = 60.0
CLIENT_QUEUE_LIMIT = 512

COMMAND_SPECS = {
    # cmd -> (submit kind, payload key or None, (lo, hi) or None)
    "stop": ("stop", None, None),
    "estop": ("estop", None, None),
    "reset_estop": ("reset_estop", None, None),
    "drive": ("drive", "duty", (-100, 100)),
    "roll": ("roll", "duty", (-100, 100)),
    "set_joint_duty": ("set_joint_duty", "duty", (0, 100)),
    "set_joint_angle": ("set_joint_angle", "deg", (-327.68, 327.67)),
}


def row_to_message(row: TelemetryRecord) -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "type": "telemetry",
        "t_s": round(row.t_s, 3),
        "s_m": round(row.s_m, 6),
        "D_m": round(row.d_m, 6),
        "theta_mid_deg": round(row.theta_mid_deg, 4),
        "joint_duty": round(row.joint_duty, 1),
        "drive_duty": round(row.drive_duty, 1),
        "est_torque_Nm": round(row.est_torque_nm, 4),
        "slip_margin_N": round(row.slip_margin_n, 4),
        "slip_flag": row.slip_flag,
        "board_temp_C": round(row.board_temp_c, 3),
        "mode": row.mode,
    }


class _Client:
    def __init__(self, conn: WsConnection) -> None:
        self.conn = conn
        self.outbox: queue.Queue = queue.Queue()
        self.role = "observer"
        self.writer = threading.Thread(target=self._write_loop, daemon=True)
        self.writer.start()

    def push(self, message: dict) -> None:
        # telemetry is disposable under backlog; control messages never are
        if (
            message.get("type") == "telemetry"
            and self.outbox.qsize() >= CLIENT_QUEUE_LIMIT
        ):
            return
        self.outbox.put(message)

    def _write_loop(self) -> None:
        while True:
            message = self.outbox.get()
            if message is None:
                return
            if not self.conn.send_text(json.dumps(message) + "\n"):
                return

    def stop(self) -> None:
        self.outbox.put(None)


class GatewayServer:
    """Serves one live simulation to operator consoles."""

    def __init__(
        self,
        sc: Scenario,
        host: str = "127.0.0.1",
        port: int = 0,
        realtime: bool = False,
    ) -> None:
        if sc.mission:
            log.info(
                "scenario %s has a scripted mission; serving interactively "
                "and ignoring the script",
                sc.name,
            )
        self.sc = sc.with_mission([], max_time_s=max(sc.max_sim_time_s, 3600.0))
        self.realtime = realtime
        self.command_queue: queue.Queue = queue.Queue()
        self.sim = Simulation(
            self.sc, command_queue=self.command_queue, on_telemetry=self._on_telemetry
        )
        self.replay: deque[dict] = deque(maxlen=int(REPLAY_SECONDS * 10) + 1)
        self._clients: list[_Client] = []
        self._lock = threading.Lock()
        self._commander: _Client | None = None
        self._result_message: dict | None = None
        self._stop = threading.Event()
        self.ws = WsServer(host, port, self._client_session)
        self.port = self.ws.port
        self._sim_thread = threading.Thread(target=self._run_sim, daemon=True)

    # -- simulation side ------------------------------------------------

    def _run_sim(self) -> None:
        outcome = self.sim.run(realtime=self.realtime, stop_flag=self._stop)
        message = {
            "v": PROTOCOL_VERSION,
            "type": "result",
            "result": outcome.result.value,
            "t_s": round(outcome.t_end_s, 3),
        }
        self._result_message = message
        self._broadcast(message)

    def _on_telemetry(self, row: TelemetryRecord) -> None:
        message = row_to_message(row)
        self.replay.append(message)
        self._broadcast(message)

    def _broadcast(self, message: dict) -> None:
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            c.push(message)

    # -- client side ------------------------------------------------------

    def _hello(self, client: _Client) -> dict:
        return {
            "v": PROTOCOL_VERSION,
            "type": "hello",
            "scenario": self.sc.name,
            "role": client.role,
            "total_length_m": round(self.sim.net.total_length_m, 6),
            "telemetry_hz": 10,
            "profile": segment_profile(self.sim.net),
        }

    def _client_session(self, conn: WsConnection) -> None:
        client = _Client(conn)
        with self._lock:
            self._clients.append(client)
        client.push(self._hello(client))
        if self._result_message is not None:
            client.push(self._result_message)
        try:
            while True:
                raw = conn.recv_text()
                if raw is None:
                    break
                for line in raw.splitlines():
                    if line.strip():
                        self._handle_message(client, line)
        finally:
            with self._lock:
                self._clients.remove(client)
                if self._commander is client:
                    self._commander = None
            client.stop()

    def _handle_message(self, client: _Client, raw: str) -> None:
        try:
            message = json.loads(raw)
        except json.JSONDecodeError:
            client.push(self._error("malformed json"))
            return
        if not isinstance(message, dict) or "cmd" not in message:
            client.push(self._error("message needs a cmd field"))
            return
        cmd = message["cmd"]
        if cmd == "claim":
            self._handle_claim(client)
            return
        if cmd == "release":
            with self._lock:
                if self._commander is client:
                    self._commander = None
            client.role = "observer"
            client.push({"v": PROTOCOL_VERSION, "type": "ack", "cmd": "release"})
            return
        if cmd == "replay":
            seconds = message.get("seconds", REPLAY_SECONDS)
            if not isinstance(seconds, (int, float)) or seconds <= 0:
                client.push(self._error("replay seconds must be positive"))
                return
            rows = list(self.replay)
            if rows:
                cutoff = rows[-1]["t_s"] - float(seconds)
                rows = [r for r in rows if r["t_s"] >= cutoff]
            client.push({"v": PROTOCOL_VERSION, "type": "replay", "rows": rows})
            return
        spec = COMMAND_SPECS.get(cmd)
        if spec is None:
            client.push(self._error(f"unknown cmd {cmd!r}"))
            return
        kind, key, bounds = spec
        value = 0.0
        if key is not None:
            if key not in message or not isinstance(message[key], (int, float)):
                client.push(self._error(f"{cmd} needs numeric {key!r}"))
                return
            value = float(message[key])
            lo, hi = bounds
            if not lo <= value <= hi:
                client.push(self._error(f"{key}={value} outside [{lo}, {hi}]"))
                return
        if cmd != "estop" and not self._acquire_command_slot(client):
            client.push(self._error("busy: another commander holds the session"))
            return
        self.command_queue.put((kind, value))
        client.push({"v": PROTOCOL_VERSION, "type": "ack", "cmd": cmd, "role": client.role})

    def _handle_claim(self, client: _Client) -> None:
        if self._acquire_command_slot(client):
            client.push(
                {"v": PROTOCOL_VERSION, "type": "ack", "cmd": "claim", "role": "commander"}
            )
        else:
            client.push(self._error("busy: another commander holds the session"))

    def _acquire_command_slot(self, client: _Client) -> bool:
        with self._lock:
            if self._commander is None:
                self._commander = client
            if self._commander is client:
                client.role = "commander"
                return True
            return False

    @staticmethod
    def _error(reason: str) -> dict:
        return {"v": PROTOCOL_VERSION, "type": "error", "reason": reason}

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self.ws.start()
        self._sim_thread.start()

    def serve_forever(self) -> None:
        self.start()
        self._sim_thread.join()
        self._stop.wait()

    def shutdown(self) -> None:
        self._stop.set()
        self.ws.stop()


def serve_gateway(
    sc: Scenario, port: int, host: str = "127.0.0.1", realtime: bool = True
) -> GatewayServer:
    """Start serving a live mission; returns the running server."""
    server = GatewayServer(sc, host=host, port=port, realtime=realtime)
    server.start()
    return server
