import json
import time

import pytest

from pipebot.gateway import GatewayServer
from pipebot.scenario import load_scenario, parse_scenario

from test_wsserver import MiniClient

FLAT = """
[pipe]
straight 1.0 0.075 0.0
[env]
env mu=0.4 cable=0 label=dry
[mission]
max_time 600
"""


class JsonClient(MiniClient):
    def send_json(self, obj) -> None:
        self.send_text(json.dumps(obj))

    def recv_json(self, timeout: float = 5.0):
        return json.loads(self.recv_text(timeout))

    def recv_until(self, type_name: str, timeout: float = 10.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            message = self.recv_json(timeout=max(0.1, deadline - time.monotonic()))
            if message.get("type") == type_name:
                return message
        raise TimeoutError(f"no {type_name!r} message within {timeout}s")

    def recv_matching(self, predicate, timeout: float = 15.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            message = self.recv_json(timeout=max(0.1, deadline - time.monotonic()))
            if predicate(message):
                return message
        raise TimeoutError("no matching message")


@pytest.fixture
def server():
    # realtime pacing: telemetry at a steady 10 Hz, sessions outlive tests
    sc = parse_scenario(FLAT, "flat")
    gw = GatewayServer(sc, port=0, realtime=True)
    gw.start()
    yield gw
    gw.shutdown()


def test_hello_carries_profile_and_role(server):
    c = JsonClient(server.port)
    hello = c.recv_until("hello")
    assert hello["v"] == 1
    assert hello["scenario"] == "flat"
    assert hello["role"] == "observer"
    assert hello["total_length_m"] == pytest.approx(1.0)
    assert hello["profile"][0]["kind"] == "straight"
    c.close()


def test_telemetry_stream_flows(server):
    c = JsonClient(server.port)
    c.recv_until("hello")
    t1 = c.recv_until("telemetry")
    t2 = c.recv_until("telemetry")
    assert t2["t_s"] > t1["t_s"]
    assert set(t1) >= {
        "t_s", "s_m", "D_m", "theta_mid_deg", "joint_duty", "drive_duty",
        "est_torque_Nm", "slip_margin_N", "slip_flag", "board_temp_C", "mode",
    }
    c.close()


def test_command_drives_simulation(server):
    c = JsonClient(server.port)
    c.recv_until("hello")
    c.send_json({"cmd": "set_joint_duty", "duty": 25})
    ack = c.recv_until("ack")
    assert ack["cmd"] == "set_joint_duty"
    assert ack["role"] == "commander"
    c.send_json({"cmd": "drive", "duty": 100})
    c.recv_until("ack")
    moving = c.recv_matching(
        lambda m: m.get("type") == "telemetry" and m["s_m"] > 0.0
    )
    assert moving["drive_duty"] == 100.0
    assert moving["mode"] == "drive"
    c.close()


def test_estop_always_accepted_even_for_observer(server):
    commander = JsonClient(server.port)
    commander.recv_until("hello")
    commander.send_json({"cmd": "claim"})
    assert commander.recv_until("ack")["role"] == "commander"

    watcher = JsonClient(server.port)
    watcher.recv_until("hello")
    watcher.send_json({"cmd": "estop"})
    assert watcher.recv_until("ack")["cmd"] == "estop"
    stopped = watcher.recv_matching(
        lambda m: m.get("type") == "telemetry" and m["mode"] == "estop"
    )
    assert stopped["joint_duty"] == 0.0
    commander.close()
    watcher.close()


def test_second_commander_rejected_until_release(server):
    first = JsonClient(server.port)
    first.recv_until("hello")
    first.send_json({"cmd": "drive", "duty": 10})
    first.recv_until("ack")

    second = JsonClient(server.port)
    second.recv_until("hello")
    second.send_json({"cmd": "drive", "duty": 20})
    err = second.recv_until("error")
    assert "busy" in err["reason"]

    first.send_json({"cmd": "release"})
    first.recv_until("ack")
    second.send_json({"cmd": "drive", "duty": 20})
    assert second.recv_until("ack")["cmd"] == "drive"
    first.close()
    second.close()


def test_commander_slot_freed_on_disconnect(server):
    first = JsonClient(server.port)
    first.recv_until("hello")
    first.send_json({"cmd": "claim"})
    first.recv_until("ack")
    first.close()
    time.sleep(0.3)  # let the server notice the hangup

    second = JsonClient(server.port)
    second.recv_until("hello")
    second.send_json({"cmd": "claim"})
    assert second.recv_until("ack")["role"] == "commander"
    second.close()


def test_malformed_and_invalid_messages_keep_connection(server):
    c = JsonClient(server.port)
    c.recv_until("hello")
    c.send_text("{not json")
    assert "malformed" in c.recv_until("error")["reason"]
    c.send_json({"nope": 1})
    assert "cmd" in c.recv_until("error")["reason"]
    c.send_json({"cmd": "warp", "duty": 1})
    assert "unknown" in c.recv_until("error")["reason"]
    c.send_json({"cmd": "drive", "duty": 400})
    assert "outside" in c.recv_until("error")["reason"]
    # connection still alive and commandable
    c.send_json({"cmd": "stop"})
    assert c.recv_until("ack")["cmd"] == "stop"
    c.close()


def test_replay_returns_recent_rows(server):
    c = JsonClient(server.port)
    c.recv_until("hello")
    c.recv_until("telemetry")
    time.sleep(0.2)
    c.send_json({"cmd": "replay", "seconds": 60})
    replay = c.recv_until("replay")
    assert isinstance(replay["rows"], list)
    assert replay["rows"], "replay should carry history"
    assert replay["rows"][0]["type"] == "telemetry"
    c.close()


def test_mission_result_broadcast():
    sc = parse_scenario(FLAT, "flat")
    gw = GatewayServer(sc, port=0, realtime=False)
    gw.start()
    try:
        c = JsonClient(gw.port)
        c.recv_until("hello")
        c.send_json({"cmd": "set_joint_duty", "duty": 25})
        c.send_json({"cmd": "drive", "duty": 100})
        result = c.recv_until("result", timeout=30.0)
        assert result["result"] == "completed"
        c.close()
    finally:
        gw.shutdown()


def test_scripted_mission_discarded_when_serving():
    sc = load_scenario("field_sewage")
    gw = GatewayServer(sc, port=0, realtime=False)
    try:
        assert gw.sc.mission == []
        assert gw.sc.max_sim_time_s >= 3600.0
    finally:
        gw.shutdown()
