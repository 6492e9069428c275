"""Scenario files: pipe course, robot overrides, environment, mission.

Line-oriented format with `#` comments and four sections:

    [pipe]      straight <len_m> <D_m> <incl>
                bend <radius_m> <angle_deg> <D_m> <incl>
                increaser <len_m> <Din_m> <Dout_m> <incl>
    [robot]     <param_name> <value>        (RobotParams field overrides)
                peak_mode <0|1>
    [env]       env mu=<f> cable=<N> label=<s> [from=<s_m>] [to=<s_m>]
    [mission]   seed <int> | max_time <s> | interactive
                at <t_s> <stop|drive d|roll d|set_joint_duty d|
                          set_joint_angle deg|estop|reset_estop>
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import geometry as geo
from .mechanics import Environment
from .robot import RobotParams

DEFAULT_DT_S = 0.001
DEFAULT_MAX_TIME_S = 300.0

MISSION_COMMANDS = {
    "stop": 0,
    "drive": 1,
    "roll": 1,
    "set_joint_duty": 1,
    "set_joint_angle": 1,
    "estop": 0,
    "reset_estop": 0,
}


class ScenarioError(ValueError):
    """Parse or validation failure, carrying the offending line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class TimedCommand:
    t_s: float
    kind: str
    value: float = 0.0


@dataclass(frozen=True)
class EnvSpan:
    env: Environment
    s_from_m: float = 0.0
    s_to_m: float = float("inf")


@dataclass
class EnvProfile:
    """Piecewise environment over arclength; later spans override earlier."""

    spans: list[EnvSpan] = field(default_factory=lambda: [EnvSpan(Environment())])

    def at(self, s_m: float) -> Environment:
        current = self.spans[0].env
        for span in self.spans:
            if span.s_from_m <= s_m <= span.s_to_m:
                current = span.env
        return current

    def at_with_bounds(self, s_m: float) -> tuple[Environment, float, float]:
        """(env, lo, hi): the result is constant while lo <= s < hi."""
        env = self.at(s_m)
        lo, hi = -math.inf, math.inf
        for span in self.spans:
            f, t = span.s_from_m, span.s_to_m
            if s_m >= f:
                lo = max(lo, f)  # span turns on at f, inclusive
            else:
                hi = min(hi, f)
            past_t = math.nextafter(t, math.inf)  # span turns off just past t
            if s_m >= past_t:
                lo = max(lo, past_t)
            else:
                hi = min(hi, past_t)
        return env, lo, hi


@dataclass
class Scenario:
    name: str
    segments: list[geo.PipeSegment]
    robot: RobotParams
    env_profile: EnvProfile
    mission: list[TimedCommand]
    interactive: bool = False
    peak_mode: bool = False
    seed: int = 0
    dt_s: float = DEFAULT_DT_S
    max_sim_time_s: float = DEFAULT_MAX_TIME_S

    def network(self) -> geo.PipeNetwork:
        return geo.build_network(self.segments)

    def with_mission(self, mission: list[TimedCommand], max_time_s: float | None = None):
        """Copy with a replacement command script (used by tests/tools)."""
        sc = dataclasses.replace(self)
        sc.mission = list(mission)
        sc.interactive = False
        if max_time_s is not None:
            sc.max_sim_time_s = max_time_s
        return sc


def _parse_env_line(tokens: list[str], line_no: int) -> EnvSpan:
    if tokens[0] != "env":
        raise ScenarioError(line_no, f"expected 'env ...', got {tokens[0]!r}")
    mu = None
    cable = 0.0
    label = "custom"
    s_from = 0.0
    s_to = float("inf")
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ScenarioError(line_no, f"expected key=value, got {tok!r}")
        key, _, val = tok.partition("=")
        try:
            if key == "mu":
                mu = float(val)
            elif key == "cable":
                cable = float(val)
            elif key == "label":
                label = val
            elif key == "from":
                s_from = float(val)
            elif key == "to":
                s_to = float(val)
            else:
                raise ScenarioError(line_no, f"unknown env key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(line_no, f"bad value for {key!r}: {val!r}") from None
    if mu is None:
        raise ScenarioError(line_no, "env line needs mu=<float>")
    try:
        env = Environment(mu=mu, cable_drag_n=cable, label=label)
    except ValueError as exc:
        raise ScenarioError(line_no, str(exc)) from None
    return EnvSpan(env, s_from, s_to)


def _parse_mission_line(tokens: list[str], line_no: int) -> TimedCommand:
    if tokens[0] != "at" or len(tokens) < 3:
        raise ScenarioError(line_no, "mission line must be 'at <t_s> <command> [arg]'")
    try:
        t = float(tokens[1])
    except ValueError:
        raise ScenarioError(line_no, f"bad mission time {tokens[1]!r}") from None
    if t < 0.0:
        raise ScenarioError(line_no, "mission time cannot be negative")
    kind = tokens[2]
    if kind not in MISSION_COMMANDS:
        raise ScenarioError(line_no, f"unknown mission command {kind!r}")
    argc = MISSION_COMMANDS[kind]
    if len(tokens) != 3 + argc:
        raise ScenarioError(line_no, f"{kind} takes {argc} argument(s)")
    value = 0.0
    if argc:
        try:
            value = float(tokens[3])
        except ValueError:
            raise ScenarioError(line_no, f"bad argument {tokens[3]!r}") from None
    return TimedCommand(t, kind, value)


_ROBOT_FIELDS = {f.name for f in dataclasses.fields(RobotParams)}


def parse_scenario(text: str, name: str = "<inline>") -> Scenario:
    segments: list[geo.PipeSegment] = []
    overrides: dict[str, float] = {}
    peak_mode = False
    spans: list[EnvSpan] = []
    mission: list[TimedCommand] = []
    interactive = False
    seed = 0
    dt = DEFAULT_DT_S
    max_time = DEFAULT_MAX_TIME_S
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in ("pipe", "robot", "env", "mission"):
                raise ScenarioError(line_no, f"unknown section [{section}]")
            continue
        tokens = line.split()
        if section == "pipe":
            try:
                segments.append(geo.parse_segment_line(tokens))
            except geo.PipeBuildError as exc:
                raise ScenarioError(line_no, str(exc)) from None
        elif section == "robot":
            if len(tokens) != 2:
                raise ScenarioError(line_no, "robot override must be '<name> <value>'")
            key, val = tokens
            if key == "peak_mode":
                peak_mode = val not in ("0", "false", "off")
                continue
            if key not in _ROBOT_FIELDS:
                raise ScenarioError(line_no, f"unknown robot parameter {key!r}")
            try:
                overrides[key] = float(val)
            except ValueError:
                raise ScenarioError(line_no, f"bad value {val!r} for {key}") from None
        elif section == "env":
            spans.append(_parse_env_line(tokens, line_no))
        elif section == "mission":
            if tokens[0] == "interactive" and len(tokens) == 1:
                interactive = True
            elif tokens[0] == "seed" and len(tokens) == 2:
                seed = int(tokens[1])
            elif tokens[0] == "max_time" and len(tokens) == 2:
                max_time = float(tokens[1])
                if max_time <= 0:
                    raise ScenarioError(line_no, "max_time must be > 0")
            elif tokens[0] == "dt" and len(tokens) == 2:
                dt = float(tokens[1])
                if dt <= 0:
                    raise ScenarioError(line_no, "dt must be > 0")
            else:
                mission.append(_parse_mission_line(tokens, line_no))
        else:
            raise ScenarioError(line_no, f"content before any section: {line!r}")
    if not segments:
        raise ScenarioError(0, "scenario has no [pipe] segments")
    try:
        robot = RobotParams(**overrides) if overrides else RobotParams()
    except (TypeError, ValueError) as exc:
        raise ScenarioError(0, f"robot overrides invalid: {exc}") from None
    times = [c.t_s for c in mission]
    if times != sorted(times):
        raise ScenarioError(0, "mission times must be non-decreasing")
    profile = EnvProfile(spans) if spans else EnvProfile()
    sc = Scenario(
        name=name,
        segments=segments,
        robot=robot,
        env_profile=profile,
        mission=mission,
        interactive=interactive,
        peak_mode=peak_mode,
        seed=seed,
        dt_s=dt,
        max_sim_time_s=max_time,
    )
    geo.build_network(segments)  # fail fast on junction mismatches
    return sc


def shipped_scenario_names() -> list[str]:
    files = resources.files("pipebot").joinpath("scenarios")
    return sorted(p.name[: -len(".scn")] for p in files.iterdir() if p.name.endswith(".scn"))


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load a scenario from a file path or a shipped scenario name."""
    p = Path(path_or_name)
    if p.exists():
        return parse_scenario(p.read_text(), name=p.stem)
    candidate = resources.files("pipebot").joinpath(f"scenarios/{path_or_name}.scn")
    if candidate.is_file():
        return parse_scenario(candidate.read_text(), name=str(path_or_name))
    raise FileNotFoundError(
        f"no scenario file {path_or_name!r}; shipped: {', '.join(shipped_scenario_names())}"
    )
