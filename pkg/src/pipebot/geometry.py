"""Arclength-parameterized pipe courses.

A course is an ordered chain of straight runs, circular bends, and
tapered increasers. Everything downstream only ever needs three local
profiles along the centerline: inner diameter D(s), curvature kappa(s),
and the axial unit-gravity component (+1 = climbing straight up), so
segments are 1-D records rather than 3-D solids.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from enum import Enum

DIAMETER_MIN_M = 0.05
DIAMETER_MAX_M = 0.15

# nominal bores for the two pipe sizes this robot spans
BORE_3IN_M = 0.075
BORE_4IN_M = 0.100

# taper length used when a scenario does not give one
DEFAULT_INCREASER_LENGTH_M = 0.10

JUNCTION_TOL_M = 1e-9


class PipeBuildError(ValueError):
    """Raised for invalid segment dimensions or mismatched junctions."""


class ArclengthError(ValueError):
    """Raised when a queried arclength lies outside the course."""


class SegmentKind(Enum):
    STRAIGHT = "straight"
    BEND = "bend"
    INCREASER = "increaser"


@dataclass(frozen=True)
class PipeSegment:
    kind: SegmentKind
    length_m: float
    diameter_in_m: float
    diameter_out_m: float
    inclination: float = 0.0
    bend_radius_m: float = 0.0
    bend_angle_rad: float = 0.0

    def __post_init__(self) -> None:
        if self.length_m <= 0.0:
            raise PipeBuildError(f"segment length must be > 0, got {self.length_m}")
        for d in (self.diameter_in_m, self.diameter_out_m):
            if not (DIAMETER_MIN_M <= d <= DIAMETER_MAX_M):
                raise PipeBuildError(
                    f"diameter {d} m outside [{DIAMETER_MIN_M}, {DIAMETER_MAX_M}] m"
                )
        if not -1.0 <= self.inclination <= 1.0:
            raise PipeBuildError(f"inclination must be in [-1, 1], got {self.inclination}")
        if self.kind is SegmentKind.INCREASER:
            if self.diameter_in_m == self.diameter_out_m:
                raise PipeBuildError("increaser must change diameter")
        else:
            if self.diameter_in_m != self.diameter_out_m:
                raise PipeBuildError(f"{self.kind.value} segment cannot change diameter")
        if self.kind is SegmentKind.BEND:
            if self.bend_radius_m <= 0.0 or self.bend_angle_rad <= 0.0:
                raise PipeBuildError("bend needs positive radius and angle")
            expected = self.bend_radius_m * self.bend_angle_rad
            if abs(self.length_m - expected) > 1e-12:
                raise PipeBuildError(
                    f"bend arclength {self.length_m} != radius*angle {expected}"
                )

    @property
    def curvature_per_m(self) -> float:
        if self.kind is SegmentKind.BEND:
            return 1.0 / self.bend_radius_m
        return 0.0

    def diameter_at_local(self, u: float) -> float:
        """Diameter at local arclength u in [0, length]."""
        if self.kind is SegmentKind.INCREASER:
            f = u / self.length_m
            return self.diameter_in_m + f * (self.diameter_out_m - self.diameter_in_m)
        return self.diameter_in_m


def straight(length_m: float, diameter_m: float, inclination: float = 0.0) -> PipeSegment:
    return PipeSegment(SegmentKind.STRAIGHT, length_m, diameter_m, diameter_m, inclination)


def bend(
    radius_m: float, angle_rad: float, diameter_m: float, inclination: float = 0.0
) -> PipeSegment:
    if radius_m <= 0.0 or angle_rad <= 0.0:
        raise PipeBuildError("bend needs positive radius and angle")
    return PipeSegment(
        SegmentKind.BEND,
        radius_m * angle_rad,
        diameter_m,
        diameter_m,
        inclination,
        bend_radius_m=radius_m,
        bend_angle_rad=angle_rad,
    )


def increaser(
    length_m: float, diameter_in_m: float, diameter_out_m: float, inclination: float = 0.0
) -> PipeSegment:
    return PipeSegment(
        SegmentKind.INCREASER, length_m, diameter_in_m, diameter_out_m, inclination
    )


@dataclass(frozen=True)
class PipeNetwork:
    """Validated, immutable chain of segments with cumulative offsets."""

    segments: tuple[PipeSegment, ...]
    starts: tuple[float, ...]
    total_length_m: float

    def locate(self, s_m: float) -> tuple[int, float]:
        """Return (segment index, local arclength) for a position on the course.

        Junction points belong to the downstream segment; the course end
        belongs to the final segment.
        """
        if not 0.0 <= s_m <= self.total_length_m:
            raise ArclengthError(
                f"s = {s_m} m outside course [0, {self.total_length_m}] m"
            )
        i = bisect.bisect_right(self.starts, s_m) - 1
        if i >= len(self.segments):
            i = len(self.segments) - 1
        return i, s_m - self.starts[i]


def build_network(segments: list[PipeSegment] | tuple[PipeSegment, ...]) -> PipeNetwork:
    """Chain segments into a course, checking junction diameter continuity."""
    if not segments:
        raise PipeBuildError("course needs at least one segment")
    starts = []
    s = 0.0
    prev: PipeSegment | None = None
    for seg in segments:
        if prev is not None:
            gap = abs(prev.diameter_out_m - seg.diameter_in_m)
            if gap > JUNCTION_TOL_M:
                raise PipeBuildError(
                    f"diameter discontinuity at s = {s:.6f} m: "
                    f"{prev.diameter_out_m} -> {seg.diameter_in_m}"
                )
        starts.append(s)
        s += seg.length_m
        prev = seg
    return PipeNetwork(tuple(segments), tuple(starts), s)


def diameter_at(net: PipeNetwork, s_m: float) -> float:
    i, u = net.locate(s_m)
    return net.segments[i].diameter_at_local(u)


def curvature_at(net: PipeNetwork, s_m: float) -> float:
    i, _ = net.locate(s_m)
    return net.segments[i].curvature_per_m


def gravity_axial_at(net: PipeNetwork, s_m: float) -> float:
    i, _ = net.locate(s_m)
    return net.segments[i].inclination


def bend_angle_at(net: PipeNetwork, s_m: float) -> float:
    """Total turn angle of the bend containing s, 0 outside bends."""
    i, _ = net.locate(s_m)
    seg = net.segments[i]
    return seg.bend_angle_rad if seg.kind is SegmentKind.BEND else 0.0


def segment_profile(net: PipeNetwork) -> list[dict]:
    """Compact per-segment description (used by the gateway hello message)."""
    out = []
    for seg, s0 in zip(net.segments, net.starts):
        out.append(
            {
                "kind": seg.kind.value,
                "s0_m": round(s0, 6),
                "s1_m": round(s0 + seg.length_m, 6),
                "d_in_m": seg.diameter_in_m,
                "d_out_m": seg.diameter_out_m,
                "inclination": seg.inclination,
            }
        )
    return out


_DEG = math.pi / 180.0


def parse_segment_line(tokens: list[str]) -> PipeSegment:
    """Build a segment from a scenario-file record.

    Grammar:
        straight <len_m> <D_m> <incl>
        bend <radius_m> <angle_deg> <D_m> <incl>
        increaser <len_m> <Din_m> <Dout_m> <incl>
    """
    if not tokens:
        raise PipeBuildError("empty segment record")
    kind, args = tokens[0], tokens[1:]
    try:
        vals = [float(a) for a in args]
    except ValueError as exc:
        raise PipeBuildError(f"non-numeric field in segment record: {exc}") from None
    if kind == "straight" and len(vals) == 3:
        return straight(vals[0], vals[1], vals[2])
    if kind == "bend" and len(vals) == 4:
        return bend(vals[0], vals[1] * _DEG, vals[2], vals[3])
    if kind == "increaser" and len(vals) == 4:
        return increaser(vals[0], vals[1], vals[2], vals[3])
    raise PipeBuildError(f"bad segment record: {' '.join(tokens)}")
