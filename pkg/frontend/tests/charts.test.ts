import { describe, expect, it } from "vitest";

import { profileWalls, stripLayout } from "../src/charts.js";

describe("stripLayout", () => {
  it("maps the newest sample to the right edge", () => {
    const samples = Array.from({ length: 61 }, (_, i) => ({ t: i, value: i }));
    const pts = stripLayout(samples, 60, 600, 100);
    expect(pts[pts.length - 1]!.x).toBeCloseTo(600);
    expect(pts[0]!.x).toBeCloseTo(0); // t=0 sits at the window start
    expect(pts[1]!.x).toBeCloseTo(10); // 1 s into the 60 s window
  });

  it("drops samples older than the window", () => {
    const samples = [
      { t: 0, value: 1 },
      { t: 100, value: 2 },
    ];
    const pts = stripLayout(samples, 60, 600, 100);
    expect(pts.length).toBe(1);
  });

  it("scales values into the vertical range", () => {
    const pts = stripLayout(
      [
        { t: 0, value: 0 },
        { t: 1, value: 10 },
      ],
      60,
      600,
      100,
    );
    expect(pts[0]!.y).toBeCloseTo(100); // min at the bottom
    expect(pts[1]!.y).toBeCloseTo(0); // max at the top
  });

  it("handles empty and constant series", () => {
    expect(stripLayout([], 60, 600, 100)).toEqual([]);
    const flat = stripLayout(
      [
        { t: 0, value: 5 },
        { t: 1, value: 5 },
      ],
      60,
      600,
      100,
    );
    expect(flat.length).toBe(2);
    expect(Number.isFinite(flat[0]!.y)).toBe(true);
  });
});

describe("profileWalls", () => {
  const profile = [
    { kind: "straight", s0_m: 0, s1_m: 1, d_in_m: 0.075, d_out_m: 0.075, inclination: 0 },
    { kind: "increaser", s0_m: 1, s1_m: 1.1, d_in_m: 0.075, d_out_m: 0.1, inclination: 0 },
    { kind: "bend", s0_m: 1.1, s1_m: 1.3, d_in_m: 0.1, d_out_m: 0.1, inclination: 0 },
  ];

  it("widens the walls through the increaser", () => {
    const { upper, lower } = profileWalls(profile, 1.3, 130, 100);
    const gapStart = lower[0]!.y - upper[0]!.y;
    const gapEnd = lower[lower.length - 1]!.y - upper[upper.length - 1]!.y;
    expect(gapEnd).toBeGreaterThan(gapStart);
  });

  it("marks bend spans in x pixels", () => {
    const { bendSpans } = profileWalls(profile, 1.3, 130, 100);
    expect(bendSpans.length).toBe(1);
    const [x0, x1] = bendSpans[0]!;
    expect(x0).toBeCloseTo((1.1 / 1.3) * 130);
    expect(x1).toBeCloseTo(130);
  });

  it("copes with an empty profile", () => {
    const { upper, bendSpans } = profileWalls([], 0, 100, 100);
    expect(upper).toEqual([]);
    expect(bendSpans).toEqual([]);
  });
});
