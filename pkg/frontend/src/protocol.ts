// Gateway wire protocol: newline-delimited JSON over a WebSocket.
// Hand-rolled validators keep the browser bundle dependency-free.

export interface TelemetryMsg {
  type: "telemetry";
  v: number;
  t_s: number;
  s_m: number;
  D_m: number;
  theta_mid_deg: number;
  joint_duty: number;
  drive_duty: number;
  est_torque_Nm: number;
  slip_margin_N: number;
  slip_flag: number;
  board_temp_C: number;
  mode: string;
}

export interface ProfileSegment {
  kind: string;
  s0_m: number;
  s1_m: number;
  d_in_m: number;
  d_out_m: number;
  inclination: number;
}

export interface HelloMsg {
  type: "hello";
  v: number;
  scenario: string;
  role: string;
  total_length_m: number;
  telemetry_hz: number;
  profile: ProfileSegment[];
}

export interface AckMsg {
  type: "ack";
  v: number;
  cmd: string;
  role?: string;
}

export interface ErrorMsg {
  type: "error";
  v: number;
  reason: string;
}

export interface ReplayMsg {
  type: "replay";
  v: number;
  rows: TelemetryMsg[];
}

export interface ResultMsg {
  type: "result";
  v: number;
  result: string;
  t_s: number;
}

export type GatewayMsg =
  | TelemetryMsg
  | HelloMsg
  | AckMsg
  | ErrorMsg
  | ReplayMsg
  | ResultMsg;

const TELEMETRY_NUMBER_FIELDS = [
  "t_s",
  "s_m",
  "D_m",
  "theta_mid_deg",
  "joint_duty",
  "drive_duty",
  "est_torque_Nm",
  "slip_margin_N",
  "slip_flag",
  "board_temp_C",
] as const;

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function isTelemetry(x: Record<string, unknown>): x is TelemetryMsg & Record<string, unknown> {
  return (
    TELEMETRY_NUMBER_FIELDS.every((k) => typeof x[k] === "number" && Number.isFinite(x[k] as number)) &&
    typeof x.mode === "string"
  );
}

function isProfileSegment(x: unknown): x is ProfileSegment {
  if (!isRecord(x)) return false;
  return (
    typeof x.kind === "string" &&
    ["s0_m", "s1_m", "d_in_m", "d_out_m", "inclination"].every(
      (k) => typeof x[k] === "number",
    )
  );
}

/** Parse one wire line; null means schema mismatch (show a banner, keep going). */
export function parseGatewayMessage(raw: string): GatewayMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!isRecord(data) || typeof data.type !== "string" || typeof data.v !== "number") {
    return null;
  }
  switch (data.type) {
    case "telemetry":
      return isTelemetry(data) ? (data as unknown as TelemetryMsg) : null;
    case "hello":
      if (
        typeof data.scenario === "string" &&
        typeof data.role === "string" &&
        typeof data.total_length_m === "number" &&
        typeof data.telemetry_hz === "number" &&
        Array.isArray(data.profile) &&
        data.profile.every(isProfileSegment)
      ) {
        return data as unknown as HelloMsg;
      }
      return null;
    case "ack":
      return typeof data.cmd === "string" ? (data as unknown as AckMsg) : null;
    case "error":
      return typeof data.reason === "string" ? (data as unknown as ErrorMsg) : null;
    case "replay":
      if (
        Array.isArray(data.rows) &&
        data.rows.every((r) => isRecord(r) && r.type === "telemetry" && isTelemetry(r))
      ) {
        return data as unknown as ReplayMsg;
      }
      return null;
    case "result":
      if (typeof data.result === "string" && typeof data.t_s === "number") {
        return data as unknown as ResultMsg;
      }
      return null;
    default:
      return null;
  }
}

// Outgoing commands. Every control maps to exactly one message type.

export type CommandName =
  | "stop"
  | "drive"
  | "roll"
  | "set_joint_duty"
  | "set_joint_angle"
  | "estop"
  | "reset_estop"
  | "claim"
  | "release"
  | "replay";

export function commandMessage(cmd: CommandName, value?: number): string {
  switch (cmd) {
    case "drive":
    case "roll":
    case "set_joint_duty":
      return JSON.stringify({ v: 1, type: "command", cmd, duty: value ?? 0 });
    case "set_joint_angle":
      return JSON.stringify({ v: 1, type: "command", cmd, deg: value ?? 0 });
    case "replay":
      return JSON.stringify({ v: 1, type: "command", cmd, seconds: value ?? 60 });
    default:
      return JSON.stringify({ v: 1, type: "command", cmd });
  }
}
