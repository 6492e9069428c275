// Console state: everything the display needs, rebuilt purely from
// gateway messages so a page reload plus a replay request restores the
// full picture.

import {
  GatewayMsg,
  HelloMsg,
  ProfileSegment,
  TelemetryMsg,
} from "./protocol.js";

export const TEMP_WARN_C = 70.0; // amber margin below the 80 degC soft limit
export const HISTORY_SECONDS = 60.0;

export interface Sample {
  t: number;
  value: number;
}

export interface Banner {
  kind: "slip" | "temp" | "estop" | "schema" | "error" | "result";
  text: string;
}

export interface ViewModel {
  connection: "connecting" | "connected" | "closed";
  role: string;
  scenario: string;
  controlsEnabled: boolean;
  emoEnabled: boolean;
  resetEnabled: boolean;
  banners: Banner[];
  thetaDeg: number | null;
  positionFraction: number | null;
  latest: TelemetryMsg | null;
  result: string | null;
  profile: ProfileSegment[];
  totalLength: number;
  history: {
    theta: Sample[];
    torque: Sample[];
    temperature: Sample[];
    slipMargin: Sample[];
  };
}

export class ConsoleStore {
  connection: "connecting" | "connected" | "closed" = "connecting";
  role = "observer";
  scenario = "";
  totalLength = 0;
  profile: ProfileSegment[] = [];
  result: string | null = null;
  schemaErrors = 0;
  lastError: string | null = null;
  telemetryCount = 0;
  private rows: TelemetryMsg[] = []; // sorted by t_s, spans <= 60 s
  private listeners: Array<() => void> = [];

  onChange(cb: () => void): void {
    this.listeners.push(cb);
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }

  get latest(): TelemetryMsg | null {
    return this.rows.length ? this.rows[this.rows.length - 1]! : null;
  }

  setConnection(state: "connecting" | "connected" | "closed"): void {
    this.connection = state;
    this.notify();
  }

  noteSchemaError(): void {
    this.schemaErrors += 1;
    this.notify();
  }

  noteLocalError(text: string): void {
    this.lastError = text;
    this.notify();
  }

  apply(msg: GatewayMsg): void {
    switch (msg.type) {
      case "hello":
        this.applyHello(msg);
        break;
      case "telemetry": {
        const last = this.latest;
        if (!last || msg.t_s > last.t_s) {
          this.rows.push(msg);
          this.telemetryCount += 1;
          this.trim();
        }
        break;
      }
      case "replay": {
        // merge historical rows in front of whatever arrived live
        const known = new Set(this.rows.map((r) => r.t_s));
        const merged = msg.rows.filter((r) => !known.has(r.t_s)).concat(this.rows);
        merged.sort((a, b) => a.t_s - b.t_s);
        this.rows = merged;
        this.trim();
        break;
      }
      case "ack":
        if (msg.role) this.role = msg.role;
        if (msg.cmd === "release") this.role = "observer";
        this.lastError = null;
        break;
      case "error":
        this.lastError = msg.reason;
        break;
      case "result":
        this.result = msg.result;
        break;
    }
    this.notify();
  }

  private applyHello(msg: HelloMsg): void {
    this.scenario = msg.scenario;
    this.role = msg.role;
    this.totalLength = msg.total_length_m;
    this.profile = msg.profile;
  }

  private trim(): void {
    const newest = this.latest?.t_s ?? 0;
    const cutoff = newest - HISTORY_SECONDS;
    let drop = 0;
    while (drop < this.rows.length && this.rows[drop]!.t_s < cutoff) drop += 1;
    if (drop > 0) this.rows = this.rows.slice(drop);
  }

  view(): ViewModel {
    const latest = this.latest;
    const banners: Banner[] = [];
    const estopped = latest?.mode === "estop";
    if (latest?.slip_flag === 1) {
      banners.push({ kind: "slip", text: "SLIP: drive wheels spinning without progress" });
    }
    if (latest && latest.board_temp_C >= TEMP_WARN_C) {
      banners.push({
        kind: "temp",
        text: `BOARD HOT: ${latest.board_temp_C.toFixed(1)} degC`,
      });
    }
    if (estopped) {
      banners.push({ kind: "estop", text: "E-STOP engaged" });
    }
    if (this.schemaErrors > 0) {
      banners.push({
        kind: "schema",
        text: `schema mismatch on ${this.schemaErrors} message(s)`,
      });
    }
    if (this.lastError) {
      banners.push({ kind: "error", text: this.lastError });
    }
    if (this.result) {
      banners.push({ kind: "result", text: `mission ${this.result}` });
    }
    const connected = this.connection === "connected";
    const commander = this.role === "commander";
    const sample = (pick: (r: TelemetryMsg) => number): Sample[] =>
      this.rows.map((r) => ({ t: r.t_s, value: pick(r) }));
    return {
      connection: this.connection,
      role: this.role,
      scenario: this.scenario,
      controlsEnabled: connected && commander && !estopped && !this.result,
      emoEnabled: connected,
      resetEnabled: connected && commander && estopped,
      banners,
      thetaDeg: latest?.theta_mid_deg ?? null,
      positionFraction:
        latest && this.totalLength > 0
          ? Math.min(1, Math.max(0, latest.s_m / this.totalLength))
          : null,
      latest,
      result: this.result,
      profile: this.profile,
      totalLength: this.totalLength,
      history: {
        theta: sample((r) => r.theta_mid_deg),
        torque: sample((r) => r.est_torque_Nm),
        temperature: sample((r) => r.board_temp_C),
        slipMargin: sample((r) => r.slip_margin_N),
      },
    };
  }
}
