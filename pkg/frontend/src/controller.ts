// Wires a gateway socket to the store and gates UI actions by role.
// Observers get a local error and send nothing; the EMO button always
// sends. Commanded values show in the UI only once the gateway acks.

import { CommandName, commandMessage, parseGatewayMessage } from "./protocol.js";
import { ConsoleStore } from "./store.js";

export interface GatewaySocket {
  send(data: string): void;
  close(): void;
  onMessage(cb: (data: string) => void): void;
  onOpen(cb: () => void): void;
  onClose(cb: () => void): void;
}

export class ConsoleController {
  /** Last acknowledged value per command, for optimistic-after-ack UI. */
  acked: Partial<Record<CommandName, number>> = {};
  private pending: Partial<Record<CommandName, number>> = {};

  constructor(
    private store: ConsoleStore,
    private socket: GatewaySocket,
    private replaySeconds = 60,
  ) {
    socket.onOpen(() => {
      store.setConnection("connected");
      // rebuild the strip charts from gateway history on every (re)connect
      socket.send(commandMessage("replay", this.replaySeconds));
    });
    socket.onClose(() => store.setConnection("closed"));
    socket.onMessage((data) => {
      for (const line of data.split("\n")) {
        if (!line.trim()) continue;
        const msg = parseGatewayMessage(line);
        if (msg === null) {
          store.noteSchemaError();
          continue;
        }
        if (msg.type === "ack") {
          const value = this.pending[msg.cmd as CommandName];
          if (value !== undefined) {
            this.acked[msg.cmd as CommandName] = value;
            delete this.pending[msg.cmd as CommandName];
          }
        }
        store.apply(msg);
      }
    });
  }

  /** Send a command if permitted; returns false on a local permission block. */
  send(cmd: CommandName, value?: number): boolean {
    const vm = this.store.view();
    const always = cmd === "estop" || cmd === "claim" || cmd === "replay";
    if (cmd === "reset_estop") {
      if (!vm.resetEnabled) {
        this.store.noteLocalError("reset unavailable: not commander or not e-stopped");
        return false;
      }
    } else if (!always && !vm.controlsEnabled) {
      this.store.noteLocalError(`cannot send ${cmd}: controls disabled (${vm.role})`);
      return false;
    }
    if (cmd === "estop" && !vm.emoEnabled) {
      this.store.noteLocalError("EMO unavailable: not connected");
      return false;
    }
    if (value !== undefined) this.pending[cmd] = value;
    this.socket.send(commandMessage(cmd, value));
    return true;
  }

  drive(duty: number): boolean {
    return this.send("drive", duty);
  }

  roll(duty: number): boolean {
    return this.send("roll", duty);
  }

  stop(): boolean {
    return this.send("stop");
  }

  setJointDuty(duty: number): boolean {
    return this.send("set_joint_duty", duty);
  }

  setJointAngle(deg: number): boolean {
    return this.send("set_joint_angle", deg);
  }

  estop(): boolean {
    return this.send("estop");
  }

  resetEstop(): boolean {
    return this.send("reset_estop");
  }

  claim(): boolean {
    return this.send("claim");
  }

  close(): void {
    this.socket.close();
  }
}
