// Browser entry: DOM wiring for the operator console.

import { paintGauge, paintProfile, paintStrip } from "./charts.js";
import { ConsoleController, GatewaySocket } from "./controller.js";
import { ConsoleStore, HISTORY_SECONDS } from "./store.js";

function browserSocket(url: string): GatewaySocket {
  const ws = new WebSocket(url);
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onMessage: (cb) => {
      ws.onmessage = (ev) => cb(String(ev.data));
    },
    onOpen: (cb) => {
      ws.onopen = () => cb();
    },
    onClose: (cb) => {
      ws.onclose = () => cb();
    },
  };
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function main(): void {
  const params = new URLSearchParams(location.search);
  const url =
    params.get("gateway") ?? `ws://${location.hostname || "127.0.0.1"}:8765/`;
  const store = new ConsoleStore();
  const controller = new ConsoleController(store, browserSocket(url));

  const banners = el<HTMLDivElement>("banners");
  const status = el<HTMLSpanElement>("status");
  const buttons: Array<[string, () => void]> = [
    ["btn-forward", () => controller.drive(driveDuty())],
    ["btn-back", () => controller.drive(-driveDuty())],
    ["btn-roll-left", () => controller.roll(-50)],
    ["btn-roll-right", () => controller.roll(50)],
    ["btn-stop", () => controller.stop()],
    ["btn-claim", () => controller.claim()],
    ["btn-reset", () => controller.resetEstop()],
    ["btn-angle", () => controller.setJointAngle(Number(angleInput.value))],
  ];
  const driveSlider = el<HTMLInputElement>("drive-duty");
  const jointSlider = el<HTMLInputElement>("joint-duty");
  const jointLabel = el<HTMLSpanElement>("joint-duty-label");
  const angleInput = el<HTMLInputElement>("target-angle");
  const emo = el<HTMLButtonElement>("btn-emo");

  const driveDuty = () => Number(driveSlider.value);
  for (const [id, fn] of buttons) {
    el<HTMLButtonElement>(id).addEventListener("click", fn);
  }
  jointSlider.addEventListener("change", () =>
    controller.setJointDuty(Number(jointSlider.value)),
  );
  jointSlider.addEventListener("input", () => {
    jointLabel.textContent = `${jointSlider.value}%`;
  });
  // EMO fires on pointerdown: no waiting for click release mid-incident
  emo.addEventListener("pointerdown", () => controller.estop());

  const profileCanvas = el<HTMLCanvasElement>("pipe-profile");
  const gaugeCanvas = el<HTMLCanvasElement>("theta-gauge");
  const strips: Array<[HTMLCanvasElement, keyof ReturnType<ConsoleStore["view"]>["history"], string, string]> = [
    [el<HTMLCanvasElement>("strip-theta"), "theta", "#fd5", "theta deg"],
    [el<HTMLCanvasElement>("strip-torque"), "torque", "#5df", "torque Nm"],
    [el<HTMLCanvasElement>("strip-temp"), "temperature", "#f95", "board degC"],
    [el<HTMLCanvasElement>("strip-margin"), "slipMargin", "#7e7", "margin N"],
  ];

  let dirty = true;
  store.onChange(() => {
    dirty = true;
  });

  function render(): void {
    if (dirty) {
      dirty = false;
      const vm = store.view();
      status.textContent =
        `${vm.connection} | ${vm.role} | ${vm.scenario}` +
        (vm.latest ? ` | t=${vm.latest.t_s.toFixed(1)}s mode=${vm.latest.mode}` : "");
      banners.replaceChildren(
        ...vm.banners.map((b) => {
          const div = document.createElement("div");
          div.className = `banner banner-${b.kind}`;
          div.textContent = b.text;
          return div;
        }),
      );
      for (const [id, fn] of buttons) {
        const btn = el<HTMLButtonElement>(id);
        if (id === "btn-claim") btn.disabled = vm.connection !== "connected";
        else if (id === "btn-reset") btn.disabled = !vm.resetEnabled;
        else btn.disabled = !vm.controlsEnabled;
      }
      jointSlider.disabled = !vm.controlsEnabled;
      driveSlider.disabled = !vm.controlsEnabled;
      angleInput.disabled = !vm.controlsEnabled;
      emo.disabled = !vm.emoEnabled;
      paintProfile(profileCanvas, vm.profile, vm.totalLength, vm.positionFraction);
      paintGauge(gaugeCanvas, vm.thetaDeg);
      for (const [canvas, key, color, label] of strips) {
        paintStrip(canvas, vm.history[key], HISTORY_SECONDS, color, label);
      }
    }
    requestAnimationFrame(render);
  }
  requestAnimationFrame(render);
}

main();
