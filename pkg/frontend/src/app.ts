/**
 * Browser wiring: connects the client, feeds frames through the
 * reducer, and renders readouts, controls and charts.
 */

import { RigClient } from "./client.js";
import { drawScanScatter, drawSpectrum, drawWaterfall, fitScanParabola } from "./charts.js";
import { isControlEnabled, jogCommand, type ControlName } from "./controls.js";
import { initialViewState, reduce } from "./state.js";
import type { ConsoleFrame, ConsoleViewState } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let state: ConsoleViewState = initialViewState();
let client: RigClient | null = null;
let renderQueued = false;

function onFrame(frame: ConsoleFrame): void {
  state = reduce(state, frame);
  if (!renderQueued) {
    renderQueued = true;
    requestAnimationFrame(() => {
      renderQueued = false;
      render();
    });
  }
}

function fmt(value: number | null | undefined, digits = 3, unit = ""): string {
  if (value === null || value === undefined || Number.isNaN(value)) return "-";
  return `${value.toFixed(digits)}${unit}`;
}

function render(): void {
  el<HTMLElement>("phase").textContent = state.phase ?? "(no session)";
  el<HTMLElement>("banner").hidden = state.connected;
  el<HTMLElement>("banner").textContent = state.staleReason
    ? `stale data: ${state.staleReason} (retrying)`
    : "not connected";

  const pos = state.stagePosition;
  el<HTMLElement>("stage").textContent = pos
    ? `x ${fmt(pos[0])}  y ${fmt(pos[1])}  z ${fmt(pos[2])} um`
    : "-";
  el<HTMLElement>("temperature").textContent = fmt(state.temperatureK, 1, " K");

  const gap = state.gapReadout;
  el<HTMLElement>("gap").textContent =
    gap && gap.gap_um !== undefined
      ? `${fmt(gap.gap_um)} +- ${fmt(gap.sigma_um)} um (${gap.method})`
      : gap && gap.error
        ? `no fringes (${gap.error})`
        : "-";

  const dips = state.dips;
  el<HTMLElement>("contrast0").textContent = fmt(
    dips.find((d) => d.mode_order === 0)?.contrast ?? null, 4);
  el<HTMLElement>("contrast1").textContent = fmt(
    dips.find((d) => d.mode_order === 1)?.contrast ?? null, 4);

  const reveal = el<HTMLElement>("reveal");
  if (state.revealedResidualUm !== null) {
    const nm = state.revealedResidualUm * 1000;
    reveal.hidden = false;
    reveal.textContent =
      `revealed residual offset: ${nm.toFixed(0)} nm ` +
      (nm < 200 ? "(within 200 nm target)" : "(missed the 200 nm target)");
    reveal.className = nm < 200 ? "reveal good" : "reveal bad";
  } else {
    reveal.hidden = true;
  }

  el<HTMLElement>("error").textContent = state.lastError
    ? `${state.lastError.type}: ${state.lastError.message}`
    : "";

  const fit = fitScanParabola(state.scanPoints);
  el<HTMLElement>("fit").textContent = fit.valid
    ? `fitted center: ${fit.center.toFixed(3)} um`
    : "fitted center: needs >= 5 scan points";

  const controls: Array<[string, ControlName]> = [
    ["btn-jog-xm", "jog-x"], ["btn-jog-xp", "jog-x"],
    ["btn-jog-ym", "jog-y"], ["btn-jog-yp", "jog-y"],
    ["btn-jog-zm", "jog-z"], ["btn-jog-zp", "jog-z"],
    ["btn-land", "land"], ["btn-secure", "secure"],
    ["btn-cooldown", "cooldown"], ["btn-acquire", "acquire"],
  ];
  for (const [id, control] of controls) {
    el<HTMLButtonElement>(id).disabled =
      !state.connected || !isControlEnabled(control, state.phase);
  }

  const events = el<HTMLElement>("events");
  events.textContent = state.eventFeed
    .slice(-12)
    .reverse()
    .map((e) => `#${e.seq} ${e.event}`)
    .join("\n");

  const spectrumCanvas = el<HTMLCanvasElement>("spectrum-canvas");
  drawSpectrum(spectrumCanvas.getContext("2d")!, state,
    spectrumCanvas.width, spectrumCanvas.height);
  const scanCanvas = el<HTMLCanvasElement>("scan-canvas");
  drawScanScatter(scanCanvas.getContext("2d")!, state,
    scanCanvas.width, scanCanvas.height);
  const waterfallCanvas = el<HTMLCanvasElement>("waterfall-canvas");
  drawWaterfall(waterfallCanvas.getContext("2d")!, state.waterfall,
    waterfallCanvas.width, waterfallCanvas.height);
}

async function guarded(action: () => Promise<unknown>): Promise<void> {
  try {
    await action();
  } catch (err) {
    onFrame({
      type: "disconnected",
      payload: { reason: err instanceof Error ? err.message : String(err) },
    });
  }
}

function jogStep(): number {
  return Number(el<HTMLInputElement>("jog-step").value) || 0.25;
}

function wire(): void {
  el<HTMLButtonElement>("btn-connect").onclick = () =>
    guarded(async () => {
      const address = el<HTMLInputElement>("address").value;
      const seed = Number(el<HTMLInputElement>("seed").value) || 0;
      client?.stop();
      state = initialViewState();
      client = new RigClient({ baseUrl: address, onFrame });
      await client.createSession(seed);
      client.connectStream();
    });

  const jogs: Array<[string, "x" | "y" | "z", number]> = [
    ["btn-jog-xm", "x", -1], ["btn-jog-xp", "x", 1],
    ["btn-jog-ym", "y", -1], ["btn-jog-yp", "y", 1],
    ["btn-jog-zm", "z", -1], ["btn-jog-zp", "z", 1],
  ];
  for (const [id, axis, sign] of jogs) {
    el<HTMLButtonElement>(id).onclick = () =>
      guarded(async () => {
        const cmd = jogCommand(axis, sign * jogStep());
        await client?.command(cmd.name, cmd.params);
        await client?.command("acquire-spectrum");
      });
  }
  el<HTMLButtonElement>("btn-acquire").onclick = () =>
    guarded(async () => void (await client?.command("acquire-spectrum")));
  el<HTMLButtonElement>("btn-land").onclick = () =>
    guarded(async () => void (await client?.command("vertical-landing")));
  el<HTMLButtonElement>("btn-secure").onclick = () =>
    guarded(async () => void (await client?.command("secure")));
  el<HTMLButtonElement>("btn-cooldown").onclick = () =>
    guarded(async () => void (await client?.command("cooldown", { n_steps: 20 })));
  el<HTMLButtonElement>("btn-scan-x").onclick = () =>
    onFrame({ type: "scan-axis", payload: { axis: 0 } });
  el<HTMLButtonElement>("btn-scan-y").onclick = () =>
    onFrame({ type: "scan-axis", payload: { axis: 1 } });
  el<HTMLButtonElement>("btn-clear-scan").onclick = () =>
    onFrame({ type: "clear-scan", payload: {} });

  render();
}

window.addEventListener("load", wire);
