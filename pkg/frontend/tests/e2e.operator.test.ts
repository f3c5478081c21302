/**
 * Scripted operator session against the real rig service.
 *
 * The script drives the console exactly the way a trainee would: it
 * looks only at the view-state readouts (contrast scatter, fitted
 * center, phase) to decide each move, never at hidden simulator state.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { RigClient } from "../src/client.js";
import { fitScanParabola } from "../src/charts.js";
import { isControlEnabled } from "../src/controls.js";
import { initialViewState, reduce, replay } from "../src/state.js";
import type { ConsoleFrame, ConsoleViewState } from "../src/types.js";

const PORT = 8717;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/v1/sessions/probe/state`);
      if (resp.status === 404) return; // service answering
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 300));
  }
  throw new Error("rig service did not come up");
}

beforeAll(async () => {
  service = spawn(
    "python3",
    ["-c", `from pigtailsim.service import serve; serve(port=${PORT})`],
    { stdio: "ignore" },
  );
  await waitForService();
}, 40_000);

afterAll(() => {
  service?.kill();
});

describe("scripted operator session", () => {
  it("centers, lands, secures below 200 nm and sees a blue-shifting cooldown", async () => {
    const frames: ConsoleFrame[] = [];
    let state: ConsoleViewState = initialViewState();
    const onFrame = (frame: ConsoleFrame) => {
      frames.push(frame);
      state = reduce(state, frame);
    };

    const client = new RigClient({ baseUrl: BASE, onFrame });
    await client.createSession(21, {
      initial_misalignment_um: 1.5,
      spectrum_noise_rel: 0.003,
    });
    expect(state.connected).toBe(true);
    expect(state.phase).toBe("free");

    // land first: the stamp defines the working gap
    expect(isControlEnabled("land", state.phase)).toBe(true);
    const landing = await client.command("vertical-landing");
    expect(landing.ok).toBe(true);
    expect(state.phase).toBe("landed");
    // the gap readout confirms the stamp's design standoff
    await client.command("acquire-spectrum");
    expect(state.gapReadout?.gap_um).toBeGreaterThan(2.7);
    expect(state.gapReadout?.gap_um).toBeLessThan(3.3);

    // one axis at a time: jog across, acquire, read the contrast
    // scatter, move to the fitted center the chart overlay shows
    const scanAxis = async (axis: 0 | 1) => {
      onFrame({ type: "scan-axis", payload: { axis } });
      const here = state.stagePosition![axis];
      for (let offset = -2.0; offset <= 2.01; offset += 0.4) {
        const target = here + offset;
        const delta = target - state.stagePosition![axis];
        await client.command("move-stage", {
          dx_um: axis === 0 ? delta : 0,
          dy_um: axis === 1 ? delta : 0,
          dz_um: 0,
        });
        await client.command("acquire-spectrum");
      }
      expect(state.scanPoints.length).toBeGreaterThanOrEqual(5);
      const fit = fitScanParabola(state.scanPoints);
      expect(fit.valid).toBe(true);
      const delta = fit.center - state.stagePosition![axis];
      await client.command("move-stage", {
        dx_um: axis === 0 ? delta : 0,
        dy_um: axis === 1 ? delta : 0,
        dz_um: 0,
      });
    };

    await scanAxis(0);
    await scanAxis(1);
    // second pass tightens both axes after the first coarse centering
    await scanAxis(0);
    await scanAxis(1);

    // centering done: contrast readout should be strong
    await client.command("acquire-spectrum");
    const fundamental = state.dips.find((d) => d.mode_order === 0);
    expect(fundamental?.contrast).toBeGreaterThan(0.5);

    // the residual stays hidden until the operator secures
    expect(state.revealedResidualUm).toBeNull();
    expect(isControlEnabled("secure", state.phase)).toBe(true);
    const secured = await client.command("secure");
    expect(secured.ok).toBe(true);
    expect(state.phase).toBe("secured");
    expect(state.revealedResidualUm).not.toBeNull();
    expect(state.revealedResidualUm!).toBeLessThan(0.2);

    // cooldown: waterfall rows must blue-shift monotonically
    expect(isControlEnabled("cooldown", state.phase)).toBe(true);
    const cooled = await client.command("cooldown", { n_steps: 12 });
    expect(cooled.ok).toBe(true);
    expect(state.phase).toBe("cold");
    const lams = state.waterfall
      .map((r) => r.fundamental_nm)
      .filter((v): v is number => v !== null);
    expect(lams.length).toBeGreaterThanOrEqual(10);
    for (let i = 1; i < lams.length; i++) {
      expect(lams[i]).toBeLessThan(lams[i - 1]);
    }

    // controls mirror the cold phase: nothing moves any more
    expect(isControlEnabled("jog-x", state.phase)).toBe(false);
    expect(isControlEnabled("secure", state.phase)).toBe(false);

    // replaying the recorded stream reproduces the exact final view
    const replayed = replay(frames);
    expect(replayed).toEqual(state);

    await client.closeSession();
  }, 120_000);

  it("streams live spectra and resynchronizes from snapshots", async () => {
    const frames: ConsoleFrame[] = [];
    let state: ConsoleViewState = initialViewState();
    const client = new RigClient({
      baseUrl: BASE,
      onFrame: (f) => {
        frames.push(f);
        state = reduce(state, f);
      },
    });
    await client.createSession(3, { initial_misalignment_um: 0.0 });
    // headless stand-in for the browser socket: snapshot polling plus
    // explicit acquisitions give the same frame kinds
    await client.command("acquire-spectrum");
    await client.fetchSnapshot();
    expect(state.latestSpectrum).not.toBeNull();
    expect(state.gapReadout?.gap_um).toBeGreaterThan(100); // fiber still high up

    // simulate a dropped link: the banner state must flip, then recover
    state = reduce(state, {
      type: "disconnected",
      payload: { reason: "socket lost" },
    });
    expect(state.connected).toBe(false);
    const snap = await client.fetchSnapshot();
    state = reduce(state, {
      type: "connected",
      payload: { sessionId: snap.session_id },
    });
    expect(state.connected).toBe(true);
    expect(state.phase).toBe("free");
    await client.closeSession();
  }, 60_000);

  it("surfaces phase errors inline instead of swallowing them", async () => {
    let state: ConsoleViewState = initialViewState();
    const client = new RigClient({
      baseUrl: BASE,
      onFrame: (f) => {
        state = reduce(state, f);
      },
    });
    await client.createSession(4);
    const reply = await client.command("secure");
    expect(reply.ok).toBe(false);
    expect(state.lastError?.type).toBe("PhaseError");
    await client.closeSession();
  }, 60_000);
});
