/**
 * Control gating: a control is enabled exactly when the rig phase
 * machine would accept the corresponding command.
 *
 * Rig rules mirrored here: all stage axes move while free; x/y only
 * while landed (z is forbidden once landed); nothing moves once
 * secured or cold.  Landing requires free, securing requires landed,
 * cooldown requires secured, thermal cycling requires secured or cold.
 * Spectra can be acquired in any phase.
 */

import type { Phase } from "./types.js";

export type ControlName =
  | "jog-x"
  | "jog-y"
  | "jog-z"
  | "land"
  | "secure"
  | "cooldown"
  | "thermal-cycle"
  | "acquire";

const ENABLED: Record<ControlName, readonly Phase[]> = {
  "jog-x": ["free", "landed"],
  "jog-y": ["free", "landed"],
  "jog-z": ["free"],
  land: ["free"],
  secure: ["landed"],
  cooldown: ["secured"],
  "thermal-cycle": ["secured", "cold"],
  acquire: ["free", "landed", "secured", "cold"],
};

export function isControlEnabled(control: ControlName, phase: Phase | null): boolean {
  if (phase === null) return false;
  return ENABLED[control].includes(phase);
}

export function enabledControls(phase: Phase | null): ControlName[] {
  return (Object.keys(ENABLED) as ControlName[]).filter((c) =>
    isControlEnabled(c, phase),
  );
}

export interface JogCommand {
  name: "move-stage";
  params: { dx_um: number; dy_um: number; dz_um: number };
}

export function jogCommand(axis: "x" | "y" | "z", step_um: number): JogCommand {
  return {
    name: "move-stage",
    params: {
      dx_um: axis === "x" ? step_um : 0,
      dy_um: axis === "y" ? step_um : 0,
      dz_um: axis === "z" ? step_um : 0,
    },
  };
}
