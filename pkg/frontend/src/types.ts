/** Wire protocol types for the rig service, schema version 1. */

export const SCHEMA_VERSION = 1;

export type Phase = "free" | "landed" | "secured" | "cold";

export interface Snapshot {
  session_id: string;
  phase: Phase;
  stage_position_um: [number, number, number];
  gap_um: number;
  temperature_k: number;
  ferrule_locked: boolean;
  sim_time_s: number;
  n_events: number;
  seq: number;
  /** Hidden until the assembly is secured (training reveal). */
  residual_offset_um: number | null;
}

export interface SpectrumAxis {
  start_nm: number;
  step_nm: number;
  n: number;
}

export interface GapReadout {
  gap_um?: number;
  sigma_um?: number;
  method?: string;
  error?: string;
  message?: string;
}

export interface DipReadout {
  mode_order: number;
  contrast: number;
  center_wavelength_nm: number;
  found: boolean;
}

export interface SpectrumPayload {
  axis: SpectrumAxis;
  reflectivity: number[];
  normalization: string;
  gap: GapReadout;
  dips: DipReadout[];
}

export interface RigEvent {
  seq: number;
  time_s: number;
  event: string;
  payload: Record<string, unknown>;
}

export interface CooldownStep {
  temperature_k: number;
  gap: GapReadout;
  dips: DipReadout[];
}

export interface CommandReplyOk {
  v: number;
  seq: number;
  ok: true;
  result: Record<string, unknown>;
}

export interface CommandReplyError {
  v: number;
  seq: number;
  ok: false;
  error: { type: string; message: string };
}

export type CommandReply = CommandReplyOk | CommandReplyError;

/**
 * Everything the view state reducer consumes.  Stream frames come from
 * the service verbatim; connection frames are synthesized by the
 * transport; command frames echo replies so the reducer can surface
 * errors and ingest command results (cooldown steps, reports).
 */
export type ConsoleFrame =
  | { type: "connected"; payload: { sessionId: string } }
  | { type: "disconnected"; payload: { reason: string } }
  | { type: "snapshot"; payload: Snapshot }
  | { type: "spectrum"; payload: SpectrumPayload }
  | { type: "events"; payload: RigEvent[] }
  | { type: "command"; payload: CommandReply }
  | { type: "scan-axis"; payload: { axis: 0 | 1 } }
  | { type: "clear-scan"; payload: Record<string, never> };

export interface ScanPoint {
  /** Commanded stage position along the active scan axis [um]. */
  position_um: number;
  fundamental_contrast: number;
  second_mode_contrast: number;
}

export interface WaterfallRow {
  temperature_k: number;
  fundamental_nm: number | null;
  fundamental_contrast: number;
  gap_um: number | null;
}

export interface ConsoleViewState {
  connected: boolean;
  staleReason: string | null;
  sessionId: string | null;
  phase: Phase | null;
  stagePosition: [number, number, number] | null;
  temperatureK: number | null;
  gapReadout: GapReadout | null;
  dips: DipReadout[];
  latestSpectrum: { axis: SpectrumAxis; reflectivity: number[] } | null;
  /** Operator's own scan scatter, one series per mode, on the active axis. */
  scanAxis: 0 | 1;
  scanPoints: ScanPoint[];
  waterfall: WaterfallRow[];
  eventFeed: RigEvent[];
  lastError: { type: string; message: string } | null;
  /** Training reveal: populated only after securing. */
  revealedResidualUm: number | null;
  framesSeen: number;
}
