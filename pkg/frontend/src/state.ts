/**
 * Pure view-state reducer.
 *
 * The console computes no physics: every number it shows arrives in a
 * service frame (snapshots, server-side spectrum readouts, command
 * results).  Because the reducer is pure and total, replaying a
 * recorded frame sequence reproduces the identical final view state.
 */

import type {
  CommandReply,
  ConsoleFrame,
  ConsoleViewState,
  CooldownStep,
  RigEvent,
  ScanPoint,
  Snapshot,
  SpectrumPayload,
} from "./types.js";

export const EVENT_FEED_LIMIT = 200;

export function initialViewState(): ConsoleViewState {
  return {
    connected: false,
    staleReason: null,
    sessionId: null,
    phase: null,
    stagePosition: null,
    temperatureK: null,
    gapReadout: null,
    dips: [],
    latestSpectrum: null,
    scanAxis: 0,
    scanPoints: [],
    waterfall: [],
    eventFeed: [],
    lastError: null,
    revealedResidualUm: null,
    framesSeen: 0,
  };
}

function withSnapshot(state: ConsoleViewState, snap: Snapshot): ConsoleViewState {
  return {
    ...state,
    sessionId: snap.session_id,
    phase: snap.phase,
    stagePosition: snap.stage_position_um,
    temperatureK: snap.temperature_k,
    revealedResidualUm: snap.residual_offset_um,
  };
}

function scanPointFrom(
  state: ConsoleViewState,
  spectrum: SpectrumPayload,
): ScanPoint | null {
  if (state.stagePosition === null) return null;
  const fundamental = spectrum.dips.find((d) => d.mode_order === 0);
  const second = spectrum.dips.find((d) => d.mode_order === 1);
  if (!fundamental) return null;
  return {
    position_um: state.stagePosition[state.scanAxis],
    fundamental_contrast: fundamental.contrast,
    second_mode_contrast: second ? second.contrast : 0,
  };
}

function appendScanPoint(points: ScanPoint[], point: ScanPoint): ScanPoint[] {
  // one point per stage position: a re-measurement replaces the old one
  const kept = points.filter(
    (p) => Math.abs(p.position_um - point.position_um) > 1e-6,
  );
  kept.push(point);
  kept.sort((a, b) => a.position_um - b.position_um);
  return kept;
}

function withSpectrum(
  state: ConsoleViewState,
  spectrum: SpectrumPayload,
): ConsoleViewState {
  const point = scanPointFrom(state, spectrum);
  return {
    ...state,
    gapReadout: spectrum.gap,
    dips: spectrum.dips,
    latestSpectrum: { axis: spectrum.axis, reflectivity: spectrum.reflectivity },
    scanPoints: point ? appendScanPoint(state.scanPoints, point) : state.scanPoints,
  };
}

function waterfallFromSteps(steps: CooldownStep[]): ConsoleViewState["waterfall"] {
  return steps.map((step) => {
    const fundamental = step.dips.find((d) => d.mode_order === 0);
    return {
      temperature_k: step.temperature_k,
      fundamental_nm:
        fundamental && fundamental.found ? fundamental.center_wavelength_nm : null,
      fundamental_contrast: fundamental ? fundamental.contrast : 0,
      gap_um: step.gap.gap_um ?? null,
    };
  });
}

function withCommandReply(
  state: ConsoleViewState,
  reply: CommandReply,
): ConsoleViewState {
  if (!reply.ok) {
    return { ...state, lastError: reply.error };
  }
  let next: ConsoleViewState = { ...state, lastError: null };
  const result = reply.result as {
    snapshot?: Snapshot;
    spectrum?: SpectrumPayload["axis"] extends never ? never : unknown;
    steps?: CooldownStep[];
  } & Record<string, unknown>;
  if (result.snapshot) {
    next = withSnapshot(next, result.snapshot as Snapshot);
  }
  // acquire-spectrum replies carry the same payload shape as stream
  // spectrum frames (axis/reflectivity plus gap/dips readouts)
  if (
    typeof result === "object" &&
    result !== null &&
    "spectrum" in result &&
    "gap" in result &&
    "dips" in result
  ) {
    const spectrumPayload = {
      ...(result.spectrum as { axis: SpectrumPayload["axis"]; reflectivity: number[] }),
      gap: result.gap,
      dips: result.dips,
    } as SpectrumPayload;
    next = withSpectrum(next, spectrumPayload);
  }
  if (Array.isArray(result.steps)) {
    next = { ...next, waterfall: waterfallFromSteps(result.steps as CooldownStep[]) };
  }
  return next;
}

export function reduce(
  state: ConsoleViewState,
  frame: ConsoleFrame,
): ConsoleViewState {
  const counted = { framesSeen: state.framesSeen + 1 };
  switch (frame.type) {
    case "connected":
      return {
        ...state,
        ...counted,
        connected: true,
        staleReason: null,
        sessionId: frame.payload.sessionId,
      };
    case "disconnected":
      return {
        ...state,
        ...counted,
        connected: false,
        staleReason: frame.payload.reason,
      };
    case "snapshot":
      return { ...withSnapshot(state, frame.payload), ...counted };
    case "spectrum":
      return { ...withSpectrum(state, frame.payload), ...counted };
    case "events": {
      const feed = [...state.eventFeed, ...frame.payload].slice(-EVENT_FEED_LIMIT);
      return { ...state, ...counted, eventFeed: feed };
    }
    case "command":
      return { ...withCommandReply(state, frame.payload), ...counted };
    case "scan-axis":
      // switching axes starts a fresh scatter
      return {
        ...state,
        ...counted,
        scanAxis: frame.payload.axis,
        scanPoints: [],
      };
    case "clear-scan":
      return { ...state, ...counted, scanPoints: [] };
    default: {
      const exhaustive: never = frame;
      void exhaustive;
      return state;
    }
  }
}

export function replay(frames: ConsoleFrame[]): ConsoleViewState {
  return frames.reduce(reduce, initialViewState());
}

/** Newest rig events first, for the feed panel. */
export function eventFeedView(state: ConsoleViewState): RigEvent[] {
  return [...state.eventFeed].reverse();
}
