/** Pure view-state transitions for the threshold-review session.
 *
 * Two invariants live here:
 *  - displayed stats are only ever values acknowledged by the service
 *    (ackPreview); nothing is derived client-side from the preview raster;
 *  - every state is reconstructible from (map_id, threshold, session status),
 *    so a page refresh loses nothing (see reconstruct).
 */

import type { CommitResult, SessionState, ThresholdPreview } from "./api.ts";

export interface ViewStats {
  threshold: number;
  positiveCount: number;
  positiveFraction: number;
  nCells: number;
}

export interface ViewState {
  mapId: string | null;
  sessionId: string | null;
  sessionStatus: "OPEN" | "COMMITTED" | null;
  committedManifest: string | null;
  sliderThreshold: number;
  stats: ViewStats | null;
  error: string | null;
}

export const DEFAULT_THRESHOLD = 0.5;

export function initialState(): ViewState {
  return {
    mapId: null,
    sessionId: null,
    sessionStatus: null,
    committedManifest: null,
    sliderThreshold: DEFAULT_THRESHOLD,
    stats: null,
    error: null,
  };
}

export function clampThreshold(t: number): number {
  if (Number.isNaN(t)) return 0;
  return Math.min(1, Math.max(0, t));
}

export function selectMap(state: ViewState, mapId: string): ViewState {
  return {
    ...initialState(),
    mapId,
    sliderThreshold: state.mapId === mapId ? state.sliderThreshold : DEFAULT_THRESHOLD,
  };
}

export function startSession(state: ViewState, session: SessionState): ViewState {
  return {
    ...state,
    sessionId: session.session_id,
    sessionStatus: session.status,
    committedManifest: session.committed_manifest,
    error: null,
  };
}

/** Slider movement; ignored once the session is committed (control is locked). */
export function moveSlider(state: ViewState, t: number): ViewState {
  if (state.sessionStatus === "COMMITTED") return state;
  return { ...state, sliderThreshold: clampThreshold(t) };
}

/** Store service-acknowledged stats; the only way stats ever change. */
export function ackPreview(state: ViewState, preview: ThresholdPreview): ViewState {
  return {
    ...state,
    error: null,
    stats: {
      threshold: preview.threshold,
      positiveCount: preview.positive_count,
      positiveFraction: preview.positive_fraction,
      nCells: preview.n_cells,
    },
  };
}

/** True while the slider has moved past the last acknowledged threshold. */
export function isStale(state: ViewState): boolean {
  return state.stats === null || state.stats.threshold !== state.sliderThreshold;
}

export function canCommit(state: ViewState): boolean {
  return (
    state.sessionStatus === "OPEN" && state.stats !== null && !isStale(state)
  );
}

export function applyCommitSuccess(state: ViewState, result: CommitResult): ViewState {
  return {
    ...state,
    sessionStatus: "COMMITTED",
    committedManifest: result.manifest_path,
    error: null,
  };
}

/** Surfaced failure; session stays visibly OPEN. */
export function setError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

export function clearError(state: ViewState): ViewState {
  return { ...state, error: null };
}

/** Rebuild the full view state after a refresh from the three durable facts. */
export function reconstruct(
  mapId: string,
  threshold: number,
  session: SessionState | null,
): ViewState {
  let state: ViewState = { ...initialState(), mapId, sliderThreshold: clampThreshold(threshold) };
  if (session) state = startSession(state, session);
  return state;
}
