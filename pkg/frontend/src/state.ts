// Client-side session state. The service owns every number on screen;
// this module only decides what is current and what is stale.

import type {
  ComputeOnsetsResult,
  ComputeTatumResult,
  OnsetsPayload,
  SeparateResult,
  SessionInfo,
  StreamSummary,
  TrajectoryPayload,
  WaveformResult,
} from "./api.js";

export type Mode = "start" | "analysis" | "interpretation";

/** Editable parameter draft, validated against the service's constraints
    before any POST leaves the client. */
export interface ParameterDraft {
  components: number;
  threshold: number;
  minSpacingS: number;
  frameS: number;
  decay: number;
}

export const DEFAULT_DRAFT: ParameterDraft = {
  components: 2,
  threshold: 0.3,
  minSpacingS: 0.05,
  frameS: 0.5,
  decay: 0.8,
};

export interface StreamView {
  summary: StreamSummary;
  waveform: WaveformResult | null;
  onsets: OnsetsPayload | null;
  trajectory: TrajectoryPayload | null;
}

function modeForStage(stage: string): Mode {
  if (stage === "interpreted") return "interpretation";
  if (stage === "separated" || stage === "onsets_ready") return "analysis";
  return "start";
}

export class ViewState {
  mode: Mode = "start";
  sessionId: string | null = null;
  revision = 0;
  sampleRate = 0;
  durationS = 0;
  streams: StreamView[] = [];
  selected = 0;
  draft: ParameterDraft = { ...DEFAULT_DRAFT };

  beginSession(info: SessionInfo): void {
    this.sessionId = info.session_id;
    this.revision = info.revision;
    this.sampleRate = info.sample_rate;
    this.durationS = info.duration_s;
    this.streams = [];
    this.selected = 0;
    this.mode = modeForStage(info.stage);
  }

  /** A fresh separation invalidates everything downstream, exactly as the
      service wipes its own onsets and trajectories. */
  applySeparation(result: SeparateResult): void {
    this.revision = result.revision;
    this.mode = modeForStage(result.stage);
    this.streams = result.streams.map((summary) => ({
      summary,
      waveform: null,
      onsets: null,
      trajectory: null,
    }));
    if (this.selected >= this.streams.length) this.selected = 0;
  }

  /** Reads are keyed on the revision counter: a response fetched before a
      later mutation must never land on screen. Returns false if discarded. */
  applyWaveform(stream: number, result: WaveformResult): boolean {
    if (result.revision !== this.revision) return false;
    const view = this.streams[stream];
    if (!view) return false;
    view.waveform = result;
    return true;
  }

  applyOnsets(stream: number, result: ComputeOnsetsResult): void {
    this.revision = result.revision;
    this.mode = modeForStage(result.stage);
    const view = this.streams[stream];
    if (!view) return;
    view.onsets = result.onsets;
    view.trajectory = null; // service dropped it; mirror that
  }

  applyTrajectory(stream: number, result: ComputeTatumResult): void {
    this.revision = result.revision;
    this.mode = modeForStage(result.stage);
    const view = this.streams[stream];
    if (!view) return;
    view.trajectory = result.trajectory;
  }

  selectStream(index: number): void {
    if (0 <= index && index < this.streams.length) this.selected = index;
  }

  current(): StreamView | null {
    return this.streams[this.selected] ?? null;
  }

  /** Mirror of the service-side checks, so a bad draft is caught with a
      message instead of a 422 round trip. Empty result means valid. */
  validateDraft(): string[] {
    const problems: string[] = [];
    const d = this.draft;
    if (!Number.isInteger(d.components) || d.components < 1) {
      problems.push("components must be a whole number of at least 1");
    }
    if (!Number.isFinite(d.threshold) || d.threshold < 0) {
      problems.push("threshold must be zero or greater");
    }
    if (!Number.isFinite(d.minSpacingS) || d.minSpacingS < 0) {
      problems.push("minimum spacing must be zero or greater");
    }
    if (!Number.isFinite(d.frameS) || d.frameS <= 0) {
      problems.push("frame length must be greater than zero");
    }
    if (!Number.isFinite(d.decay) || d.decay <= 0 || d.decay > 1) {
      problems.push("decay must be in (0, 1]");
    }
    return problems;
  }
}
