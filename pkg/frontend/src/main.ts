// DOM wiring. All analysis numbers on this page come from service
// responses; the only math here is pixel layout.

import { Client, ServiceError } from "./api.js";
import { ViewState } from "./state.js";
import { paintWaveform } from "./waveform.js";
import { paintTrajectory } from "./trajectory.js";

const WAVEFORM_POINTS = 800;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  state = new ViewState();
  client: Client;
  busy = false; // at most one in-flight mutation

  serviceUrl = el<HTMLInputElement>("service-url");
  fileInput = el<HTMLInputElement>("file-input");
  statusBar = el<HTMLElement>("status-bar");
  modeBadge = el<HTMLElement>("mode-badge");
  sessionMeta = el<HTMLElement>("session-meta");

  componentsInput = el<HTMLInputElement>("components");
  separateBtn = el<HTMLButtonElement>("separate-btn");

  analysisPane = el<HTMLElement>("analysis-pane");
  streamTabs = el<HTMLElement>("stream-tabs");
  checksumLine = el<HTMLElement>("checksum-line");
  waveCanvas = el<HTMLCanvasElement>("waveform-canvas");
  thresholdInput = el<HTMLInputElement>("threshold");
  spacingInput = el<HTMLInputElement>("min-spacing");
  goBtn = el<HTMLButtonElement>("go-btn");
  onsetCount = el<HTMLElement>("onset-count");

  interpretationPane = el<HTMLElement>("interpretation-pane");
  frameInput = el<HTMLInputElement>("frame-s");
  decayInput = el<HTMLInputElement>("decay");
  pulseBtn = el<HTMLButtonElement>("pulse-btn");
  trajCanvas = el<HTMLCanvasElement>("trajectory-canvas");
  pulseReadout = el<HTMLElement>("pulse-readout");

  exportWav = el<HTMLAnchorElement>("export-wav");
  exportMidi = el<HTMLAnchorElement>("export-midi");
  exportCsv = el<HTMLAnchorElement>("export-csv");

  constructor() {
    this.client = new Client(this.serviceUrl.value.replace(/\/$/, ""));
    this.serviceUrl.addEventListener("change", () => {
      this.client = new Client(this.serviceUrl.value.replace(/\/$/, ""));
    });
    this.fileInput.addEventListener("change", () => this.upload());
    this.separateBtn.addEventListener("click", () => this.separate());
    this.goBtn.addEventListener("click", () => this.go());
    this.pulseBtn.addEventListener("click", () => this.trackPulse());
    this.render();
  }

  setStatus(message: string): void {
    this.statusBar.textContent = message;
  }

  readDraft(): boolean {
    this.state.draft.components = Number(this.componentsInput.value);
    this.state.draft.threshold = Number(this.thresholdInput.value);
    this.state.draft.minSpacingS = Number(this.spacingInput.value);
    this.state.draft.frameS = Number(this.frameInput.value);
    this.state.draft.decay = Number(this.decayInput.value);
    const problems = this.state.validateDraft();
    if (problems.length > 0) {
      this.setStatus(problems.join("; "));
      return false;
    }
    return true;
  }

  async guard(label: string, work: () => Promise<void>): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.setStatus(label + "...");
    try {
      await work();
      this.setStatus("ready");
    } catch (err) {
      if (err instanceof ServiceError) {
        this.setStatus(`service said ${err.status}: ${err.message}`);
      } else {
        this.setStatus(`failed: ${String(err)}`);
      }
    } finally {
      this.busy = false;
      this.render();
    }
  }

  async upload(): Promise<void> {
    const file = this.fileInput.files?.[0];
    if (!file) return;
    await this.guard("uploading", async () => {
      const info = await this.client.createSession(await file.arrayBuffer());
      this.state.beginSession(info);
    });
  }

  async separate(): Promise<void> {
    if (!this.state.sessionId || !this.readDraft()) return;
    const sessionId = this.state.sessionId;
    await this.guard("separating", async () => {
      const result = await this.client.separate(sessionId, {
        components: this.state.draft.components,
      });
      this.state.applySeparation(result);
      this.state.selectStream(0);
      await this.fetchWaveform(0);
    });
  }

  async fetchWaveform(stream: number): Promise<void> {
    if (!this.state.sessionId) return;
    const result = await this.client.waveform(
      this.state.sessionId,
      stream,
      WAVEFORM_POINTS,
    );
    this.state.applyWaveform(stream, result);
  }

  async selectStream(index: number): Promise<void> {
    this.state.selectStream(index);
    const view = this.state.current();
    if (view && !view.waveform && this.state.sessionId) {
      // fetched lazily, first time a stream is shown
      await this.guard("loading waveform", () => this.fetchWaveform(index));
      return;
    }
    this.render();
  }

  async go(): Promise<void> {
    if (!this.state.sessionId || !this.readDraft()) return;
    const sessionId = this.state.sessionId;
    const stream = this.state.selected;
    await this.guard("detecting onsets", async () => {
      const result = await this.client.computeOnsets(sessionId, stream, {
        threshold: this.state.draft.threshold,
        min_spacing_s: this.state.draft.minSpacingS,
      });
      this.state.applyOnsets(stream, result);
    });
  }

  async trackPulse(): Promise<void> {
    if (!this.state.sessionId || !this.readDraft()) return;
    const sessionId = this.state.sessionId;
    const stream = this.state.selected;
    await this.guard("tracking pulse", async () => {
      const result = await this.client.computeTatum(sessionId, stream, {
        frame_s: this.state.draft.frameS,
        decay: this.state.draft.decay,
      });
      this.state.applyTrajectory(stream, result);
    });
  }

  render(): void {
    const state = this.state;
    this.modeBadge.textContent = state.mode;
    this.sessionMeta.textContent = state.sessionId
      ? `${state.durationS.toFixed(2)} s at ${state.sampleRate} Hz, revision ${state.revision}`
      : "no session";

    this.separateBtn.disabled = this.busy || !state.sessionId;
    const haveStreams = state.streams.length > 0;
    this.analysisPane.hidden = !haveStreams;
    this.interpretationPane.hidden = !haveStreams;

    this.streamTabs.replaceChildren();
    state.streams.forEach((view, i) => {
      const tab = document.createElement("button");
      tab.textContent = `stream ${i}`;
      tab.className = i === state.selected ? "tab active" : "tab";
      tab.addEventListener("click", () => void this.selectStream(i));
      this.streamTabs.appendChild(tab);
    });

    const view = state.current();
    const locked = this.busy || !view;
    this.goBtn.disabled = locked;
    this.pulseBtn.disabled = locked || !view?.onsets;

    if (view) {
      this.checksumLine.textContent = `stream audio ${view.summary.checksum}`;
      this.onsetCount.textContent = view.onsets
        ? `${view.onsets.times.length} onsets`
        : "not yet detected";
      const ctx = this.waveCanvas.getContext("2d");
      if (ctx) {
        paintWaveform(
          ctx,
          this.waveCanvas.width,
          this.waveCanvas.height,
          view.waveform,
          view.onsets,
          view.summary.duration_s,
        );
      }
      const trajCtx = this.trajCanvas.getContext("2d");
      if (trajCtx) {
        paintTrajectory(
          trajCtx,
          this.trajCanvas.width,
          this.trajCanvas.height,
          view.trajectory,
        );
      }
      const trailing = view.trajectory?.pulse_s.filter((p) => p !== null);
      this.pulseReadout.textContent =
        trailing && trailing.length > 0
          ? `latest pulse ${(trailing[trailing.length - 1] as number).toFixed(3)} s`
          : "no trajectory yet";

      const sessionId = state.sessionId as string;
      this.exportWav.href = this.client.exportUrl(sessionId, state.selected, "wav");
      this.exportMidi.href = this.client.exportUrl(sessionId, state.selected, "midi");
      this.exportCsv.href = this.client.exportUrl(sessionId, state.selected, "csv");
      // midi and csv need onsets server-side; do not offer dead links
      const exportable = Boolean(view.onsets);
      this.exportMidi.classList.toggle("disabled", !exportable);
      this.exportCsv.classList.toggle("disabled", !exportable);
    }
  }
}

window.addEventListener("load", () => {
  new App();
});
