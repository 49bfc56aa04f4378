// Typed client for the analysis service. Response shapes mirror the
// service payloads field for field; this module does no interpretation.

export interface SessionInfo {
  session_id: string;
  stage: string;
  revision: number;
  sample_rate: number;
  duration_s: number;
}

export interface StreamSummary {
  index: number;
  duration_s: number;
  energy: number;
  checksum: string;
}

export interface SessionStatus extends SessionInfo {
  streams: StreamSummary[];
}

export interface SeparateResult {
  revision: number;
  stage: string;
  streams: StreamSummary[];
}

export interface WaveformResult {
  revision: number;
  checksum: string;
  sample_rate: number;
  duration_s: number;
  points: [number, number][];
}

export interface OnsetsPayload {
  times: number[];
  loudness: number[];
}

export interface ComputeOnsetsResult {
  revision: number;
  stage: string;
  checksum: string;
  onsets: OnsetsPayload;
}

export interface ReadOnsetsResult {
  revision: number;
  onsets: OnsetsPayload;
}

export interface TrajectoryPayload {
  frame_times: number[];
  pulse_s: (number | null)[];
}

export interface ComputeTatumResult {
  revision: number;
  stage: string;
  trajectory: TrajectoryPayload;
}

export interface ReadTrajectoryResult {
  revision: number;
  trajectory: TrajectoryPayload;
}

export interface SeparateParams {
  components?: number;
  window_length?: number;
  hop?: number;
  window?: string;
  rotate_basis?: string;
}

export interface OnsetParams {
  decimation_factor?: number;
  smoothing_window_ms?: number;
  threshold?: number;
  min_spacing_s?: number;
  loudness_window_ms?: number;
  normalize_rdf?: boolean;
}

export interface TatumParams {
  frame_s?: number;
  decay?: number;
  histogram_rate?: number;
  max_ioi_s?: number;
  min_q_s?: number;
  minima_tolerance?: number;
}

export type ExportFormat = "wav" | "midi" | "csv";

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ServiceError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  // fetch must not be detached from its global owner, hence the wrapper
  private fetchFn: FetchLike;

  constructor(readonly base: string, fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: BodyInit,
    contentType?: string,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = body;
      init.headers = contentType ? { "Content-Type": contentType } : {};
    }
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: unknown };
        if (typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, payload: object): Promise<T> {
    return this.request<T>(
      "POST",
      path,
      JSON.stringify(payload),
      "application/json",
    );
  }

  createSession(wav: ArrayBuffer | Blob): Promise<SessionInfo> {
    return this.request<SessionInfo>(
      "POST",
      "/sessions",
      wav,
      "application/octet-stream",
    );
  }

  status(sessionId: string): Promise<SessionStatus> {
    return this.request<SessionStatus>("GET", `/sessions/${sessionId}`);
  }

  separate(sessionId: string, params: SeparateParams): Promise<SeparateResult> {
    return this.post<SeparateResult>(`/sessions/${sessionId}/separate`, params);
  }

  waveform(
    sessionId: string,
    stream: number,
    points: number,
  ): Promise<WaveformResult> {
    return this.request<WaveformResult>(
      "GET",
      `/sessions/${sessionId}/streams/${stream}/waveform?points=${points}`,
    );
  }

  computeOnsets(
    sessionId: string,
    stream: number,
    params: OnsetParams,
  ): Promise<ComputeOnsetsResult> {
    return this.post<ComputeOnsetsResult>(
      `/sessions/${sessionId}/streams/${stream}/onsets`,
      params,
    );
  }

  readOnsets(sessionId: string, stream: number): Promise<ReadOnsetsResult> {
    return this.request<ReadOnsetsResult>(
      "GET",
      `/sessions/${sessionId}/streams/${stream}/onsets`,
    );
  }

  computeTatum(
    sessionId: string,
    stream: number,
    params: TatumParams,
  ): Promise<ComputeTatumResult> {
    return this.post<ComputeTatumResult>(
      `/sessions/${sessionId}/streams/${stream}/tatum`,
      params,
    );
  }

  readTrajectory(
    sessionId: string,
    stream: number,
  ): Promise<ReadTrajectoryResult> {
    return this.request<ReadTrajectoryResult>(
      "GET",
      `/sessions/${sessionId}/streams/${stream}/trajectory`,
    );
  }

  exportUrl(sessionId: string, stream: number, format: ExportFormat): string {
    return `${this.base}/sessions/${sessionId}/streams/${stream}/export?format=${format}`;
  }
}
