// Typed client for the session service. The UI never does model math of
// its own; everything rendered comes back from these calls.

export interface EnvelopePoint {
  z: number;
  mean: number[];
  std2: number[];
}

export interface UpdateMetrics {
  d_b: number;
  e_f_mu: number;
  e_f_sigma: number;
  log_kappa: number;
  pc_rotation_deg: number | null;
}

export interface DemoResponse {
  n: number;
  delta_used: number;
  metrics: UpdateMetrics | null;
  envelope: EnvelopePoint[];
}

export interface SessionDoc {
  session_id: string;
  K: number;
  D: number;
  envelope: EnvelopePoint[];
  history: { n: number; delta: number; metrics?: UpdateMetrics }[];
  stepwise_state: { n: number; beta: number; delta_min: number };
}

export interface StreamEvent {
  n: number;
  delta: number;
  envelope: EnvelopePoint[];
  metrics?: UpdateMetrics;
}

export interface DemoPoint {
  t: number;
  y: number[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function expectOk(response: Response): Promise<any> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = body.detail ?? body.error?.message ?? detail;
    } catch {
      // leave the status text
    }
    throw new ApiError(response.status, detail);
  }
  return response.json();
}

export class SessionApi {
  constructor(public baseUrl: string) {}

  async createSession(options: {
    K?: number;
    D?: number;
    beta?: number;
    delta_min?: number;
    reference?: unknown;
  } = {}): Promise<string> {
    const body = await expectOk(
      await fetch(`${this.baseUrl}/sessions`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(options),
      }),
    );
    return body.session_id;
  }

  async postDemo(sessionId: string, points: DemoPoint[]): Promise<DemoResponse> {
    return expectOk(
      await fetch(`${this.baseUrl}/sessions/${sessionId}/demos`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ points }),
      }),
    );
  }

  async getSession(sessionId: string): Promise<SessionDoc> {
    return expectOk(await fetch(`${this.baseUrl}/sessions/${sessionId}`));
  }

  async getEnvelope(sessionId: string, samples = 50): Promise<EnvelopePoint[]> {
    const body = await expectOk(
      await fetch(
        `${this.baseUrl}/sessions/${sessionId}/envelope?samples=${samples}`,
      ),
    );
    return body.envelope;
  }

  async reset(sessionId: string): Promise<void> {
    await expectOk(
      await fetch(`${this.baseUrl}/sessions/${sessionId}/reset`, {
        method: "POST",
      }),
    );
  }

  async patchConfig(
    sessionId: string,
    config: { beta?: number; delta_min?: number },
  ): Promise<void> {
    await expectOk(
      await fetch(`${this.baseUrl}/sessions/${sessionId}/config`, {
        method: "PATCH",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(config),
      }),
    );
  }

  async deleteSession(sessionId: string): Promise<void> {
    await expectOk(
      await fetch(`${this.baseUrl}/sessions/${sessionId}`, {
        method: "DELETE",
      }),
    );
  }

  openStream(
    sessionId: string,
    onEvent: (event: StreamEvent) => void,
  ): WebSocket {
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    const socket = new WebSocket(`${wsBase}/sessions/${sessionId}/stream`);
    socket.onmessage = (msg) => onEvent(JSON.parse(msg.data));
    return socket;
  }
}
