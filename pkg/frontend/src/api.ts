// Typed client for the session service (docs/api.md). The playground holds
// no simulation logic: every panel renders straight from these payloads.

export type StepRecord = {
  step: number;
  role: "Eco" | "Fact" | "Do" | "Query" | "Goal";
  text: string;
  emulator_version: number;
  state_hash: string;
  actions: string[];
  events: { name: string; subject: number; step: number }[];
  failure: string | null;
  answer: string | null;
};

export type Meta = { emulator_version: number; step: number };

export type QuantityJson = { g?: number; count?: number; value?: number };

export type EntityJson = {
  id: number;
  kind: string;
  label: string | null;
  props: Record<string, QuantityJson | boolean>;
};

export type RelationJson = {
  kind: "In" | "Worn-By" | "At";
  subject: number;
  object: number;
  slot?: string;
  layer?: number;
};

export type StateDoc = {
  entities: EntityJson[];
  relations: RelationJson[];
  events: { name: string; subject: number; step: number }[];
};

export type StateResponse = Meta & {
  state: StateDoc;
  canonical_json: string;
  state_hash: string;
};

export type AffordanceItem = {
  verb: string;
  patient: number;
  target: number | null;
  agent: number | null;
  label: string;
};

export type RuleDump = {
  id: number;
  modality: string;
  pattern: string;
  guards: string[];
  event?: string;
  provenance: "Compiled" | "Situation";
  installed_at: number;
  scope: string;
  source: string;
};

export type AnswerJson = {
  kind: "yes" | "no" | "value" | "blocked";
  text: string;
  value: QuantityJson | null;
};

export type ParseErrorDetail = {
  message: string;
  span: [number, number] | null;
  expected: string[];
};

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: ParseErrorDetail | string,
  ) {
    super(typeof detail === "string" ? detail : detail.message);
  }

  get span(): [number, number] | null {
    return typeof this.detail === "string" ? null : this.detail.span;
  }
}

type Fetch = typeof fetch;

export class SessionClient {
  sessionId: string | null = null;

  constructor(
    readonly base: string = "",
    private readonly fetcher: Fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetcher(this.base + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const doc = await resp.json();
    if (!resp.ok) {
      throw new ServiceError(resp.status, doc.detail ?? `HTTP ${resp.status}`);
    }
    return doc as T;
  }

  private sid(): string {
    if (this.sessionId === null) throw new Error("no active session");
    return this.sessionId;
  }

  async create(libs: string[]): Promise<Meta & { session_id: string; libs: string[] }> {
    const doc = await this.request<Meta & { session_id: string; libs: string[] }>(
      "POST", "/session", { libs });
    this.sessionId = doc.session_id;
    return doc;
  }

  submit(text: string): Promise<{ record: StepRecord } & Meta> {
    return this.request("POST", `/session/${this.sid()}/utterance`, { text });
  }

  state(): Promise<StateResponse> {
    return this.request("GET", `/session/${this.sid()}/state`);
  }

  affordances(): Promise<{ actions: AffordanceItem[] } & Meta> {
    return this.request("GET", `/session/${this.sid()}/affordances`);
  }

  rules(): Promise<{ rules: RuleDump[] } & Meta> {
    return this.request("GET", `/session/${this.sid()}/rules`);
  }

  whatif(commands: string[], query: string):
      Promise<{ answer: AnswerJson; applied: boolean } & Meta> {
    return this.request("POST", `/session/${this.sid()}/whatif`, { commands, query });
  }

  transcript(): Promise<{ lines: string[]; records: StepRecord[] } & Meta> {
    return this.request("GET", `/session/${this.sid()}/transcript`);
  }

  delete(): Promise<{ deleted: boolean }> {
    return this.request("DELETE", `/session/${this.sid()}`);
  }
}
