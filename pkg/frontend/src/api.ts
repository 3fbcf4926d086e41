/**
 * Typed client for the review service HTTP API. This is the only place
 * the UI talks to the network; configuration is just a base URL and an
 * optional bearer token.
 */

export interface SpanRecord {
  doc_id: string;
  start: number;
  end: number;
  label: string;
  source: string;
  version: number;
  snippet?: string;
}

export interface DecisionRecord {
  doc_id: string;
  start: number;
  end: number;
  kind: DecisionKind;
  adjudicator: string;
  basis_version: number;
  merged: { start: number; end: number; label: string } | null;
  version: number;
}

export type DecisionKind = "ACCEPT_A" | "ACCEPT_B" | "MERGED" | "REJECT_BOTH";

export interface DocSummary {
  doc_id: string;
  version: number;
  annotations: Record<string, number>;
  decisions: number;
}

export interface DocumentDetail {
  doc_id: string;
  text: string;
  version: number;
  annotations: Record<string, SpanRecord[]>;
  decisions: DecisionRecord[];
}

export interface GoldExport {
  source: "gold";
  annotations: SpanRecord[];
  undecided: Array<{
    doc_id: string;
    start: number;
    end: number;
    spans: Array<{ start: number; end: number; label: string; source: string }>;
  }>;
}

export interface ClientConfig {
  baseUrl: string;
  token?: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

function detailText(payload: unknown): string {
  if (payload && typeof payload === "object" && "detail" in payload) {
    const detail = (payload as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    if (Array.isArray(detail)) {
      return detail
        .map((item) => {
          const entry = item as { loc?: unknown[]; msg?: string };
          const loc = entry.loc ? entry.loc.join(".") : "";
          return loc ? `${loc}: ${entry.msg ?? ""}` : (entry.msg ?? "");
        })
        .join("; ");
    }
  }
  return JSON.stringify(payload);
}

export class ReviewClient {
  constructor(private readonly config: ClientConfig) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.config.token) {
      headers["Authorization"] = `Bearer ${this.config.token}`;
    }
    const response = await fetch(`${this.config.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      // non-JSON body; keep payload null
    }
    if (!response.ok) {
      throw new ApiError(response.status, detailText(payload));
    }
    return payload as T;
  }

  listDocs(): Promise<DocSummary[]> {
    return this.request("GET", "/docs");
  }

  getDoc(docId: string): Promise<DocumentDetail> {
    return this.request("GET", `/docs/${encodeURIComponent(docId)}`);
  }

  createAnnotation(
    docId: string,
    span: { start: number; end: number; label: string; source: string },
  ): Promise<SpanRecord> {
    return this.request("POST", `/docs/${encodeURIComponent(docId)}/annotations`, span);
  }

  submitDecision(
    docId: string,
    decision: {
      start: number;
      end: number;
      kind: DecisionKind;
      adjudicator: string;
      basis_version: number;
      merged?: { start: number; end: number; label: string };
    },
  ): Promise<DecisionRecord> {
    return this.request("POST", `/docs/${encodeURIComponent(docId)}/decisions`, decision);
  }

  exportGold(): Promise<GoldExport> {
    return this.request("GET", "/export/gold");
  }

  iaaReport(): Promise<Record<string, unknown>> {
    return this.request("GET", "/reports/iaa");
  }
}
