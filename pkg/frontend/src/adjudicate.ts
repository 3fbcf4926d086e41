/**
 * Adjudication model: compare the two annotators' spans over a region
 * side by side and turn a reviewer action into a decision submission.
 * While a region is under adjudication the source layers are read-only;
 * a stale basis version surfaces as a "reload required" conflict.
 */

import { ApiError, ReviewClient } from "./api.js";
import type { DecisionKind, DecisionRecord, DocumentDetail, SpanRecord } from "./api.js";

export interface RegionComparison {
  start: number;
  end: number;
  a: SpanRecord[];
  b: SpanRecord[];
  exactAgreement: boolean;
}

function covers(span: SpanRecord, start: number, end: number): boolean {
  return Math.max(span.start, start) < Math.min(span.end, end);
}

export function compareRegion(
  doc: DocumentDetail,
  sources: [string, string],
  start: number,
  end: number,
): RegionComparison {
  const [sourceA, sourceB] = sources;
  const a = (doc.annotations[sourceA] ?? []).filter((span) => covers(span, start, end));
  const b = (doc.annotations[sourceB] ?? []).filter((span) => covers(span, start, end));
  const key = (span: SpanRecord) => `${span.start}:${span.end}:${span.label}`;
  const exactAgreement =
    a.length > 0 &&
    a.length === b.length &&
    new Set(a.map(key)).size === a.length &&
    a.every((span) => b.some((other) => key(other) === key(span)));
  return { start, end, a, b, exactAgreement };
}

/** Regions where the annotators disagree (no exact counterpart). */
export function disagreementRegions(
  doc: DocumentDetail,
  sources: [string, string],
): Array<{ start: number; end: number }> {
  const [sourceA, sourceB] = sources;
  const key = (span: SpanRecord) => `${span.start}:${span.end}:${span.label}`;
  const keysA = new Set((doc.annotations[sourceA] ?? []).map(key));
  const keysB = new Set((doc.annotations[sourceB] ?? []).map(key));
  const leftovers = [
    ...(doc.annotations[sourceA] ?? []).filter((span) => !keysB.has(key(span))),
    ...(doc.annotations[sourceB] ?? []).filter((span) => !keysA.has(key(span))),
  ].sort((x, y) => x.start - y.start || x.end - y.end);
  const regions: Array<{ start: number; end: number }> = [];
  for (const span of leftovers) {
    const last = regions[regions.length - 1];
    if (last && span.start < last.end) {
      last.end = Math.max(last.end, span.end);
    } else {
      regions.push({ start: span.start, end: span.end });
    }
  }
  return regions;
}

export type AdjudicationResult =
  | { ok: true; decision: DecisionRecord }
  | { ok: false; conflict: boolean; message: string };

export async function submitAdjudication(
  client: ReviewClient,
  doc: DocumentDetail,
  region: { start: number; end: number },
  kind: DecisionKind,
  adjudicator: string,
  merged?: { start: number; end: number; label: string },
): Promise<AdjudicationResult> {
  try {
    const decision = await client.submitDecision(doc.doc_id, {
      start: region.start,
      end: region.end,
      kind,
      adjudicator,
      basis_version: doc.version,
      ...(merged ? { merged } : {}),
    });
    return { ok: true, decision };
  } catch (error) {
    if (error instanceof ApiError) {
      const conflict = error.status === 409;
      return {
        ok: false,
        conflict,
        message: conflict ? "document changed on the server; reload required" : error.detail,
      };
    }
    return { ok: false, conflict: false, message: String(error) };
  }
}
