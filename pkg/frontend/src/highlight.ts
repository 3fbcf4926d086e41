/**
 * Span-to-segment computation for rendering.
 *
 * The document text is cut at every span boundary; each segment carries
 * the stack of spans covering it per layer. Offsets come straight from
 * the server records, so concatenating the segments always reproduces
 * the exact document text (no normalization, no drift).
 */

import type { SpanRecord } from "./api.js";

export interface Layer {
  name: string;
  spans: SpanRecord[];
  visible: boolean;
}

export interface Mark {
  layer: string;
  span: SpanRecord;
}

export interface Segment {
  start: number;
  end: number;
  text: string;
  marks: Mark[];
}

export function computeSegments(text: string, layers: Layer[]): Segment[] {
  const boundaries = new Set<number>([0, text.length]);
  const active: Mark[] = [];
  for (const layer of layers) {
    if (!layer.visible) continue;
    for (const span of layer.spans) {
      if (span.start < 0 || span.end > text.length || span.start >= span.end) {
        throw new Error(
          `span (${span.start}, ${span.end}) out of bounds for text of length ${text.length}`,
        );
      }
      boundaries.add(span.start);
      boundaries.add(span.end);
      active.push({ layer: layer.name, span });
    }
  }
  const cuts = [...boundaries].sort((a, b) => a - b);
  const segments: Segment[] = [];
  for (let i = 0; i + 1 < cuts.length; i++) {
    const [start, end] = [cuts[i], cuts[i + 1]];
    if (start === end) continue;
    const marks = active.filter(({ span }) => span.start <= start && end <= span.end);
    segments.push({ start, end, text: text.slice(start, end), marks });
  }
  return segments;
}

/** Exact character range a span occupies in the rendered segments. */
export function renderedRange(
  segments: Segment[],
  span: { start: number; end: number; label: string; source: string },
): { start: number; end: number } | null {
  const covered = segments.filter((segment) =>
    segment.marks.some(
      (mark) =>
        mark.span.start === span.start &&
        mark.span.end === span.end &&
        mark.span.label === span.label &&
        mark.span.source === span.source,
    ),
  );
  if (covered.length === 0) return null;
  return { start: covered[0].start, end: covered[covered.length - 1].end };
}
