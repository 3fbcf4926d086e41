/**
 * View state for one open document: annotation layers, the current
 * selection, optimistic saves with rollback, and conflict banners.
 *
 * Every span shown here originates from the server; optimistic entries
 * are temporary and are replaced by the stored record (or rolled back)
 * when the write settles, so after reconciliation no phantom client
 * state survives.
 */

import { ApiError, ReviewClient } from "./api.js";
import type { DocumentDetail, SpanRecord } from "./api.js";
import type { CategoryName } from "./categories.js";
import { computeSegments } from "./highlight.js";
import type { Layer, Segment } from "./highlight.js";

export interface Selection {
  start: number;
  end: number;
}

export const GOLD_LAYER = "gold";

export interface ViewConfig {
  annotator: string; // source name this session writes spans under
  layers?: string[]; // layer order; defaults to the sources on the doc
}

export class ViewStore {
  doc: DocumentDetail | null = null;
  selection: Selection | null = null;
  pendingSave = false;
  banner: string | null = null;
  adjudicating: Selection | null = null;
  private visibility = new Map<string, boolean>();
  private optimistic: SpanRecord[] = [];

  constructor(
    private readonly client: ReviewClient,
    private readonly config: ViewConfig,
  ) {}

  async load(docId: string): Promise<void> {
    this.doc = await this.client.getDoc(docId);
    this.optimistic = [];
    this.selection = null;
    this.banner = null;
    for (const source of this.layerNames()) {
      if (!this.visibility.has(source)) {
        this.visibility.set(source, true);
      }
    }
  }

  layerNames(): string[] {
    if (this.config.layers) return [...this.config.layers];
    const sources = this.doc ? Object.keys(this.doc.annotations) : [];
    if (!sources.includes(this.config.annotator)) sources.push(this.config.annotator);
    return sources.sort();
  }

  isVisible(layer: string): boolean {
    return this.visibility.get(layer) ?? true;
  }

  toggleLayer(layer: string): void {
    this.visibility.set(layer, !this.isVisible(layer));
  }

  setSelection(selection: Selection | null): void {
    if (selection && selection.start >= selection.end) {
      this.selection = null; // zero-width selections cannot create spans
      return;
    }
    this.selection = selection;
  }

  get canCreate(): boolean {
    return this.selection !== null && this.adjudicating === null && !this.pendingSave;
  }

  layers(): Layer[] {
    if (!this.doc) return [];
    const layers: Layer[] = [];
    for (const name of this.layerNames()) {
      const stored = this.doc.annotations[name] ?? [];
      const pending = this.optimistic.filter((span) => span.source === name);
      layers.push({ name, spans: [...stored, ...pending], visible: this.isVisible(name) });
    }
    return layers;
  }

  segments(): Segment[] {
    if (!this.doc) return [];
    return computeSegments(this.doc.text, this.layers());
  }

  /** Create a span over the current selection; optimistic, rolls back on 4xx. */
  async createSpan(category: CategoryName): Promise<SpanRecord | null> {
    if (!this.doc || !this.canCreate || !this.selection) return null;
    const { start, end } = this.selection;
    const temp: SpanRecord = {
      doc_id: this.doc.doc_id,
      start,
      end,
      label: category,
      source: this.config.annotator,
      version: -1, // not yet stored
      snippet: this.doc.text.slice(start, end),
    };
    this.optimistic.push(temp);
    this.pendingSave = true;
    try {
      const stored = await this.client.createAnnotation(this.doc.doc_id, {
        start,
        end,
        label: category,
        source: this.config.annotator,
      });
      this.optimistic = this.optimistic.filter((span) => span !== temp);
      const bucket = (this.doc.annotations[this.config.annotator] ??= []);
      bucket.push(stored);
      this.doc.version = Math.max(this.doc.version, stored.version);
      this.selection = null;
      return stored;
    } catch (error) {
      this.optimistic = this.optimistic.filter((span) => span !== temp);
      this.banner = error instanceof ApiError ? error.detail : String(error);
      return null;
    } finally {
      this.pendingSave = false;
    }
  }

  enterAdjudication(region: Selection): void {
    this.adjudicating = region;
    this.selection = null;
  }

  leaveAdjudication(): void {
    this.adjudicating = null;
  }

  dismissBanner(): void {
    this.banner = null;
  }
}
