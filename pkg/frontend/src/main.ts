/**
 * Bootstrap: wire the store, client and DOM together. Configuration
 * comes from query parameters or globals: service base URL, token, and
 * the annotator name this session writes under.
 */

import { ReviewClient } from "./api.js";
import { categoryForDigit } from "./categories.js";
import { renderBanner, renderDocument, renderLayerToggles, renderPalette, selectionToOffsets } from "./dom.js";
import { ViewStore } from "./state.js";

interface UiConfig {
  baseUrl: string;
  token?: string;
  annotator: string;
}

function readConfig(): UiConfig {
  const params = new URLSearchParams(window.location.search);
  return {
    baseUrl: params.get("service") ?? "http://127.0.0.1:8765",
    token: params.get("token") ?? undefined,
    annotator: params.get("annotator") ?? "annotator-a",
  };
}

async function start(): Promise<void> {
  const config = readConfig();
  const client = new ReviewClient({ baseUrl: config.baseUrl, token: config.token });
  const store = new ViewStore(client, { annotator: config.annotator });

  const docList = document.getElementById("doc-list")!;
  const docView = document.getElementById("doc-view")!;
  const palette = document.getElementById("palette")!;
  const layerBox = document.getElementById("layers")!;
  const bannerBox = document.getElementById("banner")!;
  const statusBox = document.getElementById("status")!;

  const refresh = () => {
    renderDocument(docView, store.segments());
    renderLayerToggles(layerBox, store, refresh);
    renderBanner(bannerBox, store);
    statusBox.textContent = store.pendingSave ? "saving..." : "";
  };

  const openDoc = async (docId: string) => {
    await store.load(docId);
    refresh();
  };

  const summaries = await client.listDocs();
  docList.textContent = "";
  for (const summary of summaries) {
    const entry = document.createElement("button");
    entry.type = "button";
    entry.className = "doc-entry";
    entry.textContent = `${summary.doc_id} (v${summary.version})`;
    entry.addEventListener("click", () => void openDoc(summary.doc_id));
    docList.appendChild(entry);
  }

  renderPalette(palette, (category) => {
    void store.createSpan(category).then(refresh);
  });

  docView.addEventListener("mouseup", () => {
    store.setSelection(selectionToOffsets(docView));
    statusBox.textContent = store.selection
      ? `selected ${store.selection.start}-${store.selection.end}`
      : "";
  });

  document.addEventListener("keydown", (event) => {
    const category = categoryForDigit(event.key);
    if (category && store.canCreate) {
      event.preventDefault();
      void store.createSpan(category).then(refresh);
    }
  });

  if (summaries.length > 0) {
    await openDoc(summaries[0].doc_id);
  }
}

void start();
