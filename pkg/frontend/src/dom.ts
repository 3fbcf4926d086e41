/**
 * DOM rendering: highlighted document view, layer toggles, category
 * palette and banners. Text renders inside a <pre> so whitespace and
 * offsets survive exactly as stored.
 */

import { CATEGORIES, CATEGORY_COLORS, isCategory } from "./categories.js";
import type { CategoryName } from "./categories.js";
import type { Segment } from "./highlight.js";
import type { ViewStore } from "./state.js";

export function renderDocument(container: HTMLElement, segments: Segment[]): void {
  container.textContent = "";
  const pre = document.createElement("pre");
  pre.className = "doc-text";
  for (const segment of segments) {
    const node = document.createElement("span");
    node.textContent = segment.text;
    node.dataset.start = String(segment.start);
    node.dataset.end = String(segment.end);
    if (segment.marks.length > 0) {
      node.className = "marked";
      const label = segment.marks[0].span.label;
      if (isCategory(label)) {
        node.style.backgroundColor = `${CATEGORY_COLORS[label]}40`;
        node.style.borderBottom = `2px solid ${CATEGORY_COLORS[label]}`;
      }
      node.title = segment.marks
        .map((mark) => `${mark.layer}: ${mark.span.label} (${mark.span.start}-${mark.span.end})`)
        .join("\n");
    }
    pre.appendChild(node);
  }
  container.appendChild(pre);
}

export function renderPalette(container: HTMLElement, onPick: (category: CategoryName) => void): void {
  container.textContent = "";
  CATEGORIES.forEach((category, index) => {
    const button = document.createElement("button");
    button.type = "button";
    button.className = "palette-entry";
    button.textContent = `${index + 1} ${category}`;
    button.style.borderLeft = `6px solid ${CATEGORY_COLORS[category]}`;
    button.addEventListener("click", () => onPick(category));
    container.appendChild(button);
  });
}

export function renderLayerToggles(container: HTMLElement, store: ViewStore, onChange: () => void): void {
  container.textContent = "";
  for (const layer of store.layerNames()) {
    const label = document.createElement("label");
    label.className = "layer-toggle";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = store.isVisible(layer);
    box.addEventListener("change", () => {
      store.toggleLayer(layer);
      onChange();
    });
    label.appendChild(box);
    label.appendChild(document.createTextNode(` ${layer}`));
    container.appendChild(label);
  }
}

export function renderBanner(container: HTMLElement, store: ViewStore): void {
  container.textContent = "";
  if (!store.banner) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  const note = document.createElement("div");
  note.className = "banner";
  note.textContent = store.banner;
  const dismiss = document.createElement("button");
  dismiss.type = "button";
  dismiss.textContent = "dismiss";
  dismiss.addEventListener("click", () => {
    store.dismissBanner();
    container.hidden = true;
  });
  note.appendChild(dismiss);
  container.appendChild(note);
}

/** Map the browser selection back to document offsets via segment nodes. */
export function selectionToOffsets(root: HTMLElement): { start: number; end: number } | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  const startNode = segmentElement(root, range.startContainer);
  const endNode = segmentElement(root, range.endContainer);
  if (!startNode || !endNode) return null;
  const start = Number(startNode.dataset.start) + range.startOffset;
  const end = Number(endNode.dataset.start) + range.endOffset;
  return start < end ? { start, end } : null;
}

function segmentElement(root: HTMLElement, node: Node): HTMLElement | null {
  let current: Node | null = node;
  while (current && current !== root) {
    if (current instanceof HTMLElement && current.dataset.start !== undefined) {
      return current;
    }
    current = current.parentNode;
  }
  return null;
}
