/** Thin DOM layer: renders the checklist and ranking from view models. */

import type { CatalogEntry } from "./api.js";
import type { RankingView } from "./view.js";
import type { ToggleState, TriState } from "./state.js";

const TRI_LABEL: Record<TriState, string> = { unknown: "?", present: "yes", absent: "no" };

export function renderChecklist(
  container: HTMLElement,
  symptoms: CatalogEntry[],
  state: ToggleState,
  filter: string,
  onCycle: (id: number) => void,
): void {
  container.textContent = "";
  const needle = filter.trim().toLowerCase();
  const visible = symptoms
    .filter((s) => !needle || s.name.toLowerCase().includes(needle))
    .sort((a, b) => a.name.localeCompare(b.name));
  for (const symptom of visible) {
    const tri = state.states.get(symptom.id) ?? "unknown";
    const row = document.createElement("button");
    row.type = "button";
    row.className = `symptom tri-${tri}`;
    row.dataset.symptomId = String(symptom.id);
    const label = document.createElement("span");
    label.textContent = symptom.name;
    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = TRI_LABEL[tri];
    row.append(label, badge);
    row.addEventListener("click", () => onCycle(symptom.id));
    container.appendChild(row);
  }
}

export function renderRanking(container: HTMLElement, view: RankingView): void {
  container.textContent = "";
  for (const row of view.rows) {
    const item = document.createElement("div");
    item.className = "rank-row";
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.width = `${Math.round(row.barLength * 100)}%`;
    const label = document.createElement("div");
    label.className = "rank-label";
    label.textContent = `${row.name}  ${row.score.toFixed(4)}`;
    item.append(bar, label);
    container.appendChild(item);
  }
  const diag = document.createElement("div");
  diag.className = "diagnostics";
  diag.textContent = view.diagnosticsLine;
  container.appendChild(diag);
}

export function renderError(container: HTMLElement, message: string, onRetry?: () => void): void {
  container.textContent = "";
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.textContent = message;
  if (onRetry) {
    const retry = document.createElement("button");
    retry.type = "button";
    retry.textContent = "retry";
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
  }
  container.appendChild(banner);
}

export function renderSkeleton(container: HTMLElement, text = "loading catalog..."): void {
  container.textContent = "";
  const placeholder = document.createElement("div");
  placeholder.className = "skeleton";
  placeholder.textContent = text;
  container.appendChild(placeholder);
}
