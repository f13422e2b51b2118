/** Application bootstrap: fetch the catalog, wire toggles to live inference. */

import { ApiClient } from "./api.js";
import type { Algorithm, CatalogResponse } from "./api.js";
import { renderChecklist, renderError, renderRanking, renderSkeleton } from "./dom.js";
import { InferenceSession } from "./session.js";
import { cycleSymptom, initialState, setAlgorithm, setTopK } from "./state.js";
import type { ToggleState } from "./state.js";
import { rankingView } from "./view.js";

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

async function bootstrap(): Promise<void> {
  const client = new ApiClient();
  const checklistEl = byId("checklist");
  const rankingEl = byId("ranking");
  const filterEl = byId("filter") as HTMLInputElement;
  const algoEl = byId("algorithm") as HTMLSelectElement;
  const topkEl = byId("topk") as HTMLSelectElement;

  renderSkeleton(checklistEl);
  renderSkeleton(rankingEl, "toggle a symptom to rank diseases");

  let catalog: CatalogResponse;
  try {
    catalog = await client.getCatalog();
  } catch (error) {
    renderError(checklistEl, `cannot reach the inference service (${String(error)})`, () => void bootstrap());
    return;
  }

  let state: ToggleState = initialState(catalog.symptoms.map((s) => s.id));
  const session = new InferenceSession(client, {
    onResponse: (response) => renderRanking(rankingEl, rankingView(response)),
    onError: (error) => renderError(rankingEl, `inference failed: ${String(error)}`),
  });

  const redraw = () =>
    renderChecklist(checklistEl, catalog.symptoms, state, filterEl.value, (id) => {
      state = cycleSymptom(state, id);
      redraw();
      session.update(state);
    });

  filterEl.addEventListener("input", redraw);
  algoEl.addEventListener("change", () => {
    state = setAlgorithm(state, algoEl.value as Algorithm);
    session.update(state);
  });
  topkEl.addEventListener("change", () => {
    state = setTopK(state, Number(topkEl.value));
    session.update(state);
  });
  redraw();
}

void bootstrap();
