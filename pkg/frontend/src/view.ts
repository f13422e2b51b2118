/** View models for the ranking panel: plain data, no DOM. */

import type { InferResponse } from "./api.js";

export interface RankingRowView {
  name: string;
  score: number;
  /** bar length in [0, 1], proportional to score within the response */
  barLength: number;
}

export interface RankingView {
  rows: RankingRowView[];
  diagnosticsLine: string;
}

export function rankingView(response: InferResponse): RankingView {
  const rows = [...response.ranking].sort((a, b) => b.score - a.score);
  const maxScore = rows.length ? Math.max(...rows.map((r) => r.score)) : 0;
  const d = response.diagnostics;
  return {
    rows: rows.map((row) => ({
      name: row.disease_name,
      score: row.score,
      barLength: maxScore > 0 ? Math.max(row.score, 0) / maxScore : 0,
    })),
    diagnosticsLine: `${d.algorithm} · ${d.iterations} iterations · ${d.converged ? "converged" : "not converged"}`,
  };
}
