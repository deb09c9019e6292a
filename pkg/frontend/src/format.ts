/** Display formatting and the commit-confirmation message. */

import type { ViewStats } from "./state.ts";

export function formatCount(n: number): string {
  return n.toLocaleString("en-US");
}

export function formatPercent(fraction: number): string {
  return `${(100 * fraction).toFixed(1)}%`;
}

export function formatThreshold(t: number): string {
  return t.toFixed(2);
}

/** How many annotations a commit will generate. */
export function expectedAnnotations(
  stats: ViewStats,
  nSamples: number | "ALL",
): number {
  if (nSamples === "ALL") return stats.nCells;
  return Math.min(nSamples, stats.nCells);
}

export function commitConfirmation(
  stats: ViewStats,
  nSamples: number | "ALL",
): string {
  const count = expectedAnnotations(stats, nSamples);
  return (
    `Commit threshold ${formatThreshold(stats.threshold)}?\n` +
    `${formatCount(count)} annotations will be generated ` +
    `(${formatPercent(stats.positiveFraction)} of cells positive).`
  );
}
