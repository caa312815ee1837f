import type { FactorsRow, SimulationResponse } from './api.js';

/** Three-decimal display form of a service-reported value. Formatting is
 * the only transformation the UI applies to similarities and factors. */
export function fixed3(value: number | null | undefined): string {
  return value === null || value === undefined ? '—' : value.toFixed(3);
}

export const REPORT_FIELDS = [
  'name', 'RI', 'AI', 'rai', 'iri', 'anr', 'inr', 'precision', 'recall',
] as const;

function csvCell(value: string | number): string {
  const text = String(value);
  return /[",\n]/.test(text) ? `"${text.replace(/"/g, '""')}"` : text;
}

/** CSV of a simulation response at full precision (export is data, not
 * display, so no rounding happens here either). */
export function reportCsv(report: SimulationResponse): string {
  const lines = [REPORT_FIELDS.join(',')];
  for (const row of report.rows) {
    lines.push(REPORT_FIELDS.map((f) => csvCell(row[f as keyof FactorsRow])).join(','));
  }
  const { meanPrecision, meanRecall } = report.aggregate;
  lines.push(
    ['mean', '', '', '', '', '', '',
      meanPrecision === null ? '' : String(meanPrecision),
      meanRecall === null ? '' : String(meanRecall),
    ].join(','),
  );
  return lines.join('\n') + '\n';
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
