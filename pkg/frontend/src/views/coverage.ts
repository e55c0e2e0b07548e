import type { QueryApi } from '../api';
import { banner, clear, el, emptyState } from '../dom';

function formatDelta(d: number): string {
  const pct = (d * 100).toFixed(1);
  return d >= 0 ? `+${pct}%` : `${pct}%`;
}

/**
 * Coverage dashboard: TVD badge, language share bars annotated with the
 * delta against the reference distribution, and the decade histogram in
 * ascending order.
 */
export async function renderCoverage(
  container: HTMLElement,
  api: QueryApi,
  stillCurrent: () => boolean = () => true,
): Promise<void> {
  let report;
  try {
    report = await api.coverage();
  } catch {
    if (!stillCurrent()) return;
    clear(container);
    container.append(banner('query API unreachable'));
    return;
  }
  if (!stillCurrent()) return;
  clear(container);

  if (Object.keys(report.language_shares).length === 0) {
    container.append(emptyState('index is empty'));
    return;
  }

  container.append(
    el('span', { class: 'tvd-badge' }, [`TVD ${report.tvd.toFixed(2)}`]),
  );

  const bars = el('div', { class: 'language-bars' });
  for (const [lang, share] of Object.entries(report.language_shares)) {
    const delta = report.language_deltas[lang] ?? 0;
    const bar = el('div', { class: 'bar-fill' });
    bar.style.width = `${(share * 100).toFixed(1)}%`;
    bars.append(
      el('div', { class: 'language-bar', 'data-lang': lang }, [
        el('span', { class: 'lang-label' }, [lang]),
        bar,
        el('span', { class: 'share' }, [`${(share * 100).toFixed(1)}%`]),
        el('span', { class: 'delta' }, [formatDelta(delta)]),
      ]),
    );
  }
  container.append(bars);

  // decade histogram, ascending
  const decades = Object.keys(report.year_histogram)
    .map(Number)
    .sort((a, b) => a - b);
  const maxCount = Math.max(
    1,
    ...decades.map((d) => report.year_histogram[String(d)]),
  );
  const histogram = el('div', { class: 'decade-histogram' });
  for (const decade of decades) {
    const count = report.year_histogram[String(decade)];
    const bar = el('div', { class: 'bar-fill' });
    bar.style.height = `${((count / maxCount) * 100).toFixed(0)}%`;
    histogram.append(
      el('div', { class: 'decade-bar', 'data-decade': String(decade) }, [
        bar,
        el('span', { class: 'decade-label' }, [`${decade}s`]),
        el('span', { class: 'decade-count' }, [String(count)]),
      ]),
    );
  }
  container.append(histogram);
}
