import type { QueryApi } from '../api';
import { banner, clear, el, emptyState } from '../dom';

export interface SearchHandlers {
  openResource(id: string): void;
}

/**
 * Search box plus result rows (title, year, typology, language). Clicking
 * a row navigates to the resource view.
 */
export async function renderSearch(
  container: HTMLElement,
  api: QueryApi,
  query: string,
  handlers: SearchHandlers,
  stillCurrent: () => boolean = () => true,
): Promise<void> {
  let response;
  try {
    response = await api.search(query);
  } catch {
    if (!stillCurrent()) return;
    clear(container);
    container.append(banner('query API unreachable'));
    return;
  }
  if (!stillCurrent()) return;
  clear(container);
  if (response.results.length === 0) {
    container.append(emptyState('no matching resources'));
    return;
  }
  const table = el('table', { class: 'search-results' });
  for (const r of response.results) {
    const row = el('tr', { class: 'search-row', 'data-id': r.id }, [
      el('td', { class: 'title' }, [r.title]),
      el('td', { class: 'year' }, [r.year === null ? '' : String(r.year)]),
      el('td', { class: 'typology' }, [r.typology]),
      el('td', { class: 'language' }, [r.language ?? 'und']),
    ]);
    row.addEventListener('click', () => handlers.openResource(r.id));
    table.append(row);
  }
  container.append(table);
}
