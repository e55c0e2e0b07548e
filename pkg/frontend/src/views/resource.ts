import { ApiError, type QueryApi } from '../api';
import { banner, clear, el, emptyState } from '../dom';
import type { CoCitationScope, FrbrLevel, Resource } from '../types';
import { FRBR_LEVELS } from '../types';

export interface ResourceHandlers {
  openResource(id: string): void;
  setScope(scope: CoCitationScope): void;
  setLevel(level: FrbrLevel): void;
}

function authorLine(r: Resource): string {
  return r.authors
    .map((a) => (a.given ? `${a.family}, ${a.given}` : a.family))
    .join('; ');
}

function metadataBlock(r: Resource): HTMLElement {
  const rows: HTMLElement[] = [
    el('h2', { class: 'resource-title' }, [r.title]),
    el('p', { class: 'resource-byline' }, [
      [authorLine(r), r.year === null ? null : String(r.year), r.typology]
        .filter((part): part is string => !!part)
        .join(' · '),
    ]),
  ];
  if (r.identifiers.length > 0) {
    rows.push(
      el(
        'ul',
        { class: 'identifiers' },
        r.identifiers.map((p) =>
          el('li', {}, [`${p.scheme}:${p.value}`]),
        ),
      ),
    );
  }
  if (r.collections.length > 0) {
    rows.push(
      el('p', { class: 'collections' }, [r.collections.join(', ')]),
    );
  }
  return el('section', { class: 'metadata' }, rows);
}

function resourceLink(
  r: Resource,
  handlers: ResourceHandlers,
): HTMLElement {
  const link = el('a', { class: 'resource-link', 'data-id': r.id, href: '#' }, [
    r.year === null ? r.title : `${r.title} (${r.year})`,
  ]);
  link.addEventListener('click', (ev) => {
    ev.preventDefault();
    handlers.openResource(r.id);
  });
  return link;
}

/** Lock marker shown when a context comes back 403. */
function lockMarker(): HTMLElement {
  return el('span', { class: 'lock', title: 'context not available remotely' }, [
    '\u{1F512} restricted',
  ]);
}

async function contextLine(
  api: QueryApi,
  citationId: string,
): Promise<HTMLElement | null> {
  try {
    const ctx = await api.context(citationId);
    if (ctx.access === 'open' && ctx.excerpt) {
      return el('blockquote', { class: 'excerpt' }, [ctx.excerpt]);
    }
    return null;
  } catch (err) {
    if (err instanceof ApiError && err.status === 403) {
      return lockMarker();
    }
    return null; // no context for this citation
  }
}

/**
 * Resource page: metadata block, references / cited-by / co-citation
 * panels, FRBR level selector feeding the citation count. Every listed
 * resource is a navigation link.
 */
export async function renderResource(
  container: HTMLElement,
  api: QueryApi,
  id: string,
  scope: CoCitationScope,
  level: FrbrLevel,
  handlers: ResourceHandlers,
  stillCurrent: () => boolean = () => true,
): Promise<void> {
  let resource: Resource;
  try {
    resource = await api.resource(id);
  } catch (err) {
    if (!stillCurrent()) return;
    clear(container);
    if (err instanceof ApiError && err.status === 404) {
      container.append(
        el('div', { class: 'not-found' }, [`no resource with id ${id}`]),
      );
    } else {
      container.append(banner('query API unreachable'));
    }
    return;
  }

  const [backward, forward, cocited, count] = await Promise.all([
    api.backward(id),
    api.forward(id),
    api.cocited(id, scope),
    api.count(id, level),
  ]);
  if (!stillCurrent()) return;
  clear(container);
  container.append(metadataBlock(resource));

  // references panel, with per-citation context lookups
  const refList = el('ul', { class: 'panel-list' });
  for (const cited of backward.results) {
    const item = el('li', {}, [resourceLink(cited, handlers)]);
    refList.append(item);
    contextLine(api, `${id}->${cited.id}`).then((line) => {
      if (line && stillCurrent()) item.append(line);
    });
  }
  container.append(
    el('section', { class: 'panel backward' }, [
      el('h3', {}, [`References (${backward.results.length})`]),
      backward.results.length ? refList : emptyState('no references'),
    ]),
  );

  const citingList = el(
    'ul',
    { class: 'panel-list' },
    forward.results.map((r) => el('li', {}, [resourceLink(r, handlers)])),
  );
  container.append(
    el('section', { class: 'panel forward' }, [
      el('h3', {}, [`Cited by (${forward.results.length})`]),
      forward.results.length ? citingList : emptyState('no citing works'),
    ]),
  );

  // co-citation panel with the scope toggle
  const scopeToggle = el('select', { class: 'scope-toggle' }) as HTMLSelectElement;
  for (const s of ['publication', 'proximal'] as const) {
    scopeToggle.append(el('option', { value: s }, [s]));
  }
  scopeToggle.value = scope;
  scopeToggle.addEventListener('change', () =>
    handlers.setScope(scopeToggle.value as CoCitationScope),
  );
  const coList = el('ul', { class: 'panel-list cocited' });
  for (const [coId, n] of Object.entries(cocited.counts)) {
    const item = el('li', { 'data-id': coId }, []);
    const link = el('a', { class: 'resource-link', 'data-id': coId, href: '#' }, [coId]);
    link.addEventListener('click', (ev) => {
      ev.preventDefault();
      handlers.openResource(coId);
    });
    item.append(link, el('span', { class: 'count' }, [` ${n}`]));
    coList.append(item);
  }
  container.append(
    el('section', { class: 'panel cocitation' }, [
      el('h3', {}, [`Co-cited (${Object.keys(cocited.counts).length})`]),
      scopeToggle,
      Object.keys(cocited.counts).length ? coList : emptyState('no co-citations'),
    ]),
  );

  // FRBR level selector re-queries the rolled-up citation count
  const levelSelect = el('select', { class: 'level-select' }) as HTMLSelectElement;
  for (const lvl of FRBR_LEVELS) {
    levelSelect.append(el('option', { value: lvl }, [lvl]));
  }
  levelSelect.value = level;
  levelSelect.addEventListener('change', () =>
    handlers.setLevel(levelSelect.value as FrbrLevel),
  );
  container.append(
    el('section', { class: 'panel count' }, [
      el('h3', {}, ['Citation count']),
      levelSelect,
      el('span', { class: 'citation-count' }, [String(count.count)]),
    ]),
  );
}
