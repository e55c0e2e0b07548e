import { beforeEach, describe, expect, it, vi } from 'vitest';

import { renderResource } from '../src/views/resource';
import type { ResourceHandlers } from '../src/views/resource';
import { MockApi, flush, makeResource } from './mock';

const SENTINEL = 'XSENTINELX';

const noop: ResourceHandlers = {
  openResource: () => {},
  setScope: () => {},
  setLevel: () => {},
};

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="c"></div>';
  container = document.getElementById('c')!;
});

function fixtureApi() {
  return new MockApi({
    resources: { 'p:1': makeResource('p:1', { title: 'Alpha' }) },
    backward: { 'p:1': [makeResource('p:2'), makeResource('p:3')] },
    forward: { 'p:1': [makeResource('p:4')] },
    cocited: { 'p:1': { 'p:5': 3, 'p:6': 1 } },
    counts: { 'p:1': 7 },
    contexts: {
      'p:1->p:2': { access: 'open', excerpt: 'quoted passage', window: 'paragraph' },
      'p:1->p:3': 'restricted',
    },
  });
}

describe('resource view', () => {
  it('panel sizes equal the API responses', async () => {
    await renderResource(container, fixtureApi(), 'p:1', 'publication', 'work', noop);
    await flush();
    expect(container.querySelector('.panel.backward h3')!.textContent)
      .toBe('References (2)');
    expect(container.querySelectorAll('.panel.backward .panel-list li').length).toBe(2);
    expect(container.querySelector('.panel.forward h3')!.textContent)
      .toBe('Cited by (1)');
    expect(container.querySelectorAll('.panel.forward .panel-list li').length).toBe(1);
  });

  it('co-citation counts mirror the API values', async () => {
    await renderResource(container, fixtureApi(), 'p:1', 'publication', 'work', noop);
    const items = container.querySelectorAll('.panel.cocitation li');
    expect(items.length).toBe(2);
    const byId: Record<string, string> = {};
    items.forEach((li) => {
      byId[li.getAttribute('data-id')!] = li.querySelector('.count')!.textContent!.trim();
    });
    expect(byId).toEqual({ 'p:5': '3', 'p:6': '1' });
  });

  it('frbr count reflects the selected level', async () => {
    await renderResource(container, fixtureApi(), 'p:1', 'publication', 'work', noop);
    expect(container.querySelector('.citation-count')!.textContent).toBe('7');
    const select = container.querySelector('.level-select') as HTMLSelectElement;
    expect(select.value).toBe('work');
  });

  it('open context excerpts appear, restricted ones show a lock only', async () => {
    await renderResource(container, fixtureApi(), 'p:1', 'publication', 'work', noop);
    await flush();
    expect(container.textContent).toContain('quoted passage');
    expect(container.querySelectorAll('.lock').length).toBe(1);
    expect(container.querySelector('.lock')!.textContent).toContain('restricted');
  });

  it('never places a restricted excerpt in the DOM', async () => {
    const api = new MockApi({
      resources: { 'p:1': makeResource('p:1') },
      backward: { 'p:1': [makeResource('p:2')] },
      contexts: { 'p:1->p:2': 'restricted' },
    });
    await renderResource(container, api, 'p:1', 'publication', 'work', noop);
    await flush();
    expect(document.body.innerHTML).not.toContain(SENTINEL);
    expect(container.querySelectorAll('.excerpt').length).toBe(0);
  });

  it('unknown resource renders the not-found page', async () => {
    await renderResource(container, new MockApi(), 'ghost', 'publication', 'work', noop);
    expect(container.querySelector('.not-found')!.textContent)
      .toContain('ghost');
  });

  it('listed resources navigate on click', async () => {
    const open = vi.fn();
    await renderResource(container, fixtureApi(), 'p:1', 'publication', 'work', {
      ...noop,
      openResource: open,
    });
    (container.querySelector('.panel.forward .resource-link') as HTMLElement).click();
    expect(open).toHaveBeenCalledWith('p:4');
  });

  it('scope toggle reports the new scope', async () => {
    const setScope = vi.fn();
    await renderResource(container, fixtureApi(), 'p:1', 'publication', 'work', {
      ...noop,
      setScope,
    });
    const toggle = container.querySelector('.scope-toggle') as HTMLSelectElement;
    toggle.value = 'proximal';
    toggle.dispatchEvent(new Event('change'));
    expect(setScope).toHaveBeenCalledWith('proximal');
  });

  it('discards a stale response', async () => {
    await renderResource(
      container, fixtureApi(), 'p:1', 'publication', 'work', noop, () => false);
    await flush();
    expect(container.querySelectorAll('.panel').length).toBe(0);
  });
});
