import { beforeEach, describe, expect, it } from 'vitest';

import { App } from '../src/app';
import { MockApi, flush, makeResource } from './mock';

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById('app')!;
});

function fixtureApi() {
  return new MockApi({
    searchResults: [makeResource('p:1', { title: 'Alpha' })],
    resources: {
      'p:1': makeResource('p:1', { title: 'Alpha' }),
      'p:2': makeResource('p:2', { title: 'Beta' }),
    },
    backward: { 'p:1': [makeResource('p:2', { title: 'Beta' })] },
  });
}

describe('app controller', () => {
  it('chains search to resource to resource and back again', async () => {
    const app = new App(root, fixtureApi());
    await app.start();
    (root.querySelector('.search-row') as HTMLElement).click();
    await flush();
    expect(root.querySelector('.resource-title')!.textContent).toBe('Alpha');
    (root.querySelector('.panel.backward .resource-link') as HTMLElement).click();
    await flush();
    expect(root.querySelector('.resource-title')!.textContent).toBe('Beta');
    expect(app.getState().history.length).toBe(2);

    (root.querySelector('.nav-back') as HTMLElement).click();
    await flush();
    expect(root.querySelector('.resource-title')!.textContent).toBe('Alpha');
    expect(app.getState().history.length).toBe(1);
  });

  it('a slow response for an abandoned view never lands', async () => {
    const api = fixtureApi();
    let release!: () => void;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const realSearch = api.search.bind(api);
    api.search = async (title: string) => {
      await gate;
      return realSearch(title);
    };
    const app = new App(root, api);
    const pending = app.start(); // search view, response gated
    await app.goTo({ view: 'resource', id: 'p:2' });
    await flush();
    release();
    await pending;
    await flush();
    expect(root.querySelector('.resource-title')!.textContent).toBe('Beta');
    expect(root.querySelectorAll('.search-row').length).toBe(0);
  });

  it('repeated clicks on the same link do not stack history', async () => {
    const app = new App(root, fixtureApi());
    await app.start();
    await app.goTo({ view: 'resource', id: 'p:1' });
    await app.goTo({ view: 'resource', id: 'p:1' });
    await app.goTo({ view: 'resource', id: 'p:1' });
    expect(app.getState().history.length).toBe(1);
  });
});
