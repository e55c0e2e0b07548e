import type { QueryApi } from './api';
import {
  back,
  initialState,
  navigate,
  setLevel,
  setScope,
  type Route,
  type ViewState,
} from './state';
import { renderCoverage } from './views/coverage';
import { renderResource } from './views/resource';
import { renderSearch } from './views/search';
import { clear, el } from './dom';

/**
 * Single-page controller. Holds the ViewState, re-renders the active view
 * on every transition, and tags each render with a sequence number so a
 * slow response for a view the user already left never touches the DOM.
 */
export class App {
  private state: ViewState = initialState;
  private renderSeq = 0;
  private content: HTMLElement;

  constructor(
    private root: HTMLElement,
    private api: QueryApi,
  ) {
    this.content = el('main', { class: 'content' });
    this.root.append(this.chrome(), this.content);
  }

  getState(): ViewState {
    return this.state;
  }

  start(): Promise<void> {
    return this.render();
  }

  private chrome(): HTMLElement {
    const backButton = el('button', { class: 'nav-back' }, ['back']);
    backButton.addEventListener('click', () => this.apply(back(this.state)));
    const searchLink = el('button', { class: 'nav-search' }, ['search']);
    searchLink.addEventListener('click', () =>
      this.apply(navigate(this.state, { view: 'search', query: '' })),
    );
    const coverageLink = el('button', { class: 'nav-coverage' }, ['coverage']);
    coverageLink.addEventListener('click', () =>
      this.apply(navigate(this.state, { view: 'coverage' })),
    );
    const input = el('input', {
      class: 'search-input',
      type: 'search',
      placeholder: 'search titles',
    }) as HTMLInputElement;
    input.addEventListener('change', () =>
      this.apply(navigate(this.state, { view: 'search', query: input.value })),
    );
    return el('nav', { class: 'chrome' }, [
      backButton,
      searchLink,
      coverageLink,
      input,
    ]);
  }

  goTo(route: Route): Promise<void> {
    return this.apply(navigate(this.state, route));
  }

  private apply(next: ViewState): Promise<void> {
    if (next === this.state) return Promise.resolve();
    this.state = next;
    return this.render();
  }

  private render(): Promise<void> {
    const seq = ++this.renderSeq;
    const stillCurrent = () => seq === this.renderSeq;
    const route = this.state.current;
    const handlers = {
      openResource: (id: string) =>
        void this.goTo({ view: 'resource', id }),
      setScope: (scope: 'publication' | 'proximal') =>
        void this.apply(setScope(this.state, scope)),
      setLevel: (level: ViewState['level']) =>
        void this.apply(setLevel(this.state, level)),
    };
    clear(this.content);
    this.content.append(el('p', { class: 'loading' }, ['loading…']));
    switch (route.view) {
      case 'search':
        return renderSearch(
          this.content,
          this.api,
          route.query,
          handlers,
          stillCurrent,
        );
      case 'resource':
        return renderResource(
          this.content,
          this.api,
          route.id,
          this.state.scope,
          this.state.level,
          handlers,
          stillCurrent,
        );
      case 'coverage':
        return renderCoverage(this.content, this.api, stillCurrent);
    }
  }
}
