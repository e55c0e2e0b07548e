import type { CoCitationScope, FrbrLevel } from './types';

export type Route =
  | { view: 'search'; query: string }
  | { view: 'resource'; id: string }
  | { view: 'coverage' };

export interface ViewState {
  readonly current: Route;
  /** Past routes, most recent last. Never holds consecutive duplicates. */
  readonly history: readonly Route[];
  readonly scope: CoCitationScope;
  readonly level: FrbrLevel;
}

export const initialState: ViewState = {
  current: { view: 'search', query: '' },
  history: [],
  scope: 'publication',
  level: 'work',
};

export function routesEqual(a: Route, b: Route): boolean {
  if (a.view !== b.view) return false;
  if (a.view === 'resource' && b.view === 'resource') return a.id === b.id;
  if (a.view === 'search' && b.view === 'search') return a.query === b.query;
  return true;
}

/**
 * Move to a new route, pushing the current one onto the history stack.
 * Navigating to the route already shown is a no-op, which is what keeps
 * the stack free of consecutive duplicates.
 */
export function navigate(state: ViewState, route: Route): ViewState {
  if (routesEqual(state.current, route)) return state;
  return {
    ...state,
    current: route,
    history: [...state.history, state.current],
  };
}

/** Pop exactly one history entry; no-op on an empty stack. */
export function back(state: ViewState): ViewState {
  if (state.history.length === 0) return state;
  return {
    ...state,
    current: state.history[state.history.length - 1],
    history: state.history.slice(0, -1),
  };
}

export function setScope(state: ViewState, scope: CoCitationScope): ViewState {
  return state.scope === scope ? state : { ...state, scope };
}

export function setLevel(state: ViewState, level: FrbrLevel): ViewState {
  return state.level === level ? state : { ...state, level };
}
