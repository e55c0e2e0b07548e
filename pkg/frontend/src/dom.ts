/** Tiny element builder; text content only, never innerHTML. */
export function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  for (const child of children) {
    node.append(typeof child === 'string' ? document.createTextNode(child) : child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function banner(message: string): HTMLElement {
  return el('div', { class: 'banner error', role: 'alert' }, [message]);
}

export function emptyState(message: string): HTMLElement {
  return el('p', { class: 'empty-state' }, [message]);
}
