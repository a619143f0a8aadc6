// Browser bootstrap: mounts the triage view against the serving origin and
// wires buttons plus keyboard shortcuts to the session.

import { ApiClient } from './api.js';
import { renderView } from './render.js';
import { TriageSession } from './session.js';
import type { ProcessModel } from './types.js';

const api = new ApiClient((input, init) => fetch(input, init));
const session = new TriageSession(api, {
  reviewer: new URLSearchParams(location.search).get('reviewer') ?? 'expert',
  pageSize: 10,
});

let model: ProcessModel | null = null;
const modelCache = new Map<string, ProcessModel>();

async function ensureModel(): Promise<void> {
  const item = session.current();
  const modelId = item?.model_id;
  if (!modelId) return;
  if (!modelCache.has(modelId)) {
    try {
      modelCache.set(modelId, await api.getProcess(modelId));
    } catch {
      return; // panel stays in loading state; controls stay disabled
    }
  }
  model = modelCache.get(modelId) ?? null;
}

function mount(): void {
  const root = document.getElementById('app');
  if (!root) return;
  root.innerHTML = renderView(session, model);
  // decisions are bound to the item this view was rendered for, so double
  // clicks replay the same request instead of hitting the next item
  const itemId = session.current()?.item_id;
  const on = (id: string, handler: () => void) => {
    document.getElementById(id)?.addEventListener('click', handler);
  };
  on('confirm', () => act('confirm', undefined, itemId));
  on('reject', () => act('reject', undefined, itemId));
  on('retype-informative', () => act('retype', 'informative', itemId));
  on('retype-compliance', () => act('retype', 'compliance', itemId));
  on('next', () => {
    session.select(session.selected + 1);
    mount();
  });
  on('reveal', () => {
    session.toggleMetadata();
    mount();
  });
}

async function act(action: 'confirm' | 'reject' | 'retype',
                   type?: 'informative' | 'compliance',
                   itemId?: string): Promise<void> {
  if (session.busy) return; // ignore repeats until the wire is idle
  try {
    await session.decide(action, type, itemId ?? session.current()?.item_id);
  } catch {
    // lastError is already set; the view shows it
  }
  await ensureModel();
  mount();
}

document.addEventListener('keydown', (event) => {
  if (event.target instanceof HTMLInputElement) return;
  const keymap: Record<string, () => void> = {
    c: () => void act('confirm'),
    r: () => void act('reject'),
    i: () => void act('retype', 'informative'),
    k: () => void act('retype', 'compliance'),
    n: () => {
      session.select(session.selected + 1);
      mount();
    },
    m: () => {
      session.toggleMetadata();
      mount();
    },
  };
  keymap[event.key]?.();
});

window.addEventListener('online', () => {
  void session.flushRetries().then(async () => {
    await session.load();
    mount();
  });
});

(async () => {
  await session.load();
  await ensureModel();
  mount();
})();
