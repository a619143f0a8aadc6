// HTML rendering for the triage view. Pure string builders so the shaping is
// testable without a browser; main.ts mounts the result and wires events.
// Machine labels and justifications are rendered exactly as the API sent
// them (escaped for HTML, never rewritten).

import type { ProcessModel, ProcessNode, ReviewItem } from './types.js';
import type { TriageSession } from './session.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Machine label text shown to the expert: the payload value, verbatim. */
export function formatMachineLabel(item: ReviewItem): string {
  return item.machine_label ?? '';
}

export function formatMachineJustification(item: ReviewItem): string {
  return item.machine_justification ?? '';
}

/** Decision controls stay disabled until both panels have content. */
export function controlsEnabled(item: ReviewItem | undefined, busy: boolean): boolean {
  return !!item && !!item.paragraph && !!item.node && !busy;
}

export function renderParagraphPanel(item: ReviewItem, revealMetadata: boolean): string {
  const para = item.paragraph;
  if (!para) return '<section class="panel paragraph"><em>loading paragraph...</em></section>';
  const doc = para.document;
  const meta = revealMetadata
    ? `<p class="meta">group: <strong>${escapeHtml(para.group ?? 'unknown')}</strong>` +
      ` | origin: ${escapeHtml(doc.origin ?? 'unknown')}</p>`
    : '<p class="meta hidden-meta">group hidden (press m to reveal)</p>';
  return [
    '<section class="panel paragraph">',
    `<h2>${escapeHtml(doc.title ?? doc.doc_id)}</h2>`,
    `<h3>${escapeHtml(para.section_title)}${para.subsection ? ' / ' + escapeHtml(para.subsection) : ''}</h3>`,
    `<blockquote>${escapeHtml(para.body)}</blockquote>`,
    meta,
    '</section>',
  ].join('\n');
}

function nodeLine(node: ProcessNode, highlighted: string, indent: number): string {
  const marker = node.node_id === highlighted ? ' class="highlight"' : '';
  const pad = '  '.repeat(indent);
  return (
    `${pad}<li${marker}><strong>${escapeHtml(node.name)}</strong>` +
    ` <small>(${escapeHtml(node.kind)})</small><br>${escapeHtml(node.description)}</li>`
  );
}

export function renderProcessPanel(model: ProcessModel, highlightedNode: string): string {
  const roots = model.nodes.filter((n) => n.level === 'L1_process');
  const subs = model.nodes.filter((n) => n.level === 'L2_subprocess');
  const tasks = model.nodes.filter((n) => n.level === 'L3_task_or_event');
  const parts: string[] = ['<section class="panel process">', '<h2>Process</h2>', '<ul>'];
  for (const root of roots) {
    parts.push(nodeLine(root, highlightedNode, 0));
    parts.push('<ul>');
    for (const sub of subs.filter((s) => s.parent_id === root.node_id)) {
      parts.push(nodeLine(sub, highlightedNode, 1));
      parts.push('<ul>');
      for (const task of tasks.filter((t) => t.parent_id === sub.node_id)) {
        parts.push(nodeLine(task, highlightedNode, 2));
      }
      parts.push('</ul>');
    }
    parts.push('</ul>');
  }
  parts.push('</ul>');
  if (model.bpmn_xml) {
    parts.push(
      '<details><summary>BPMN 2.0 source (read-only)</summary>' +
        `<pre class="bpmn">${escapeHtml(model.bpmn_xml)}</pre></details>`,
    );
  }
  parts.push('</section>');
  return parts.join('\n');
}

export function renderMachinePanel(item: ReviewItem): string {
  const score =
    item.machine_score === null || item.machine_score === undefined
      ? 'n/a'
      : String(item.machine_score);
  return [
    '<section class="panel machine">',
    `<p>method: ${escapeHtml(item.method)} | level: ${item.level} | score: ${escapeHtml(score)}</p>`,
    `<p>machine label: <strong>${escapeHtml(formatMachineLabel(item)) || 'none'}</strong></p>`,
    `<p class="justification">${escapeHtml(formatMachineJustification(item))}</p>`,
    '</section>',
  ].join('\n');
}

export function renderProgress(session: TriageSession): string {
  const per = Object.entries(session.progress.per_level)
    .sort()
    .map(([level, p]) => `L${level}: ${p.decided}/${p.decided + p.pending}`)
    .join(' | ');
  const retry =
    session.retryQueue.length > 0
      ? ` | <span class="retry">${session.retryQueue.length} queued for retry</span>`
      : '';
  return (
    `<footer>pending ${session.progress.pending} | decided ${session.progress.decided}` +
    (per ? ` | ${per}` : '') +
    ` | page ${session.page}/${session.pages}${retry}</footer>`
  );
}

export function renderControls(enabled: boolean): string {
  const dis = enabled ? '' : ' disabled';
  return [
    '<section class="controls">',
    `<button id="confirm"${dis} title="shortcut: c">confirm</button>`,
    `<button id="reject"${dis} title="shortcut: r">reject</button>`,
    `<button id="retype-informative"${dis} title="shortcut: i">retype informative</button>`,
    `<button id="retype-compliance"${dis} title="shortcut: k">retype compliance</button>`,
    `<button id="next" title="shortcut: n">next</button>`,
    `<button id="reveal" title="shortcut: m">toggle metadata</button>`,
    '</section>',
  ].join('\n');
}

export function renderView(session: TriageSession, model: ProcessModel | null): string {
  const item = session.current();
  if (!item) {
    return `<main><p class="empty">no pending items</p>${renderProgress(session)}</main>`;
  }
  const enabled = controlsEnabled(item, session.busy) && model !== null;
  const error = session.lastError
    ? `<p class="error">${escapeHtml(session.lastError)}</p>`
    : '';
  return [
    '<main>',
    error,
    renderParagraphPanel(item, session.revealMetadata),
    model
      ? renderProcessPanel(model, item.query_node_id)
      : '<section class="panel process"><em>loading process...</em></section>',
    renderMachinePanel(item),
    renderControls(enabled),
    renderProgress(session),
    '</main>',
  ].join('\n');
}
