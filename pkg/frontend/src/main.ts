/**
 * DOM wiring for the review queue. No framework: the state lives in
 * ReviewSession, this file only renders it and forwards events.
 */
import { GatewayClient, type LeafInfo } from './api.js';
import { DEFAULT_KEYMAP, commandForKey, isEditableTarget } from './keyboard.js';
import { ReviewSession } from './state.js';
import { buildTree, flattenLeaves } from './taxonomy.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setup(): void {
  const params = new URLSearchParams(window.location.search);
  const annotatorId =
    params.get('annotator') ?? window.localStorage.getItem('annotator_id') ?? '';
  if (!annotatorId) {
    const entered = window.prompt('Annotator id:') ?? 'anonymous';
    window.localStorage.setItem('annotator_id', entered);
    window.location.reload();
    return;
  }
  window.localStorage.setItem('annotator_id', annotatorId);

  const client = new GatewayClient(window.location.origin, annotatorId);
  const session = new ReviewSession(client);
  let leaves: LeafInfo[] = [];

  const queueNode = el<HTMLUListElement>('queue');
  const textNode = el<HTMLParagraphElement>('item-text');
  const metaNode = el<HTMLParagraphElement>('item-meta');
  const bannerNode = el<HTMLDivElement>('conflict-banner');
  const pickerNode = el<HTMLSelectElement>('label-picker');
  const editNode = el<HTMLTextAreaElement>('edit-text');
  const progressNode = el<HTMLDivElement>('progress');
  const filterLabel = el<HTMLSelectElement>('filter-label');
  const filterProvenance = el<HTMLSelectElement>('filter-provenance');

  function render(): void {
    queueNode.replaceChildren(
      ...session.items.map((item, i) => {
        const li = document.createElement('li');
        li.textContent = `${item.label_id ?? '(unlabeled)'} · ${item.text.slice(0, 60)}`;
        li.className = i === session.index ? 'selected' : '';
        li.onclick = () => {
          session.index = i;
          render();
        };
        return li;
      }),
    );
    const item = session.current();
    textNode.textContent = item ? item.text : 'Queue empty — adjust filters or refresh.';
    metaNode.textContent = item
      ? `label: ${item.label_id ?? 'none'} · provenance: ${item.provenance} · ` +
        `source: ${item.source} · revision: ${item.revision} · ${session.total} pending`
      : '';
    if (item) editNode.value = item.text;
    if (item?.label_id) pickerNode.value = item.label_id;
    bannerNode.hidden = session.conflict === null;
    bannerNode.textContent = session.conflict?.message ?? '';
    progressNode.textContent = Object.entries(session.progress)
      .map(([annotator, count]) => `${annotator}: ${count}`)
      .join(' · ');
  }

  async function refresh(): Promise<void> {
    session.filters.label = filterLabel.value || undefined;
    session.filters.provenance = filterProvenance.value || undefined;
    await session.refresh();
    render();
  }

  async function run(action: () => Promise<unknown>): Promise<void> {
    try {
      await action();
    } catch (error) {
      bannerNode.hidden = false;
      bannerNode.textContent = String(error);
    }
    render();
  }

  el<HTMLButtonElement>('btn-confirm').onclick = () => run(() => session.confirm());
  el<HTMLButtonElement>('btn-remove').onclick = () => run(() => session.remove());
  el<HTMLButtonElement>('btn-relabel').onclick = () =>
    run(() => session.relabel(pickerNode.value));
  el<HTMLButtonElement>('btn-edit').onclick = () => run(() => session.edit(editNode.value));
  el<HTMLButtonElement>('btn-refresh').onclick = () => run(refresh);
  filterLabel.onchange = () => run(refresh);
  filterProvenance.onchange = () => run(refresh);

  document.addEventListener('keydown', (event) => {
    const command = commandForKey(
      { key: event.key, targetIsEditable: isEditableTarget(event.target) },
      DEFAULT_KEYMAP,
    );
    if (!command) return;
    event.preventDefault();
    switch (command) {
      case 'next':
        session.next();
        render();
        break;
      case 'previous':
        session.previous();
        render();
        break;
      case 'confirm':
        void run(() => session.confirm());
        break;
      case 'remove':
        void run(() => session.remove());
        break;
      case 'relabel':
        pickerNode.focus();
        break;
      case 'edit':
        editNode.focus();
        break;
      case 'dismiss':
        session.dismissConflict();
        (document.activeElement as HTMLElement | null)?.blur();
        render();
        break;
    }
  });

  void (async () => {
    const taxonomy = await client.getTaxonomy();
    leaves = flattenLeaves(buildTree(taxonomy.leaves));
    pickerNode.replaceChildren(
      ...leaves.map((leaf) => {
        const option = document.createElement('option');
        option.value = leaf.id;
        option.textContent = `${leaf.path.join('/')} · ${leaf.display_name}`;
        return option;
      }),
    );
    filterLabel.replaceChildren(
      new Option('all labels', ''),
      ...leaves.map((leaf) => new Option(leaf.id, leaf.id)),
    );
    filterProvenance.replaceChildren(
      new Option('all provenances', ''),
      ...['collected', 'llm_labeled', 'synthetic'].map((p) => new Option(p, p)),
    );
    await refresh();
  })();
}

document.addEventListener('DOMContentLoaded', setup);
