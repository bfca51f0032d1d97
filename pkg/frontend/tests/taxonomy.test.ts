import { describe, expect, it } from 'vitest';

import type { LeafInfo } from '../src/api.js';
import { buildTree, flattenLeaves } from '../src/taxonomy.js';

function leaf(id: string, path: string[]): LeafInfo {
  return { id, display_name: id, path, description: '', examples: [] };
}

const LEAVES: LeafInfo[] = [
  leaf('adversary', ['unsafe', 'non_clinical']),
  leaf('self_harm', ['unsafe', 'clinical']),
  leaf('gibberish', ['safe', 'non_clinical']),
  leaf('empathy', ['safe', 'clinical', 'non_information_seeking']),
  leaf('general_inquiry', ['safe', 'clinical', 'information_seeking']),
  leaf('patient_inquiry', ['safe', 'clinical', 'information_seeking']),
];

describe('taxonomy tree', () => {
  it('groups leaves under their hierarchy path', () => {
    const root = buildTree(LEAVES);
    expect(root.children.map((c) => c.segment)).toEqual(['unsafe', 'safe']);
    const safeClinical = root.children[1]!.children.find((c) => c.segment === 'clinical')!;
    const isNode = safeClinical.children.find((c) => c.segment === 'information_seeking')!;
    expect(isNode.leaves.map((l) => l.id)).toEqual(['general_inquiry', 'patient_inquiry']);
  });

  it('every leaf is reachable in the picker, in canonical order', () => {
    const flattened = flattenLeaves(buildTree(LEAVES));
    expect(flattened.map((l) => l.id)).toEqual(LEAVES.map((l) => l.id));
  });
});
