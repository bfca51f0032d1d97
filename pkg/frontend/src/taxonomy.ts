/**
 * Taxonomy tree helpers for the label picker.
 *
 * The tree is always built from the server's /v1/taxonomy response, never
 * hardcoded, so the picker tracks whatever taxonomy version the gateway is
 * running.
 */
import type { LeafInfo } from './api.js';

export interface TreeNode {
  segment: string;
  children: TreeNode[];
  leaves: LeafInfo[];
}

export function buildTree(leaves: LeafInfo[]): TreeNode {
  const root: TreeNode = { segment: '', children: [], leaves: [] };
  for (const leaf of leaves) {
    let node = root;
    for (const segment of leaf.path) {
      let child = node.children.find((c) => c.segment === segment);
      if (!child) {
        child = { segment, children: [], leaves: [] };
        node.children.push(child);
      }
      node = child;
    }
    node.leaves.push(leaf);
  }
  return root;
}

/** Leaves in picker order (depth-first, which preserves canonical order). */
export function flattenLeaves(node: TreeNode): LeafInfo[] {
  const out: LeafInfo[] = [...node.leaves];
  for (const child of node.children) {
    out.push(...flattenLeaves(child));
  }
  return out;
}

export function bucketLabel(node: TreeNode, prefix: string[] = []): string {
  return [...prefix, node.segment].filter(Boolean).join(' / ');
}
