/** Pure derivations over the server documents. UI state is a function of
 * (presentation, scene, local selection); nothing here talks to the DOM. */

import type { ClusterDto, HierarchyDto, PlacementDto, SceneDto } from "./types.js";

export interface TreeNode {
  path: string;
  name: string;
  children: TreeNode[];
  /** element ids sitting directly on this cluster */
  leaves: string[];
}

/** Hierarchy as path-addressed nodes (path segments joined with "/"). */
export function buildTree(hierarchy: HierarchyDto): TreeNode[] {
  const walk = (cluster: ClusterDto, prefix: string): TreeNode => {
    const path = prefix ? `${prefix}/${cluster.name}` : cluster.name;
    return {
      path,
      name: cluster.name,
      children: cluster.children.map((child) => walk(child, path)),
      leaves: [...cluster.leaves],
    };
  };
  return hierarchy.categories.map((root) => walk(root, ""));
}

export function subtreeElements(node: TreeNode): string[] {
  const out = [...node.leaves];
  for (const child of node.children) out.push(...subtreeElements(child));
  return out;
}

export function elementClusterPaths(roots: TreeNode[]): Map<string, string> {
  const map = new Map<string, string>();
  const visit = (node: TreeNode) => {
    for (const eid of node.leaves) map.set(eid, node.path);
    node.children.forEach(visit);
  };
  roots.forEach(visit);
  return map;
}

export function placementsOfElement(scene: SceneDto, elementId: string): PlacementDto[] {
  return scene.placements.filter((p) => p.element_id === elementId);
}

export type CheckState = "checked" | "unchecked" | "mixed";

/** Tri-state for a set of element ids: checked iff every placement of every
 * element is visible; elements with no placement don't vote. */
export function visibilityState(scene: SceneDto, elementIds: string[]): CheckState {
  let visible = 0;
  let hidden = 0;
  const members = new Set(elementIds);
  for (const placement of scene.placements) {
    if (!members.has(placement.element_id)) continue;
    if (placement.visible) visible += 1;
    else hidden += 1;
  }
  if (visible === 0 && hidden === 0) return "unchecked";
  if (hidden === 0) return "checked";
  if (visible === 0) return "unchecked";
  return "mixed";
}

/** Contiguous z-slice [start, end) of a cluster's placements. */
export function clusterBlock(
  scene: SceneDto,
  clusterOf: Map<string, string>,
  clusterPath: string,
): { start: number; end: number } {
  const indices = scene.placements
    .map((p, i) => ({ i, cluster: clusterOf.get(p.element_id) }))
    .filter((row) => row.cluster === clusterPath)
    .map((row) => row.i);
  if (indices.length === 0) return { start: scene.placements.length, end: scene.placements.length };
  return { start: indices[0], end: indices[indices.length - 1] + 1 };
}

/** Tile <-> leaf linking must be bijective over visible placements: every
 * placement maps to exactly one leaf element and each leaf's placements are
 * recoverable. Returns the two lookups used by both panels. */
export function linking(scene: SceneDto): {
  leafOfPlacement: Map<string, string>;
  placementsOfLeaf: Map<string, string[]>;
} {
  const leafOfPlacement = new Map<string, string>();
  const placementsOfLeaf = new Map<string, string[]>();
  for (const placement of scene.placements) {
    leafOfPlacement.set(placement.placement_id, placement.element_id);
    const bucket = placementsOfLeaf.get(placement.element_id) ?? [];
    bucket.push(placement.placement_id);
    placementsOfLeaf.set(placement.element_id, bucket);
  }
  return { leafOfPlacement, placementsOfLeaf };
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** Marquee selection uses intersection, not containment. */
export function intersects(a: Rect, b: Rect): boolean {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}
