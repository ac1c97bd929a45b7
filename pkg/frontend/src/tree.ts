/** Layer-panel tree: collapsible hierarchy with leaf nodes per cutout,
 * per-node visibility checkboxes (subtree semantics), within-cluster
 * drag-reorder, and bidirectional highlight linking with the canvas. */

import type { SceneDto, SceneOp } from "./types.js";
import {
  TreeNode,
  buildTree,
  placementsOfElement,
  subtreeElements,
  visibilityState,
  clusterBlock,
  elementClusterPaths,
} from "./state.js";
import type { HierarchyDto } from "./types.js";

export interface TreeCallbacks {
  onOps: (ops: SceneOp[]) => void;
  onSelectLeaf: (elementId: string) => void;
  cutoutUrl?: (elementId: string) => string;
}

export class TreeView {
  readonly root: HTMLElement;
  private scene: SceneDto | null = null;
  private nodes: TreeNode[] = [];
  private clusterOf = new Map<string, string>();
  private collapsed = new Set<string>();
  private dragLeaf: { elementId: string; cluster: string } | null = null;

  constructor(
    container: HTMLElement,
    private callbacks: TreeCallbacks,
  ) {
    this.root = document.createElement("div");
    this.root.className = "tree-view";
    container.appendChild(this.root);
  }

  setHierarchy(hierarchy: HierarchyDto): void {
    this.nodes = buildTree(hierarchy);
    this.clusterOf = elementClusterPaths(this.nodes);
    this.render();
  }

  setScene(scene: SceneDto): void {
    this.scene = scene;
    this.render();
  }

  highlightLeaf(elementId: string | null): void {
    for (const row of this.root.querySelectorAll(".leaf-row.highlighted")) {
      row.classList.remove("highlighted");
    }
    if (elementId === null) return;
    const row = this.root.querySelector<HTMLElement>(
      `.leaf-row[data-element-id="${elementId}"]`,
    );
    if (row) {
      row.classList.add("highlighted");
      row.scrollIntoView({ block: "nearest" });
    }
  }

  private render(): void {
    this.root.textContent = "";
    const list = document.createElement("ul");
    list.className = "tree-roots";
    for (const node of this.nodes) list.appendChild(this.renderNode(node));
    this.root.appendChild(list);
  }

  private checkboxFor(
    elementIds: string[],
    target: { kind: "cluster"; path: string } | { kind: "leaf"; elementId: string },
  ): HTMLInputElement {
    const box = document.createElement("input");
    box.type = "checkbox";
    box.className = "visibility-box";
    if (this.scene) {
      const state = visibilityState(this.scene, elementIds);
      box.checked = state === "checked";
      box.indeterminate = state === "mixed";
    }
    box.addEventListener("change", () => {
      if (!this.scene) return;
      if (target.kind === "cluster") {
        // one subtree-wide op; the server fans out over descendants
        this.callbacks.onOps([{ op: "set_visible", target: target.path, visible: box.checked }]);
      } else {
        const ops: SceneOp[] = placementsOfElement(this.scene, target.elementId).map((p) => ({
          op: "set_visible",
          target: p.placement_id,
          visible: box.checked,
        }));
        this.callbacks.onOps(ops);
      }
    });
    return box;
  }

  private renderNode(node: TreeNode): HTMLElement {
    const item = document.createElement("li");
    item.className = "tree-node";
    item.dataset.path = node.path;

    const row = document.createElement("div");
    row.className = "node-row";
    const caret = document.createElement("button");
    caret.className = "caret";
    caret.textContent = this.collapsed.has(node.path) ? "▸" : "▾";
    caret.addEventListener("click", () => {
      if (this.collapsed.has(node.path)) this.collapsed.delete(node.path);
      else this.collapsed.add(node.path);
      this.render();
    });
    row.appendChild(caret);
    row.appendChild(this.checkboxFor(subtreeElements(node), { kind: "cluster", path: node.path }));
    const name = document.createElement("span");
    name.className = "node-name";
    name.textContent = node.name;
    row.appendChild(name);
    item.appendChild(row);

    if (!this.collapsed.has(node.path)) {
      const children = document.createElement("ul");
      children.className = "node-children";
      for (const child of node.children) children.appendChild(this.renderNode(child));
      for (const elementId of node.leaves) {
        children.appendChild(this.renderLeaf(elementId, node.path));
      }
      item.appendChild(children);
    }
    return item;
  }

  private renderLeaf(elementId: string, clusterPath: string): HTMLElement {
    const item = document.createElement("li");
    item.className = "leaf-row";
    item.dataset.elementId = elementId;
    item.dataset.cluster = clusterPath;
    item.draggable = true;

    item.appendChild(this.checkboxFor([elementId], { kind: "leaf", elementId }));
    if (this.callbacks.cutoutUrl) {
      const thumb = document.createElement("img");
      thumb.className = "leaf-thumb";
      thumb.src = this.callbacks.cutoutUrl(elementId);
      item.appendChild(thumb);
    }
    const label = document.createElement("span");
    label.className = "leaf-name";
    label.textContent = elementId;
    item.appendChild(label);

    item.addEventListener("click", () => this.callbacks.onSelectLeaf(elementId));

    item.addEventListener("dragstart", (event) => {
      this.dragLeaf = { elementId, cluster: clusterPath };
      event.dataTransfer?.setData("text/plain", elementId);
    });
    item.addEventListener("dragover", (event) => {
      // only a within-cluster drop is a valid target; anything else snaps back
      if (this.dragLeaf && this.dragLeaf.cluster === clusterPath) {
        event.preventDefault();
        item.classList.add("drop-target");
      }
    });
    item.addEventListener("dragleave", () => item.classList.remove("drop-target"));
    item.addEventListener("drop", (event) => {
      event.preventDefault();
      item.classList.remove("drop-target");
      this.handleDrop(elementId, clusterPath);
    });
    item.addEventListener("dragend", () => {
      this.dragLeaf = null;
      for (const el of this.root.querySelectorAll(".drop-target")) {
        el.classList.remove("drop-target");
      }
    });
    return item;
  }

  /** Reorder the dragged leaf's placement to the drop leaf's z position.
   * Cross-cluster drags never get here (dragover refuses), so the computed
   * index always lands inside the cluster's block; the server re-checks. */
  private handleDrop(targetElementId: string, clusterPath: string): void {
    if (!this.scene || !this.dragLeaf) return;
    if (this.dragLeaf.cluster !== clusterPath) return; // snap-back
    if (this.dragLeaf.elementId === targetElementId) return;
    const source = placementsOfElement(this.scene, this.dragLeaf.elementId)[0];
    const target = placementsOfElement(this.scene, targetElementId)[0];
    if (!source || !target) return;
    const block = clusterBlock(this.scene, this.clusterOf, clusterPath);
    const targetIndex = this.scene.placements.findIndex(
      (p) => p.placement_id === target.placement_id,
    );
    const clamped = Math.min(Math.max(targetIndex, block.start), block.end - 1);
    this.callbacks.onOps([
      { op: "reorder", placement_id: source.placement_id, new_index: clamped },
    ]);
  }
}
