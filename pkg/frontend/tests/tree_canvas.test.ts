/** DOM-level behavior of the linked tree and canvas components. */

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { CanvasView } from "../src/canvas.js";
import { TreeView } from "../src/tree.js";
import type { SceneOp } from "../src/types.js";
import { hierarchyFixture, sceneFixture } from "./fixtures.js";

function makeTree(onOps: (ops: SceneOp[]) => void, onSelectLeaf = (_: string) => {}) {
  const host = document.createElement("div");
  document.body.appendChild(host);
  const tree = new TreeView(host, { onOps, onSelectLeaf });
  tree.setHierarchy(hierarchyFixture());
  tree.setScene(sceneFixture());
  return tree;
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("tree checkboxes", () => {
  it("cluster checkbox issues one subtree op", () => {
    const ops: SceneOp[][] = [];
    const tree = makeTree((batch) => ops.push(batch));
    const row = tree.root.querySelector<HTMLElement>('[data-path="characters"] .node-row');
    const box = row!.querySelector<HTMLInputElement>("input.visibility-box")!;
    box.checked = false;
    box.dispatchEvent(new Event("change"));
    expect(ops).toEqual([[{ op: "set_visible", target: "characters", visible: false }]]);
  });

  it("nested cluster uses its full path", () => {
    const ops: SceneOp[][] = [];
    const tree = makeTree((batch) => ops.push(batch));
    const row = tree.root.querySelector<HTMLElement>(
      '[data-path="accessories/plant"] > .node-row',
    );
    const box = row!.querySelector<HTMLInputElement>("input.visibility-box")!;
    box.checked = false;
    box.dispatchEvent(new Event("change"));
    expect(ops[0][0]).toEqual({ op: "set_visible", target: "accessories/plant", visible: false });
  });

  it("leaf checkbox toggles every placement of the element", () => {
    const ops: SceneOp[][] = [];
    const tree = makeTree((batch) => ops.push(batch));
    const leaf = tree.root.querySelector<HTMLElement>('[data-element-id="e-boy-1"]');
    const box = leaf!.querySelector<HTMLInputElement>("input.visibility-box")!;
    box.checked = false;
    box.dispatchEvent(new Event("change"));
    expect(ops).toEqual([[{ op: "set_visible", target: "p0001", visible: false }]]);
  });

  it("checkbox state reflects hidden subtrees (mixed -> indeterminate)", () => {
    const tree = makeTree(() => {});
    const scene = sceneFixture();
    scene.placements[0].visible = false; // one boy hidden
    tree.setScene(scene);
    const row = tree.root.querySelector<HTMLElement>('[data-path="characters"] .node-row');
    const box = row!.querySelector<HTMLInputElement>("input.visibility-box")!;
    expect(box.indeterminate).toBe(true);
    const skyRow = tree.root.querySelector<HTMLElement>(
      '[data-path="backgrounds/sky"] > .node-row',
    );
    expect(skyRow!.querySelector<HTMLInputElement>("input.visibility-box")!.checked).toBe(true);
  });
});

describe("tree drag-reorder", () => {
  function drag(tree: TreeView, fromEid: string, toEid: string) {
    const from = tree.root.querySelector<HTMLElement>(`[data-element-id="${fromEid}"]`)!;
    const to = tree.root.querySelector<HTMLElement>(`[data-element-id="${toEid}"]`)!;
    const dataTransfer = { setData: vi.fn(), getData: vi.fn() };
    from.dispatchEvent(Object.assign(new Event("dragstart"), { dataTransfer }));
    const over = Object.assign(new Event("dragover", { cancelable: true }), { dataTransfer });
    to.dispatchEvent(over);
    const accepted = over.defaultPrevented;
    to.dispatchEvent(Object.assign(new Event("drop", { cancelable: true }), { dataTransfer }));
    from.dispatchEvent(new Event("dragend"));
    return accepted;
  }

  it("within-cluster drop issues a reorder op at the target z index", () => {
    const ops: SceneOp[][] = [];
    const tree = makeTree((batch) => ops.push(batch));
    const accepted = drag(tree, "e-boy-1", "e-boy-2");
    expect(accepted).toBe(true);
    expect(ops).toEqual([[{ op: "reorder", placement_id: "p0001", new_index: 1 }]]);
  });

  it("cross-cluster drag is refused (no drop target, no ops)", () => {
    const ops: SceneOp[][] = [];
    const tree = makeTree((batch) => ops.push(batch));
    const accepted = drag(tree, "e-boy-1", "e-sky-1");
    expect(accepted).toBe(false); // dragover rejected -> browser snaps back
    expect(ops).toEqual([]);
  });
});

describe("canvas", () => {
  function makeCanvas(onOps: (ops: SceneOp[]) => void, onSelect = (_: string | null) => {}) {
    const host = document.createElement("div");
    document.body.appendChild(host);
    const api = new ApiClient("http://api.test", async () => new Response("{}"));
    const canvas = new CanvasView(host, api, { onOps, onSelectPlacement: onSelect });
    canvas.setSession("ses_test");
    canvas.setScene(sceneFixture());
    return canvas;
  }

  it("renders one tile per placement with z-order and geometry", () => {
    const canvas = makeCanvas(() => {});
    const tiles = canvas.stage.querySelectorAll(".tile");
    expect(tiles).toHaveLength(5);
    expect((tiles[2] as HTMLElement).style.zIndex).toBe("2");
    expect((tiles[1] as HTMLElement).style.left).toBe("120px");
  });

  it("hidden placements get no visible tile", () => {
    const canvas = makeCanvas(() => {});
    const scene = sceneFixture();
    scene.placements[3].visible = false;
    canvas.setScene(scene);
    const tile = canvas.stage.querySelector<HTMLElement>('[data-placement-id="p0004"]');
    expect(tile!.classList.contains("hidden-tile")).toBe(true);
  });

  it("clicking a tile reports its element for tree highlighting", () => {
    const selected: (string | null)[] = [];
    const canvas = makeCanvas(() => {}, (eid) => selected.push(eid));
    const tile = canvas.stage.querySelector<HTMLElement>('[data-placement-id="p0003"]');
    tile!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(selected).toEqual(["e-dog-1"]);
    // the click re-renders the stage; query the fresh tile
    const fresh = canvas.stage.querySelector<HTMLElement>('[data-placement-id="p0003"]');
    expect(fresh!.classList.contains("selected")).toBe(true);
  });

  it("toolbar actions emit ops for the selection", () => {
    const ops: SceneOp[][] = [];
    const canvas = makeCanvas((batch) => ops.push(batch));
    const tile = canvas.stage.querySelector<HTMLElement>('[data-placement-id="p0001"]');
    tile!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    const button = canvas.root.querySelector<HTMLButtonElement>('[data-action="rotate +15°"]');
    button!.click();
    expect(ops).toEqual([[{ op: "rotate", placement_id: "p0001", degrees: 15 }]]);
  });

  it("marquee selects by intersection", () => {
    const canvas = makeCanvas(() => {});
    // give every img an explicit size as the load handler would
    for (const img of canvas.stage.querySelectorAll("img")) {
      (img as HTMLElement).style.width = "100px";
      (img as HTMLElement).style.height = "80px";
    }
    canvas.applyMarquee({ x: 110, y: 10, w: 150, h: 20 }); // grazes p0002 and p0003
    expect(canvas.selectedIds().sort()).toEqual(["p0002", "p0003"]);
  });

  it("tree highlight targets the canvas tile of the element", () => {
    const canvas = makeCanvas(() => {});
    canvas.highlightElement("e-tree-1");
    const highlighted = canvas.stage.querySelectorAll(".tile.highlighted");
    expect(highlighted).toHaveLength(1);
    expect((highlighted[0] as HTMLElement).dataset.elementId).toBe("e-tree-1");
  });
});

describe("tree <-> canvas bijective highlighting", () => {
  it("leaf highlight works for every placement element", () => {
    const tree = makeTree(() => {});
    for (const eid of ["e-boy-1", "e-boy-2", "e-dog-1", "e-sky-1", "e-tree-1"]) {
      tree.highlightLeaf(eid);
      const rows = tree.root.querySelectorAll(".leaf-row.highlighted");
      expect(rows).toHaveLength(1);
      expect((rows[0] as HTMLElement).dataset.elementId).toBe(eid);
    }
    tree.highlightLeaf(null);
    expect(tree.root.querySelectorAll(".leaf-row.highlighted")).toHaveLength(0);
  });
});
