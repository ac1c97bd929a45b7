/** Layer-panel canvas: renders placements with the server-computed geometry
 * (the client never recomputes sizes), supports direct manipulation (drag to
 * move, toolbar copy/delete/scale/flip/rotate, marquee box-select with
 * intersection semantics) and highlight linking with the tree. */

import type { ApiClient } from "./api.js";
import type { PlacementDto, SceneDto, SceneOp } from "./types.js";
import { Rect, intersects } from "./state.js";

export interface CanvasCallbacks {
  onOps: (ops: SceneOp[]) => void;
  onSelectPlacement: (elementId: string | null) => void;
}

export class CanvasView {
  readonly root: HTMLElement;
  readonly stage: HTMLElement;
  private scene: SceneDto | null = null;
  private selection = new Set<string>();
  private sessionId = "";

  constructor(
    container: HTMLElement,
    private api: ApiClient,
    private callbacks: CanvasCallbacks,
  ) {
    this.root = document.createElement("div");
    this.root.className = "canvas-panel";
    this.stage = document.createElement("div");
    this.stage.className = "canvas-stage";
    this.root.appendChild(this.buildToolbar());
    this.root.appendChild(this.stage);
    container.appendChild(this.root);
    this.wireMarquee();
  }

  setSession(sessionId: string): void {
    this.sessionId = sessionId;
  }

  setScene(scene: SceneDto): void {
    this.scene = scene;
    this.selection = new Set(
      [...this.selection].filter((pid) => scene.placements.some((p) => p.placement_id === pid)),
    );
    this.render();
  }

  selectedIds(): string[] {
    return [...this.selection];
  }

  highlightElement(elementId: string | null): void {
    for (const tile of this.stage.querySelectorAll(".tile.highlighted")) {
      tile.classList.remove("highlighted");
    }
    if (elementId === null) return;
    const tile = this.stage.querySelector<HTMLElement>(
      `.tile[data-element-id="${elementId}"]`,
    );
    if (tile) {
      tile.classList.add("highlighted");
      tile.scrollIntoView({ block: "nearest", inline: "nearest" });
    }
  }

  private buildToolbar(): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "canvas-toolbar";
    const actions: [string, () => SceneOp[]][] = [
      ["copy", () => this.selectedOps((pid) => ({ op: "copy", placement_id: pid }))],
      ["delete", () => this.selectedOps((pid) => ({ op: "delete", placement_id: pid }))],
      ["flip", () => this.selectedOps((pid) => ({ op: "flip_h", placement_id: pid }))],
      ["rotate +15°", () => this.selectedOps((pid) => ({ op: "rotate", placement_id: pid, degrees: 15 }))],
      ["rotate -15°", () => this.selectedOps((pid) => ({ op: "rotate", placement_id: pid, degrees: -15 }))],
      ["larger", () => this.selectedOps((pid) => ({ op: "scale", placement_id: pid, factor: 1.1 }))],
      ["smaller", () => this.selectedOps((pid) => ({ op: "scale", placement_id: pid, factor: 1 / 1.1 }))],
    ];
    for (const [label, build] of actions) {
      const button = document.createElement("button");
      button.textContent = label;
      button.dataset.action = label;
      button.addEventListener("click", () => {
        const ops = build();
        if (ops.length > 0) this.callbacks.onOps(ops);
      });
      bar.appendChild(button);
    }
    return bar;
  }

  private selectedOps(make: (pid: string) => SceneOp): SceneOp[] {
    return [...this.selection].map(make);
  }

  private render(): void {
    if (!this.scene) return;
    this.stage.textContent = "";
    this.stage.style.width = `${this.scene.canvas.width}px`;
    this.stage.style.height = `${this.scene.canvas.height}px`;
    this.scene.placements.forEach((placement, z) => {
      this.stage.appendChild(this.renderTile(placement, z));
    });
  }

  private renderTile(placement: PlacementDto, z: number): HTMLElement {
    const tile = document.createElement("div");
    tile.className = "tile";
    tile.dataset.placementId = placement.placement_id;
    tile.dataset.elementId = placement.element_id;
    tile.style.left = `${placement.x}px`;
    tile.style.top = `${placement.y}px`;
    tile.style.zIndex = String(z);
    const flip = placement.flip_h ? " scaleX(-1)" : "";
    tile.style.transform = `rotate(${-placement.rotation}deg)${flip}`;
    if (!placement.visible) tile.classList.add("hidden-tile");
    if (this.selection.has(placement.placement_id)) tile.classList.add("selected");

    const img = document.createElement("img");
    img.draggable = false;
    img.src = this.api.cutoutUrl(this.sessionId, placement.element_id);
    img.addEventListener("load", () => {
      img.style.width = `${img.naturalWidth * placement.scale}px`;
      img.style.height = `${img.naturalHeight * placement.scale}px`;
    });
    tile.appendChild(img);

    tile.addEventListener("mousedown", (event) => this.beginDrag(event, placement));
    tile.addEventListener("click", (event) => {
      event.stopPropagation();
      if (!(event as MouseEvent).shiftKey) this.selection.clear();
      this.selection.add(placement.placement_id);
      this.render();
      this.callbacks.onSelectPlacement(placement.element_id);
    });
    return tile;
  }

  private beginDrag(event: MouseEvent, placement: PlacementDto): void {
    event.preventDefault();
    const startX = event.clientX;
    const startY = event.clientY;
    let moved = false;
    const onMove = (move: MouseEvent) => {
      if (Math.abs(move.clientX - startX) + Math.abs(move.clientY - startY) > 2) moved = true;
    };
    const onUp = (up: MouseEvent) => {
      window.removeEventListener("mousemove", onMove);
      window.removeEventListener("mouseup", onUp);
      if (!moved) return;
      const dx = up.clientX - startX;
      const dy = up.clientY - startY;
      this.callbacks.onOps([
        { op: "move", placement_id: placement.placement_id, x: placement.x + dx, y: placement.y + dy },
      ]);
    };
    window.addEventListener("mousemove", onMove);
    window.addEventListener("mouseup", onUp);
  }

  /** Marquee selection over tile rectangles (intersection, not containment). */
  private wireMarquee(): void {
    this.stage.addEventListener("mousedown", (event) => {
      if (event.target !== this.stage || !this.scene) return;
      const origin = this.stage.getBoundingClientRect();
      const anchor = { x: event.clientX - origin.left, y: event.clientY - origin.top };
      const band = document.createElement("div");
      band.className = "marquee";
      this.stage.appendChild(band);

      const update = (move: MouseEvent): Rect => {
        const cursor = { x: move.clientX - origin.left, y: move.clientY - origin.top };
        const rect = {
          x: Math.min(anchor.x, cursor.x),
          y: Math.min(anchor.y, cursor.y),
          w: Math.abs(cursor.x - anchor.x),
          h: Math.abs(cursor.y - anchor.y),
        };
        band.style.left = `${rect.x}px`;
        band.style.top = `${rect.y}px`;
        band.style.width = `${rect.w}px`;
        band.style.height = `${rect.h}px`;
        return rect;
      };
      let rect: Rect = { ...anchor, w: 0, h: 0 };
      const onMove = (move: MouseEvent) => {
        rect = update(move);
      };
      const onUp = () => {
        window.removeEventListener("mousemove", onMove);
        window.removeEventListener("mouseup", onUp);
        band.remove();
        this.applyMarquee(rect);
      };
      window.addEventListener("mousemove", onMove);
      window.addEventListener("mouseup", onUp);
    });
  }

  applyMarquee(rect: Rect): void {
    if (!this.scene) return;
    this.selection.clear();
    for (const placement of this.scene.placements) {
      if (!placement.visible) continue;
      const tile = this.stage.querySelector<HTMLElement>(
        `.tile[data-placement-id="${placement.placement_id}"] img`,
      );
      const width = tile ? parseFloat(tile.style.width) || 0 : 0;
      const height = tile ? parseFloat(tile.style.height) || 0 : 0;
      const bounds: Rect = { x: placement.x, y: placement.y, w: width, h: height };
      if (intersects(rect, bounds)) this.selection.add(placement.placement_id);
    }
    this.render();
    this.callbacks.onSelectPlacement(null);
  }
}
